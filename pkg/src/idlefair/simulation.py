"""Discrete-event kernel for one many-server system.

Two distributionally equivalent constructions are provided:

* ``potential_stream`` drives completions with a single Poisson stream at
  the summed service rate, splits each epoch to a server with probability
  proportional to its rate, and realizes a completion only if that server
  is busy (idle draws are recorded as ``potential_no_op`` events).
* ``per_server_timers`` samples an exponential service duration per
  admitted customer, one timer per busy server.

Arrivals follow a renewal process; queued customers carry exponential
patience deadlines and abandon if service has not started in time.
Routing policies apply only to arrivals that find idle servers; a
completion with a nonempty queue hands the server straight to the next
customer in arrival order.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from . import rng as streams
from .distributions import InterarrivalLaw, InterarrivalSource, RateDistribution, sample_rates
from .policies import as_policy
from .rng import ExponentialSource, RngStream, UniformSource

# Event kinds as recorded in trajectories.  When clock ties occur they
# are processed in this priority order (completions first, then
# arrivals, then abandonments), which makes replay deterministic.
KIND_COMPLETION = 0
KIND_POTENTIAL_NOOP = 1
KIND_ARRIVAL = 2
KIND_ROUTING = 3
KIND_ABANDONMENT = 4
KIND_NAMES = ("completion", "potential_no_op", "arrival", "routing", "abandonment")

CONSTRUCTIONS = ("potential_stream", "per_server_timers")

_INF = math.inf

# customer status codes
_QUEUED = 0
_IN_SERVICE = 1
_ABANDONED = 2


@dataclass(frozen=True)
class SystemConfig:
    """Full parameterization of one n-server system."""

    n: int
    lambda_n: float
    rate_dist: RateDistribution
    gamma: float
    horizon: float
    arrival_law: InterarrivalLaw = field(default_factory=InterarrivalLaw.exponential)
    rates: tuple[float, ...] | None = None
    x0: int = 0
    policy: str = "LISF"
    construction: str = "potential_stream"
    seed: RngStream = RngStream(0, 0)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.lambda_n < 0:
            raise ValueError(f"lambda_n must be nonnegative, got {self.lambda_n}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if self.x0 < 0:
            raise ValueError(f"x0 must be nonnegative, got {self.x0}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        object.__setattr__(self, "policy", as_policy(self.policy))
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if self.rates is not None:
            if len(self.rates) != self.n:
                raise ValueError(f"got {len(self.rates)} rates for n={self.n} servers")
            lo, hi = self.rate_dist.support_min, self.rate_dist.support_max
            for mu in self.rates:
                if not lo <= mu <= hi:
                    raise ValueError(f"rate {mu} outside support [{lo}, {hi}]")


@dataclass
class Trajectory:
    """Recorded path of one replication.

    Event columns are aligned arrays; ``heads`` and ``idles`` hold the
    headcount and idle-server count immediately after each event, tracked
    by independent counters so the non-idling identity is a real check.
    Idle episodes are clipped at the horizon; ``ep_open`` marks episodes
    still running then, and ``ep_initial`` marks servers idle from time 0.
    """

    config: SystemConfig
    rates: np.ndarray
    times: np.ndarray
    kinds: np.ndarray
    servers: np.ndarray
    heads: np.ndarray
    idles: np.ndarray
    ep_server: np.ndarray
    ep_start: np.ndarray
    ep_end: np.ndarray
    ep_open: np.ndarray
    ep_initial: np.ndarray
    arrivals: int
    completions: int
    abandonments: int
    potential_noops: int
    routings: int
    final_head: int
    audit: list | None = None

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def horizon(self) -> float:
        return self.config.horizon

    @property
    def ep_rate(self) -> np.ndarray:
        return self.rates[self.ep_server]

    def initial_head(self) -> int:
        return self.config.x0

    def initial_idle(self) -> int:
        return max(self.n - self.config.x0, 0)

    def headcount_at(self, grid) -> np.ndarray:
        """X at each grid time (piecewise constant, right-continuous)."""
        vals = np.concatenate(([self.initial_head()], self.heads))
        idx = np.searchsorted(self.times, np.asarray(grid), side="right")
        return vals[idx]

    def idle_count_at(self, grid) -> np.ndarray:
        vals = np.concatenate(([self.initial_idle()], self.idles))
        idx = np.searchsorted(self.times, np.asarray(grid), side="right")
        return vals[idx]

    def idle_count_integral_nodes(self):
        """Times and cumulative integral of the idle-server count.

        Returns ``(ts, cum)`` where ``cum[i]`` is the exact integral of
        the piecewise-constant idle count over [0, ts[i]]; ts starts at 0
        and ends at the horizon.
        """
        ts = np.concatenate(([0.0], self.times, [self.horizon]))
        vals = np.concatenate(([self.initial_idle()], self.idles, [0]))
        seg = np.diff(ts) * vals[:-1]
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        return ts, cum

    def cum_idle_per_server(self, t: float | None = None) -> np.ndarray:
        """Integral of each server's idle indicator over [0, t]."""
        if t is None:
            t = self.horizon
        dur = np.clip(np.minimum(self.ep_end, t) - self.ep_start, 0.0, None)
        out = np.zeros(self.n)
        np.add.at(out, self.ep_server, dur)
        return out

    def verify(self) -> dict:
        """Check pathwise invariants; raises on the first violation.

        Returns counts of checks performed, all-zero violation totals
        included, so callers can assert coverage.
        """
        n = self.n
        t = self.times
        if t.size and np.any(np.diff(t) < 0):
            raise AssertionError("event times decrease")
        # non-idling identity from independently tracked idle counts
        bad = np.nonzero(self.idles != np.maximum(n - self.heads, 0))[0]
        if bad.size:
            i = bad[0]
            raise AssertionError(
                f"non-idling identity broken at event {i}: head={self.heads[i]}, idle={self.idles[i]}"
            )
        # conservation: X follows arrivals minus completions minus abandonments
        delta = np.zeros(self.kinds.size, dtype=np.int64)
        delta[self.kinds == KIND_ARRIVAL] = 1
        delta[self.kinds == KIND_COMPLETION] = -1
        delta[self.kinds == KIND_ABANDONMENT] = -1
        expect = self.initial_head() + np.cumsum(delta)
        if self.kinds.size and np.any(expect != self.heads):
            i = int(np.nonzero(expect != self.heads)[0][0])
            raise AssertionError(f"conservation broken at event {i}")
        # abandonments only from a nonempty queue
        ab = self.kinds == KIND_ABANDONMENT
        if np.any(self.heads[ab] < n):
            raise AssertionError("abandonment recorded while no customer was queued")
        self._verify_replay()
        return {
            "events": int(self.kinds.size),
            "episodes": int(self.ep_server.size),
            "violations": 0,
        }

    def _verify_replay(self):
        """Per-server replay: routing only to idle servers, completions
        only at busy ones, I_k = I_k(0) - R_k + D_k, and recorded idle
        episodes exactly matching the transitions."""
        n = self.n
        x0 = self.config.x0
        idle = [1] * n
        for k in range(min(x0, n)):
            idle[k] = 0
        i0 = list(idle)
        r_k = [0] * n
        d_k = [0] * n
        since = [0.0] * n
        episodes = []
        kinds, servers, times = self.kinds.tolist(), self.servers.tolist(), self.times.tolist()
        for i in range(len(kinds)):
            kind = kinds[i]
            k = servers[i]
            t = times[i]
            if kind == KIND_COMPLETION:
                if idle[k]:
                    raise AssertionError(f"completion at idle server {k} (event {i})")
                d_k[k] += 1
                handoff = (
                    i + 1 < len(kinds)
                    and kinds[i + 1] == KIND_ROUTING
                    and servers[i + 1] == k
                    and times[i + 1] == t
                )
                if not handoff:
                    idle[k] = 1
                    since[k] = t
                else:
                    continue  # balance restored by the paired routing record
            elif kind == KIND_ROUTING:
                prev_completion = (
                    i > 0
                    and kinds[i - 1] == KIND_COMPLETION
                    and servers[i - 1] == k
                    and times[i - 1] == t
                )
                if prev_completion:
                    r_k[k] += 1
                elif not idle[k]:
                    raise AssertionError(f"routing to busy server {k} (event {i})")
                else:
                    episodes.append((k, since[k], t))
                    idle[k] = 0
                    r_k[k] += 1
            elif kind == KIND_POTENTIAL_NOOP:
                if not idle[k]:
                    raise AssertionError(f"potential no-op at busy server {k} (event {i})")
            else:
                continue  # arrivals and abandonments touch no server state
            if idle[k] != i0[k] - r_k[k] + d_k[k]:
                raise AssertionError(f"idle-flag balance broken for server {k} (event {i})")
        for k in range(n):
            if idle[k]:
                episodes.append((k, since[k], self.horizon))
        recorded = sorted(
            zip(self.ep_server.tolist(), self.ep_start.tolist(), self.ep_end.tolist())
        )
        if recorded != sorted(episodes):
            raise AssertionError("recorded idle episodes disagree with the event replay")


class SystemState:
    """Live state machine of one replication; advance with step()."""

    __slots__ = (
        "config", "n", "lam", "gamma", "horizon", "policy", "construction",
        "rates", "cum_rates", "sum_rates", "clock", "head", "qlen",
        "idle_flags", "idle_since", "idle_count", "init_idle",
        "queue", "status", "patience",
        "next_arrival", "next_potential", "comp_heap",
        "arr_src", "pot_src", "split_src", "pat_src", "route_src", "svc_src",
        "lisf_queue", "rate_heap", "stamp", "idle_list", "idle_pos",
        "records", "episodes", "audit", "validate",
        "n_arrivals", "n_completions", "n_abandon", "n_noops", "n_routings",
    )

    def __init__(self, config: SystemConfig, validate: bool = False, audit: bool = False):
        self.config = config
        n = config.n
        self.n = n
        self.lam = config.lambda_n
        self.gamma = config.gamma
        self.horizon = config.horizon
        self.policy = config.policy
        self.construction = config.construction
        seed = config.seed

        if config.rates is not None:
            rates = [float(m) for m in config.rates]
        else:
            rates = sample_rates(
                seed.substream(streams.RATES), config.rate_dist, n
            ).tolist()
        self.rates = rates
        cum = []
        acc = 0.0
        for m in rates:
            acc += m
            cum.append(acc)
        self.cum_rates = cum
        self.sum_rates = cum[-1]

        self.clock = 0.0
        self.head = config.x0
        in_service = min(config.x0, n)
        self.qlen = config.x0 - in_service
        self.idle_flags = bytearray(n)
        self.idle_since = [0.0] * n
        self.init_idle = bytearray(n)
        for k in range(in_service, n):
            self.idle_flags[k] = 1
            self.init_idle[k] = 1
        self.idle_count = n - in_service

        self.status = [_IN_SERVICE] * in_service
        self.queue = deque()
        self.patience = []
        self.arr_src = InterarrivalSource(seed.substream(streams.ARRIVALS), config.arrival_law)
        self.pat_src = (
            ExponentialSource(seed.substream(streams.PATIENCE), config.gamma)
            if config.gamma > 0
            else None
        )
        for _ in range(self.qlen):
            cid = len(self.status)
            self.status.append(_QUEUED)
            self.queue.append(cid)
            if self.pat_src is not None:
                heappush(self.patience, (self.pat_src.next(), cid))

        self.next_arrival = (
            self.arr_src.next() / self.lam if self.lam > 0 else _INF
        )
        if config.construction == "potential_stream":
            self.pot_src = ExponentialSource(seed.substream(streams.POTENTIAL), self.sum_rates)
            self.split_src = UniformSource(seed.substream(streams.SPLITTING))
            self.next_potential = self.pot_src.next()
            self.comp_heap = None
            self.svc_src = None
        else:
            self.pot_src = None
            self.split_src = None
            self.next_potential = _INF
            self.comp_heap = []
            self.svc_src = ExponentialSource(seed.substream(streams.SERVICE), 1.0)
            for k in range(in_service):
                heappush(self.comp_heap, (self.svc_src.next() / rates[k], k))

        self.route_src = (
            UniformSource(seed.substream(streams.ROUTING))
            if config.policy == "RANDOM_IDLE"
            else None
        )

        self.lisf_queue = None
        self.rate_heap = None
        self.stamp = None
        self.idle_list = None
        self.idle_pos = None
        if self.policy == "LISF":
            self.lisf_queue = deque(
                k for k in range(n) if self.idle_flags[k]
            )
        elif self.policy in ("FSF", "SSF"):
            sign = -1.0 if self.policy == "FSF" else 1.0
            self.stamp = [0] * n
            self.rate_heap = []
            for k in range(n):
                if self.idle_flags[k]:
                    heappush(self.rate_heap, (sign * rates[k], k, 0))
        else:
            self.idle_list = [k for k in range(n) if self.idle_flags[k]]
            self.idle_pos = [-1] * n
            for j, k in enumerate(self.idle_list):
                self.idle_pos[k] = j

        self.records = []
        self.episodes = []
        self.audit = [] if audit else None
        self.validate = validate
        self.n_arrivals = 0
        self.n_completions = 0
        self.n_abandon = 0
        self.n_noops = 0
        self.n_routings = 0

    # -- idle-set bookkeeping ------------------------------------------------

    def _idle_start(self, k: int, t: float):
        self.idle_flags[k] = 1
        self.idle_since[k] = t
        self.idle_count += 1
        policy = self.policy
        if policy == "LISF":
            self.lisf_queue.append(k)
        elif policy == "FSF":
            self.stamp[k] += 1
            heappush(self.rate_heap, (-self.rates[k], k, self.stamp[k]))
        elif policy == "SSF":
            self.stamp[k] += 1
            heappush(self.rate_heap, (self.rates[k], k, self.stamp[k]))
        else:
            self.idle_pos[k] = len(self.idle_list)
            self.idle_list.append(k)

    def _pick_idle(self) -> int:
        policy = self.policy
        if policy == "LISF":
            k = self.lisf_queue.popleft()
        elif policy in ("FSF", "SSF"):
            heap = self.rate_heap
            while True:
                _, k, st = heappop(heap)
                if self.stamp[k] == st and self.idle_flags[k]:
                    break
        else:
            u = self.route_src.next()
            lst = self.idle_list
            j = int(u * len(lst))
            k = lst[j]
            last = lst[-1]
            lst[j] = last
            self.idle_pos[last] = j
            lst.pop()
            self.idle_pos[k] = -1
            if self.audit is not None:
                self._record_audit(k, u, restore=(j, last))
                return k
        if self.audit is not None:
            self._record_audit(k, None)
        return k

    def _record_audit(self, chosen: int, u, restore=None):
        # snapshot the idle set as the selector saw it; idle_flags still
        # include the chosen server here, only the fast structure dropped it
        if self.policy == "RANDOM_IDLE":
            # undo the swap-remove so the list order matches what the
            # uniform draw was applied to
            j, last = restore
            order = list(self.idle_list)
            order.append(last)
            order[j] = chosen
        else:
            order = [k for k in range(self.n) if self.idle_flags[k]]
        snapshot = tuple((k, self.rates[k], self.idle_since[k]) for k in order)
        self.audit.append((snapshot, chosen, u))

    # -- event handlers ------------------------------------------------------

    def _handle_potential(self, t: float):
        u = self.split_src.next()
        k = bisect_left(self.cum_rates, u * self.sum_rates)
        self.next_potential = t + self.pot_src.next()
        if self.idle_flags[k]:
            self.n_noops += 1
            self.records.append((t, KIND_POTENTIAL_NOOP, k, self.head, self.idle_count))
        else:
            self._complete(t, k)

    def _handle_timer(self):
        t, k = heappop(self.comp_heap)
        self._complete(t, k)

    def _complete(self, t: float, k: int):
        self.head -= 1
        self.n_completions += 1
        records = self.records
        if self.qlen > 0:
            # FCFS handoff: the server takes the next live queued customer
            records.append((t, KIND_COMPLETION, k, self.head, self.idle_count))
            status = self.status
            queue = self.queue
            cid = queue.popleft()
            while status[cid] == _ABANDONED:
                cid = queue.popleft()
            status[cid] = _IN_SERVICE
            self.qlen -= 1
            self.n_routings += 1
            if self.comp_heap is not None:
                heappush(self.comp_heap, (t + self.svc_src.next() / self.rates[k], k))
            records.append((t, KIND_ROUTING, k, self.head, self.idle_count))
        else:
            self._idle_start(k, t)
            records.append((t, KIND_COMPLETION, k, self.head, self.idle_count))

    def _handle_arrival(self, t: float):
        self.next_arrival = t + self.arr_src.next() / self.lam
        self.head += 1
        self.n_arrivals += 1
        cid = len(self.status)
        records = self.records
        if self.idle_count > 0:
            k = self._pick_idle()
            self.idle_flags[k] = 0
            self.idle_count -= 1
            self.episodes.append((k, self.idle_since[k], t, self.init_idle[k]))
            self.init_idle[k] = 0
            self.status.append(_IN_SERVICE)
            self.n_routings += 1
            if self.comp_heap is not None:
                heappush(self.comp_heap, (t + self.svc_src.next() / self.rates[k], k))
            records.append((t, KIND_ARRIVAL, -1, self.head, self.idle_count))
            records.append((t, KIND_ROUTING, k, self.head, self.idle_count))
        else:
            self.status.append(_QUEUED)
            self.queue.append(cid)
            self.qlen += 1
            if self.pat_src is not None:
                heappush(self.patience, (t + self.pat_src.next(), cid))
            records.append((t, KIND_ARRIVAL, -1, self.head, self.idle_count))

    def _handle_patience(self):
        t, cid = heappop(self.patience)
        if self.status[cid] != _QUEUED:
            return
        self.status[cid] = _ABANDONED
        self.qlen -= 1
        self.head -= 1
        self.n_abandon += 1
        self.records.append((t, KIND_ABANDONMENT, -1, self.head, self.idle_count))

    def step(self) -> bool:
        """Process the earliest pending event; False once past horizon."""
        t_comp = (
            self.next_potential
            if self.comp_heap is None
            else (self.comp_heap[0][0] if self.comp_heap else _INF)
        )
        t_arr = self.next_arrival
        t_pat = self.patience[0][0] if self.patience else _INF
        if t_comp <= t_arr and t_comp <= t_pat:
            if t_comp > self.horizon:
                return False
            self.clock = t_comp
            if self.comp_heap is None:
                self._handle_potential(t_comp)
            else:
                self._handle_timer()
        elif t_arr <= t_pat:
            if t_arr > self.horizon:
                return False
            self.clock = t_arr
            self._handle_arrival(t_arr)
        else:
            if t_pat == _INF or t_pat > self.horizon:
                return False
            self.clock = t_pat
            self._handle_patience()
        if self.validate:
            head, idle = self.head, self.idle_count
            if idle != max(self.n - head, 0) or self.qlen != max(head - self.n, 0):
                raise AssertionError(
                    f"state invariant broken at t={self.clock}: "
                    f"head={head}, idle={idle}, queue={self.qlen}"
                )
        return True

    def finish(self) -> Trajectory:
        """Close open idle episodes at the horizon and freeze the path."""
        self.clock = self.horizon
        episodes = list(self.episodes)
        ep_open = [False] * len(episodes)
        for k in range(self.n):
            if self.idle_flags[k]:
                episodes.append((k, self.idle_since[k], self.horizon, self.init_idle[k]))
                ep_open.append(True)
        if self.records:
            times, kinds, servers, heads, idles = zip(*self.records)
        else:
            times = kinds = servers = heads = idles = ()
        if episodes:
            ep_server, ep_start, ep_end, ep_initial = zip(*episodes)
        else:
            ep_server = ep_start = ep_end = ep_initial = ()
        return Trajectory(
            config=self.config,
            rates=np.asarray(self.rates),
            times=np.asarray(times, dtype=float),
            kinds=np.asarray(kinds, dtype=np.int8),
            servers=np.asarray(servers, dtype=np.int32),
            heads=np.asarray(heads, dtype=np.int64),
            idles=np.asarray(idles, dtype=np.int64),
            ep_server=np.asarray(ep_server, dtype=np.int32),
            ep_start=np.asarray(ep_start, dtype=float),
            ep_end=np.asarray(ep_end, dtype=float),
            ep_open=np.asarray(ep_open, dtype=bool),
            ep_initial=np.asarray(ep_initial, dtype=bool),
            arrivals=self.n_arrivals,
            completions=self.n_completions,
            abandonments=self.n_abandon,
            potential_noops=self.n_noops,
            routings=self.n_routings,
            final_head=self.head,
            audit=self.audit,
        )


def init(config: SystemConfig, validate: bool = False, audit: bool = False) -> SystemState:
    """Build the initial state: min(x0, n) customers in service at the
    lowest-indexed servers, the remainder queued with fresh patience
    deadlines, rates realized if the config left them empty."""
    return SystemState(config, validate=validate, audit=audit)


def step(state: SystemState) -> list[tuple]:
    """Advance one event; returns the records it appended (possibly
    empty for silently cancelled patience expiries)."""
    before = len(state.records)
    state.step()
    return state.records[before:]


def simulate(config: SystemConfig, validate: bool = False, audit: bool = False) -> Trajectory:
    """Run one replication to the horizon under config.construction."""
    state = SystemState(config, validate=validate, audit=audit)
    while state.step():
        pass
    return state.finish()


def simulate_per_server(config: SystemConfig, validate: bool = False) -> Trajectory:
    """Run the independent per-server-timer construction (same law as
    simulate; used as a distributional cross-check)."""
    if config.construction != "per_server_timers":
        config = SystemConfig(
            n=config.n, lambda_n=config.lambda_n, rate_dist=config.rate_dist,
            gamma=config.gamma, horizon=config.horizon, arrival_law=config.arrival_law,
            rates=config.rates, x0=config.x0, policy=config.policy,
            construction="per_server_timers", seed=config.seed,
        )
    return simulate(config, validate=validate)
