"""Routing policies over the set of idle servers.

FSF and SSF read realized service rates; LISF and RANDOM_IDLE are blind:
their selectors only ever receive idle indices and idle-start times, so
they cannot depend on rates by construction.
"""
from __future__ import annotations

POLICIES = ("FSF", "SSF", "LISF", "RANDOM_IDLE")
BLIND_POLICIES = frozenset({"LISF", "RANDOM_IDLE"})


def as_policy(name: str) -> str:
    p = str(name).upper()
    if p not in POLICIES:
        raise ValueError(f"unknown policy {name!r}; expected one of {POLICIES}")
    return p


def is_totally_blind(policy: str) -> bool:
    """Whether the policy ignores rates entirely (selector never sees
    them), so its predicted fairness limit is the size-biased rate law."""
    return as_policy(policy) in BLIND_POLICIES


def _select_fsf(idle_set):
    # max rate, ties to the lowest server index
    return max(idle_set, key=lambda e: (e[1], -e[0]))[0]


def _select_ssf(idle_set):
    return min(idle_set, key=lambda e: (e[1], e[0]))[0]


def _select_lisf(indices, idle_since):
    # earliest idle start, ties to the lowest server index
    best = 0
    for j in range(1, len(indices)):
        if (idle_since[j], indices[j]) < (idle_since[best], indices[best]):
            best = j
    return indices[best]


def _select_random(count: int, u: float) -> int:
    return int(u * count)


def select_server(policy: str, idle_set, rng=None, u: float | None = None) -> int:
    """Pick the idle server an arrival is routed to.

    ``idle_set`` is a nonempty sequence of ``(server_index, rate,
    idle_since)`` tuples.  RANDOM_IDLE consumes one uniform draw, either
    ``u`` directly or ``rng.next()``; the other policies are
    deterministic functions of the idle set.
    """
    if not idle_set:
        raise ValueError("select_server requires a nonempty idle set")
    policy = as_policy(policy)
    if policy == "FSF":
        return _select_fsf(idle_set)
    if policy == "SSF":
        return _select_ssf(idle_set)
    if policy == "LISF":
        return _select_lisf([e[0] for e in idle_set], [e[2] for e in idle_set])
    if u is None:
        if rng is None:
            raise ValueError("RANDOM_IDLE needs a uniform source or an explicit draw")
        u = rng.next()
    return idle_set[_select_random(len(idle_set), u)][0]


def replay_with_permuted_rates(policy: str, audit_records, permutation) -> bool:
    """Blindness audit: rerun the selector over recorded routing calls
    with rate labels shuffled (RNG draws and idle_since held fixed) and
    report whether every selected index is unchanged.

    ``permutation`` maps each rate value to its replacement.
    """
    policy = as_policy(policy)
    for snapshot, chosen, u in audit_records:
        permuted = [(idx, permutation(rate), since) for idx, rate, since in snapshot]
        if select_server(policy, permuted, u=u) != chosen:
            return False
    return True
