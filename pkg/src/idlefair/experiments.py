"""Experiment orchestration: replication batches, the compare pipeline,
and its tolerance checks.

Replications are independent jobs keyed by their stream ids; results are
aggregated by replication index, so the worker count never changes any
output.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .diffusion import SdeParams, arrival_cv2, default_dt, terminal_law
from .fairness import default_zeta, fairness_measure, limit_mean_rate, predicted_limit_measure, tau_epsilon
from .ladder import LadderSpec, build_ladder, idleness_scaling_report
from .measures import DiscreteMeasure, average_measures, mean_of_measure, wasserstein1
from .output import (
    RunManifest,
    write_ks_table_csv,
    write_scaling_report_csv,
    write_terminal_samples_csv,
    write_trajectory_binary,
    write_trajectory_csv,
)
from .policies import is_totally_blind
from .simulation import SystemConfig, simulate
from .stats import ks_distance

# substream label for the level-wide Brownian draws of matched SDE paths
_SDE_LEVEL_LABEL = 1_000_001

# spec-pinned tolerances for compare --check
W1_LIMIT_TOL = 0.05
MEAN_RATE_TOL = 0.05
DEGENERATE_MASS_TOL = 0.10
KS_TOL = 0.10
KS_MIN_REPS = 500  # the KS tolerance is calibrated at 500 paths per side
SUP_IBAR_RATIO_MAX = 0.85


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None:
        return max(int(workers), 1)
    env = os.environ.get("IDLEFAIR_WORKERS", "").strip()
    if env:
        return max(int(env), 1)
    return 1


@dataclass
class ReplicationSummary:
    """Per-replication scalars the reports need; trajectories are not
    retained."""

    n: int
    rep: int
    rates_sum: float
    terminal_atoms: list
    terminal_mean_rate: float
    w1_to_limit: float
    tau0: float
    xhat_terminal: float
    sup_ihat: float
    sup_ibar: float
    idle_effort: float
    events: int
    violations: int

    def terminal_measure(self) -> DiscreteMeasure:
        locs, wts = zip(*self.terminal_atoms) if self.terminal_atoms else ((), ())
        return DiscreteMeasure.from_atoms(locs, wts)


def summarize_replication(config: SystemConfig, rep: int = 0, verify: bool = True) -> ReplicationSummary:
    """Simulate one replication, verify its invariants, reduce to summary
    statistics."""
    traj = simulate(config, validate=verify)
    report = traj.verify() if verify else {"violations": -1}
    n = config.n
    zeta = default_zeta(config.policy, config.rate_dist)
    terminal = fairness_measure(traj, config.horizon, zeta)
    predicted = predicted_limit_measure(config.policy, config.rate_dist)
    sup_idle = max(traj.initial_idle(), int(traj.idles.max()) if traj.idles.size else 0)
    sqrt_n = math.sqrt(n)
    return ReplicationSummary(
        n=n,
        rep=rep,
        rates_sum=float(traj.rates.sum()),
        terminal_atoms=terminal.as_pairs(),
        terminal_mean_rate=mean_of_measure(terminal),
        w1_to_limit=wasserstein1(terminal, predicted),
        tau0=tau_epsilon(traj, 0.0),
        xhat_terminal=(traj.final_head - n) / sqrt_n,
        sup_ihat=sup_idle / sqrt_n,
        sup_ibar=sup_idle / n,
        idle_effort=float(np.dot(traj.rates, traj.cum_idle_per_server())) / n,
        events=int(traj.kinds.size),
        violations=int(report["violations"]),
    )


def _job(args) -> ReplicationSummary:
    config, rep, verify = args
    return summarize_replication(config, rep, verify)


def run_level(spec: LadderSpec, level: int, workers: int = 1, verify: bool = True,
              reps: int | None = None) -> list[ReplicationSummary]:
    """All replications of one ladder level, in replication order."""
    if reps is not None and reps != spec.reps:
        spec = LadderSpec(
            n_values=spec.n_values, lambda_hat=spec.lambda_hat, rate_dist=spec.rate_dist,
            gamma=spec.gamma, horizon=spec.horizon, arrival_law=spec.arrival_law,
            xi0=spec.xi0, reps=reps, policy=spec.policy, construction=spec.construction,
            base_seed=spec.base_seed, freeze_rates=spec.freeze_rates,
        )
    n = spec.n_values[level]
    configs = [c for c in build_ladder(spec) if c.n == n]
    jobs = [(cfg, rep, verify) for rep, cfg in enumerate(configs)]
    if workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs, chunksize=max(len(jobs) // (4 * workers), 1)))


def matched_sde_terminals(spec: LadderSpec, level: int,
                          summaries: list[ReplicationSummary]) -> tuple[np.ndarray, np.ndarray]:
    """Terminal SDE samples paired with simulated replications through
    their realized rate sums (one beta per replication)."""
    n = spec.n_values[level]
    mu_bar = spec.rate_dist.mean
    betas = np.array(
        [
            spec.lambda_hat - (s.rates_sum - n * mu_bar) / math.sqrt(n)
            for s in summaries
        ]
    )
    x0 = spec.initial_headcount(n)
    params = SdeParams(
        xi0=(x0 - n) / math.sqrt(n),
        mu_bar=mu_bar,
        ca2=arrival_cv2(spec.arrival_law.ca2, mu_bar),
        beta=0.0,
        m=limit_mean_rate(spec.policy, spec.rate_dist),
        gamma=spec.gamma,
        dt=default_dt(spec.horizon),
        horizon=spec.horizon,
        seed=spec.level_stream(level).substream(_SDE_LEVEL_LABEL),
    )
    return betas, terminal_law(params, betas)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: str
    note: str = ""


@dataclass
class CompareResult:
    spec: LadderSpec
    summaries: dict
    scaling_rows: list
    ks_rows: list
    checks: list
    metrics: dict
    out_dir: Path | None = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _build_checks(spec: LadderSpec, summaries: dict, ks_rows: list,
                  scaling_rows: list) -> list[CheckResult]:
    checks: list[CheckResult] = []
    n_max = spec.n_values[-1]
    top = summaries[n_max]
    dist = spec.rate_dist

    violations = sum(max(s.violations, 0) for ss in summaries.values() for s in ss)
    checks.append(CheckResult("pathwise_invariants", violations == 0, violations, "== 0"))

    mean_terminal = average_measures([s.terminal_measure() for s in top])
    predicted = predicted_limit_measure(spec.policy, dist)
    w1 = wasserstein1(mean_terminal, predicted)
    if is_totally_blind(spec.policy):
        checks.append(CheckResult(f"w1_mean_terminal_to_blind_limit_n{n_max}", w1 <= W1_LIMIT_TOL, w1, f"<= {W1_LIMIT_TOL}"))
        target = limit_mean_rate(spec.policy, dist)
        mean_rate = float(np.mean([s.terminal_mean_rate for s in top]))
        checks.append(
            CheckResult(
                f"mean_idleness_weighted_rate_n{n_max}",
                abs(mean_rate - target) <= MEAN_RATE_TOL,
                mean_rate,
                f"within {MEAN_RATE_TOL} of {target:.6g}",
            )
        )
        if len(spec.n_values) >= 2:
            medians = [
                float(np.median([s.w1_to_limit for s in summaries[n]]))
                for n in spec.n_values
            ]
            ok = all(b <= a + 1e-12 for a, b in zip(medians, medians[1:]))
            checks.append(
                CheckResult(
                    "w1_median_nonincreasing", ok, medians[-1],
                    "median W1 nonincreasing across n_values",
                )
            )
    elif dist.atoms() is not None:
        if spec.policy == "FSF":
            mass = float(np.mean([1.0 - s.terminal_measure().atom_weight(dist.support_min) for s in top]))
            checks.append(
                CheckResult(
                    f"fsf_mass_above_slowest_n{n_max}", mass <= DEGENERATE_MASS_TOL, mass,
                    f"<= {DEGENERATE_MASS_TOL}",
                )
            )
        else:
            mass = float(np.mean([s.terminal_measure().atom_weight(dist.support_max) for s in top]))
            checks.append(
                CheckResult(
                    f"ssf_mass_at_fastest_n{n_max}", mass >= 1.0 - DEGENERATE_MASS_TOL, mass,
                    f">= {1.0 - DEGENERATE_MASS_TOL}",
                )
            )

    for row in ks_rows:
        if row["n"] != n_max:
            continue
        if spec.reps >= KS_MIN_REPS:
            checks.append(
                CheckResult(
                    f"ks_sde_vs_sim_n{n_max}", row["statistic"] <= KS_TOL,
                    row["statistic"], f"<= {KS_TOL}",
                )
            )
        else:
            checks.append(
                CheckResult(
                    f"ks_sde_vs_sim_n{n_max}", True, row["statistic"], "informational",
                    note=f"reps={spec.reps} < {KS_MIN_REPS}; tolerance not applied",
                )
            )

    if scaling_rows:
        last = scaling_rows[-1]
        ratio = last.get("sup_ibar_median_ratio")
        if ratio is not None:
            checks.append(
                CheckResult(
                    "sup_ibar_median_ratio", ratio <= SUP_IBAR_RATIO_MAX, ratio,
                    f"<= {SUP_IBAR_RATIO_MAX}",
                )
            )
        efforts = [row["idle_effort_median"] for row in scaling_rows]
        ok = all(b < a for a, b in zip(efforts, efforts[1:]))
        checks.append(
            CheckResult("idle_effort_median_decreasing", ok, efforts[-1], "strictly decreasing in n")
        )
    return checks


def run_compare(spec: LadderSpec, out_dir, workers: int | None = None) -> CompareResult:
    """Full pipeline: simulate the ladder, compute fairness terminals and
    matched SDE samples, emit reports and the manifest."""
    workers = resolve_workers(workers)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.for_config(spec)
    manifest.started_at = datetime.now(timezone.utc).isoformat()

    summaries: dict[int, list[ReplicationSummary]] = {}
    ks_rows = []
    metrics: dict[str, float] = {}
    predicted = predicted_limit_measure(spec.policy, spec.rate_dist)

    for level, n in enumerate(spec.n_values):
        level_summaries = run_level(spec, level, workers=workers)
        summaries[n] = level_summaries

        betas, sde_terms = matched_sde_terminals(spec, level, level_summaries)
        xhat = np.array([s.xhat_terminal for s in level_summaries])
        ks = ks_distance(xhat, sde_terms)
        ks_rows.append(
            {"label": f"xhat_vs_sde_n{n}", "n": n, "statistic": ks,
             "n1": xhat.size, "n2": sde_terms.size}
        )

        mean_terminal = average_measures([s.terminal_measure() for s in level_summaries])
        metrics[f"n{n}_w1_mean_terminal_to_limit"] = wasserstein1(mean_terminal, predicted)
        metrics[f"n{n}_w1_median"] = float(np.median([s.w1_to_limit for s in level_summaries]))
        metrics[f"n{n}_mean_idleness_weighted_rate"] = float(
            np.mean([s.terminal_mean_rate for s in level_summaries])
        )
        metrics[f"n{n}_ks_sde_vs_sim"] = ks
        metrics[f"n{n}_median_sup_ihat"] = float(np.median([s.sup_ihat for s in level_summaries]))
        metrics[f"n{n}_median_sup_ibar"] = float(np.median([s.sup_ibar for s in level_summaries]))
        metrics[f"n{n}_median_idle_effort"] = float(np.median([s.idle_effort for s in level_summaries]))

        fairness_file = out_dir / f"fairness_terminal_n{n}.csv"
        lines = ["# idlefair fairness terminal csv schema=1", "rep,atom_location,weight"]
        for s in level_summaries:
            for loc, w in s.terminal_atoms:
                lines.append(f"{s.rep},{loc!r},{w!r}")
        fairness_file.write_text("\n".join(lines) + "\n")
        manifest.add_output(fairness_file)

        terminals_file = out_dir / f"terminals_n{n}.csv"
        write_terminal_samples_csv(
            terminals_file,
            {
                "xhat_terminal": xhat.tolist(),
                "beta_matched": betas.tolist(),
                "sde_terminal": sde_terms.tolist(),
            },
        )
        manifest.add_output(terminals_file)

        # one trajectory per level under the run directory (replayed from
        # the replication-0 seed, so it is byte-reproducible)
        rep0 = next(c for c in build_ladder(spec) if c.n == n)
        traj = simulate(rep0)
        for writer, suffix in ((write_trajectory_csv, "csv"), (write_trajectory_binary, "bin")):
            path = out_dir / f"trajectory_n{n}_rep0.{suffix}"
            writer(traj, path)
            manifest.add_output(path)

    scaling_rows = (
        idleness_scaling_report(summaries) if len(spec.n_values) >= 2 else []
    )
    if scaling_rows:
        path = out_dir / "scaling_report.csv"
        write_scaling_report_csv(scaling_rows, path)
        manifest.add_output(path)
    ks_path = out_dir / "ks_table.csv"
    write_ks_table_csv(ks_rows, ks_path)
    manifest.add_output(ks_path)

    checks = _build_checks(spec, summaries, ks_rows, scaling_rows)
    for c in checks:
        metrics[f"check_{c.name}"] = 1.0 if c.passed else 0.0
    manifest.summary_metrics = metrics
    manifest.finished_at = datetime.now(timezone.utc).isoformat()
    manifest.save(out_dir)
    return CompareResult(
        spec=spec, summaries=summaries, scaling_rows=scaling_rows,
        ks_rows=ks_rows, checks=checks, metrics=metrics, out_dir=out_dir,
    )
