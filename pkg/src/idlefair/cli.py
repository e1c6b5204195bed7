"""Command-line harness.

Subcommands: simulate, ladder, fairness, sde, compare.  Exit code 0 on
success, 2 on config/validation errors, 3 when compare --check finds a
tolerance violation.  Worker count comes from --workers or the
IDLEFAIR_WORKERS environment variable.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .diffusion import SdeParams, arrival_cv2, default_dt, sample_beta, terminal_law
from .experiments import (
    _SDE_LEVEL_LABEL,
    ReplicationSummary,
    resolve_workers,
    run_compare,
    run_level,
)
from .fairness import (
    default_zeta,
    fairness_path,
    limit_mean_rate,
    predicted_limit_measure,
    tau_epsilon,
)
from .ladder import LadderSpec, idleness_scaling_report
from .measures import DiscreteMeasure, mean_of_measure, wasserstein1
from .output import (
    RunManifest,
    canonical_json,
    read_trajectory_binary,
    write_fairness_csv,
    write_scaling_report_csv,
    write_terminal_samples_csv,
    write_trajectory_binary,
    write_trajectory_csv,
)
from .simulation import SystemConfig, simulate

_SDE_BETA_LABEL = 1_000_000


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idlefair",
        description="Many-server queue simulation laboratory: fairness measures, "
        "routing policies, diffusion limits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one system replication and store its trajectory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ladder", help="run a ladder of systems and emit the idleness scaling report")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("fairness", help="fairness path and summary of a stored trajectory")
    p.add_argument("--traj", required=True, help="binary trajectory file (.bin)")
    p.add_argument("--zeta", default="auto", help="'auto' or a JSON file of [location, weight] atoms")
    p.add_argument("--out", default=None, help="output directory (default: next to the trajectory)")

    p = sub.add_parser("sde", help="integrate the limiting diffusion and store terminal samples")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="sde_out")

    p = sub.add_parser("compare", help="simulate, verify fairness limits, and match the diffusion")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--check", action="store_true", help="exit 3 if any tolerance check fails")
    p.add_argument("--workers", type=int, default=None)
    return parser


def _cmd_simulate(args) -> int:
    config = parse_config(args.config)
    if not isinstance(config, SystemConfig):
        raise ConfigError("simulate needs a single-system config (key lambda_n)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.for_config(config)
    manifest.started_at = datetime.now(timezone.utc).isoformat()
    traj = simulate(config, validate=True)
    traj.verify()
    for writer, name in (
        (write_trajectory_csv, "trajectory.csv"),
        (write_trajectory_binary, "trajectory.bin"),
    ):
        writer(traj, out / name)
        manifest.add_output(out / name)
    manifest.summary_metrics = {
        "events": float(traj.kinds.size),
        "arrivals": float(traj.arrivals),
        "completions": float(traj.completions),
        "abandonments": float(traj.abandonments),
        "potential_noops": float(traj.potential_noops),
        "final_head": float(traj.final_head),
    }
    manifest.finished_at = datetime.now(timezone.utc).isoformat()
    manifest.save(out)
    print(f"simulate: {traj.kinds.size} events -> {out}")
    return 0


def _cmd_ladder(args) -> int:
    spec = parse_config(args.config)
    if not isinstance(spec, LadderSpec):
        raise ConfigError("ladder needs a ladder config (key lambda_hat)")
    workers = resolve_workers(args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.for_config(spec)
    manifest.started_at = datetime.now(timezone.utc).isoformat()
    summaries: dict[int, list[ReplicationSummary]] = {}
    for level, n in enumerate(spec.n_values):
        summaries[n] = run_level(spec, level, workers=workers)
        manifest.summary_metrics[f"n{n}_median_sup_ihat"] = float(
            np.median([s.sup_ihat for s in summaries[n]])
        )
        manifest.summary_metrics[f"n{n}_median_idle_effort"] = float(
            np.median([s.idle_effort for s in summaries[n]])
        )
    if len(spec.n_values) >= 2:
        rows = idleness_scaling_report(summaries)
        write_scaling_report_csv(rows, out / "scaling_report.csv")
        manifest.add_output(out / "scaling_report.csv")
    manifest.finished_at = datetime.now(timezone.utc).isoformat()
    manifest.save(out)
    print(f"ladder: {sum(len(v) for v in summaries.values())} replications -> {out}")
    return 0


def _load_zeta(arg: str, config) -> DiscreteMeasure:
    if arg == "auto":
        return default_zeta(config.policy, config.rate_dist)
    raw = json.loads(Path(arg).read_text())
    atoms = raw["atoms"] if isinstance(raw, dict) else raw
    locs, wts = zip(*atoms)
    zeta = DiscreteMeasure.from_atoms(locs, wts)
    if not zeta.is_probability(tol=1e-9):
        raise ConfigError(f"zeta file {arg}: weights sum to {zeta.total}, need 1")
    return zeta


def _cmd_fairness(args) -> int:
    traj = read_trajectory_binary(args.traj)
    zeta = _load_zeta(args.zeta, traj.config)
    out = Path(args.out) if args.out else Path(args.traj).parent
    out.mkdir(parents=True, exist_ok=True)
    path = fairness_path(traj, zeta)
    write_fairness_csv(out / "fairness_path.csv", path)
    n = traj.n
    epsilons = [1.0, 0.5, 0.1, 1.0 / n]
    predicted = predicted_limit_measure(traj.config.policy, traj.config.rate_dist)
    terminal = path.terminal()
    summary = {
        "policy": traj.config.policy,
        "tau0": path.tau0 if math.isfinite(path.tau0) else None,
        "tau_epsilon": {
            repr(eps): (tau_epsilon(traj, eps) if math.isfinite(tau_epsilon(traj, eps)) else None)
            for eps in epsilons
        },
        "epsilon_ladder_note": (
            "default ladder {1, 0.5, 0.1, 1/n}; a pragmatic choice, smallest entry scales as 1/n"
        ),
        "terminal_measure": terminal.as_pairs(),
        "terminal_mean_rate": mean_of_measure(terminal),
        "w1_to_predicted_limit": wasserstein1(terminal, predicted),
        "zeta": zeta.as_pairs(),
    }
    (out / "fairness_summary.json").write_text(canonical_json(summary))
    print(f"fairness: tau0={summary['tau0']} w1={summary['w1_to_predicted_limit']:.4f} -> {out}")
    return 0


def _cmd_sde(args) -> int:
    spec = parse_config(args.config)
    if not isinstance(spec, LadderSpec):
        raise ConfigError("sde needs a ladder config (key lambda_hat)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.for_config(spec)
    manifest.started_at = datetime.now(timezone.utc).isoformat()
    mu_bar = spec.rate_dist.mean
    m = limit_mean_rate(spec.policy, spec.rate_dist)
    ca2 = arrival_cv2(spec.arrival_law.ca2, mu_bar)
    for level, n in enumerate(spec.n_values):
        x0 = spec.initial_headcount(n)
        params = SdeParams(
            xi0=(x0 - n) / math.sqrt(n),
            mu_bar=mu_bar,
            ca2=ca2,
            beta=0.0,
            m=m,
            gamma=spec.gamma,
            dt=default_dt(spec.horizon),
            horizon=spec.horizon,
            seed=spec.level_stream(level).substream(_SDE_LEVEL_LABEL),
        )
        betas = sample_beta(
            spec.lambda_hat,
            spec.rate_dist,
            stream=spec.level_stream(level).substream(_SDE_BETA_LABEL),
            size=spec.reps,
        )
        terms = terminal_law(params, betas)
        path = out / f"sde_terminals_n{n}.csv"
        write_terminal_samples_csv(path, {"beta": betas.tolist(), "sde_terminal": terms.tolist()})
        manifest.add_output(path)
        manifest.summary_metrics[f"n{n}_sde_terminal_mean"] = float(terms.mean())
        manifest.summary_metrics[f"n{n}_xi0"] = params.xi0
    manifest.summary_metrics.update(
        {"mu_bar": mu_bar, "ca2": ca2, "m": m, "gamma": spec.gamma, "dt": default_dt(spec.horizon)}
    )
    manifest.finished_at = datetime.now(timezone.utc).isoformat()
    manifest.save(out)
    print(f"sde: {spec.reps} paths per level -> {out}")
    return 0


def _cmd_compare(args) -> int:
    spec = parse_config(args.config)
    if not isinstance(spec, LadderSpec):
        raise ConfigError("compare needs a ladder config (key lambda_hat)")
    result = run_compare(spec, args.out, workers=args.workers)
    for c in result.checks:
        status = "PASS" if c.passed else "FAIL"
        note = f" ({c.note})" if c.note else ""
        print(f"[{status}] {c.name}: {c.value:.6g} (require {c.threshold}){note}")
    print(f"compare: outputs in {result.out_dir}")
    if args.check and not result.all_passed:
        return 3
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "ladder":
            return _cmd_ladder(args)
        if args.command == "fairness":
            return _cmd_fairness(args)
        if args.command == "sde":
            return _cmd_sde(args)
        return _cmd_compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
