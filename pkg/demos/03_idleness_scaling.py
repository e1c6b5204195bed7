"""How idleness scales with system size under square-root staffing.

Along the ladder, the peak idle-server count grows like sqrt(n) (so the
sqrt(n)-scaled supremum is roughly flat), the idle *fraction* shrinks
like 1/sqrt(n), and the per-server idle service effort vanishes.
"""
from idlefair import RateDistribution, RngStream, scale, simulate
from idlefair.ladder import LadderSpec, build_ladder, idleness_scaling_report

spec = LadderSpec(
    n_values=(25, 50, 100, 200),
    lambda_hat=-1.0,
    rate_dist=RateDistribution.two_point(1.0, 0.5, 2.0),
    gamma=0.5,
    horizon=20.0,
    reps=40,
    policy="LISF",
    base_seed=RngStream(424242, 0),
)

paths = {}
for cfg in build_ladder(spec):
    paths.setdefault(cfg.n, []).append(scale(simulate(cfg)))

rows = idleness_scaling_report(paths)
print(f"{'n':>5} | {'sup idle/sqrt(n)':>17} | {'sup idle/n':>11} | {'idle effort':>11} | {'ibar ratio':>10}")
print("-" * 70)
for row in rows:
    ratio = row.get("sup_ibar_median_ratio")
    print(
        f"{row['n']:>5} | {row['sup_ihat_median']:>17.3f} | {row['sup_ibar_median']:>11.4f} "
        f"| {row['idle_effort_median']:>11.4f} | "
        + (f"{ratio:>10.3f}" if ratio is not None else " " * 10)
    )
print(
    "\nsup idle/sqrt(n) medians should stay of the same order while the"
    "\nidle fraction and idle effort columns fall; each 'ibar ratio' should"
    "\nsit near sqrt(n_prev/n)."
)
