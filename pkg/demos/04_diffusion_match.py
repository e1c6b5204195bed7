"""Scaled headcount against the one-dimensional limiting diffusion.

The centered, sqrt(n)-scaled headcount converges to a diffusion whose
drift pulls up with slope m (the mean of the limiting fairness measure)
below zero and decays at the abandonment rate above zero; the drift
intercept beta = lambda_hat - sigma~ is random through the realized
rates.  Pairing each replication's beta with its own rate draw removes
the environment variance from the comparison.
"""
import numpy as np

from idlefair import RateDistribution, RngStream, ks_distance
from idlefair.experiments import matched_sde_terminals, run_level
from idlefair.ladder import LadderSpec

N = 100
REPS = 150
DIST = RateDistribution.two_point(1.0, 0.5, 2.0)

spec = LadderSpec(
    n_values=(N,), lambda_hat=-1.0, rate_dist=DIST, gamma=0.5, horizon=20.0,
    reps=REPS, policy="LISF", base_seed=RngStream(31415, 0),
)
print(f"simulating {REPS} replications at n={N} under LISF ...")
summaries = run_level(spec, 0)
xhat = np.array([s.xhat_terminal for s in summaries])
betas, sde = matched_sde_terminals(spec, 0, summaries)

print(f"mean slope of the idle-side drift: m = E[mu^2]/E[mu] = {2.5 / 1.5:.4f}")
print(f"simulated  X^(T):  mean {xhat.mean():+.3f}, sd {xhat.std():.3f}")
print(f"diffusion xi(T):   mean {sde.mean():+.3f}, sd {sde.std():.3f}")
print(f"matched beta:      mean {betas.mean():+.3f}, sd {betas.std():.3f}")
print(f"two-sample KS distance: {ks_distance(xhat, sde):.4f}")
print("\nquantiles (sim vs diffusion):")
for q in (0.1, 0.25, 0.5, 0.75, 0.9):
    print(f"  q{int(q*100):>2}: {np.quantile(xhat, q):+.3f} vs {np.quantile(sde, q):+.3f}")
