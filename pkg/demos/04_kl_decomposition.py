"""Numerical check of the error decomposition for geometric-mean pooling.

For any target P and experts Q_1..Q_m, the pooled distribution
Pbar = prod_j Q_j^(1/m) / Z satisfies

    KL(P || Pbar) = mean_j KL(P || Q_j) + log Z,   log Z <= 0,

so the pooled model is never worse than the average expert, and strictly
better whenever the experts disagree.
"""

import numpy as np

from pxs.theory import run_trials, verify_theorem

rng = np.random.default_rng(0)
P = rng.dirichlet(np.ones(6))
experts = rng.dirichlet(np.ones(6), size=4)
r = verify_theorem(P, experts)
print("KL of each expert:   ", np.round(r.kl_each, 4))
print(f"mean expert KL       {r.kl_each.mean():.6f}")
print(f"pooled KL            {r.kl_ensemble:.6f}")
print(f"log Z                {r.log_Z:.6f}")
print(f"residual             {r.residual:.2e}")

same = verify_theorem(P, np.tile(experts[0], (4, 1)))
print(f"identical experts:   log Z = {same.log_Z:.1e}")

s = run_trials(2000, seed=1)
print(f"2000 random trials: max |residual| {s.max_abs_residual:.1e}, max log Z {s.max_log_Z:.1e}, failures {s.failures}")
