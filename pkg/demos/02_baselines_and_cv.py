"""
Frequentist baselines and cross-validated penalties
====================================================

"""

# Six competitors: squared or absolute loss, with no penalty, an l1 penalty
# or an l2 penalty.  Penalized fits pick lambda by 5-fold cross-validation
# over a 50-point log grid.
import numpy as np

from robust_bayes.baselines import ESTIMATORS, CvConfig, PenaltySpec, cross_validate, fit_estimator
from robust_bayes.distributions import RngStream
from robust_bayes.model import l2_error
from robust_bayes.simulate import SimDesign, generate_dataset

data = generate_dataset(SimDesign(300, 0.3, RngStream(3, 0)))

for name in ("ls", "lad", "lasso-ls", "lasso-lad", "ridge-ls", "ridge-lad"):
    beta = fit_estimator(name, data, CvConfig(), RngStream(3, 1).generator())
    print(f"{name:>10}: squared l2 error {l2_error(beta, data.beta0):.4f}")

# The CV curve for the LAD lasso: the selected lambda minimises the mean
# held-out absolute error, ties going to the smaller value.
loss, penalty = ESTIMATORS["lasso-lad"]
lam, beta, grid, curve = cross_validate(data, PenaltySpec(loss, penalty, "cross-validate"),
                                        CvConfig(), RngStream(3, 1).generator(), return_curve=True)
print(f"selected lambda {lam:.3g} from [{grid[-1]:.3g}, {grid[0]:.3g}]")
for g, c in list(zip(grid, curve))[::7]:
    print(f"  lambda {g:10.4g}  cv loss {c:.4f}")
print("nonzero coefficients:", int(np.count_nonzero(beta)), "of", data.p)
