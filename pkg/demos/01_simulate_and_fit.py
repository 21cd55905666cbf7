"""
Simulating from the hierarchy and fitting the Gibbs sampler
============================================================

"""

# A dataset drawn from the prior: Gaussian design, spike-slab coefficients,
# Laplace errors.  Everything is keyed by a seed and a replication id.
import numpy as np

from robust_bayes.baselines import fit_lad, fit_ls
from robust_bayes.distributions import RngStream
from robust_bayes.gibbs import run_chain
from robust_bayes.model import GibbsConfig, PriorHyperparams, l2_error
from robust_bayes.simulate import SimDesign, generate_dataset

n, kappa = 500, 0.3
data = generate_dataset(SimDesign(n, kappa, RngStream(seed=0, stream_id=1)))
print(f"n={data.n} p={data.p} theta0={data.theta0:.3f}")
print("large coefficients in the truth:", int((data.T0 == 1).sum()))

# The prior scales with n and kappa; roughly n / (3 log n) coefficients are
# expected to come from the wide component.
hyper = PriorHyperparams.scaled(n, kappa)
print(f"E phi_frac = {hyper.mean_phi_frac:.4f}, E delta1^2 = {hyper.mean_delta1_sq:.2e}")

# 1000 sweeps, first half discarded.
config = GibbsConfig(iterations=1000, burn_in=500, stream=RngStream(0, 99))
draws = run_chain(data, hyper, config)

# Posterior mean against the two unpenalized fits.
for name, beta in [("bayes", draws.beta_mean), ("ls", fit_ls(data)), ("lad", fit_lad(data))]:
    print(f"{name:>5}: squared l2 error {l2_error(beta, data.beta0):.4f}")

# Inclusion frequencies pick out the large coefficients.
freq = draws.inclusion_frequency
top = np.argsort(freq)[::-1][:10]
print("top inclusion frequencies:", np.round(freq[top], 2))
print("truth labels there:       ", data.T0[top])
print(f"posterior mean of theta^2: {draws.theta2.mean():.3f} (truth {data.theta0 ** 2:.3f})")
