"""
Checking the sampler against the joint distribution
===================================================

"""

# Two layers of checks.  The random variate generators are compared with
# their first two moments; the full sweep is checked by alternating prior
# draws with data regeneration and comparing the two routes to the joint
# law of parameters and data.
from robust_bayes.validation import geweke_joint_test, moment_suite

for check in moment_suite(n_draws=50_000, seed=1):
    print(f"{'ok' if check.passed else 'FAIL':>4}  {check.name:<36} "
          f"z(mean)={check.z_mean:+.2f}  z(var)={check.z_var:+.2f}")

# A correct sampler gives z-scores of order one for every test function.
good = geweke_joint_test(n_cycles=20_000, seed=1)
print({k: round(v, 2) for k, v in good.z.items()})

# Using n/2 + 1 as the shape of the theta^2 update (which drops the
# contribution of the sigma^2 mixing variables) breaks the stationary law,
# and the theta^2 statistic flags it at once.
bad = geweke_joint_test(n_cycles=20_000, seed=1, theta_shape="paper-literal")
print(f"corrupted update: z(theta2) = {bad.z['theta2']:.1f}, diverged at {bad.diverged_at}")
