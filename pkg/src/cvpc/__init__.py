"""Control-variate polynomial chaos: multifidelity mean and variance estimation
for quadratic stochastic ODEs, with budget-constrained estimator design."""

__version__ = "0.1.0"
