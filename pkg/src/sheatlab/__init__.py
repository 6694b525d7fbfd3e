"""sheatlab: simulation and verification lab for the stochastic heat equation

    du = nu u_xx dt + lambda sigma(u) dW        on (0,1), Dirichlet or Neumann

with space-time white noise W. Subpackages:

    kernel      heat kernels on [0,1] and their certified bounds
    noise       reproducible discrete space-time white noise
    solver      semi-implicit and spectral exponential Euler schemes
    oracle      deterministic second moments via the Volterra identity
    stats       mergeable streaming ensemble statistics
    analysis    Lyapunov / excitation-index fits and integral-bound checks
    regularity  empirical Garsia-Rodemich-Rumsey machinery
    cli         batch front door over declarative config files
"""

__version__ = "0.1.0"

from . import analysis, kernel, noise, oracle, regularity, solver, stats

__all__ = ["analysis", "cli", "config", "kernel", "noise", "oracle",
           "regularity", "solver", "stats", "__version__"]
