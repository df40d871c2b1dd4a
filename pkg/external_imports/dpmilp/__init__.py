"""Distributed primal decomposition for constraint-coupled MILPs.

The package is organised bottom-up:

- ``model``: problem data, random instances, JSON format, enumeration oracles
- ``lp`` / ``milp``: dense simplex with exact duals, best-first branch and bound
- ``subproblem``: relaxed local subproblem over conv(X_i) by column generation
- ``restriction``: L_i, rho_i^max, sigma_loc and the sigma vectors
- ``agent`` / ``network``: the per-agent state machine and the synchronous simulator
- ``bounds``: suboptimality certificates
- ``cli``: command-line harness
"""

__version__ = "0.1.0"
