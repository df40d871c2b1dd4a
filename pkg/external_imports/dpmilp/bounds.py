"""Suboptimality certificates of the recovered mixed-integer solution.

All bounds need a Slater point ``z_hat`` of the restricted convexified problem
with margin ``zeta = min_s [b - sigma - sum_i A_i z_hat_i]_s > 0``. Candidate
points must carry a membership certificate for ``conv(X_i)``: a point of
``X_i`` (the restriction witnesses) or a convex combination of pool points.
"""
import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .config import TOLERANCES
from .errors import DPMILPWarning, MissingSlaterError
from .milp import minimize_over_block

logger = logging.getLogger(__name__)


def gamma(block, tol=TOLERANCES):
    """Cost spread ``max_{X_i} c^T x - min_{X_i} c^T x``."""
    low, _ = minimize_over_block(block, block.c, tol)
    high, _ = minimize_over_block(block, -block.c, tol)
    return max(-high - low, 0.0)


@dataclass(frozen=True, eq=False)
class SlaterCertificate:
    zeta: float
    J_sl: float
    points: List[np.ndarray]


def slater(problem, sigma, candidate):
    """Margin and cost of ``candidate``; ``None`` when the margin is not positive."""
    points = [np.asarray(z, dtype=float) for z in candidate]
    zeta = float(np.min(problem.b - np.asarray(sigma, dtype=float) - problem.usage(points)))
    if zeta <= 0:
        return None
    return SlaterCertificate(zeta, problem.cost(points), points)


def find_slater(problem, sigma, *candidates):
    """First candidate set with a positive margin, in the order given."""
    for candidate in candidates:
        if candidate is None:
            continue
        cert = slater(problem, sigma, candidate)
        if cert is not None:
            return cert
    warnings.warn("no Slater certificate among the candidates; bounds are unavailable",
                  DPMILPWarning, stacklevel=2)
    return None


def _require(zeta):
    if zeta is None or zeta <= 0:
        raise MissingSlaterError("a positive Slater margin zeta is required")


def bound_apriori(problem, sigma_inf, zeta, gammas):
    """``B = (S + N ||sigma_inf||_inf / zeta) max_i gamma_i``."""
    _require(zeta)
    norm = float(np.max(np.abs(sigma_inf)))
    return (problem.S + problem.N * norm / zeta) * float(np.max(gammas))


def bound_aposteriori(problem, z_star, x_inf, sigma_inf, zeta, J_sl, tol=TOLERANCES):
    """``B'`` over the agents whose relaxed optimum is not mixed-integer; returns ``(B', I_R)``."""
    _require(zeta)
    I_R = [i for i, (blk, z) in enumerate(zip(problem.blocks, z_star)) if not blk.contains(z, tol)]
    local = sum(float(problem.blocks[i].c @ (np.asarray(x_inf[i]) - np.asarray(z_star[i]))) for i in I_R)
    norm = float(np.max(np.abs(sigma_inf)))
    return local + norm / zeta * (J_sl - problem.cost(z_star)), I_R


def Gamma(gammas, N, zeta):
    """``Gamma = (N / zeta) sum_i gamma_i``."""
    _require(zeta)
    return N / zeta * float(np.sum(gammas))


def bound_finite_time(x_costs, lp_costs, mus, epsilons, Gamma_value, sigma_ft):
    """``B^t = sum(c_i^T x_i^t - J_i^LP,t) + sum eps_i ||mu_i^t||_1 + Gamma ||sigma_ft||_inf``."""
    gap = float(np.sum(np.asarray(x_costs) - np.asarray(lp_costs)))
    dual = float(sum(e * np.abs(np.asarray(mu)).sum() for e, mu in zip(epsilons, mus)))
    return gap + dual + Gamma_value * float(np.max(np.abs(sigma_ft)))


@dataclass(eq=False)
class BoundsReport:
    gamma: np.ndarray
    zeta: Optional[float] = None
    J_sl: Optional[float] = None
    B: Optional[float] = None
    B_prime: Optional[float] = None
    B_t: Dict[int, float] = field(default_factory=dict)
    Gamma: float = 0.0
    slater_point: Optional[List[np.ndarray]] = None
    I_R: Optional[List[int]] = None

    def to_dict(self):
        return {
            "gamma": self.gamma.tolist(),
            "zeta": self.zeta,
            "J_sl": self.J_sl,
            "B": self.B,
            "B_prime": self.B_prime,
            "B_t_final": self.B_t[max(self.B_t)] if self.B_t else None,
            "Gamma": self.Gamma,
            "I_R": self.I_R,
        }


def compute_bounds(problem, restriction, sigma, trace=None, z_star=None, x_inf=None,
                   epsilons=None, tol=TOLERANCES):
    """Every certificate the available data supports.

    ``z_star``/``x_inf`` (a relaxed optimum and the points recovered from it)
    enable ``B'``; a run ``trace`` enables ``B^t`` on its recovered rounds and
    supplies the fallback Slater candidate.
    """
    gammas = np.array([gamma(blk, tol) for blk in problem.blocks])
    witnesses = [np.asarray(w.x) for w in restriction.witnesses]
    fallback = trace.z if trace is not None and trace.z else None
    cert = find_slater(problem, sigma, witnesses, fallback)
    report = BoundsReport(gamma=gammas)
    if cert is None:
        return report
    report.zeta, report.J_sl, report.slater_point = cert.zeta, cert.J_sl, cert.points
    report.Gamma = Gamma(gammas, problem.N, cert.zeta)
    report.B = bound_apriori(problem, restriction.sigma_inf, cert.zeta, gammas)
    if z_star is not None and x_inf is not None:
        report.B_prime, report.I_R = bound_aposteriori(problem, z_star, x_inf, restriction.sigma_inf,
                                                       cert.zeta, cert.J_sl, tol)
    if trace is not None:
        eps = epsilons if epsilons is not None else np.full(problem.N, restriction.delta / problem.N)
        for r in trace.rounds:
            if r.recovered:
                report.B_t[r.t] = bound_finite_time(r.cost, r.lp_cost, r.mu, eps, report.Gamma, sigma)
    logger.info("bounds: zeta=%.4g B=%.4g B'=%s", cert.zeta, report.B, report.B_prime)
    return report


def suboptimality(cost, reference):
    """``(cost - reference) / |reference|``."""
    return (cost - reference) / abs(reference) if reference else np.nan

