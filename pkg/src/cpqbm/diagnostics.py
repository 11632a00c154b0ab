"""
Complete positivity checks at the coefficient level and at the channel
level, plus run quality metrics.
"""
import math

import attr
import numpy as np
import scipy.linalg

from .error_types import DimensionTooLarge
from .master_equation import FORM_GENERIC, superoperator_matrix

SATURATED = "Saturated"
STRICTLY_SATISFIED = "StrictlySatisfied"
VIOLATED = "Violated"

CP_REL_TOL = 1e-10
# Choi eigenvalues above this count as non-negative; truncation corners make
# exact zero unattainable.
CHOI_PSD_TOL = -1e-8
MAX_CHOI_DIM = 8


@attr.s(frozen=True)
class CoefficientCheck(object):
    lhs = attr.ib()
    rhs = attr.ib()
    verdict = attr.ib()
    slack = attr.ib()


@attr.s(frozen=True)
class CPReport(object):
    coefficient_check = attr.ib()
    choi_min_eig = attr.ib(default=None)
    dim_used = attr.ib(default=None)
    choi_times = attr.ib(default=None)

    @property
    def verdict(self):
        return self.coefficient_check.verdict

    def as_dict(self):
        c = self.coefficient_check
        return {
            "coefficient_check": {
                "lhs": c.lhs,
                "rhs": c.rhs,
                "verdict": c.verdict,
                "slack": c.slack,
            },
            "choi_min_eig": self.choi_min_eig,
            "dim_used": self.dim_used,
            "choi_times": None if self.choi_times is None else list(self.choi_times),
        }

    def display(self):
        c = self.coefficient_check
        lines = [
            "Complete positivity:",
            "  D_pp * D_qq      = {0:.10g}".format(c.lhs),
            "  (hbar gamma/2)^2 = {0:.10g}".format(c.rhs),
            "  verdict          = {0} (slack {1:.3g})".format(c.verdict, c.slack),
        ]
        if self.choi_min_eig is not None:
            lines.append("  Choi min eigenvalue = {0:.3g} (dim {1})".format(
                self.choi_min_eig, self.dim_used))
        return "\n".join(lines)


def cp_condition(coeffs=None, D_pp=None, D_qq=None, gamma=None, hbar=None):
    """
    Checks D_pp D_qq >= hbar^2 gamma^2 / 4. Takes either a CoefficientSet or
    a raw (D_pp, D_qq, gamma) triple.
    """
    if coeffs is not None:
        D_pp, D_qq, gamma = coeffs.D_pp, coeffs.D_qq, coeffs.gamma
        if hbar is None:
            hbar = coeffs.hbar
    if hbar is None:
        hbar = 1.0
    lhs = D_pp * D_qq
    rhs = (hbar * gamma / 2.0) ** 2
    slack = lhs - rhs
    tol = CP_REL_TOL * max(lhs, rhs, np.finfo(float).tiny)
    if abs(slack) <= tol:
        verdict = SATURATED
    elif slack > 0:
        verdict = STRICTLY_SATISFIED
    else:
        verdict = VIOLATED
    return CPReport(coefficient_check=CoefficientCheck(lhs=lhs, rhs=rhs, verdict=verdict, slack=slack))


def kossakowski_matrix(D_pp, D_qq, gamma, hbar=1.0):
    """
    Coefficients K_jk of F_j rho F_k for F = (x, p) in the dissipator of the
    double commutator form. Positive semi-definite exactly when the CP
    condition holds.
    """
    return np.array([
        [2.0 * D_pp / hbar ** 2, -1j * gamma / hbar],
        [1j * gamma / hbar, 2.0 * D_qq / hbar ** 2],
    ])


def kossakowski_eigenvalues(D_pp, D_qq, gamma, hbar=1.0):
    return scipy.linalg.eigvalsh(kossakowski_matrix(D_pp, D_qq, gamma, hbar=hbar))


def propagator(spec, t):
    """
    exp(S t) for the dense superoperator S, by scaling and squaring.
    """
    return scipy.linalg.expm(superoperator_matrix(spec) * t)


def _spec_with_dim(spec, dim):
    if dim is None or dim == spec.dim:
        return spec
    if spec.form == FORM_GENERIC:
        raise ValueError("Cannot change the dimension of a generic generator")
    return attr.evolve(spec, basis=attr.evolve(spec.basis, dim=dim))


def choi_matrix(spec, t, dim=None):
    """
    (Phi_t kron id)(|Omega><Omega|) with the unnormalized maximally entangled
    vector, so that Tr C = dim for a trace preserving channel.

    Row index a * dim + i, column index b * dim + j holds Phi_t(E_ij)[a, b].
    """
    spec = _spec_with_dim(spec, dim)
    d = spec.dim
    if d > MAX_CHOI_DIM:
        raise DimensionTooLarge("Choi matrix needs dim <= {0}, got {1}".format(MAX_CHOI_DIM, d))
    if t < 0:
        raise ValueError("t must be non-negative, got {0!r}".format(t))
    P = propagator(spec, t)
    # Column i + j*d of P is vec(Phi_t(E_ij)) in column stacking, so
    # T[a, b, i, j] = Phi_t(E_ij)[a, b].
    T = P.reshape(d, d, d, d, order="F")
    return T.transpose(0, 2, 1, 3).reshape(d * d, d * d)


def choi_min_eigenvalue(choi):
    return float(scipy.linalg.eigvalsh(0.5 * (choi + choi.conj().T))[0])


def choi_scan(spec, times, dim=None):
    """
    [(t, min eigenvalue of the Choi matrix at t)] for each t.
    """
    return [(t, choi_min_eigenvalue(choi_matrix(spec, t, dim=dim))) for t in times]


def with_choi_scan(report, spec, times, dim=None):
    scan = choi_scan(spec, times, dim=dim)
    return attr.evolve(
        report,
        choi_min_eig=min(value for _, value in scan),
        dim_used=spec.dim if dim is None else dim,
        choi_times=tuple(t for t, _ in scan),
    )


def truncation_health(rho, fraction):
    """
    Population in the top ceil(fraction * dim) basis levels.
    """
    if not (0 < fraction < 1):
        raise ValueError("fraction must be in (0, 1), got {0!r}".format(fraction))
    m = getattr(rho, "matrix", rho)
    dim = m.shape[0]
    k = int(math.ceil(fraction * dim))
    return float(np.sum(np.diagonal(m)[dim - k:].real))
