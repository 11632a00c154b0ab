"""
Friction and diffusion coefficients from collisions with a non-degenerate
gas, plus the mean-field energy shift and the Brownian-limit check.

The momentum diffusion D_pp is a Boltzmann-weighted quadrature over the
momentum transfer q of |t(q)|^2; D_qq and gamma follow from D_pp by fixed
temperature-dependent ratios that saturate the complete positivity bound.
"""
import io
import math
import warnings

import attr
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator

from .error_types import QuadratureError, TabulationRangeError
from .hilbert import non_negative, positive

# Boltzmann factor exp(-beta q^2 / 8m) is integrated out to this many
# thermal momenta sqrt(8m/beta).
CUTOFF_FACTOR = 8.0
# A tabulated |t(q)|^2 must cover q up to where the Boltzmann factor drops
# below this fraction of its peak.
SUPPORT_FRACTION = 1e-12

BROWNIAN_OK = "OK"
BROWNIAN_WARN = "WARN"
BROWNIAN_FAIL = "FAIL"
BROWNIAN_OK_MAX = 0.1
BROWNIAN_WARN_MAX = 0.5

MODEL_COLLISIONAL = "collisional"
MODEL_CALDEIRA_LEGGETT = "caldeira_leggett"
MODEL_DIOSI = "diosi"


@attr.s(frozen=True)
class GasParameters(object):
    m = attr.ib(validator=positive)
    beta = attr.ib(validator=positive)
    n = attr.ib(validator=positive)


# T-matrix models. |t(q)|^2 is taken energy independent.

@attr.s(frozen=True)
class Constant(object):
    t0 = attr.ib(validator=non_negative)

    def cross_section(self, q):
        return np.full_like(q, self.t0 ** 2, dtype=float)


@attr.s(frozen=True)
class GaussianKernel(object):
    t0 = attr.ib(validator=non_negative)
    sigma = attr.ib(validator=positive)

    def cross_section(self, q):
        return self.t0 ** 2 * np.exp(-self.sigma ** 2 * q ** 2)


def _table_points(value):
    points = tuple((float(q), float(t2)) for q, t2 in value)
    return points


@attr.s(frozen=True)
class Tabulated(object):
    """
    Tabulated (q, |t(q)|^2) points, interpolated with a monotone cubic so
    that interpolated cross-sections never go negative. No extrapolation.
    """
    points = attr.ib(converter=_table_points)

    @points.validator
    def _check_points(self, attribute, value):
        if len(value) < 4:
            raise ValueError("Tabulated T-matrix needs at least 4 points, got {0}".format(len(value)))
        qs = [q for q, _ in value]
        if any(q < 0 or not math.isfinite(q) for q in qs):
            raise ValueError("Tabulated q values must be finite and non-negative")
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("Tabulated q values must be strictly increasing")
        if any(t2 < 0 or not math.isfinite(t2) for _, t2 in value):
            raise ValueError("Tabulated |t(q)|^2 values must be finite and non-negative")

    @property
    def q_range(self):
        return self.points[0][0], self.points[-1][0]

    def cross_section(self, q):
        qs, t2 = zip(*self.points)
        interp = PchipInterpolator(qs, t2, extrapolate=False)
        values = interp(q)
        if np.any(np.isnan(values)):
            raise TabulationRangeError(
                "q outside tabulated range [{0}, {1}]".format(*self.q_range))
        return values


def load_tabulated(fs, path):
    """
    Reads a two-column (q, |t(q)|^2) whitespace separated text file from
    the filesystem object `fs`. Lines starting with '#' are ignored.
    """
    text = fs.readtext(path)
    data = np.loadtxt(io.StringIO(text), comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("{0}: expected two columns, found {1}".format(path, data.shape[1]))
    return Tabulated(points=[tuple(row) for row in data])


@attr.s(frozen=True)
class QuadratureConfig(object):
    nodes = attr.ib(default=64)
    max_nodes = attr.ib(default=4096)
    rel_tol = attr.ib(default=1e-8)
    fail_rel_tol = attr.ib(default=1e-6)

    @nodes.validator
    def _check_nodes(self, attribute, value):
        if value < 8:
            raise ValueError("quadrature needs at least 8 nodes, got {0}".format(value))


@attr.s(frozen=True)
class CoefficientSet(object):
    D_pp = attr.ib()
    D_qq = attr.ib()
    gamma = attr.ib()
    V_shift = attr.ib(default=0.0)
    alpha = attr.ib(default=0.0)
    # Provenance
    beta = attr.ib(default=None)
    M = attr.ib(default=None)
    hbar = attr.ib(default=1.0)
    model = attr.ib(default=MODEL_COLLISIONAL)
    gas = attr.ib(default=None)
    tmodel = attr.ib(default=None)

    def as_dict(self):
        return {
            "D_pp": self.D_pp,
            "D_qq": self.D_qq,
            "gamma": self.gamma,
            "V_shift": self.V_shift,
            "alpha": self.alpha,
            "beta": self.beta,
            "M": self.M,
            "hbar": self.hbar,
            "model": self.model,
            "tmatrix": None if self.tmodel is None else self.tmodel.__class__.__name__,
        }


def thermal_wavelength_gas(gas, hbar=1.0):
    return math.sqrt(2.0 * math.pi * hbar ** 2 * gas.beta / gas.m)


def thermal_wavelength_particle(M, beta, hbar=1.0):
    if M <= 0 or beta <= 0:
        raise ValueError("M and beta must be positive")
    return math.sqrt(hbar ** 2 * beta / M)


def dpp_prefactor(gas, hbar=1.0):
    """
    Everything in front of the q integral of D_pp.
    """
    lam = thermal_wavelength_gas(gas, hbar=hbar)
    return (2.0 / 3.0) * (math.pi ** 2 * gas.m ** 2 / (gas.beta * hbar)) * gas.n * lam ** 3


def boltzmann_exponent(gas):
    return gas.beta / (8.0 * gas.m)


def _radial_integral(tmodel, c, q_hi, n):
    nodes, weights = leggauss(n)
    q = 0.5 * q_hi * (nodes + 1.0)
    integrand = q ** 3 * tmodel.cross_section(q) * np.exp(-c * q ** 2)
    return 4.0 * math.pi * 0.5 * q_hi * float(np.dot(weights, integrand))


def compute_Dpp(gas, M, tmodel, quad=None, hbar=1.0):
    """
    Momentum diffusion coefficient. The isotropic 3D integral is reduced to
    4 pi int_0^inf q^3 |t(q)|^2 exp(-beta q^2 / 8m) dq and evaluated by
    Gauss-Legendre on [0, q_max], doubling nodes until converged.
    """
    if quad is None:
        quad = QuadratureConfig()
    c = boltzmann_exponent(gas)
    q_max = CUTOFF_FACTOR * math.sqrt(8.0 * gas.m / gas.beta)
    q_hi = q_max
    if isinstance(tmodel, Tabulated):
        q_lo, q_last = tmodel.q_range
        q_support = math.sqrt(-math.log(SUPPORT_FRACTION) / c)
        if q_lo > 0 or q_last < q_support:
            raise TabulationRangeError(
                "Tabulated T-matrix covers q in [{0:.4g}, {1:.4g}] but the Boltzmann weight "
                "needs [0, {2:.4g}]".format(q_lo, q_last, q_support))
        q_hi = min(q_max, q_last)

    n = quad.nodes
    previous = _radial_integral(tmodel, c, q_hi, n)
    change = None
    while n < quad.max_nodes:
        n *= 2
        current = _radial_integral(tmodel, c, q_hi, n)
        scale = max(abs(current), abs(previous))
        change = 0.0 if scale == 0.0 else abs(current - previous) / scale
        previous = current
        if change <= quad.rel_tol:
            break
    else:
        if change is None or change > quad.fail_rel_tol:
            raise QuadratureError(
                "D_pp quadrature did not converge: relative change {0!r} with {1} nodes".format(
                    change, n))
        warnings.warn("D_pp quadrature only converged to relative {0:.3g}".format(change))
    return max(dpp_prefactor(gas, hbar=hbar) * previous, 0.0)


def derive_coefficients(D_pp, gas, M, hbar=1.0, V_shift=0.0, tmodel=None):
    if D_pp < 0:
        raise ValueError("D_pp must be non-negative, got {0!r}".format(D_pp))
    beta = gas.beta
    return CoefficientSet(
        D_pp=D_pp,
        D_qq=(beta * hbar / (4.0 * M)) ** 2 * D_pp,
        gamma=(beta / (2.0 * M)) * D_pp,
        V_shift=V_shift,
        alpha=gas.m / M,
        beta=beta,
        M=M,
        hbar=hbar,
        model=MODEL_COLLISIONAL,
        gas=gas,
        tmodel=tmodel,
    )


def mean_field_shift(gas, f_re0, hbar=1.0):
    """
    Constant energy offset from the real forward scattering amplitude.
    """
    return -2.0 * math.pi * hbar ** 2 * gas.n * f_re0 / gas.m


def compute_coefficients(gas, M, tmodel, f_re0=0.0, quad=None, hbar=1.0):
    D_pp = compute_Dpp(gas, M, tmodel, quad=quad, hbar=hbar)
    return derive_coefficients(D_pp, gas, M, hbar=hbar,
                               V_shift=mean_field_shift(gas, f_re0, hbar=hbar),
                               tmodel=tmodel)


def gao_position_diffusion(gamma, beta, M, hbar=1.0):
    """
    D_qq fixed by a single x + i p generator at thermal equilibrium.
    """
    return gamma * hbar ** 2 * beta / (8.0 * M)


def diosi_position_diffusion(gamma, beta, M, hbar=1.0):
    return gamma * hbar ** 2 * beta / (6.0 * M)


def caldeira_leggett_coefficients(coeffs):
    return attr.evolve(coeffs, D_qq=0.0, model=MODEL_CALDEIRA_LEGGETT)


def diosi_coefficients(coeffs):
    return attr.evolve(
        coeffs,
        D_qq=diosi_position_diffusion(coeffs.gamma, coeffs.beta, coeffs.M, hbar=coeffs.hbar),
        model=MODEL_DIOSI,
    )


@attr.s(frozen=True)
class BrownianLimitReport(object):
    alpha = attr.ib()
    status = attr.ib()
    overridden = attr.ib(default=False)

    @property
    def may_proceed(self):
        return self.status != BROWNIAN_FAIL or self.overridden

    def as_dict(self):
        return {"alpha": self.alpha, "status": self.status, "overridden": self.overridden}


def check_brownian_limit(gas, M, override=False):
    if M <= 0:
        raise ValueError("M must be positive, got {0!r}".format(M))
    alpha = gas.m / M
    if alpha <= BROWNIAN_OK_MAX:
        status = BROWNIAN_OK
    elif alpha <= BROWNIAN_WARN_MAX:
        status = BROWNIAN_WARN
    else:
        status = BROWNIAN_FAIL
    return BrownianLimitReport(alpha=alpha, status=status, overridden=override)
