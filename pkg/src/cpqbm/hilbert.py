"""
Operator algebra on a truncated harmonic-oscillator number basis.

Operators are plain square complex numpy arrays. A single instance of a
basis describes one Cartesian axis.
"""
import math
import numbers
import warnings

import attr
import numpy as np
import scipy.linalg

from .error_types import InvalidState
from .utils import check_same_dim, dagger, hermiticity_defect, hermitize

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10


def positive(instance, attribute, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValueError("{0} must be a finite positive number, got {1!r}".format(
            attribute.name, value))


def non_negative(instance, attribute, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise ValueError("{0} must be a finite non-negative number, got {1!r}".format(
            attribute.name, value))


def _at_least_two(instance, attribute, value):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < 2:
        raise ValueError("dim must be an integer >= 2, got {0!r}".format(value))


@attr.s(frozen=True)
class BasisConfig(object):
    dim = attr.ib(validator=_at_least_two)
    mass = attr.ib(default=1.0, validator=positive)
    omega_ref = attr.ib(default=1.0, validator=positive)
    hbar = attr.ib(default=1.0, validator=positive)

    @property
    def x_scale(self):
        return math.sqrt(self.hbar / (2.0 * self.mass * self.omega_ref))

    @property
    def p_scale(self):
        return math.sqrt(self.hbar * self.mass * self.omega_ref / 2.0)


def build_ladder(cfg):
    """
    Returns (lower, raise) with sqrt(n) on the first superdiagonal of lower.
    """
    lower = np.diag(np.sqrt(np.arange(1, cfg.dim, dtype=float)), k=1).astype(complex)
    return lower, dagger(lower)


def number_operator(cfg):
    return np.diag(np.arange(cfg.dim, dtype=float)).astype(complex)


def identity(cfg):
    return np.eye(cfg.dim, dtype=complex)


def build_position(cfg):
    lower, raise_ = build_ladder(cfg)
    return cfg.x_scale * (lower + raise_)


def build_momentum(cfg):
    lower, raise_ = build_ladder(cfg)
    return 1j * cfg.p_scale * (raise_ - lower)


def commutator(a, b):
    check_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b):
    check_same_dim(a, b)
    return a @ b + b @ a


@attr.s(frozen=True, repr=False, eq=False)
class DensityMatrix(object):
    """
    Hermitian, unit trace, positive semi-definite matrix. Validated on
    construction. Integrator candidates are kept as raw arrays because drift
    and negativity are reported, not rejected.
    """
    matrix = attr.ib()

    def __attrs_post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidState("Density matrix must be square, got shape {0}".format(m.shape))
        if not np.all(np.isfinite(m)):
            raise InvalidState("Density matrix has non-finite entries")
        defect = hermiticity_defect(m)
        if defect > HERMITICITY_TOL:
            raise InvalidState("Density matrix is not Hermitian (defect {0:.3g})".format(defect))
        trace = np.trace(m).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidState("Density matrix trace is {0!r}, not 1".format(trace))
        lowest = min_eigenvalue(m)
        if lowest < -POSITIVITY_TOL:
            raise InvalidState("Density matrix has negative eigenvalue {0:.3g}".format(lowest))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __repr__(self):
        return "<DensityMatrix dim={0} purity={1:.6g}>".format(self.dim, purity(self))


def _matrix(rho):
    return rho.matrix if isinstance(rho, DensityMatrix) else rho


def _from_vector(vec):
    vec = vec / np.linalg.norm(vec)
    return DensityMatrix(np.outer(vec, vec.conj()))


def _check_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise ValueError("{0} must be finite, got {1!r}".format(name, value))


def dm_fock(cfg, n):
    if not (0 <= n < cfg.dim):
        raise ValueError("Fock level {0} is outside the basis 0..{1}".format(n, cfg.dim - 1))
    vec = np.zeros(cfg.dim, dtype=complex)
    vec[n] = 1.0
    return _from_vector(vec)


def dm_thermal(cfg, beta_eff):
    """
    Gibbs state of the reference oscillator, renormalized over the truncated
    basis.
    """
    _check_finite(beta_eff=beta_eff)
    if beta_eff <= 0:
        raise ValueError("beta_eff must be positive, got {0!r}".format(beta_eff))
    levels = np.arange(cfg.dim, dtype=float)
    weights = np.exp(-beta_eff * cfg.hbar * cfg.omega_ref * levels)
    weights /= weights.sum()
    return DensityMatrix(np.diag(weights).astype(complex))


def dm_coherent(cfg, alpha):
    _check_finite(alpha=alpha)
    if abs(alpha) ** 2 > cfg.dim / 4.0:
        warnings.warn("Coherent amplitude |alpha|^2 = {0:.3g} is large for a basis of "
                      "dimension {1}".format(abs(alpha) ** 2, cfg.dim))
    vec = np.empty(cfg.dim, dtype=complex)
    vec[0] = 1.0
    for n in range(1, cfg.dim):
        vec[n] = vec[n - 1] * alpha / math.sqrt(n)
    return _from_vector(vec)


def dm_squeezed(cfg, r, alpha=0.0):
    """
    Displaced squeezed vacuum. Positive r narrows the position distribution
    by exp(-r).
    """
    _check_finite(r=r, alpha=alpha)
    size = 2 * cfg.dim
    vec = np.zeros(size, dtype=complex)
    vec[0] = 1.0
    t = math.tanh(r)
    for k in range(1, size // 2):
        n = 2 * k
        vec[n] = vec[n - 2] * (-t) * math.sqrt((n - 1) / n)
    if alpha != 0:
        # Displace in a doubled basis, then cut back down.
        big = BasisConfig(dim=size, mass=cfg.mass, omega_ref=cfg.omega_ref, hbar=cfg.hbar)
        lower, raise_ = build_ladder(big)
        vec = scipy.linalg.expm(alpha * raise_ - np.conj(alpha) * lower) @ vec
    return _from_vector(vec[:cfg.dim])


def dm_random(cfg, seed=0, rank=1, support=None):
    """
    Seeded random state of the given rank whose support is limited to the
    lowest `support` levels (default: all but the top three).
    """
    if support is None:
        support = max(cfg.dim - 3, 1)
    if not (1 <= support <= cfg.dim):
        raise ValueError("support must be within 1..{0}, got {1!r}".format(cfg.dim, support))
    if rank < 1:
        raise ValueError("rank must be positive, got {0!r}".format(rank))
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(support, rank)) + 1j * rng.normal(size=(support, rank))
    m = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    m[:support, :support] = g @ dagger(g)
    m = hermitize(m)
    return DensityMatrix(m / np.trace(m).real)


def dm_maximally_mixed(cfg):
    return DensityMatrix(np.eye(cfg.dim, dtype=complex) / cfg.dim)


def expectation(rho, a):
    m = _matrix(rho)
    check_same_dim(m, a)
    return complex(np.trace(m @ a))


def purity(rho):
    m = _matrix(rho)
    return float(np.trace(m @ m).real)


def min_eigenvalue(rho):
    m = _matrix(rho)
    return float(scipy.linalg.eigvalsh(hermitize(m))[0])
