"""
Closed moment dynamics of the quadratic master equation, used as an
independent oracle for the matrix-level simulation.

For the double commutator generator with H = p^2/2M + M w^2 x^2/2 the first
and second moments obey

    d<x>/dt    = <p>/M
    d<p>/dt    = -M w^2 <x> - 2 gamma <p>
    d var_x/dt = 2 cov_xp/M + 2 D_qq
    d var_p/dt = -4 gamma var_p - 2 M w^2 cov_xp + 2 D_pp
    d cov_xp/dt = var_p/M - M w^2 var_x - 2 gamma cov_xp

with cov_xp = <{x,p}>/2 - <x><p>. These follow from d<O>/dt = Tr(O rhs(rho))
and cyclic permutation under the trace, using [x,p] = i hbar.
"""
import attr
import numpy as np
import scipy.linalg

from .hilbert import build_momentum, build_position

FIELDS = ("mean_x", "mean_p", "var_x", "var_p", "cov_xp")
UNCERTAINTY_SLACK = 1e-9


@attr.s(frozen=True)
class GaussianState(object):
    mean_x = attr.ib(default=0.0)
    mean_p = attr.ib(default=0.0)
    var_x = attr.ib(default=0.0)
    var_p = attr.ib(default=0.0)
    cov_xp = attr.ib(default=0.0)

    def as_vector(self):
        return np.array([self.mean_x, self.mean_p, self.var_x, self.var_p, self.cov_xp])

    @classmethod
    def from_vector(cls, v):
        return cls(*(float(value) for value in v))

    def as_dict(self):
        return attr.asdict(self)


def uncertainty_product(state):
    return state.var_x * state.var_p - state.cov_xp ** 2


def is_physical(state, hbar=1.0):
    return (state.var_x >= 0 and state.var_p >= 0
            and uncertainty_product(state) >= hbar ** 2 / 4.0 - UNCERTAINTY_SLACK)


def moments_from_rho(rho, basis):
    m = getattr(rho, "matrix", rho)
    x = build_position(basis)
    p = build_momentum(basis)

    def ev(op):
        return float(np.trace(m @ op).real)

    mean_x = ev(x)
    mean_p = ev(p)
    return GaussianState(
        mean_x=mean_x,
        mean_p=mean_p,
        var_x=ev(x @ x) - mean_x ** 2,
        var_p=ev(p @ p) - mean_p ** 2,
        cov_xp=0.5 * ev(x @ p + p @ x) - mean_x * mean_p,
    )


def linear_system(coeffs, hamiltonian):
    """
    (G, b) with d/dt (mean_x, mean_p, var_x, var_p, cov_xp) = G s + b.
    """
    M = coeffs.M
    w2 = hamiltonian.omega ** 2
    g = coeffs.gamma
    G = np.array([
        [0.0, 1.0 / M, 0.0, 0.0, 0.0],
        [-M * w2, -2.0 * g, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 2.0 / M],
        [0.0, 0.0, 0.0, -4.0 * g, -2.0 * M * w2],
        [0.0, 0.0, -M * w2, 1.0 / M, -2.0 * g],
    ])
    b = np.array([0.0, 0.0, 2.0 * coeffs.D_qq, 2.0 * coeffs.D_pp, 0.0])
    return G, b


def moment_rhs(state, coeffs, hamiltonian):
    G, b = linear_system(coeffs, hamiltonian)
    return GaussianState.from_vector(G @ state.as_vector() + b)


def propagate_moments(state0, coeffs, hamiltonian, t_grid):
    """
    Exact solution on t_grid via the exponential of the affine system
    written as a 6x6 linear one.
    """
    G, b = linear_system(coeffs, hamiltonian)
    aug = np.zeros((6, 6))
    aug[:5, :5] = G
    aug[:5, 5] = b
    s0 = np.append(state0.as_vector(), 1.0)
    return [GaussianState.from_vector((scipy.linalg.expm(aug * t) @ s0)[:5]) for t in t_grid]


@attr.s(frozen=True)
class StationaryMoments(object):
    """
    Fixed point of the moment equations. Moments with no unique stationary
    value are None and listed in `undetermined`.
    """
    mean_x = attr.ib(default=None)
    mean_p = attr.ib(default=None)
    var_x = attr.ib(default=None)
    var_p = attr.ib(default=None)
    cov_xp = attr.ib(default=None)
    undetermined = attr.ib(default=())

    def as_state(self):
        if self.undetermined:
            raise ValueError("No stationary value for {0}".format(", ".join(self.undetermined)))
        return GaussianState(self.mean_x, self.mean_p, self.var_x, self.var_p, self.cov_xp)

    def as_dict(self):
        return attr.asdict(self)


def stationary_moments(coeffs, hamiltonian):
    g = coeffs.gamma
    w = hamiltonian.omega
    M = coeffs.M
    if g <= 0:
        return StationaryMoments(undetermined=FIELDS)
    if w <= 0:
        var_p = coeffs.D_pp / (2.0 * g)
        return StationaryMoments(
            mean_p=0.0,
            var_p=var_p,
            cov_xp=var_p / (2.0 * g * M),
            undetermined=("mean_x", "var_x"),
        )
    G, b = linear_system(coeffs, hamiltonian)
    second = np.linalg.solve(G[2:, 2:], -b[2:])
    return StationaryMoments(
        mean_x=0.0,
        mean_p=0.0,
        var_x=float(second[0]),
        var_p=float(second[1]),
        cov_xp=float(second[2]),
    )


def equilibrium_var_p(M, beta, omega, hbar=1.0):
    """
    Stationary momentum variance of the collisional model in a trap of
    frequency omega: (M/beta)(1 + (beta hbar omega / 4)^2).
    """
    return (M / beta) * (1.0 + (beta * hbar * omega / 4.0) ** 2)


def ballistic_var_x(state0, M, t):
    """
    Free spreading without dissipation.
    """
    return state0.var_x + 2.0 * t * state0.cov_xp / M + (t / M) ** 2 * state0.var_p


def max_relative_deviation(states, oracle_states):
    """
    Largest deviation over all five moments. Means and the covariance are
    measured against the oracle's width scales so that values passing
    through zero do not blow up.
    """
    worst = 0.0
    for s, o in zip(states, oracle_states):
        sx = np.sqrt(max(o.var_x, 0.0))
        sp = np.sqrt(max(o.var_p, 0.0))
        scales = {
            "mean_x": max(abs(o.mean_x), sx),
            "mean_p": max(abs(o.mean_p), sp),
            "var_x": abs(o.var_x),
            "var_p": abs(o.var_p),
            "cov_xp": max(abs(o.cov_xp), sx * sp),
        }
        for name in FIELDS:
            diff = abs(getattr(s, name) - getattr(o, name))
            scale = scales[name]
            worst = max(worst, diff / scale if scale > 0 else diff)
    return float(worst)
