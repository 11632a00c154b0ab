"""
Right-hand sides of the quantum Brownian motion master equation for one
Cartesian axis.

Two algebraically equivalent forms are provided: the double commutator form
(FORM_QBM4) and the single Lindblad generator form (FORM_QBM5). Comparison
models reuse the double commutator form with a different position diffusion
(Caldeira-Leggett: none, Diosi: a larger one). A generic Lindblad evaluator
takes pre-scaled operators.
"""
import attr
import numpy as np

from . import coefficients as coeffs_mod
from .error_types import DimensionMismatch, DimensionTooLarge
from .hilbert import anticommutator, build_momentum, build_position, identity, positive
from .utils import check_same_dim, dagger

FORM_QBM4 = "qbm4"
FORM_QBM5 = "qbm5"
FORM_CALDEIRA_LEGGETT = "caldeira_leggett"
FORM_DIOSI = "diosi"
FORM_GENERIC = "generic"

QUADRATIC_FORMS = (FORM_QBM4, FORM_QBM5, FORM_CALDEIRA_LEGGETT, FORM_DIOSI)
ALL_FORMS = QUADRATIC_FORMS + (FORM_GENERIC,)

HAMILTONIAN_FREE = "free"
HAMILTONIAN_HARMONIC = "harmonic"

MAX_SUPEROPERATOR_DIM = 12


@attr.s(frozen=True)
class HamiltonianSpec(object):
    kind = attr.ib(default=HAMILTONIAN_FREE)
    omega_trap = attr.ib(default=None)
    shift = attr.ib(default=0.0)

    @kind.validator
    def _check_kind(self, attribute, value):
        if value not in (HAMILTONIAN_FREE, HAMILTONIAN_HARMONIC):
            raise ValueError("Unknown Hamiltonian kind {0!r}".format(value))

    @omega_trap.validator
    def _check_omega(self, attribute, value):
        if self.kind == HAMILTONIAN_HARMONIC:
            positive(self, attribute, value)

    @property
    def omega(self):
        return self.omega_trap if self.kind == HAMILTONIAN_HARMONIC else 0.0


def hamiltonian_matrix(hamiltonian, basis, x=None, p=None):
    if x is None:
        x = build_position(basis)
    if p is None:
        p = build_momentum(basis)
    h = p @ p / (2.0 * basis.mass)
    if hamiltonian.kind == HAMILTONIAN_HARMONIC:
        h = h + 0.5 * basis.mass * hamiltonian.omega_trap ** 2 * (x @ x)
    if hamiltonian.shift:
        h = h + hamiltonian.shift * identity(basis)
    return h


def build_annihilation_a(basis, beta):
    """
    a = (sqrt(2) / lambda_M) (x + (i / hbar) (lambda_M^2 / 4) p), with the
    particle's thermal wavelength lambda_M = sqrt(hbar^2 beta / M).
    """
    lam = coeffs_mod.thermal_wavelength_particle(basis.mass, beta, hbar=basis.hbar)
    x = build_position(basis)
    p = build_momentum(basis)
    return (np.sqrt(2.0) / lam) * (x + (1j / basis.hbar) * (lam ** 2 / 4.0) * p)


@attr.s(frozen=True, eq=False)
class GeneratorSpec(object):
    form = attr.ib()
    basis = attr.ib()
    coefficients = attr.ib(default=None)
    hamiltonian = attr.ib(factory=HamiltonianSpec)
    # Only for FORM_GENERIC
    H = attr.ib(default=None)
    lindblad_ops = attr.ib(default=())

    @form.validator
    def _check_form(self, attribute, value):
        if value not in ALL_FORMS:
            raise ValueError("Unknown generator form {0!r}".format(value))

    def __attrs_post_init__(self):
        if self.form == FORM_GENERIC:
            if self.H is None:
                raise ValueError("Generic generator needs an explicit Hamiltonian matrix")
            for op in list(self.lindblad_ops) + [self.H]:
                if op.shape != (self.basis.dim, self.basis.dim):
                    raise DimensionMismatch(
                        "Operator of shape {0} does not fit basis dim {1}".format(
                            op.shape, self.basis.dim))
            return
        if self.coefficients is None:
            raise ValueError("Form {0!r} requires a CoefficientSet".format(self.form))
        x = build_position(self.basis)
        p = build_momentum(self.basis)
        # Frozen class, so cached operators are set through object.__setattr__
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "h0", hamiltonian_matrix(self.hamiltonian, self.basis, x=x, p=p))
        if self.form == FORM_QBM5:
            object.__setattr__(self, "a", build_annihilation_a(self.basis, self.coefficients.beta))
            object.__setattr__(self, "xp_anti", anticommutator(x, p))

    @property
    def dim(self):
        return self.basis.dim

    @property
    def hbar(self):
        return self.basis.hbar

    def effective_coefficients(self):
        """
        (D_pp, D_qq, gamma) as they enter the double commutator form.
        """
        c = self.coefficients
        if self.form == FORM_CALDEIRA_LEGGETT:
            c = coeffs_mod.caldeira_leggett_coefficients(c)
        elif self.form == FORM_DIOSI:
            c = coeffs_mod.diosi_coefficients(c)
        return c.D_pp, c.D_qq, c.gamma

    def rhs(self, rho):
        return rhs(self, rho)


def _array(rho):
    return getattr(rho, "matrix", rho)


def _check_rho(spec, rho):
    if rho.shape != (spec.dim, spec.dim):
        raise DimensionMismatch("State of shape {0} does not match basis dim {1}".format(
            rho.shape, spec.dim))


def _double_commutator_rhs(spec, rho, D_pp, D_qq, gamma):
    hbar = spec.hbar
    x, p, h = spec.x, spec.p, spec.h0
    cx = x @ rho - rho @ x
    cp = p @ rho - rho @ p
    anti_p = p @ rho + rho @ p
    out = (-1j / hbar) * (h @ rho - rho @ h)
    if D_pp:
        out -= (D_pp / hbar ** 2) * (x @ cx - cx @ x)
    if D_qq:
        out -= (D_qq / hbar ** 2) * (p @ cp - cp @ p)
    if gamma:
        out -= (1j * gamma / hbar) * (x @ anti_p - anti_p @ x)
    return out


def rhs_qbm4(spec, rho):
    """
    d rho/dt = -(i/hbar)[H0 + V, rho] - (D_pp/hbar^2)[x,[x,rho]]
               - (D_qq/hbar^2)[p,[p,rho]] - (i gamma/hbar)[x,{p,rho}]
    """
    rho = _array(rho)
    _check_rho(spec, rho)
    c = spec.coefficients
    return _double_commutator_rhs(spec, rho, c.D_pp, c.D_qq, c.gamma)


def rhs_caldeira_leggett(spec, rho):
    rho = _array(rho)
    _check_rho(spec, rho)
    c = spec.coefficients
    return _double_commutator_rhs(spec, rho, c.D_pp, 0.0, c.gamma)


def rhs_diosi(spec, rho):
    rho = _array(rho)
    _check_rho(spec, rho)
    D_pp, D_qq, gamma = spec.effective_coefficients()
    return _double_commutator_rhs(spec, rho, D_pp, D_qq, gamma)


def _qbm5_weights(spec):
    c = spec.coefficients
    hbar = spec.hbar
    lam2 = coeffs_mod.thermal_wavelength_particle(spec.basis.mass, c.beta, hbar=hbar) ** 2
    # Prefactor of the {x,p} commutator term, and of the dissipator.
    return (c.D_pp / hbar ** 2) * (lam2 / 4.0), (c.D_pp / hbar ** 2) * lam2


def rhs_qbm5(spec, rho):
    """
    d rho/dt = -(i/hbar)[H0 + V, rho]
               - (D_pp/hbar^2)(lambda_M^2/4)(i/hbar)[{x,p}, rho]
               + (D_pp/hbar^2) lambda_M^2 (a rho a^+ - 1/2 {a^+ a, rho})
    """
    rho = _array(rho)
    _check_rho(spec, rho)
    hbar = spec.hbar
    anti_weight, diss_weight = _qbm5_weights(spec)
    h, s, a = spec.h0, spec.xp_anti, spec.a
    ad = dagger(a)
    ada = ad @ a
    out = (-1j / hbar) * (h @ rho - rho @ h)
    out -= anti_weight * (1j / hbar) * (s @ rho - rho @ s)
    out += diss_weight * (a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada))
    return out


def rhs_generic_lindblad(H, ops, rho, hbar=1.0):
    """
    -(i/hbar)[H, rho] + sum_L (L rho L^+ - 1/2 {L^+ L, rho}).

    The operators are taken pre-scaled; any rate prefactors belong to the
    caller.
    """
    rho = _array(rho)
    check_same_dim(H, rho, *ops)
    out = (-1j / hbar) * (H @ rho - rho @ H)
    for L in ops:
        Ld = dagger(L)
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def qbm5_lindblad_decomposition(spec):
    """
    The single generator form written as (H, [L]) for the generic evaluator:
    H gains (D_pp lambda_M^2 / 4 hbar^2) {x,p}, L = sqrt(D_pp lambda_M^2 / hbar^2) a.
    """
    anti_weight, diss_weight = _qbm5_weights(spec)
    a = build_annihilation_a(spec.basis, spec.coefficients.beta)
    x, p = spec.x, spec.p
    H = spec.h0 + anti_weight * (x @ p + p @ x)
    return H, [np.sqrt(diss_weight) * a]


def anticommutator_hamiltonian_weight(spec):
    """
    Coefficient of {x,p} in the Hamiltonian part of the generator as written.
    """
    if spec.form == FORM_QBM5:
        return _qbm5_weights(spec)[0]
    return 0.0


_RHS_BY_FORM = {
    FORM_QBM4: rhs_qbm4,
    FORM_QBM5: rhs_qbm5,
    FORM_CALDEIRA_LEGGETT: rhs_caldeira_leggett,
    FORM_DIOSI: rhs_diosi,
}


def rhs(spec, rho):
    if spec.form == FORM_GENERIC:
        return rhs_generic_lindblad(spec.H, spec.lindblad_ops, rho, hbar=spec.hbar)
    return _RHS_BY_FORM[spec.form](spec, rho)


# Column-stacking vectorization: vec(A X B) = (B^T kron A) vec(X)

def vec(mat):
    return mat.reshape(-1, order="F")


def unvec(v, dim):
    return v.reshape((dim, dim), order="F")


def left(a):
    return np.kron(np.eye(a.shape[0]), a)


def right(b):
    return np.kron(b.T, np.eye(b.shape[0]))


def commutator_super(a):
    return left(a) - right(a)


def anticommutator_super(a):
    return left(a) + right(a)


def dissipator_super(L):
    Ld = dagger(L)
    LdL = Ld @ L
    return left(L) @ right(Ld) - 0.5 * (left(LdL) + right(LdL))


def superoperator_matrix(spec):
    """
    Dense dim^2 x dim^2 matrix S with vec(rhs(rho)) = S vec(rho).
    """
    dim = spec.dim
    if dim > MAX_SUPEROPERATOR_DIM:
        raise DimensionTooLarge(
            "Superoperator of a dim {0} basis is too large (max {1}); use time stepping "
            "with the integrator instead".format(dim, MAX_SUPEROPERATOR_DIM))
    hbar = spec.hbar
    if spec.form == FORM_GENERIC:
        S = (-1j / hbar) * commutator_super(spec.H)
        for L in spec.lindblad_ops:
            S = S + dissipator_super(L)
        return S
    S = (-1j / hbar) * commutator_super(spec.h0)
    if spec.form == FORM_QBM5:
        anti_weight, diss_weight = _qbm5_weights(spec)
        S = S - anti_weight * (1j / hbar) * commutator_super(spec.xp_anti)
        return S + diss_weight * dissipator_super(spec.a)
    D_pp, D_qq, gamma = spec.effective_coefficients()
    cx = commutator_super(spec.x)
    cp = commutator_super(spec.p)
    S = S - (D_pp / hbar ** 2) * (cx @ cx) - (D_qq / hbar ** 2) * (cp @ cp)
    return S - (1j * gamma / hbar) * (cx @ anticommutator_super(spec.p))
