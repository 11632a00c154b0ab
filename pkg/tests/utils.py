import textwrap

import numpy as np

from cpqbm.coefficients import GasParameters, derive_coefficients
from cpqbm.hilbert import BasisConfig, dm_random


def dedent_config(text):
    return textwrap.dedent("{}\n".format(text.rstrip())).lstrip("\n")


def low_support_state(basis, seed, rank=2, margin=6):
    """
    Random density matrix that lives well away from the top of the basis.
    """
    return dm_random(basis, seed=seed, rank=rank, support=basis.dim - margin)


def random_hermitian(dim, support, rng):
    """
    Hermitian (not necessarily positive) matrix on the lowest `support` levels.
    """
    g = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    m = np.zeros((dim, dim), dtype=complex)
    m[:support, :support] = 0.5 * (g + g.conj().T)
    return m


def unit_coefficients(D_pp=0.2, beta=1.0, M=1.0, m=0.05, hbar=1.0):
    """
    Collisional coefficients with D_pp given directly.
    """
    gas = GasParameters(m=m, beta=beta, n=1.0)
    return derive_coefficients(D_pp, gas, M, hbar=hbar)


def unit_basis(dim=30, M=1.0, omega_ref=1.0, hbar=1.0):
    return BasisConfig(dim=dim, mass=M, omega_ref=omega_ref, hbar=hbar)
