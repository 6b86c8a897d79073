"""Closed-form dipole-dipole dynamics, used as an oracle for the numerics.

For ``H = g (X_a + X_b) sx`` with ``X = a + a^dag`` the propagator splits on
the two ``sx`` eigenspaces into products of displacements ``D(+-alpha)`` with
``alpha = i g t``.  Displacement matrix elements come from the generalized
Laguerre form

    <k|D(alpha)|n> = sqrt(n!/k!) alpha^(k-n) exp(-|alpha|^2/2) L_n^(k-n)(|alpha|^2),   k >= n

(and its mirror for ``k < n``), so nothing here exponentiates a truncated
matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DensityOperator, check_truncation
from .errors import InvalidArgumentError, NumericalDomainError

RADICAND_TOL = 1e-12


def generalized_laguerre(k: int, a: float, x: float) -> float:
    """``L_k^(a)(x)`` by the upward three-term recurrence."""
    if k < 0:
        raise InvalidArgumentError(f"Laguerre degree must be >= 0, got {k}")
    prev, cur = 0.0, 1.0
    for j in range(k):
        prev, cur = cur, ((2 * j + 1 + a - x) * cur - (j + a) * prev) / (j + 1)
    return cur


def laguerre(k: int, x: float) -> float:
    """Laguerre polynomial ``L_k(x)``."""
    return generalized_laguerre(k, 0.0, x)


def displacement_element(k: int, n: int, alpha: complex) -> complex:
    """Fock matrix element ``<k|D(alpha)|n>``."""
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    if k >= n:
        lo, hi, z = n, k, alpha
    else:
        lo, hi, z = k, n, -alpha.conjugate()
    # sqrt(lo!/hi!) via log-gamma keeps large occupations finite
    pref = math.exp(0.5 * (math.lgamma(lo + 1) - math.lgamma(hi + 1)) - 0.5 * x)
    return pref * z ** (hi - lo) * generalized_laguerre(lo, hi - lo, x)


def displacement_diagonal(k: int, alpha: complex) -> float:
    """``<k|D(alpha)|k> = exp(-|alpha|^2/2) L_k(|alpha|^2)``."""
    if k < 0:
        raise InvalidArgumentError(f"Fock index must be >= 0, got {k}")
    x = abs(complex(alpha)) ** 2
    return math.exp(-0.5 * x) * laguerre(k, x)


def displaced_fock(n: int, alpha: complex, dim: int) -> np.ndarray:
    """First ``dim`` Fock amplitudes of ``D(alpha)|n>``."""
    return np.array([displacement_element(k, n, alpha) for k in range(dim)], dtype=complex)


def _overlap_factor(n: int, alpha: complex) -> float:
    # <n|D(-2 alpha)|n>: the overlap of D(alpha)|n> with D(-alpha)|n>
    x = 4.0 * abs(complex(alpha)) ** 2
    return math.exp(-0.5 * x) * laguerre(n, x)


def _root(value: float) -> float:
    if value < -RADICAND_TOL:
        raise NumericalDomainError(f"negative radicand {value:.3g}")
    return math.sqrt(max(value, 0.0))


def dipole_coefficients(m: int, n: int, alpha: complex) -> tuple[float, float, float, float]:
    """Branch weights ``(d_++, d_--, d_+-, d_-+)`` for initial ``|m n 0>``.

    ``d_{s1 s2} = 2 sqrt[(1 + s1 e^{-2|alpha|^2} L_m(4|alpha|^2)) (1 + s2 e^{-2|alpha|^2} L_n(4|alpha|^2))]``.
    """
    if m < 0 or n < 0:
        raise InvalidArgumentError("occupations must be >= 0")
    fm = _overlap_factor(m, alpha)
    fn = _overlap_factor(n, alpha)
    return (
        2.0 * _root((1 + fm) * (1 + fn)),
        2.0 * _root((1 - fm) * (1 - fn)),
        2.0 * _root((1 + fm) * (1 - fn)),
        2.0 * _root((1 - fm) * (1 + fn)),
    )


def branch_state(n: int, alpha: complex, sign: int, dim: int) -> np.ndarray:
    """Normalized ``[D(alpha) + sign D(-alpha)]|n>`` truncated to ``dim`` levels.

    Returns the zero vector when the branch has vanishing weight (e.g. the
    minus branch at ``alpha = 0``).
    """
    if sign not in (1, -1):
        raise InvalidArgumentError("sign must be +1 or -1")
    vec = displaced_fock(n, alpha, dim) + sign * displaced_fock(n, -complex(alpha), dim)
    weight = 2.0 * (1.0 + sign * _overlap_factor(n, alpha))
    if weight <= RADICAND_TOL:
        return np.zeros(dim, dtype=complex)
    return vec / math.sqrt(weight)


def effective_two_qubit_state(m: int, n: int, alpha: complex) -> DensityOperator:
    """Reduced field state in the orthonormal branch basis ``{|++>, |+->, |-+>, |-->}``."""
    dpp, dmm, dpm, dmp = dipole_coefficients(m, n, alpha)
    mat = np.zeros((4, 4))
    mat[0, 0] = dpp**2
    mat[1, 1] = dpm**2
    mat[2, 2] = dmp**2
    mat[3, 3] = dmm**2
    mat[0, 3] = mat[3, 0] = dpp * dmm
    mat[1, 2] = mat[2, 1] = dpm * dmp
    mat /= 16.0
    # the four weights sum to 16 analytically; remove round-off before validation
    mat /= np.trace(mat)
    return DensityOperator(mat, (2, 2), ("A", "B"))


def dipole_closed_form_state(m: int, n: int, alpha: complex, dim: int) -> np.ndarray:
    """Amplitude tensor ``psi[k_a, k_b, c]`` of the evolved ``|m n 0>``."""
    dpp, dmm, dpm, dmp = dipole_coefficients(m, n, alpha)
    ap, am = branch_state(m, alpha, 1, dim), branch_state(m, alpha, -1, dim)
    bp, bm = branch_state(n, alpha, 1, dim), branch_state(n, alpha, -1, dim)
    psi = np.zeros((dim, dim, 2), dtype=complex)
    psi[:, :, 0] = 0.25 * (dpp * np.outer(ap, bp) + dmm * np.outer(am, bm))
    psi[:, :, 1] = -0.25 * (dpm * np.outer(ap, bm) + dmp * np.outer(am, bp))
    return psi


def dipole_closed_form_reduced_ab(
    m: int, n: int, g: float, t: float, field_dim: int, *, rtol: float = 1e-6
) -> DensityOperator:
    """Reduced field state at time ``t`` for initial ``|m n 0>`` under dipole coupling.

    The two atomic branches are traced analytically, adding incoherently.

    Raises
    ------
    TruncationError
        If ``field_dim`` fails the dimension-doubling check at ``rtol``.
    """
    if field_dim <= max(m, n):
        raise InvalidArgumentError(f"field_dim {field_dim} cannot hold occupations ({m}, {n})")
    alpha = 1j * g * t
    # amplitudes are exact element by element, so the doubling check on the
    # pure state measures exactly the weight lost beyond the cutoff
    psi = check_truncation(lambda d: dipole_closed_form_state(m, n, alpha, d), field_dim, rtol)
    rho = np.einsum("abc,xyc->abxy", psi, psi.conj()).reshape(field_dim**2, field_dim**2)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return DensityOperator(rho, (field_dim, field_dim), ("A", "B"), check_positivity=False)
