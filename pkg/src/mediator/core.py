"""Finite-dimensional Hilbert-space primitives.

Composite indices are row-major with the first listed factor slowest, so on
the tripartite space the basis state ``|m n c>`` sits at
``(m * dim_b + n) * dim_c + c``.  Operators are plain complex ``numpy``
arrays; states and density operators carry their factor dimensions and
labels so that partial traces and transposes can be checked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    ContractViolationError,
    InvalidArgumentError,
    InvalidDimensionError,
    PositivityError,
    TruncationError,
)

LABELS = ("A", "B", "C")

STATE_NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
SPECTRAL_HERMITIAN_TOL = 1e-10


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SystemLayout:
    """Dimensions of the probes A, B and the mediator C, in that order."""

    dim_a: int
    dim_b: int
    dim_c: int

    def __post_init__(self):
        for name in ("dim_a", "dim_b", "dim_c"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidDimensionError(f"{name} must be a positive integer, got {value!r}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (int(self.dim_a), int(self.dim_b), int(self.dim_c))

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b * self.dim_c

    def index(self, m: int, n: int, c: int) -> int:
        """Composite index of the product basis state ``|m n c>``."""
        for value, dim, label in zip((m, n, c), self.dims, LABELS):
            if not 0 <= value < dim:
                raise InvalidArgumentError(f"occupation {value} out of range for {label} (dim {dim})")
        return (m * self.dim_b + n) * self.dim_c + c

    def basis_state(self, m: int, n: int, c: int) -> "StateVector":
        amps = np.zeros(self.total, dtype=complex)
        amps[self.index(m, n, c)] = 1.0
        return StateVector(amps, self.dims, LABELS)


def _check_factors(dims, labels, size):
    dims = tuple(int(d) for d in dims)
    if labels is None:
        labels = LABELS[: len(dims)] if len(dims) <= 3 else tuple(f"S{i}" for i in range(len(dims)))
    labels = tuple(labels)
    if len(labels) != len(dims):
        raise InvalidArgumentError("one label per factor is required")
    if len(set(labels)) != len(labels):
        raise InvalidArgumentError(f"duplicate factor labels {labels}")
    if any(d < 1 for d in dims):
        raise InvalidDimensionError(f"factor dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != size:
        raise InvalidDimensionError(f"factor dimensions {dims} do not multiply to {size}")
    return dims, labels


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state on a labelled tensor-product space."""

    amplitudes: np.ndarray
    dims: tuple
    labels: tuple | None = None

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1:
            raise InvalidArgumentError("amplitudes must be a one-dimensional array")
        dims, labels = _check_factors(self.dims, self.labels, amps.size)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise InvalidArgumentError(f"state is not normalized (norm {norm:.15g})")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def normalized(cls, amplitudes, dims, labels=None) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InvalidArgumentError("cannot normalize the zero vector")
        return cls(amps / norm, dims, labels)

    @property
    def layout(self) -> SystemLayout:
        if self.labels != LABELS:
            raise InvalidArgumentError(f"state lives on {self.labels}, not on the A, B, C layout")
        return SystemLayout(*self.dims)

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims, self.labels)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix on labelled factors.

    Construction validates all three invariants; the eigenvalues computed for
    the positivity check are cached and reused by entropies.  Pass
    ``check_positivity=False`` only for matrices positive by construction
    (e.g. ``M M^dag``); entropies still clip and check the spectrum.
    """

    matrix: np.ndarray
    dims: tuple
    labels: tuple | None = None
    check_positivity: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidArgumentError(f"density matrix must be square, got shape {mat.shape}")
        dims, labels = _check_factors(self.dims, self.labels, mat.shape[0])
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        herm = np.max(np.abs(mat - mat.conj().T), initial=0.0)
        if herm > HERMITIAN_TOL:
            raise ContractViolationError(f"density matrix is not Hermitian (deviation {herm:.3g})")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ContractViolationError(f"density matrix trace is {tr.real:.15g}, expected 1")
        if not self.check_positivity:
            return
        lowest = self.eigenvalues[0] if mat.shape[0] else 0.0
        if lowest < -POSITIVITY_TOL:
            raise PositivityError(f"density matrix has eigenvalue {lowest:.3g} < -{POSITIVITY_TOL}")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of the (Hermitian part of the) matrix."""
        mat = 0.5 * (self.matrix + self.matrix.conj().T)
        return np.linalg.eigvalsh(mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def factor_dim(self, label: str) -> int:
        return self.dims[self.labels.index(label)]


def tensor_product(operands: Sequence):
    """Kronecker product of operators, or of states, in the order given.

    Operators are 2-D arrays; states are :class:`StateVector` instances or
    1-D arrays.  Mixing the two kinds is a ``TypeError``.
    """
    operands = list(operands)
    if not operands:
        raise InvalidArgumentError("tensor_product needs at least one operand")
    if all(isinstance(op, StateVector) for op in operands):
        amps = reduce(np.kron, (op.amplitudes for op in operands))
        dims = sum((op.dims for op in operands), ())
        labels = sum((op.labels for op in operands), ())
        return StateVector(amps, dims, labels)
    if any(isinstance(op, StateVector) for op in operands):
        raise TypeError("cannot mix StateVector and operator operands")
    arrays = [np.asarray(op) for op in operands]
    ndims = {a.ndim for a in arrays}
    if len(ndims) != 1 or ndims.pop() not in (1, 2):
        raise TypeError("operands must all be vectors or all be matrices")
    return reduce(np.kron, arrays)


def _resolve_labels(labels: Iterable[str], available: tuple) -> list[int]:
    if isinstance(labels, str):
        labels = list(labels)
    idx = []
    for lab in labels:
        if lab not in available:
            raise InvalidArgumentError(f"subsystem {lab!r} not in {available}")
        i = available.index(lab)
        if i not in idx:
            idx.append(i)
    return sorted(idx)


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Trace out every factor not listed in ``keep``.

    ``keep`` is an iterable of labels (``"AB"`` and ``{"A", "B"}`` both work).
    Kept factors retain their original relative order.
    """
    kept = _resolve_labels(keep, rho.labels)
    n = len(rho.dims)
    if not kept or len(kept) == n:
        raise InvalidArgumentError("keep must be a nonempty strict subset of the factors")
    tensor = rho.matrix.reshape(rho.dims + rho.dims)
    # einsum subscripts: row axes 0..n-1, column axes n..2n-1; traced axes share a letter
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = [letters[i] for i in range(n)]
    cols = [letters[i] if i not in kept else letters[n + i] for i in range(n)]
    out = [rows[i] for i in kept] + [cols[i] for i in kept]
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), tensor)
    d = int(np.prod([rho.dims[i] for i in kept]))
    return DensityOperator(
        reduced.reshape(d, d),
        tuple(rho.dims[i] for i in kept),
        tuple(rho.labels[i] for i in kept),
    )


def partial_transpose(rho: DensityOperator, subsystem: str) -> np.ndarray:
    """Matrix of ``rho`` transposed on the single factor ``subsystem``."""
    if subsystem not in rho.labels:
        raise InvalidArgumentError(f"subsystem {subsystem!r} not in {rho.labels}")
    return _partial_transpose_matrix(rho.matrix, rho.dims, rho.labels.index(subsystem))


def _partial_transpose_matrix(matrix: np.ndarray, dims: tuple, axis: int) -> np.ndarray:
    n = len(dims)
    tensor = np.asarray(matrix).reshape(tuple(dims) + tuple(dims))
    perm = list(range(2 * n))
    perm[axis], perm[n + axis] = perm[n + axis], perm[axis]
    d = int(np.prod(dims))
    return tensor.transpose(perm).reshape(d, d)


def bosonic_annihilation(dim: int) -> np.ndarray:
    """Truncated annihilation operator with ``<n-1|a|n> = sqrt(n)``."""
    if dim < 2:
        raise InvalidDimensionError(f"bosonic mode needs dim >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def qubit_ladder() -> tuple[np.ndarray, np.ndarray]:
    """Raising and lowering operators with ``|0>`` ground and ``|1>`` excited."""
    raising = np.array([[0, 0], [1, 0]], dtype=complex)
    return raising, raising.T.copy()


def spectral_decompose(op: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order.
    eigenvectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors.

    Raises
    ------
    ContractViolationError
        If ``op`` deviates from Hermiticity by more than 1e-10 (relative to
        its largest entry when that exceeds one).
    """
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ContractViolationError(f"expected a square matrix, got shape {op.shape}")
    scale = max(1.0, float(np.max(np.abs(op), initial=0.0)))
    dev = float(np.max(np.abs(op - op.conj().T), initial=0.0))
    if dev > SPECTRAL_HERMITIAN_TOL * scale:
        raise ContractViolationError(f"matrix is not Hermitian (deviation {dev:.3g})")
    return np.linalg.eigh(0.5 * (op + op.conj().T))


def hermitian_expm(op: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(-i t op)`` for Hermitian ``op`` via its spectral decomposition."""
    w, v = spectral_decompose(op)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def displacement(alpha: complex, dim: int) -> np.ndarray:
    """Truncated displacement operator ``exp(alpha a^dag - alpha* a)``.

    The generator is anti-Hermitian, so it is written as ``-i K`` with
    ``K = i (alpha a^dag - alpha* a)`` Hermitian and exponentiated spectrally.
    Accuracy near the truncation edge is the caller's concern; see
    :func:`check_truncation`.
    """
    a = bosonic_annihilation(dim)
    alpha = complex(alpha)
    generator = 1j * (alpha * a.conj().T - alpha.conjugate() * a)
    return hermitian_expm(generator)


def max_entangled_state(d_small: int, d_large: int) -> StateVector:
    """``sum_j |j>|j> / sqrt(d_small)`` on a ``d_large x d_small`` space.

    The large factor is labelled ``A`` and the small one ``C``; computational
    bases play the role of the two orthonormal bases.
    """
    if d_small < 1 or d_large < 1:
        raise InvalidDimensionError("dimensions must be positive")
    if d_small > d_large:
        raise InvalidArgumentError(f"d_small={d_small} exceeds d_large={d_large}")
    amps = np.zeros(d_large * d_small, dtype=complex)
    for j in range(d_small):
        amps[j * d_small + j] = 1.0
    return StateVector(amps / np.sqrt(d_small), (d_large, d_small), ("A", "C"))


def embed(op: np.ndarray, acts_on: str, dims: tuple, labels: tuple = LABELS) -> np.ndarray:
    """Lift an operator on the listed factors to the full product space.

    ``op`` acts on the factors named in ``acts_on`` taken in layout order
    (e.g. ``"AC"`` for an operator on A x C); identity is placed on the rest.
    """
    idx = _resolve_labels(acts_on, labels)
    sub_dims = [dims[i] for i in idx]
    d_sub = int(np.prod(sub_dims))
    op = np.asarray(op, dtype=complex)
    if op.shape != (d_sub, d_sub):
        raise InvalidDimensionError(f"operator shape {op.shape} does not match factors {acts_on} ({d_sub})")
    rest = [i for i in range(len(dims)) if i not in idx]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(op, np.eye(d_rest))
    # full currently has factor order idx + rest; permute back to layout order
    order = idx + rest
    n = len(dims)
    cur_dims = [dims[i] for i in order]
    tensor = full.reshape(cur_dims + cur_dims)
    inv = [order.index(i) for i in range(n)]
    tensor = tensor.transpose(inv + [n + k for k in inv])
    d = int(np.prod(dims))
    return tensor.reshape(d, d)


def reduce_pure_state(psi: StateVector, keep) -> DensityOperator:
    """Reduced density operator of a pure state, without forming ``|psi><psi|``."""
    kept = _resolve_labels(keep, psi.labels)
    n = len(psi.dims)
    if not kept:
        raise InvalidArgumentError("keep must be nonempty")
    rest = [i for i in range(n) if i not in kept]
    tensor = psi.amplitudes.reshape(psi.dims).transpose(kept + rest)
    d_keep = int(np.prod([psi.dims[i] for i in kept]))
    mat = tensor.reshape(d_keep, -1)
    return DensityOperator(
        mat @ mat.conj().T,
        tuple(psi.dims[i] for i in kept),
        tuple(psi.labels[i] for i in kept),
        check_positivity=False,
    )


def restrict_to_local_supports(rho: DensityOperator, cutoff: float = 1e-14) -> DensityOperator:
    """Compress a bipartite state onto the supports of its two marginals.

    ``rho`` lives inside ``supp(rho_X) (x) supp(rho_Y)``, so conjugating by the
    two local isometries onto those supports leaves every local-isometry
    invariant quantity (entropies, negativity) unchanged while shrinking the
    matrix.  Marginal eigenvalues at or below ``cutoff`` are dropped.
    """
    if len(rho.dims) != 2:
        raise InvalidArgumentError("restrict_to_local_supports needs a bipartite state")
    isometries = []
    for label in rho.labels:
        marginal = partial_trace(rho, label).matrix
        w, v = np.linalg.eigh(0.5 * (marginal + marginal.conj().T))
        isometries.append(v[:, w > cutoff])
    iso = np.kron(isometries[0], isometries[1])
    mat = iso.conj().T @ rho.matrix @ iso
    mat = 0.5 * (mat + mat.conj().T)
    mat /= np.trace(mat).real
    return DensityOperator(mat, (isometries[0].shape[1], isometries[1].shape[1]), rho.labels)


def check_truncation(builder: Callable[[int], np.ndarray], dim: int, rtol: float = 1e-6) -> np.ndarray:
    """Dimension-doubling convergence check for a truncated Fock computation.

    ``builder(d)`` must return an array whose mode axes all have length ``d``
    (other axes may have any fixed length).  The result at ``dim`` is
    zero-padded to the shape of the result at ``2 * dim`` and the relative
    Frobenius difference must be below ``rtol``.  Returns the ``dim`` result.

    Raises
    ------
    TruncationError
        If the two results disagree by ``rtol`` or more.
    """
    coarse = np.asarray(builder(dim))
    fine = np.asarray(builder(2 * dim))
    if coarse.ndim != fine.ndim:
        raise InvalidArgumentError("builder changed the number of axes between dimensions")
    padded = np.zeros(fine.shape, dtype=np.result_type(coarse, fine))
    padded[tuple(slice(0, s) for s in coarse.shape)] = coarse
    scale = np.linalg.norm(fine)
    diff = np.linalg.norm(fine - padded) / (scale if scale > 0 else 1.0)
    if diff >= rtol:
        raise TruncationError(f"truncation at dim={dim} not converged (relative change {diff:.3g} >= {rtol})")
    return coarse


def clip_spectrum(eigenvalues: np.ndarray, tol: float = POSITIVITY_TOL) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol, 0)``; anything lower is an error."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.size and eigenvalues.min() < -tol:
        raise PositivityError(f"eigenvalue {eigenvalues.min():.3g} below clipping tolerance -{tol}")
    return np.clip(eigenvalues, 0.0, None)
