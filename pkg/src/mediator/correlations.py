"""Correlation quantifiers between the probes and the decomposability bounds.

All entropies are in bits.  A bipartition ``cut`` is a pair of label groups
such as ``("A", "B")`` or ``("AC", "B")``; factors outside the cut are traced
out first.  When ``cut`` is omitted the operator must already be bipartite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DensityOperator,
    StateVector,
    SystemLayout,
    _partial_transpose_matrix,
    clip_spectrum,
    partial_trace,
    reduce_pure_state,
    restrict_to_local_supports,
)
from .errors import InvalidArgumentError

VIOLATION_SLACK = 1e-9
PRODUCT_TOL = 1e-10
# reduced AB states larger than this are compressed onto local supports first
_COMPRESS_ABOVE = 64


class MeasureKind(str, enum.Enum):
    MUTUAL_INFORMATION = "mutual_information"
    CLASSICAL_LOWER_BOUND = "classical_lower_bound"
    DISCORD_LOWER_BOUND = "discord_lower_bound"
    NEGATIVITY = "negativity"

    @classmethod
    def parse(cls, name: str) -> "MeasureKind":
        key = name.strip().lower()
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InvalidArgumentError(f"unknown measure {name!r}") from None

    @property
    def short_name(self) -> str:
        return _SHORT[self]


ALL_MEASURES = tuple(MeasureKind)

_ALIASES = {
    "mi": "mutual_information",
    "classical": "classical_lower_bound",
    "discord": "discord_lower_bound",
}
_SHORT = {
    MeasureKind.MUTUAL_INFORMATION: "mutual_information",
    MeasureKind.CLASSICAL_LOWER_BOUND: "classical",
    MeasureKind.DISCORD_LOWER_BOUND: "discord",
    MeasureKind.NEGATIVITY: "negativity",
}


def _entropy_from_eigenvalues(eigenvalues) -> float:
    p = clip_spectrum(eigenvalues)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def von_neumann_entropy(rho: DensityOperator) -> float:
    """``-sum p log2 p`` over the clipped spectrum of ``rho``."""
    return _entropy_from_eigenvalues(rho.eigenvalues)


def _shannon(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def _bipartite(rho: DensityOperator, cut) -> tuple[np.ndarray, int, int, tuple[str, str]]:
    """Reduce and reorder ``rho`` to an ``X (x) Y`` matrix for ``cut = (X, Y)``."""
    if cut is None:
        if len(rho.dims) != 2:
            raise InvalidArgumentError(f"state on {rho.labels} needs an explicit cut")
        return rho.matrix, rho.dims[0], rho.dims[1], rho.labels
    group_x, group_y = (tuple(g) for g in cut)
    if not group_x or not group_y or set(group_x) & set(group_y):
        raise InvalidArgumentError(f"invalid bipartition {cut!r}")
    for lab in group_x + group_y:
        if lab not in rho.labels:
            raise InvalidArgumentError(f"subsystem {lab!r} not in {rho.labels}")
    used = set(group_x) | set(group_y)
    if used != set(rho.labels):
        rho = partial_trace(rho, used)
    order = [rho.labels.index(lab) for lab in group_x + group_y]
    n = len(rho.dims)
    tensor = rho.matrix.reshape(rho.dims + rho.dims).transpose(order + [n + i for i in order])
    dx = int(np.prod([rho.dims[rho.labels.index(lab)] for lab in group_x]))
    dy = int(np.prod([rho.dims[rho.labels.index(lab)] for lab in group_y]))
    return tensor.reshape(dx * dy, dx * dy), dx, dy, ("".join(group_x), "".join(group_y))


def _as_bipartite_operator(rho: DensityOperator, cut) -> DensityOperator:
    mat, dx, dy, labels = _bipartite(rho, cut)
    if mat is rho.matrix and labels == rho.labels:
        return rho
    return DensityOperator(mat, (dx, dy), labels, check_positivity=False)


def mutual_information(rho: DensityOperator, cut=None) -> float:
    """``S_X + S_Y - S_XY`` across the bipartition."""
    bip = _as_bipartite_operator(rho, cut)
    x, y = bip.labels
    return (
        von_neumann_entropy(partial_trace(bip, [x]))
        + von_neumann_entropy(partial_trace(bip, [y]))
        - von_neumann_entropy(bip)
    )


def _local_basis(basis, dim):
    if basis is None:
        return None
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (dim, dim) or not np.allclose(basis.conj().T @ basis, np.eye(dim), atol=1e-10):
        raise InvalidArgumentError(f"measurement basis must be a {dim}x{dim} unitary (columns = basis vectors)")
    return basis


def classical_lower_bound(rho: DensityOperator, cut=None, bases=None) -> float:
    """Mutual information after local projective measurements.

    Both sides are measured in fixed orthonormal bases (the Fock/computational
    basis unless ``bases=(U_X, U_Y)`` supplies unitaries whose columns are the
    basis vectors).  No optimization over measurements is done, so this lower
    bounds the classical correlation.
    """
    mat, dx, dy, _ = _bipartite(rho, cut)
    if bases is not None:
        ux = _local_basis(bases[0], dx)
        uy = _local_basis(bases[1], dy)
        u = np.kron(ux if ux is not None else np.eye(dx), uy if uy is not None else np.eye(dy))
        mat = u.conj().T @ mat @ u
    joint = np.clip(np.real(np.diag(mat)), 0.0, None).reshape(dx, dy)
    joint = joint / joint.sum()
    return _shannon(joint.sum(axis=1)) + _shannon(joint.sum(axis=0)) - _shannon(joint.ravel())


def discord_lower_bound(rho: DensityOperator, cut=None) -> float:
    """Negative conditional entropy ``S_Y - S_XY`` for ``cut = (X, Y)``.

    May be negative; it is reported as-is.
    """
    bip = _as_bipartite_operator(rho, cut)
    return von_neumann_entropy(partial_trace(bip, [bip.labels[1]])) - von_neumann_entropy(bip)


def negativity(rho: DensityOperator, cut=None) -> float:
    """``(||rho^{T_X}||_1 - 1) / 2`` from the eigenvalues of the partial transpose."""
    mat, dx, dy, _ = _bipartite(rho, cut)
    pt = _partial_transpose_matrix(mat, (dx, dy), 0)
    eig = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float((np.sum(np.abs(eig)) - 1.0) / 2.0)


def correlation_capacity(kind: MeasureKind, d_c: int) -> float:
    """Largest value of ``kind`` between a probe and a ``d_c``-level mediator.

    The two lower-bound measures use the capacity of the quantity they bound.
    """
    kind = MeasureKind(kind)
    if not isinstance(d_c, (int, np.integer)) or d_c < 2:
        raise InvalidArgumentError(f"mediator dimension must be an integer >= 2, got {d_c!r}")
    if kind is MeasureKind.MUTUAL_INFORMATION:
        return 2.0 * math.log2(d_c)
    if kind is MeasureKind.NEGATIVITY:
        return (d_c - 1) / 2.0
    return math.log2(d_c)


def capacity_table(d_values: Iterable[int], kinds: Iterable[MeasureKind] = ALL_MEASURES) -> dict:
    """``{(kind, d_c): capacity}`` for every combination."""
    kinds = tuple(kinds)
    return {(k, d): correlation_capacity(k, d) for d in d_values for k in kinds}


def initial_correlation_term(rho0) -> float:
    """Mutual information across the AC:B cut of the tripartite state.

    Pure states (:class:`StateVector`) take the shortcut ``2 S_B``.
    """
    if isinstance(rho0, StateVector):
        return 2.0 * von_neumann_entropy(reduce_pure_state(rho0, "B"))
    return mutual_information(rho0, (("A", "C"), ("B",)))


def dimension_witness(kind: MeasureKind, observed: float) -> int:
    """Smallest mediator dimension whose capacity reaches ``observed``.

    ``observed`` should already have any initial-correlation offset removed.
    Values at or below zero are explained by a one-level (trivial) mediator.
    """
    kind = MeasureKind(kind)
    observed = float(observed)
    if not math.isfinite(observed):
        raise InvalidArgumentError(f"observed value must be finite, got {observed}")
    if kind is MeasureKind.NEGATIVITY and observed < 0:
        raise InvalidArgumentError("negativity cannot be negative")
    if observed <= 0:
        return 1
    if kind is MeasureKind.MUTUAL_INFORMATION:
        guess = 2.0 ** (observed / 2.0)
    elif kind is MeasureKind.NEGATIVITY:
        guess = 2.0 * observed + 1.0
    else:
        guess = 2.0 ** observed
    d = max(2, math.ceil(guess))
    while d > 2 and correlation_capacity(kind, d - 1) >= observed:
        d -= 1
    while correlation_capacity(kind, d) < observed:
        d += 1
    return d


@dataclass
class CorrelationTrajectory:
    """Measure values along a trajectory together with their bounds.

    ``violated[kind]`` is ``(flag, first_time)`` where ``first_time`` is the
    first sample with ``value > bound + 1e-9`` (``None`` when never).
    """

    times: np.ndarray
    values: dict
    bound: dict
    initial_correlation_term: float
    violated: dict
    notes: list = field(default_factory=list)

    def max_value(self, kind: MeasureKind) -> float:
        return float(np.max(self.values[kind]))


def _reduced_ab(state, layout: SystemLayout) -> DensityOperator:
    if isinstance(state, StateVector):
        return reduce_pure_state(state, "AB")
    if state.dims != layout.dims:
        raise InvalidArgumentError(f"state dims {state.dims} do not match layout {layout.dims}")
    return partial_trace(state, "AB")


def _measures_on_ab(rho_ab: DensityOperator, measures) -> dict:
    out = {}
    needs_spectral = any(m is not MeasureKind.CLASSICAL_LOWER_BOUND for m in measures)
    compact = rho_ab
    if needs_spectral and rho_ab.dim > _COMPRESS_ABOVE:
        compact = restrict_to_local_supports(rho_ab)
    for m in measures:
        if m is MeasureKind.MUTUAL_INFORMATION:
            out[m] = mutual_information(compact)
        elif m is MeasureKind.CLASSICAL_LOWER_BOUND:
            out[m] = classical_lower_bound(rho_ab)
        elif m is MeasureKind.DISCORD_LOWER_BOUND:
            out[m] = discord_lower_bound(compact)
        else:
            out[m] = negativity(compact)
    return out


def evaluate_trajectory(
    states: Sequence,
    layout: SystemLayout,
    measures: Iterable[MeasureKind] = ALL_MEASURES,
    times: Sequence[float] | None = None,
) -> CorrelationTrajectory:
    """Evaluate A:B correlations along a trajectory and compare with the bounds.

    Parameters
    ----------
    states : sequence of StateVector or DensityOperator
        Full-space states; the first one is taken as the initial state.
    layout : SystemLayout
        Layout of the states; ``dim_c`` sets the capacities.
    measures : iterable of MeasureKind
        Quantities to evaluate.
    times : sequence of float, optional
        Sample times reported in the trajectory (defaults to indices).

    Returns
    -------
    CorrelationTrajectory
        Entropic bounds are ``I_{AC:B}(0) + capacity``.  The negativity bound
        is the bare capacity, with a note when the initial state is not of the
        form ``rho_AC (x) rho_B``, where that bound is not guaranteed.
    """
    states = list(states)
    if not states:
        raise InvalidArgumentError("trajectory is empty")
    measures = tuple(dict.fromkeys(MeasureKind(m) for m in measures))
    if times is None:
        times = np.arange(len(states), dtype=float)
    times = np.asarray(times, dtype=float)
    if times.shape != (len(states),):
        raise InvalidArgumentError("times must match the number of states")

    offset = max(0.0, initial_correlation_term(states[0]))

    values = {m: np.empty(len(states)) for m in measures}
    for i, state in enumerate(states):
        for m, v in _measures_on_ab(_reduced_ab(state, layout), measures).items():
            values[m][i] = v

    notes = []
    bound = {}
    for m in measures:
        cap = correlation_capacity(m, layout.dim_c)
        if m is MeasureKind.NEGATIVITY:
            bound[m] = cap
            if offset > PRODUCT_TOL:
                notes.append(
                    f"negativity bound {cap:g} assumes an initial state rho_AC (x) rho_B; "
                    f"here I(AC:B)(0) = {offset:.6g}, so the bound is not guaranteed"
                )
        else:
            bound[m] = offset + cap

    violated = {}
    for m in measures:
        over = np.nonzero(values[m] > bound[m] + VIOLATION_SLACK)[0]
        violated[m] = (True, float(times[over[0]])) if over.size else (False, None)

    return CorrelationTrajectory(times, values, bound, offset, violated, notes)
