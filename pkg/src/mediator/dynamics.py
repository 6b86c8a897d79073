"""Hamiltonians of the field-atom-field system and their time evolution.

Every Hamiltonian is stored as two full-space pieces, ``h_ac`` and ``h_bc``,
assembled from local operators on A x C and B x C, so there is never an
A-B coupling term.  Units have hbar = 1 and time measured in 1/g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import (
    LABELS,
    DensityOperator,
    StateVector,
    SystemLayout,
    bosonic_annihilation,
    check_truncation,
    embed,
    qubit_ladder,
    spectral_decompose,
)
from .errors import (
    IntegratorError,
    TruncationError,
    InvalidArgumentError,
    InvalidDimensionError,
    NumericalDomainError,
    UnsupportedMediatorError,
)

NORM_DRIFT_TOL = 1e-10

COUPLING_KINDS = ("jaynes_cummings", "dipole_dipole", "custom_bipartite_sum")


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """``H = H_AC + H_BC`` on a :class:`SystemLayout`.

    Build instances with :func:`build_jc_hamiltonian`,
    :func:`build_dipole_hamiltonian` or :func:`custom_hamiltonian`; those
    embed local pieces so the no-A-B-coupling structure holds by construction.
    """

    coupling_kind: str
    g: float
    layout: SystemLayout
    h_ac: np.ndarray = field(repr=False)
    h_bc: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coupling_kind not in COUPLING_KINDS:
            raise InvalidArgumentError(f"unknown coupling kind {self.coupling_kind!r}")
        for name in ("h_ac", "h_bc"):
            mat = np.array(getattr(self, name), dtype=complex)
            if mat.shape != (self.layout.total, self.layout.total):
                raise InvalidDimensionError(f"{name} has shape {mat.shape}, layout needs {self.layout.total}")
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)

    @property
    def matrix(self) -> np.ndarray:
        return self.h_ac + self.h_bc

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached ``(eigenvalues, eigenvectors)`` of the full Hamiltonian."""
        return spectral_decompose(self.matrix)


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    """Hamiltonian plus local jump operators.

    ``jumps`` holds ``(operator, subsystem)`` pairs; each operator is given on
    its own subsystem only (already including any ``sqrt(rate)`` prefactor)
    and is embedded on the full space here.
    """

    hamiltonian: HamiltonianSpec
    jumps: tuple = ()

    def __post_init__(self):
        layout = self.hamiltonian.layout
        checked = []
        for op, subsystem in self.jumps:
            if subsystem not in LABELS:
                raise InvalidArgumentError(f"jump operator subsystem must be one of {LABELS}, got {subsystem!r}")
            op = np.asarray(op, dtype=complex)
            d = layout.dims[LABELS.index(subsystem)]
            if op.shape != (d, d):
                raise InvalidDimensionError(f"jump operator on {subsystem} must be {d}x{d}, got {op.shape}")
            checked.append((op, subsystem))
        object.__setattr__(self, "jumps", tuple(checked))

    @cached_property
    def full_jumps(self) -> list[np.ndarray]:
        layout = self.hamiltonian.layout
        return [embed(op, sub, layout.dims) for op, sub in self.jumps]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform samples of ``[0, t_max]``; ``t_max`` is in units of 1/g."""

    t_max: float
    n_points: int

    def __post_init__(self):
        if not (self.t_max >= 0 and math.isfinite(self.t_max)):
            raise InvalidArgumentError(f"t_max must be finite and >= 0, got {self.t_max}")
        if self.n_points < 2:
            raise InvalidArgumentError(f"n_points must be >= 2, got {self.n_points}")
        if self.t_max == 0:
            raise InvalidArgumentError("t_max must be > 0 for strictly increasing samples")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)

    def physical_times(self, g: float) -> np.ndarray:
        return self.times / g


def _require_qubit_mediator(layout: SystemLayout) -> None:
    if layout.dim_c != 2:
        raise UnsupportedMediatorError(f"this coupling needs a two-level mediator, got dim_c={layout.dim_c}")


def _field_ops(layout: SystemLayout):
    if layout.dim_a < 2 or layout.dim_b < 2:
        raise InvalidDimensionError("both fields need dim >= 2")
    return bosonic_annihilation(layout.dim_a), bosonic_annihilation(layout.dim_b)


def custom_hamiltonian(layout: SystemLayout, h_ac_local, h_bc_local, g: float = 1.0) -> HamiltonianSpec:
    """Assemble ``H_AC + H_BC`` from pieces acting on A x C and on B x C."""
    h_ac = embed(h_ac_local, "AC", layout.dims)
    h_bc = embed(h_bc_local, "BC", layout.dims)
    return HamiltonianSpec("custom_bipartite_sum", float(g), layout, h_ac, h_bc)


def build_jc_hamiltonian(layout: SystemLayout, g: float) -> HamiltonianSpec:
    """Jaynes-Cummings coupling ``g(a s+ + a^dag s-) + g(b s+ + b^dag s-)``."""
    _require_qubit_mediator(layout)
    a, b = _field_ops(layout)
    sp, sm = qubit_ladder()
    h_ac = g * (np.kron(a, sp) + np.kron(a.conj().T, sm))
    h_bc = g * (np.kron(b, sp) + np.kron(b.conj().T, sm))
    spec = custom_hamiltonian(layout, h_ac, h_bc, g)
    return HamiltonianSpec("jaynes_cummings", float(g), layout, spec.h_ac, spec.h_bc)


def build_dipole_hamiltonian(layout: SystemLayout, g: float) -> HamiltonianSpec:
    """Dipole-dipole coupling ``g(a + a^dag) sx + g(b + b^dag) sx``."""
    _require_qubit_mediator(layout)
    a, b = _field_ops(layout)
    sp, sm = qubit_ladder()
    sx = sp + sm
    h_ac = g * np.kron(a + a.conj().T, sx)
    h_bc = g * np.kron(b + b.conj().T, sx)
    spec = custom_hamiltonian(layout, h_ac, h_bc, g)
    return HamiltonianSpec("dipole_dipole", float(g), layout, spec.h_ac, spec.h_bc)


def commutator_norm(spec: HamiltonianSpec) -> float:
    """Spectral norm of ``[H_AC, H_BC]``."""
    comm = spec.h_ac @ spec.h_bc - spec.h_bc @ spec.h_ac
    return float(np.linalg.norm(comm, ord=2))


def total_excitation_operator(layout: SystemLayout) -> np.ndarray:
    """``a^dag a + b^dag b + s+ s-`` on the full space."""
    _require_qubit_mediator(layout)
    a, b = _field_ops(layout)
    sp, sm = qubit_ladder()
    return (
        embed(a.conj().T @ a, "A", layout.dims)
        + embed(b.conj().T @ b, "B", layout.dims)
        + embed(sp @ sm, "C", layout.dims)
    )


def _check_state(psi0: StateVector, spec: HamiltonianSpec) -> None:
    if psi0.dims != spec.layout.dims:
        raise InvalidArgumentError(f"state dims {psi0.dims} do not match layout {spec.layout.dims}")


def _renormalized(amps: np.ndarray, like: StateVector) -> StateVector:
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > NORM_DRIFT_TOL:
        raise NumericalDomainError(f"propagation changed the state norm to {norm:.15g}")
    # strip round-off so the 1e-12 StateVector invariant holds
    return StateVector(amps / norm, like.dims, like.labels)


def unitary_trajectory(psi0: StateVector, spec: HamiltonianSpec, times: Sequence[float]) -> list[StateVector]:
    """``exp(-iHt) psi0`` at each time, reusing one spectral decomposition."""
    _check_state(psi0, spec)
    w, v = spec.spectrum
    coeffs = v.conj().T @ psi0.amplitudes
    out = []
    for t in times:
        amps = v @ (np.exp(-1j * w * float(t)) * coeffs)
        out.append(_renormalized(amps, psi0))
    return out


def evolve_unitary(psi0: StateVector, spec: HamiltonianSpec, t: float) -> StateVector:
    """Exact evolution ``exp(-iHt) psi0`` through the spectrum of ``H``."""
    return unitary_trajectory(psi0, spec, [t])[0]


def _propagator(h: np.ndarray, dt: float) -> np.ndarray:
    w, v = spectral_decompose(h)
    return (v * np.exp(-1j * dt * w)) @ v.conj().T


def trotter_evolve(psi0: StateVector, spec: HamiltonianSpec, t: float, n: int) -> StateVector:
    """First-order product formula ``(exp(-i dt H_BC) exp(-i dt H_AC))^n psi0``.

    ``dt = t / n``; each factor is built once and reused for all ``n`` steps.
    """
    if n < 1:
        raise InvalidArgumentError(f"number of Trotter steps must be >= 1, got {n}")
    _check_state(psi0, spec)
    dt = float(t) / n
    u_ac = _propagator(spec.h_ac, dt)
    u_bc = _propagator(spec.h_bc, dt)
    step = u_bc @ u_ac
    amps = np.array(psi0.amplitudes)
    for _ in range(n):
        amps = step @ amps
    return _renormalized(amps, psi0)


def _lindblad_rhs(h, jumps, decay):
    def rhs(rho):
        out = -1j * (h @ rho - rho @ h)
        for q in jumps:
            out += q @ rho @ q.conj().T
        out -= 0.5 * (decay @ rho + rho @ decay)
        return out

    return rhs


def _rk4_run(rho0, rhs, times, substeps):
    rho = np.array(rho0, dtype=complex)
    out = [rho.copy()]
    for t0, t1 in zip(times[:-1], times[1:]):
        h = (t1 - t0) / substeps
        for _ in range(substeps):
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * h * k1)
            k3 = rhs(rho + 0.5 * h * k2)
            k4 = rhs(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(rho.copy())
    return out


def lindblad_evolve(
    rho0: DensityOperator,
    spec: LindbladSpec,
    grid: TimeGrid,
    *,
    tol: float = 1e-9,
    max_doublings: int = 8,
) -> list[DensityOperator]:
    """Integrate the Lindblad master equation with fixed-step RK4.

    ``grid.times`` are in units of 1/g and are converted with the
    Hamiltonian's ``g``.  The number of RK4 substeps per grid interval starts
    from a step-size heuristic and is doubled until two successive runs agree
    entrywise within ``tol`` at every sample; the finer run is returned.

    Raises
    ------
    IntegratorError
        If the substep count does not converge, or a sample leaves the
        physical state space (negative eigenvalue beyond 1e-10), naming the
        offending time.
    """
    layout = spec.hamiltonian.layout
    if rho0.dims != layout.dims:
        raise InvalidArgumentError(f"initial state dims {rho0.dims} do not match layout {layout.dims}")
    h = spec.hamiltonian.matrix
    jumps = spec.full_jumps
    decay = sum((q.conj().T @ q for q in jumps), np.zeros_like(h))
    rhs = _lindblad_rhs(h, jumps, decay)
    g = spec.hamiltonian.g if spec.hamiltonian.g != 0 else 1.0
    times = grid.physical_times(g)

    rate = 2 * np.linalg.norm(h, 2) + sum(np.linalg.norm(q, 2) ** 2 for q in jumps)
    interval = times[1] - times[0]
    substeps = max(1, math.ceil(interval * rate / 0.05))

    coarse = _rk4_run(rho0.matrix, rhs, times, substeps)
    for _ in range(max_doublings):
        substeps *= 2
        fine = _rk4_run(rho0.matrix, rhs, times, substeps)
        change = max(float(np.max(np.abs(a - b))) for a, b in zip(coarse, fine))
        if change < tol:
            break
        coarse = fine
    else:
        raise IntegratorError(f"RK4 did not converge to {tol} after {max_doublings} step doublings")

    out = []
    for t, rho in zip(grid.times, fine):
        rho = 0.5 * (rho + rho.conj().T)
        try:
            out.append(DensityOperator(rho, layout.dims, LABELS))
        except ArithmeticError as exc:
            raise IntegratorError(f"non-physical state at gt={t:.6g}: {exc}", time=float(t)) from exc
        except ValueError as exc:
            raise IntegratorError(f"invalid state at gt={t:.6g}: {exc}", time=float(t)) from exc
    return out


def jc_field_dim(occupations: Sequence[int]) -> int:
    """Exact Fock truncation for Jaynes-Cummings runs: total excitation + 1."""
    return max(2, int(sum(occupations)) + 1)


def dipole_field_dim(g_t_max: float, occupations: Sequence[int] = (0, 0), *, rtol: float = 1e-6) -> int:
    """Field truncation for the non-conserving dipole coupling.

    Starts from ``8 (1 + ceil(g t_max))`` and grows in steps of 4 until
    :func:`check_dipole_truncation` passes.
    """
    dim = max(8 * (1 + math.ceil(g_t_max)), max(occupations[:2]) + 2)
    for _ in range(64):
        try:
            check_dipole_truncation(dim, g_t_max, occupations, rtol)
            return dim
        except TruncationError:
            dim += 4
    raise TruncationError(f"no adequate dipole truncation found up to dim={dim}")


def check_dipole_truncation(field_dim: int, g_t_max: float, occupations: Sequence[int], rtol: float = 1e-6) -> None:
    """Doubling check on the single-mode factors of the dipole propagator.

    The dipole evolution factorizes into ``exp(-+ i g t (a + a^dag))`` on each
    field, so the truncation is adequate when the single-mode states those
    factors produce from the initial Fock states are converged at the
    largest time.
    """
    for occ in occupations[:2]:
        def mode_state(d, occ=occ):
            a = bosonic_annihilation(d)
            w, v = spectral_decompose(a + a.conj().T)
            col = ((v * np.exp(-1j * g_t_max * w)) @ v[occ].conj())
            return np.outer(col, col.conj())

        check_truncation(mode_state, field_dim, rtol)
