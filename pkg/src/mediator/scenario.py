"""Scenario configuration, execution and CSV output for the command line."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LABELS, StateVector, SystemLayout, bosonic_annihilation, qubit_ladder
from .correlations import ALL_MEASURES, CorrelationTrajectory, MeasureKind, evaluate_trajectory
from .dynamics import (
    LindbladSpec,
    TimeGrid,
    build_dipole_hamiltonian,
    build_jc_hamiltonian,
    check_dipole_truncation,
    custom_hamiltonian,
    dipole_field_dim,
    jc_field_dim,
    lindblad_evolve,
    unitary_trajectory,
)
from .errors import ConfigError, TruncationError

COUPLINGS = ("jc", "dipole", "custom")
JUMP_KINDS = ("lowering", "dephasing")
KEYS = (
    "coupling",
    "g",
    "initial_state",
    "t_max_gt",
    "n_points",
    "field_dim",
    "measures",
    "lindblad",
    "output_path",
    "custom_hamiltonian",
)
CSV_HEADER = "gt,measure,value,bound,violated"


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated run description.

    ``initial_state`` is either an occupation triple ``(m, n, c)`` or a tuple
    of complex amplitudes over the full A x B x C space (normalized on parse).
    ``field_dim`` is ``None`` for automatic truncation.  ``custom_hamiltonian``
    names an ``.npz`` file with arrays ``h_ac`` (on A x C) and ``h_bc`` (on
    B x C), and is required exactly when ``coupling == "custom"``.
    """

    coupling: str
    initial_state: tuple
    g: float = 1.0
    t_max_gt: float = 4.0
    n_points: int = 401
    field_dim: int | None = None
    measures: tuple = ALL_MEASURES
    lindblad: tuple = ()
    output_path: str = "trajectory.csv"
    custom_hamiltonian: str | None = None

    @property
    def occupation(self) -> bool:
        return all(isinstance(v, int) for v in self.initial_state)


def _parse_float(value, key, line, positive=False, nonneg=False):
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not a number", line) from None
    if not math.isfinite(out):
        raise ConfigError(f"{key}: must be finite", line)
    if positive and out <= 0:
        raise ConfigError(f"{key}: must be > 0", line)
    if nonneg and out < 0:
        raise ConfigError(f"{key}: must be >= 0", line)
    return out


def _parse_int(value, key, line, minimum):
    try:
        out = int(value)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not an integer", line) from None
    if out < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}", line)
    return out


def _parse_state(value, line):
    if value.isdigit() and len(value) == 3:
        return tuple(int(ch) for ch in value), True
    if "," not in value and "j" not in value:
        raise ConfigError(f"initial_state: expected a 3-digit occupation string or an amplitude list, got {value!r}", line)
    try:
        amps = np.array([complex(tok.strip().replace(" ", "")) for tok in value.split(",")])
    except ValueError:
        raise ConfigError(f"initial_state: malformed amplitude list {value!r}", line) from None
    norm = np.linalg.norm(amps)
    if not np.isfinite(norm) or norm == 0:
        raise ConfigError("initial_state: amplitudes must be finite and not all zero", line)
    return tuple(amps / norm), False


def _parse_lindblad(value, line):
    jumps = []
    for entry in value.replace(";", ",").split(","):
        entry = entry.strip()
        if not entry:
            continue
        parts = [p.strip() for p in entry.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"lindblad: entry {entry!r} must be subsystem:kind:rate", line)
        subsystem, kind, rate = parts
        subsystem = subsystem.upper()
        if subsystem not in LABELS:
            raise ConfigError(f"lindblad: subsystem must be A, B or C, got {subsystem!r}", line)
        if kind not in JUMP_KINDS:
            raise ConfigError(f"lindblad: jump kind must be one of {JUMP_KINDS}, got {kind!r}", line)
        jumps.append((subsystem, kind, _parse_float(rate, "lindblad rate", line, nonneg=True)))
    return tuple(jumps)


def parse_config(text: str) -> ScenarioConfig:
    """Parse the ``key=value`` scenario format.

    Blank lines and ``#`` comments are ignored; unknown or repeated keys,
    malformed values and invariant violations raise :class:`ConfigError`
    carrying the offending line number.
    """
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        raw[key] = value
        lines[key] = lineno

    for key in ("coupling", "initial_state"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    kw = {}
    coupling = raw["coupling"].lower()
    if coupling not in COUPLINGS:
        raise ConfigError(f"coupling must be one of {COUPLINGS}, got {raw['coupling']!r}", lines["coupling"])
    kw["coupling"] = coupling
    state, occupation = _parse_state(raw["initial_state"], lines["initial_state"])
    kw["initial_state"] = state

    if "g" in raw:
        kw["g"] = _parse_float(raw["g"], "g", lines["g"], positive=True)
    if "t_max_gt" in raw:
        kw["t_max_gt"] = _parse_float(raw["t_max_gt"], "t_max_gt", lines["t_max_gt"], positive=True)
    if "n_points" in raw:
        kw["n_points"] = _parse_int(raw["n_points"], "n_points", lines["n_points"], 2)
    if "field_dim" in raw and raw["field_dim"].lower() != "auto":
        kw["field_dim"] = _parse_int(raw["field_dim"], "field_dim", lines["field_dim"], 2)
    if "measures" in raw:
        try:
            kinds = [MeasureKind.parse(tok) for tok in raw["measures"].split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(str(exc), lines["measures"]) from None
        if not kinds:
            raise ConfigError("measures: at least one measure is required", lines["measures"])
        kw["measures"] = tuple(dict.fromkeys(kinds))
    if "lindblad" in raw:
        kw["lindblad"] = _parse_lindblad(raw["lindblad"], lines["lindblad"])
    if "output_path" in raw:
        if not raw["output_path"]:
            raise ConfigError("output_path: must not be empty", lines["output_path"])
        kw["output_path"] = raw["output_path"]
    if "custom_hamiltonian" in raw:
        kw["custom_hamiltonian"] = raw["custom_hamiltonian"]

    if coupling == "custom" and "custom_hamiltonian" not in kw:
        raise ConfigError("coupling=custom requires custom_hamiltonian=<file.npz>", lines["coupling"])
    if coupling != "custom" and "custom_hamiltonian" in kw:
        raise ConfigError("custom_hamiltonian is only valid with coupling=custom", lines["custom_hamiltonian"])

    if occupation and coupling in ("jc", "dipole"):
        if state[2] >= 2:
            raise ConfigError(f"mediator occupation {state[2]} must be < d_C = 2", lines["initial_state"])
    if occupation and "field_dim" in kw and max(state[:2]) >= kw["field_dim"]:
        raise ConfigError(f"field occupation exceeds field_dim={kw['field_dim']}", lines["initial_state"])
    return ScenarioConfig(**kw)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _load_custom(config: ScenarioConfig, base_dir: Path):
    path = Path(config.custom_hamiltonian)
    if not path.is_absolute():
        path = base_dir / path
    try:
        with np.load(path) as data:
            h_ac = np.asarray(data["h_ac"], dtype=complex)
            h_bc = np.asarray(data["h_bc"], dtype=complex)
    except (OSError, KeyError) as exc:
        raise ConfigError(f"cannot read custom Hamiltonian {path}: {exc}") from None
    return h_ac, h_bc


def _custom_dims(config, h_ac, h_bc):
    fd = config.field_dim
    if fd is None:
        raise ConfigError("coupling=custom needs an explicit field_dim")
    if h_ac.shape != h_bc.shape or h_ac.shape[0] % fd:
        raise ConfigError(f"custom Hamiltonian shapes {h_ac.shape}, {h_bc.shape} do not fit field_dim={fd}")
    return fd, h_ac.shape[0] // fd


def _resolve_layout(config: ScenarioConfig, d_c: int) -> SystemLayout:
    state = config.initial_state
    if config.occupation:
        if state[2] >= d_c:
            raise ConfigError(f"mediator occupation {state[2]} must be < d_C = {d_c}")
        occ = state
    else:
        fd = math.isqrt(len(state) // d_c)
        if fd * fd * d_c != len(state):
            raise ConfigError(f"{len(state)} amplitudes do not form a field^2 x {d_c} space")
        if config.field_dim is not None and config.field_dim != fd:
            raise ConfigError(f"amplitude list implies field_dim={fd}, config says {config.field_dim}")
        return SystemLayout(fd, fd, d_c)

    if config.coupling == "jc":
        exact = jc_field_dim(occ)
        fd = config.field_dim if config.field_dim is not None else exact
        if fd < exact:
            raise TruncationError(f"field_dim={fd} cannot hold total excitation {sum(occ)}; need >= {exact}")
    elif config.coupling == "dipole":
        if config.field_dim is None:
            fd = dipole_field_dim(config.t_max_gt, occ)
        else:
            fd = config.field_dim
            check_dipole_truncation(fd, config.t_max_gt, occ)
    else:
        fd = config.field_dim
    if max(occ[:2]) >= fd:
        raise ConfigError(f"field occupation exceeds field_dim={fd}")
    return SystemLayout(fd, fd, d_c)


def _initial_state(config: ScenarioConfig, layout: SystemLayout) -> StateVector:
    if config.occupation:
        return layout.basis_state(*config.initial_state)
    state = StateVector.normalized(config.initial_state, layout.dims)
    if config.coupling == "jc" and config.field_dim is None:
        # amplitude-list JC runs: the implied truncation must hold the largest excitation
        amps = state.amplitudes.reshape(layout.dims)
        occ = np.add.outer(np.add.outer(np.arange(layout.dim_a), np.arange(layout.dim_b)), np.arange(layout.dim_c))
        top = int(occ[np.abs(amps) > 0].max())
        if top + 1 > layout.dim_a:
            raise TruncationError(f"field_dim={layout.dim_a} cannot hold total excitation {top}")
    return state


def _jump_operator(layout, subsystem, kind, rate):
    d = layout.dims[LABELS.index(subsystem)]
    if subsystem == "C" and d == 2:
        sp, sm = qubit_ladder()
        lower, number = sm, sp @ sm
    else:
        lower = bosonic_annihilation(d)
        number = lower.conj().T @ lower
    op = lower if kind == "lowering" else number
    return math.sqrt(rate) * op, subsystem


def build_hamiltonian(config: ScenarioConfig, base_dir: Path | str = "."):
    """Return ``(layout, spec)`` for the configured coupling."""
    base_dir = Path(base_dir)
    if config.coupling == "custom":
        h_ac, h_bc = _load_custom(config, base_dir)
        fd, d_c = _custom_dims(config, h_ac, h_bc)
        layout = _resolve_layout(config, d_c)
        return layout, custom_hamiltonian(layout, config.g * h_ac, config.g * h_bc, config.g)
    layout = _resolve_layout(config, 2)
    build = build_jc_hamiltonian if config.coupling == "jc" else build_dipole_hamiltonian
    return layout, build(layout, config.g)


def simulate_states(config: ScenarioConfig, base_dir: Path | str = "."):
    """Run the configured dynamics; returns ``(layout, grid, states)``.

    States are :class:`StateVector` for closed runs and
    :class:`DensityOperator` when Lindblad terms are configured.
    """
    layout, spec = build_hamiltonian(config, base_dir)
    psi0 = _initial_state(config, layout)
    grid = TimeGrid(config.t_max_gt, config.n_points)
    if config.lindblad:
        jumps = tuple(_jump_operator(layout, *entry) for entry in config.lindblad)
        states = lindblad_evolve(psi0.density(), LindbladSpec(spec, jumps), grid)
    else:
        states = unitary_trajectory(psi0, spec, grid.physical_times(config.g))
    return layout, grid, states


def simulate(config: ScenarioConfig, base_dir: Path | str = ".") -> CorrelationTrajectory:
    """Run the configured dynamics and evaluate the requested measures."""
    layout, grid, states = simulate_states(config, base_dir)
    return evaluate_trajectory(states, layout, config.measures, times=grid.times)


def fmt(value: float) -> str:
    """Fixed 12-significant-digit decimal formatting used in all output."""
    return f"{float(value):.12g}"


def trajectory_csv(traj: CorrelationTrajectory) -> str:
    buf = io.StringIO(newline="")
    buf.write(CSV_HEADER + "\n")
    kinds = list(traj.values)
    for i, t in enumerate(traj.times):
        for kind in kinds:
            value = traj.values[kind][i]
            bound = traj.bound[kind]
            flag = "1" if value > bound + 1e-9 else "0"
            buf.write(f"{fmt(t)},{kind.value},{fmt(value)},{fmt(bound)},{flag}\n")
    return buf.getvalue()


def write_csv(traj: CorrelationTrajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trajectory_csv(traj))


def read_csv(path) -> list[tuple[float, str, float, float, bool]]:
    """Rows of an emitted trajectory file as ``(gt, measure, value, bound, violated)``."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            gt, measure, value, bound, flag = line.rstrip("\n").split(",")
            rows.append((float(gt), measure, float(value), float(bound), flag == "1"))
    return rows


def summary_lines(traj: CorrelationTrajectory) -> list[str]:
    out = []
    for kind in traj.values:
        flag, first = traj.violated[kind]
        first_txt = fmt(first) if flag else "none"
        out.append(
            f"{kind.value}: bound={fmt(traj.bound[kind])} max={fmt(traj.max_value(kind))} "
            f"violated={'yes' if flag else 'no'} first_violation_gt={first_txt}"
        )
    out.extend(f"note: {n}" for n in traj.notes)
    return out


def run_scenario(config: ScenarioConfig, base_dir: Path | str = ".", out=None) -> CorrelationTrajectory:
    """Simulate, write the CSV to ``config.output_path`` and print the summary.

    A relative ``output_path`` is resolved against ``base_dir`` (the config
    file's directory when driven from the command line).
    """
    traj = simulate(config, base_dir)
    path = Path(config.output_path)
    if not path.is_absolute():
        path = Path(base_dir) / path
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    write_csv(traj, path)
    for line in summary_lines(traj):
        print(line, file=out)
    return traj
