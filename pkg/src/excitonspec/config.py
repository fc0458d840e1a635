"""Job configuration: a validated TOML schema for the simulation pipeline.

A job file is a TOML document with a handful of top-level keys and three
optional tables::

    basis = "full"              # or "frenkel"
    engine = "exact"            # or "vqa"
    tcf_method = "direct"       # or "small_lambda"
    lambda = 0.1                # small-lambda displacement
    tau_fs = 50.0               # Lorentzian damping time
    rotating_frame_ev = 4.5     # optional interaction-picture shift
    output_dir = "out"

    [grid]
    t_max_fs = 100.0
    record_every_fs = 0.5
    substep_fs = 0.005
    omega_min_ev = 2.0
    omega_max_ev = 7.0
    omega_points = 2000

    [ensemble]
    n_trajectories = 1
    seed = 0

    [trajectory]                # exactly one source
    path = "trajectory.csv"     # ... either a file,
    [trajectory.ou]             # ... or a synthetic bath model
    n_chromophores = 4
    mean_energy_ev = 4.5
    energy_sigma_ev = 0.05
    correlation_time_fs = 50.0
    dt_fs = 0.5
    n_frames = 201
    spacing_ang = 6.0           # optional geometry/dipole overrides
    mu01 = [1.0, 0.0, 0.0]
    mu00 = [0.0, 0.0, 0.0]
    mu11 = [0.0, 0.0, 0.0]

Unknown keys at any level are rejected with the full key path, so typos
fail loudly instead of silently falling back to defaults.  ``parse_config``
fills defaults and returns an immutable :class:`JobConfig`; ``format_config``
renders one back to TOML such that re-parsing yields an equal config (the
"effective config" echo that the CLI drops into every output directory).
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from .exceptions import ConfigError
from .trajectory import OUConfig

__all__ = [
    "JobConfig",
    "parse_config",
    "parse_config_text",
    "format_config",
    "apply_overrides",
]

BASES = ("full", "frenkel")
ENGINES = ("exact", "vqa")
TCF_METHODS = ("direct", "small_lambda")


@dataclass(frozen=True, eq=False)
class JobConfig:
    """Effective (defaults-filled) description of one simulation job."""

    basis: str
    source_path: str | None = None
    source_ou: OUConfig | None = None
    engine: str = "exact"
    tcf_method: str = "direct"
    lambda_: float = 0.1
    tau_fs: float = 50.0
    rotating_frame_ev: float | None = None
    output_dir: str = "out"
    t_max_fs: float = 100.0
    record_every_fs: float = 0.5
    substep_fs: float = 0.005
    omega_min_ev: float = 2.0
    omega_max_ev: float = 7.0
    omega_points: int = 2000
    n_trajectories: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.basis not in BASES:
            raise ConfigError(f"basis must be one of {BASES}, got {self.basis!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.tcf_method not in TCF_METHODS:
            raise ConfigError(
                f"tcf_method must be one of {TCF_METHODS}, got {self.tcf_method!r}"
            )
        if (self.source_path is None) == (self.source_ou is None):
            raise ConfigError(
                "trajectory source must set exactly one of 'path' and 'ou'"
            )
        for name in ("lambda_", "tau_fs", "t_max_fs", "record_every_fs", "substep_fs"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(
                    f"{name.rstrip('_')} must be positive, got {value}"
                )
        if self.rotating_frame_ev is not None and not np.isfinite(
            self.rotating_frame_ev
        ):
            raise ConfigError("rotating_frame_ev must be finite")
        if self.record_every_fs > self.t_max_fs:
            raise ConfigError("record_every_fs must not exceed t_max_fs")
        if self.omega_max_ev <= self.omega_min_ev:
            raise ConfigError("omega_max_ev must exceed omega_min_ev")
        if self.omega_points < 2:
            raise ConfigError("omega_points must be at least 2")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.n_trajectories > 1 and self.source_ou is None:
            raise ConfigError(
                "n_trajectories > 1 requires an 'ou' trajectory source"
            )

    def omega_grid(self) -> np.ndarray:
        return np.linspace(self.omega_min_ev, self.omega_max_ev, self.omega_points)

    def __eq__(self, other):
        if not isinstance(other, JobConfig):
            return NotImplemented
        for field in fields(self):
            if field.name == "source_ou":
                continue
            if getattr(self, field.name) != getattr(other, field.name):
                return False
        return _ou_equal(self.source_ou, other.source_ou)


def _ou_equal(a: OUConfig | None, b: OUConfig | None) -> bool:
    if a is None or b is None:
        return a is b
    scalars = ("energy_sigma_ev", "correlation_time_fs", "dt_fs", "n_frames")
    if any(getattr(a, name) != getattr(b, name) for name in scalars):
        return False
    arrays = ("mean_energy_ev", "mu00", "mu11", "mu01", "com")
    return all(
        np.array_equal(getattr(a, name), getattr(b, name)) for name in arrays
    )


# --- schema walking ---------------------------------------------------------

def _reject_unknown(table: dict, known: tuple[str, ...], prefix: str) -> None:
    for key in table:
        if key not in known:
            path = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"unknown key: {path}")


def _typed(table: dict, key: str, kinds, prefix: str, default=None):
    """Fetch ``key`` coerced to the given type(s), or the default."""
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool):
        path = f"{prefix}.{key}" if prefix else key
        wanted = kinds.__name__ if isinstance(kinds, type) else "number"
        raise ConfigError(f"{path} must be a {wanted}, got {value!r}")
    if kinds is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kinds):
        path = f"{prefix}.{key}" if prefix else key
        wanted = kinds.__name__ if isinstance(kinds, type) else "number"
        raise ConfigError(f"{path} must be a {wanted}, got {value!r}")
    return value


def _required(table: dict, key: str, kinds, prefix: str):
    if key not in table:
        path = f"{prefix}.{key}" if prefix else key
        raise ConfigError(f"missing required key: {path}")
    return _typed(table, key, kinds, prefix)


def _vector3(table: dict, key: str, prefix: str, default):
    if key not in table:
        return default
    value = table[key]
    ok = isinstance(value, list) and len(value) == 3 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    )
    if not ok:
        raise ConfigError(f"{prefix}.{key} must be a list of three numbers")
    return tuple(float(x) for x in value)


_TOP_KEYS = (
    "basis",
    "engine",
    "tcf_method",
    "lambda",
    "tau_fs",
    "rotating_frame_ev",
    "output_dir",
    "grid",
    "ensemble",
    "trajectory",
)
_GRID_KEYS = (
    "t_max_fs",
    "record_every_fs",
    "substep_fs",
    "omega_min_ev",
    "omega_max_ev",
    "omega_points",
)
_ENSEMBLE_KEYS = ("n_trajectories", "seed")
_OU_KEYS = (
    "n_chromophores",
    "mean_energy_ev",
    "energy_sigma_ev",
    "correlation_time_fs",
    "dt_fs",
    "n_frames",
    "spacing_ang",
    "mu01",
    "mu00",
    "mu11",
)


def _parse_ou(table: dict) -> OUConfig:
    prefix = "trajectory.ou"
    _reject_unknown(table, _OU_KEYS, prefix)
    return OUConfig.line_aggregate(
        n_chromophores=_required(table, "n_chromophores", int, prefix),
        mean_energy_ev=_required(table, "mean_energy_ev", float, prefix),
        energy_sigma_ev=_required(table, "energy_sigma_ev", float, prefix),
        correlation_time_fs=_required(table, "correlation_time_fs", float, prefix),
        dt_fs=_required(table, "dt_fs", float, prefix),
        n_frames=_required(table, "n_frames", int, prefix),
        spacing_ang=_typed(table, "spacing_ang", float, prefix, 6.0),
        mu01=_vector3(table, "mu01", prefix, (1.0, 0.0, 0.0)),
        mu00=_vector3(table, "mu00", prefix, (0.0, 0.0, 0.0)),
        mu11=_vector3(table, "mu11", prefix, (0.0, 0.0, 0.0)),
    )


def parse_config_text(text: str) -> JobConfig:
    """Parse TOML text into a validated, defaults-filled :class:`JobConfig`."""
    try:
        raw = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    _reject_unknown(raw, _TOP_KEYS, "")

    grid = raw.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid must be a table")
    _reject_unknown(grid, _GRID_KEYS, "grid")

    ensemble = raw.get("ensemble", {})
    if not isinstance(ensemble, dict):
        raise ConfigError("ensemble must be a table")
    _reject_unknown(ensemble, _ENSEMBLE_KEYS, "ensemble")

    trajectory = raw.get("trajectory")
    if not isinstance(trajectory, dict):
        raise ConfigError("missing required table: trajectory")
    _reject_unknown(trajectory, ("path", "ou"), "trajectory")
    source_path = _typed(trajectory, "path", str, "trajectory")
    source_ou = None
    if "ou" in trajectory:
        if not isinstance(trajectory["ou"], dict):
            raise ConfigError("trajectory.ou must be a table")
        source_ou = _parse_ou(trajectory["ou"])

    tau_fs = _typed(raw, "tau_fs", float, "", 50.0)
    if tau_fs is not None and tau_fs <= 0:
        raise ConfigError(f"tau_fs must be positive, got {tau_fs}")
    lam = _typed(raw, "lambda", float, "", 0.1)
    if lam is not None and lam <= 0:
        raise ConfigError(f"lambda must be positive, got {lam}")

    defaults = JobConfig.__dataclass_fields__
    return JobConfig(
        basis=_required(raw, "basis", str, ""),
        source_path=source_path,
        source_ou=source_ou,
        engine=_typed(raw, "engine", str, "", defaults["engine"].default),
        tcf_method=_typed(
            raw, "tcf_method", str, "", defaults["tcf_method"].default
        ),
        lambda_=lam,
        tau_fs=tau_fs,
        rotating_frame_ev=_typed(raw, "rotating_frame_ev", float, ""),
        output_dir=_typed(
            raw, "output_dir", str, "", defaults["output_dir"].default
        ),
        t_max_fs=_typed(grid, "t_max_fs", float, "grid", 100.0),
        record_every_fs=_typed(grid, "record_every_fs", float, "grid", 0.5),
        substep_fs=_typed(grid, "substep_fs", float, "grid", 0.005),
        omega_min_ev=_typed(grid, "omega_min_ev", float, "grid", 2.0),
        omega_max_ev=_typed(grid, "omega_max_ev", float, "grid", 7.0),
        omega_points=_typed(grid, "omega_points", int, "grid", 2000),
        n_trajectories=_typed(ensemble, "n_trajectories", int, "ensemble", 1),
        seed=_typed(ensemble, "seed", int, "ensemble", 0),
    )


def parse_config(path) -> JobConfig:
    """Read and validate a TOML job file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


# --- echo -------------------------------------------------------------------

def _toml_value(value) -> str:
    if isinstance(value, bool):
        raise TypeError("no boolean keys in this schema")
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list, np.ndarray)):
        return "[" + ", ".join(_toml_value(float(x)) for x in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__}")


def format_config(cfg: JobConfig) -> str:
    """Render the effective config as TOML; re-parsing gives an equal config."""
    lines = [
        f"basis = {_toml_value(cfg.basis)}",
        f"engine = {_toml_value(cfg.engine)}",
        f"tcf_method = {_toml_value(cfg.tcf_method)}",
        f"lambda = {_toml_value(cfg.lambda_)}",
        f"tau_fs = {_toml_value(cfg.tau_fs)}",
    ]
    if cfg.rotating_frame_ev is not None:
        lines.append(f"rotating_frame_ev = {_toml_value(cfg.rotating_frame_ev)}")
    lines += [
        f"output_dir = {_toml_value(cfg.output_dir)}",
        "",
        "[grid]",
        f"t_max_fs = {_toml_value(cfg.t_max_fs)}",
        f"record_every_fs = {_toml_value(cfg.record_every_fs)}",
        f"substep_fs = {_toml_value(cfg.substep_fs)}",
        f"omega_min_ev = {_toml_value(cfg.omega_min_ev)}",
        f"omega_max_ev = {_toml_value(cfg.omega_max_ev)}",
        f"omega_points = {_toml_value(cfg.omega_points)}",
        "",
        "[ensemble]",
        f"n_trajectories = {_toml_value(cfg.n_trajectories)}",
        f"seed = {_toml_value(cfg.seed)}",
        "",
    ]
    if cfg.source_path is not None:
        lines += ["[trajectory]", f"path = {_toml_value(cfg.source_path)}"]
    else:
        ou = cfg.source_ou
        com = np.asarray(ou.com)
        spacing = float(com[1, 2] - com[0, 2]) if com.shape[0] > 1 else 6.0
        lines += [
            "[trajectory.ou]",
            f"n_chromophores = {ou.n_chromophores}",
            f"mean_energy_ev = {_toml_value(float(ou.mean_energy_ev[0]))}",
            f"energy_sigma_ev = {_toml_value(ou.energy_sigma_ev)}",
            f"correlation_time_fs = {_toml_value(ou.correlation_time_fs)}",
            f"dt_fs = {_toml_value(ou.dt_fs)}",
            f"n_frames = {_toml_value(ou.n_frames)}",
            f"spacing_ang = {_toml_value(spacing)}",
            f"mu01 = {_toml_value(ou.mu01[0])}",
            f"mu00 = {_toml_value(ou.mu00[0])}",
            f"mu11 = {_toml_value(ou.mu11[0])}",
        ]
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: JobConfig, **overrides) -> JobConfig:
    """Return a copy with non-None override values applied (CLI flags)."""
    updates = {key: value for key, value in overrides.items() if value is not None}
    return replace(cfg, **updates) if updates else cfg
