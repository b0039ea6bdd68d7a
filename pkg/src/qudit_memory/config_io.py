"""Experiment configuration, result tables and provenance.

A configuration file is JSON with the sections ``beam``, ``medium``,
``pulse``, ``grid``, ``tomography`` and ``output``. Missing keys take their
defaults, so an empty file is a valid configuration. Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from ._version import __version__
from .beam_optics import BeamSpec, Grid2D
from .eit_storage import EITParams, PulseSpec
from .exceptions import (
    ConfigError,
    ConfigParseError,
    ConfigValueError,
    ParameterError,
    UnknownKeyError,
)
from .validation import check_integer, check_nonnegative

OUTPUT_FORMATS = ("csv", "json-text", "binary")
OUTPUT_DIR_ENV = "QUDIT_MEMORY_OUTPUT_DIR"
SIG_DIGITS = 9


@dataclass(frozen=True)
class GridConfig:
    """Samples per side and extent (m) of the rendering grid; ``None`` extent sizes it to the beam."""

    samples_per_side: int = 256
    physical_extent: float | None = None

    def __post_init__(self):
        if self.physical_extent is None:
            # validate the sample count with a placeholder extent
            Grid2D(self.samples_per_side, 1.0)
        else:
            Grid2D(self.samples_per_side, self.physical_extent)

    def build(self, beam: BeamSpec, plane: str = "medium") -> Grid2D:
        from .beam_optics import render_grid

        if self.physical_extent is None:
            return render_grid(beam, plane, self.samples_per_side)
        return Grid2D(self.samples_per_side, self.physical_extent)


@dataclass(frozen=True)
class TomographyConfig:
    dimension: int = 25
    counts: int = 1_000_000
    seed: int = 0
    noise_floor: float = 0.0

    def __post_init__(self):
        check_integer(self.dimension, "dimension", 2, 64)
        check_integer(self.counts, "counts", 1)
        check_integer(self.seed, "seed", 0, 2**64 - 1)
        check_nonnegative(self.noise_floor, "noise_floor")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    format: str = "csv"

    def __post_init__(self):
        if not isinstance(self.directory, str) or not self.directory:
            raise ParameterError("directory must be a nonempty string")
        if self.format not in OUTPUT_FORMATS:
            raise ParameterError(f"format must be one of {OUTPUT_FORMATS}, got {self.format!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    beam: BeamSpec = field(default_factory=BeamSpec)
    medium: EITParams = field(default_factory=EITParams)
    pulse: PulseSpec = field(default_factory=PulseSpec)
    grid: GridConfig = field(default_factory=GridConfig)
    tomography: TomographyConfig = field(default_factory=TomographyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def replace(self, **sections) -> "ExperimentConfig":
        return dataclasses.replace(self, **sections)


_SECTION_TYPES = {
    "beam": BeamSpec,
    "medium": EITParams,
    "pulse": PulseSpec,
    "grid": GridConfig,
    "tomography": TomographyConfig,
    "output": OutputConfig,
}


def _build_section(name: str, values: Any):
    cls = _SECTION_TYPES[name]
    if not isinstance(values, dict):
        raise ConfigValueError(f"{name} must be an object, got {type(values).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UnknownKeyError(f"unknown key(s) in {name}: {', '.join(name + '.' + k for k in unknown)}")
    try:
        return cls(**values)
    except ParameterError as exc:
        msg = str(exc)
        key = msg.split(" ", 1)[0]
        raise ConfigValueError(f"{name}.{msg}" if key in known else f"{name}: {msg}") from None
    except TypeError as exc:
        raise ConfigValueError(f"{name}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigValueError("configuration must be a JSON object")
    unknown = sorted(set(data) - set(_SECTION_TYPES))
    if unknown:
        raise UnknownKeyError(f"unknown section(s): {', '.join(unknown)}")
    return ExperimentConfig(**{k: _build_section(k, v) for k, v in data.items()})


def config_to_dict(config: ExperimentConfig) -> dict:
    return {name: dataclasses.asdict(getattr(config, name)) for name in _SECTION_TYPES}


def load_config(path) -> ExperimentConfig:
    """Read and validate a configuration file; an empty file gives the defaults."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if not text.strip():
        return ExperimentConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def dump_config(config: ExperimentConfig, path=None) -> str:
    """Canonical JSON text for ``config``; written to ``path`` when given."""
    text = json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n"
    if path is not None:
        _write_text(Path(path), text)
    return text


def config_hash(config: ExperimentConfig) -> str:
    canon = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def output_directory(config: ExperimentConfig, override: str | None = None) -> Path:
    """``override``, else the environment variable, else the configured directory."""
    return Path(override or os.environ.get(OUTPUT_DIR_ENV) or config.output.directory)


# ---------------------------------------------------------------- tables

# Output table schemas by name: ordered column names.
TABLE_SCHEMAS: dict[str, tuple[str, ...]] = {
    "figS2": ("kr", "ell", "d_eff", "eta"),
    "figS3a": ("k_r", "ell", "od", "eta"),
    "figS3b": ("k_r", "ell", "od", "eta"),
    "efficiency_map": ("k_r", "ell", "od", "eta"),
    "fig3b": ("d", "eta_in", "channel_efficiency", "fidelity"),
    "fig3c": ("kappa1", "fidelity"),
    "fig3d": ("kappa1", "kappa2", "fidelity"),
    "fig4": ("quantity", "value", "model", "notes"),
    "fig6": ("quantity", "value", "model", "notes"),
    "fidelity_report": ("quantity", "value", "model", "notes"),
    "spectrum": ("detuning_rad_s", "transmission"),
    "efficiency": ("d_eff", "eta"),
    "waveform": ("time_s", "input", "output"),
    "beam_width": ("ell", "omega_0", "r_r", "width"),
    "fringe": ("phase_rad", "rate"),
    "generators": ("index", "row", "col", "re", "im"),
    "density_matrix": ("row", "col", "re", "im"),
    "similarity": ("quantity", "value"),
    "contrast": ("ell", "contrast"),
}


def format_value(v) -> str:
    """Integers verbatim, floats at 9 significant digits, strings unchanged."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        if hasattr(v, "dtype") and v.dtype.kind in "iu":
            return str(int(v))
        s = format(float(v), f".{SIG_DIGITS}g")
        return "0" if s == "-0" else s
    return str(v)


def _csv_field(s: str) -> str:
    if any(c in s for c in ',"\n\r'):
        return '"' + s.replace('"', '""') + '"'
    return s


def render_table(rows: Iterable[Sequence], columns: Sequence[str]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        row = tuple(row)
        if len(row) != len(columns):
            raise ParameterError(f"row {row!r} does not match columns {tuple(columns)}")
        lines.append(",".join(_csv_field(format_value(v)) for v in row))
    return "\n".join(lines) + "\n"


def provenance_block(config: ExperimentConfig | None, seed: int | None, table: str, extra: dict | None = None) -> str:
    """``key=value`` lines in a fixed order."""
    items = [
        ("table", table),
        ("config_sha256", config_hash(config) if config is not None else "none"),
        ("seed", "none" if seed is None else str(seed)),
        ("version", __version__),
    ]
    for k in sorted(extra or {}):
        items.append((k, format_value(extra[k])))
    return "".join(f"{k}={v}\n" for k, v in items)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def emit_table(
    rows: Iterable[Sequence],
    schema: str | Sequence[str],
    path,
    config: ExperimentConfig | None = None,
    seed: int | None = None,
    extra: dict | None = None,
) -> Path:
    """Write a CSV table and its ``.provenance`` companion; return the CSV path.

    ``schema`` is a key of :data:`TABLE_SCHEMAS` or an explicit column list.
    """
    if isinstance(schema, str):
        if schema not in TABLE_SCHEMAS:
            raise ParameterError(f"unknown table schema {schema!r}")
        name, columns = schema, TABLE_SCHEMAS[schema]
    else:
        columns = tuple(schema)
        name = "custom"
    path = Path(path)
    _write_text(path, render_table(rows, columns))
    _write_text(path.with_suffix(path.suffix + ".provenance"), provenance_block(config, seed, name, extra))
    return path


def emit_json(data: Any, path) -> Path:
    path = Path(path)
    _write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
