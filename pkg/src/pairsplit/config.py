"""Run configuration: YAML <-> dataclasses, validation.

A run file holds a scenario name plus the blocks that scenario needs::

    scenario: hom
    output_dir: out/hom
    source: {length_m: 2.0e-3, bandwidth_m: 60.0e-9, target_visibility: 0.89, ...}
    grids: {detuning_points: 4096, delay_span_s: 1.0e-12, delay_points: 801, ...}
    spectra: {kind: file, path: "package:splitting_L1080um.csv"}
    hom: {window_s: 3.0e-14, polarizers: false}

Parsing is strict: unknown keys and wrong types are errors that name the
offending field. Value constraints are checked by :func:`validate`, which
returns every violation at once.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass
from pathlib import Path

import yaml

SCENARIOS = ("splitting", "sweep", "source", "hom", "fig3", "counts")
SPECTRA_KINDS = ("ideal", "file", "model")
PACKAGE_PREFIX = "package:"

# blocks each scenario reads
REQUIRED_BLOCKS = {
    "splitting": ("stack", "coupler", "grids"),
    "sweep": ("stack", "sweep"),
    "source": ("source", "grids"),
    "hom": ("source", "grids", "spectra", "hom"),
    "fig3": ("source", "grids", "spectra"),
    "counts": ("counts",),
}


class ConfigError(ValueError):
    """Malformed configuration (YAML syntax, unknown key or wrong type)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class StackBlock:
    preset: str | None = "paper"
    path: str | None = None
    etch_depth_m: float | None = None


@dataclass(frozen=True)
class CouplerBlock:
    width_m: float = 1.134e-6
    gap_m: float = 1.286e-6
    length_m: float = 1080e-6
    gamma: float = 0.8
    etch_depth_m: float | None = None
    method: str = "expansion"


@dataclass(frozen=True)
class SourceBlock:
    length_m: float = 2e-3
    bandwidth_m: float | None = 60e-9
    bandwidth_definition: str = "e2"
    dk1_s_per_m: float | None = None
    gvd_s2_per_m: float = 0.0
    delta_rad_per_m: float | None = None
    target_visibility: float | None = None
    pump_wavelength_m: float | None = 762.5e-9
    guide_width_m: float | None = None
    spectral_phase: bool = True


@dataclass(frozen=True)
class GridBlock:
    wavelength_start_m: float = 1300e-9
    wavelength_stop_m: float = 1750e-9
    wavelength_points: int = 226
    detuning_points: int = 4096
    delay_span_s: float = 1e-12
    delay_points: int = 801


@dataclass(frozen=True)
class SpectraBlock:
    kind: str = "file"
    path: str | None = PACKAGE_PREFIX + "splitting_L1080um.csv"


@dataclass(frozen=True)
class SweepBlock:
    wavelength_m: float = 1525e-9
    width_range_m: tuple[float, ...] = (0.8e-6, 1.6e-6)
    gap_range_m: tuple[float, ...] = (0.8e-6, 2.0e-6)
    band_m: float = 60e-9
    n_width: int = 50
    n_gap: int = 50
    band_points: int = 7
    ratio_tolerance: float = 0.01
    method: str = "expansion"


@dataclass(frozen=True)
class HomBlock:
    window_s: float = 30e-15
    polarizers: bool = False
    filter_width_m: float | None = None
    filter_center_m: float | None = None


@dataclass(frozen=True)
class CountsBlock:
    eta: float = 0.117
    eta_det: float = 0.85
    alpha_te_per_m: float = 90.0
    alpha_tm_per_m: float = 150.0
    length_m: float = 7e-3
    window_s: float = 1e-9
    pair_rate_per_mw: float = 1.2e7
    pump_mw: tuple[float, ...] = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)


BLOCKS = {
    "stack": StackBlock,
    "coupler": CouplerBlock,
    "source": SourceBlock,
    "grids": GridBlock,
    "spectra": SpectraBlock,
    "sweep": SweepBlock,
    "hom": HomBlock,
    "counts": CountsBlock,
}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    output_dir: str = "out"
    seed: int = 0
    stack: StackBlock | None = None
    coupler: CouplerBlock | None = None
    source: SourceBlock | None = None
    grids: GridBlock | None = None
    spectra: SpectraBlock | None = None
    sweep: SweepBlock | None = None
    hom: HomBlock | None = None
    counts: CountsBlock | None = None

    def to_mapping(self) -> dict:
        out = {"scenario": self.scenario, "output_dir": self.output_dir, "seed": self.seed}
        for name in BLOCKS:
            block = getattr(self, name)
            if block is not None:
                out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(block).items()}
        return out

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=False)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in kwargs.items() if v is not None})


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _coerce(value, hint, where: str):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union or (origin is not None and type(None) in args and len(args) == 2):
        if value is None:
            return None
        hint = next(a for a in args if a is not type(None))
        origin, args = typing.get_origin(hint), typing.get_args(hint)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return tuple(_coerce(v, args[0], f"{where}[{i}]") for i, v in enumerate(value))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise TypeError(f"unsupported field type {hint!r}")


def _build(cls, raw, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(map(str, unknown))}")
    return cls(**{k: _coerce(v, hints[k], f"{where}.{k}") for k, v in raw.items()})


def from_mapping(raw) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    if "scenario" not in raw:
        raise ConfigError("scenario: required field missing")
    top = {k: raw[k] for k in ("scenario", "output_dir", "seed") if k in raw}
    kwargs = {k: _coerce(v, typing.get_type_hints(RunConfig)[k], k) for k, v in top.items()}
    for name, cls in BLOCKS.items():
        if name in raw:
            kwargs[name] = _build(cls, raw[name] if raw[name] is not None else {}, name)
    unknown = sorted(set(raw) - set(BLOCKS) - {"scenario", "output_dir", "seed"})
    if unknown:
        raise ConfigError(f"top level: unknown block(s) {', '.join(map(str, unknown))}")
    return RunConfig(**kwargs)


def loads(text: str) -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ConfigError(f"YAML syntax error: {problem}", mark.line + 1, mark.column + 1) from exc
        raise ConfigError(f"YAML syntax error: {problem}") from exc
    return from_mapping(raw)


def load(path: str | Path) -> RunConfig:
    return loads(Path(path).read_text())


def preset(name: str = "paper_defaults") -> RunConfig:
    """A shipped configuration preset (scenario ``hom``)."""
    from importlib import resources

    return loads((resources.files("pairsplit") / "data" / f"{name}.yaml").read_text())


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _positive(out, where, value):
    if value is not None and not value > 0:
        out.append(f"{where}: must be > 0 (got {value})")


def _unit(out, where, value):
    if value is not None and not 0 <= value <= 1:
        out.append(f"{where}: must lie in [0, 1] (got {value})")


def _check_stack(b: StackBlock, out):
    if (b.preset is None) == (b.path is None):
        out.append(f"stack: exactly one of preset/path must be set (got preset={b.preset!r}, path={b.path!r})")
    if b.preset is not None and b.preset != "paper":
        out.append(f"stack.preset: must be 'paper' (got {b.preset!r})")
    if b.etch_depth_m is not None and not b.etch_depth_m >= 0:
        out.append(f"stack.etch_depth_m: must be >= 0 (got {b.etch_depth_m})")


def _check_coupler(b: CouplerBlock, out):
    for name in ("width_m", "gap_m", "length_m"):
        _positive(out, f"coupler.{name}", getattr(b, name))
    if not 0 < b.gamma <= 1.5:
        out.append(f"coupler.gamma: must satisfy 0 < gamma <= 1.5 (got {b.gamma})")
    if b.etch_depth_m is not None and not b.etch_depth_m >= 0:
        out.append(f"coupler.etch_depth_m: must be >= 0 (got {b.etch_depth_m})")
    if b.method not in ("expansion", "eim"):
        out.append(f"coupler.method: must be 'expansion' or 'eim' (got {b.method!r})")


def _check_source(b: SourceBlock, out):
    _positive(out, "source.length_m", b.length_m)
    if (b.bandwidth_m is None) == (b.dk1_s_per_m is None):
        out.append("source: exactly one of bandwidth_m/dk1_s_per_m must be set")
    _positive(out, "source.bandwidth_m", b.bandwidth_m)
    if b.dk1_s_per_m is not None and b.dk1_s_per_m == 0:
        out.append("source.dk1_s_per_m: must be non-zero (got 0)")
    if b.bandwidth_definition not in ("e2", "fwhm"):
        out.append(f"source.bandwidth_definition: must be 'e2' or 'fwhm' (got {b.bandwidth_definition!r})")
    if b.delta_rad_per_m is not None and b.target_visibility is not None:
        out.append("source: set at most one of delta_rad_per_m/target_visibility")
    if b.target_visibility is not None and not 0.5 < b.target_visibility <= 1:
        out.append(f"source.target_visibility: must lie in (0.5, 1] (got {b.target_visibility})")
    if (b.pump_wavelength_m is None) == (b.guide_width_m is None):
        out.append("source: exactly one of pump_wavelength_m/guide_width_m must be set")
    _positive(out, "source.pump_wavelength_m", b.pump_wavelength_m)
    if b.guide_width_m is not None and not 1e-6 <= b.guide_width_m <= 6e-6:
        out.append(f"source.guide_width_m: must lie in [1e-6, 6e-6] m (got {b.guide_width_m})")


def _check_grids(b: GridBlock, out):
    _positive(out, "grids.wavelength_start_m", b.wavelength_start_m)
    if not b.wavelength_stop_m > b.wavelength_start_m:
        out.append(f"grids.wavelength_stop_m: must exceed wavelength_start_m (got {b.wavelength_stop_m})")
    if b.wavelength_points < 2:
        out.append(f"grids.wavelength_points: must be >= 2 (got {b.wavelength_points})")
    if b.detuning_points < 4 or b.detuning_points % 2:
        out.append(f"grids.detuning_points: must be even and >= 4 (got {b.detuning_points})")
    _positive(out, "grids.delay_span_s", b.delay_span_s)
    if b.delay_points < 3 or b.delay_points % 2 == 0:
        out.append(f"grids.delay_points: must be odd and >= 3 (got {b.delay_points})")


def _check_spectra(b: SpectraBlock, out):
    if b.kind not in SPECTRA_KINDS:
        out.append(f"spectra.kind: must be one of {', '.join(SPECTRA_KINDS)} (got {b.kind!r})")
    if b.kind == "file" and not b.path:
        out.append("spectra.path: required when kind is 'file'")


def _check_sweep(b: SweepBlock, out):
    _positive(out, "sweep.wavelength_m", b.wavelength_m)
    _positive(out, "sweep.band_m", b.band_m)
    for name in ("width_range_m", "gap_range_m"):
        r = getattr(b, name)
        if len(r) != 2 or not 0 < r[0] < r[1]:
            out.append(f"sweep.{name}: must be [lo, hi] with 0 < lo < hi (got {list(r)})")
    for name in ("n_width", "n_gap", "band_points"):
        if getattr(b, name) < 1:
            out.append(f"sweep.{name}: must be >= 1 (got {getattr(b, name)})")
    _positive(out, "sweep.ratio_tolerance", b.ratio_tolerance)
    if b.method not in ("expansion", "eim"):
        out.append(f"sweep.method: must be 'expansion' or 'eim' (got {b.method!r})")


def _check_hom(b: HomBlock, out):
    if not b.window_s >= 0:
        out.append(f"hom.window_s: must be >= 0 (got {b.window_s})")
    _positive(out, "hom.filter_width_m", b.filter_width_m)
    _positive(out, "hom.filter_center_m", b.filter_center_m)


def _check_counts(b: CountsBlock, out):
    _unit(out, "counts.eta", b.eta)
    _unit(out, "counts.eta_det", b.eta_det)
    for name in ("alpha_te_per_m", "alpha_tm_per_m", "length_m", "pair_rate_per_mw"):
        if not getattr(b, name) >= 0:
            out.append(f"counts.{name}: must be >= 0 (got {getattr(b, name)})")
    _positive(out, "counts.window_s", b.window_s)
    if not b.pump_mw or any(not p >= 0 for p in b.pump_mw):
        out.append(f"counts.pump_mw: must be a non-empty list of powers >= 0 (got {list(b.pump_mw)})")


_CHECKS = {
    "stack": _check_stack,
    "coupler": _check_coupler,
    "source": _check_source,
    "grids": _check_grids,
    "spectra": _check_spectra,
    "sweep": _check_sweep,
    "hom": _check_hom,
    "counts": _check_counts,
}


def validate(config: RunConfig) -> list[str]:
    """All violations of ``config``; empty iff a run would start."""
    out: list[str] = []
    if config.scenario not in SCENARIOS:
        out.append(f"scenario: must be one of {', '.join(SCENARIOS)} (got {config.scenario!r})")
        return out
    if not config.output_dir:
        out.append("output_dir: must be a non-empty path")
    needed = set(REQUIRED_BLOCKS[config.scenario])
    if config.scenario in ("hom", "fig3") and config.spectra is not None and config.spectra.kind == "model":
        needed |= {"stack", "coupler"}
    for name in BLOCKS:
        block = getattr(config, name)
        if block is None:
            if name in needed:
                out.append(f"{name}: block required by scenario '{config.scenario}' is missing")
            continue
        _CHECKS[name](block, out)
    return out
