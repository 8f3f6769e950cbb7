"""Scenario runner: configuration in, CSV curves plus one summary file out."""

from __future__ import annotations

import logging
from dataclasses import replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import config as cfg
from .counting import EfficiencyBudget, count_rates, four_config_probabilities, loglog_slope
from .coupler import CouplerGeometry, SplittingSpectrum, design_sweep, splitting_spectrum
from .hom import (
    SplittingFunctions,
    coincidence_probability,
    delay_grid,
    franson_period,
    perfect_splitting,
    with_polarizers,
)
from .modes import LayerStack, paper_stack
from .source import SourceParams, apply_filter, calibrate_asymmetry, generate_state, pm_pump_wavelength

log = logging.getLogger(__name__)

SUMMARY_NAME = "summary.yaml"


class ValidationFailed(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid configuration:\n  " + "\n  ".join(violations))


class ScenarioError(RuntimeError):
    """A module failed while running a scenario."""


def _resolve(path: str, base_dir: Path) -> Path:
    if path.startswith(cfg.PACKAGE_PREFIX):
        return Path(str(resources.files("pairsplit") / "data" / path[len(cfg.PACKAGE_PREFIX) :]))
    p = Path(path)
    return p if p.is_absolute() else base_dir / p


def build_stack(block: cfg.StackBlock, base_dir: Path) -> LayerStack:
    stack = paper_stack() if block.preset == "paper" else LayerStack.from_file(_resolve(block.path, base_dir))
    return stack if block.etch_depth_m is None else stack.with_etch_depth(block.etch_depth_m)


def build_geometry(block: cfg.CouplerBlock) -> CouplerGeometry:
    return CouplerGeometry(block.width_m, block.gap_m, block.length_m, block.etch_depth_m, block.gamma)


def pump_wavelength(block: cfg.SourceBlock) -> float:
    if block.pump_wavelength_m is not None:
        return block.pump_wavelength_m
    return pm_pump_wavelength(block.guide_width_m)


@lru_cache(maxsize=16)
def _calibrated_delta(target: float, params: SourceParams, pump: float, points: int) -> float:
    return calibrate_asymmetry(target, params, pump, points)


def build_source(block: cfg.SourceBlock, points: int) -> tuple[SourceParams, float]:
    pump = pump_wavelength(block)
    if block.bandwidth_m is not None:
        params = SourceParams.for_bandwidth(
            block.bandwidth_m, pump, block.bandwidth_definition, length=block.length_m, gvd=block.gvd_s2_per_m
        )
    else:
        params = SourceParams(length=block.length_m, dk1=block.dk1_s_per_m, gvd=block.gvd_s2_per_m)
    if block.target_visibility is not None:
        params = replace(params, delta=_calibrated_delta(block.target_visibility, params, pump, points))
    elif block.delta_rad_per_m is not None:
        params = replace(params, delta=block.delta_rad_per_m)
    return params, pump


def wavelength_grid(block: cfg.GridBlock) -> np.ndarray:
    return np.linspace(block.wavelength_start_m, block.wavelength_stop_m, block.wavelength_points)


def build_splitting(config: cfg.RunConfig, state, base_dir: Path) -> SplittingFunctions:
    block = config.spectra
    if block.kind == "ideal":
        return perfect_splitting(state)
    if block.kind == "file":
        return SplittingFunctions.from_spectrum(SplittingSpectrum.from_csv(_resolve(block.path, base_dir)))
    stack = build_stack(config.stack, base_dir)
    spec = splitting_spectrum(stack, build_geometry(config.coupler), wavelength_grid(config.grids), config.coupler.method)
    return SplittingFunctions.from_spectrum(spec)


def _state(config: cfg.RunConfig):
    params, pump = build_source(config.source, config.grids.detuning_points)
    state = generate_state(params, pump, config.grids.detuning_points, spectral_phase=config.source.spectral_phase)
    return params, state


# ---------------------------------------------------------------------------
# scenarios; each writes its CSVs and returns its summary entries
# ---------------------------------------------------------------------------


def _run_splitting(config, out: Path, base_dir: Path) -> dict:
    stack = build_stack(config.stack, base_dir)
    spec = splitting_spectrum(stack, build_geometry(config.coupler), wavelength_grid(config.grids), config.coupler.method)
    spec.to_csv(out / "splitting_spectrum.csv")
    i = int(np.argmax(np.minimum(spec.s_te, spec.s_tm)))
    return {"best_wavelength_nm": float(spec.wavelength[i] * 1e9), "best_min_splitting": float(min(spec.s_te[i], spec.s_tm[i]))}


def _run_sweep(config, out: Path, base_dir: Path) -> dict:
    b = config.sweep
    result = design_sweep(
        build_stack(config.stack, base_dir),
        b.wavelength_m,
        tuple(b.width_range_m),
        tuple(b.gap_range_m),
        b.band_m,
        n_width=b.n_width,
        n_gap=b.n_gap,
        band_points=b.band_points,
        ratio_tolerance=b.ratio_tolerance,
        method=b.method,
    )
    result.surface_to_csv(out / "sweep_surface.csv")
    p = result.best
    return {
        "design_point": {
            "width_um": p.width * 1e6,
            "gap_um": p.gap * 1e6,
            "length_um": p.length * 1e6,
            "objective": p.objective,
            "ratio_residual": p.ratio_residual,
        }
    }


def _run_source(config, out: Path, base_dir: Path) -> dict:
    params, state = _state(config)
    state.to_csv(out / "biphoton_state.csv")
    return {
        "pump_wavelength_nm": state.pump_wavelength * 1e9,
        "dk1_s_per_m": params.dk1,
        "delta_rad_per_m": params.delta,
        "bandwidth_fwhm_nm": state.bandwidth(0.5) * 1e9,
        "bandwidth_e2_nm": state.bandwidth(np.exp(-2.0)) * 1e9,
        "asymmetry": state.asymmetry,
    }


def _run_hom(config, out: Path, base_dir: Path) -> dict:
    params, state = _state(config)
    s = build_splitting(config, state, base_dir)
    probs = four_config_probabilities(state, s)
    h = config.hom
    if h.filter_width_m is not None:
        center = h.filter_center_m if h.filter_center_m is not None else 2 * state.pump_wavelength
        state = apply_filter(state, center, h.filter_width_m)
    tau = delay_grid(config.grids.delay_span_s, config.grids.delay_points)
    fn = with_polarizers if h.polarizers else coincidence_probability
    ig = fn(state, s, tau, h.window_s)
    ig.to_csv(out / "hom.csv")
    ideal = coincidence_probability(state, perfect_splitting(state), tau, h.window_s)
    return {
        "visibility": ig.visibility,
        "dip_width_fs": ig.fwhm * 1e15,
        "visibility_ideal_splitter": ideal.visibility,
        "dip_width_ideal_splitter_fs": ideal.fwhm * 1e15,
        "franson_period_fs": franson_period(state) * 1e15,
        "p_split": probs.p_split,
        "delta_rad_per_m": params.delta,
    }


def _run_fig3(config, out: Path, base_dir: Path) -> dict:
    _, state = _state(config)
    probs = four_config_probabilities(state, build_splitting(config, state, base_dir))
    probs.to_csv(out / "configurations.csv")
    return {
        "p_split": probs.p_split,
        "configurations": dict(zip(("split", "both_b", "both_a", "swapped"), probs.as_tuple())),
        "probability_sum": probs.total,
    }


def _run_counts(config, out: Path, base_dir: Path) -> dict:
    c = config.counts
    budget = EfficiencyBudget(
        c.eta, c.eta_det, c.alpha_te_per_m, c.alpha_tm_per_m, c.length_m, c.window_s, c.pair_rate_per_mw
    )
    table = count_rates(budget, np.array(c.pump_mw))
    table.to_csv(out / "counts.csv")
    ok = table.pump_mw > 0
    summary = {"coincidence_slope": None, "car_slope": None}
    if np.count_nonzero(ok) >= 2:
        summary["coincidence_slope"] = loglog_slope(table.pump_mw[ok], table.coincidences[ok])
        summary["car_slope"] = loglog_slope(table.pump_mw[ok], table.car[ok])
    return summary


SCENARIO_RUNNERS = {
    "splitting": _run_splitting,
    "sweep": _run_sweep,
    "source": _run_source,
    "hom": _run_hom,
    "fig3": _run_fig3,
    "counts": _run_counts,
}


def _plain(value):
    """numpy scalars to built-in types for YAML."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def run(config: cfg.RunConfig, base_dir: str | Path = ".") -> dict:
    """Validate, run the scenario, write CSVs and ``summary.yaml``; return the summary.

    Nothing is written when validation fails.
    """
    violations = cfg.validate(config)
    if violations:
        raise ValidationFailed(violations)
    base_dir = Path(base_dir)
    out = _resolve(config.output_dir, base_dir)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running scenario %s into %s", config.scenario, out)
    try:
        entries = SCENARIO_RUNNERS[config.scenario](config, out, base_dir)
    except Exception as exc:
        raise ScenarioError(f"scenario '{config.scenario}': {type(exc).__name__}: {exc}") from exc
    summary = {"scenario": config.scenario, "visibility": None, "dip_width_fs": None, "p_split": None, "design_point": None}
    summary.update(_plain(entries))
    with open(out / SUMMARY_NAME, "w") as fh:
        yaml.safe_dump(summary, fh, sort_keys=False)
    with open(out / "config.yaml", "w") as fh:
        fh.write(config.dumps())
    return summary
