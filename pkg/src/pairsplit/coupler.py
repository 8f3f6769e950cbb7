"""Birefringent directional coupler used as a polarization splitter.

TE light injected in guide *a* should leave through port *a*, TM light through
port *b*. With beat lengths in the ratio p/(p+1) (p = 3 here) a coupling length
of four TE beat lengths satisfies both at the design wavelength.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .expansion import coupled_supermodes
from .modes import (
    LateralProfile,
    LayerStack,
    ModeSolverError,
    supermodes,
    vertical_indices,
)

log = logging.getLogger(__name__)

DESIGN_RATIO = 3.0 / 4.0
TIE_TOLERANCE = 1e-3
#: "expansion": semi-vectorial vertical-mode expansion; "eim": scalar effective-index reduction
METHODS = ("expansion", "eim")


class DegenerateModesError(ValueError):
    """n_S <= n_AS: the supermodes are decoupled or mis-identified."""


class NoCouplingRegionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CouplerGeometry:
    """Splitting-region geometry, lengths in metres.

    ``etch_depth=None`` keeps the etch depth of the layer stack. ``gamma``
    rescales the coupling length (``L_eff = gamma * L``) to absorb the gap
    between the idealized model and a fabricated device.
    """

    width: float
    gap: float
    length: float
    etch_depth: float | None = None
    gamma: float = 0.8

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("invalid coupler geometry: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        for name in ("width", "gap", "length"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                out.append(f"{name} must be > 0 (got {value})")
        if self.etch_depth is not None and not self.etch_depth >= 0:
            out.append(f"etch_depth must be >= 0 (got {self.etch_depth})")
        if not (0 < self.gamma <= 1.5):
            out.append(f"gamma must satisfy 0 < gamma <= 1.5 (got {self.gamma})")
        return out

    @property
    def effective_length(self) -> float:
        return self.gamma * self.length

    def stack_for(self, stack: LayerStack) -> LayerStack:
        return stack if self.etch_depth is None else stack.with_etch_depth(self.etch_depth)


@dataclass(frozen=True)
class SplittingSpectrum:
    wavelength: np.ndarray
    s_te: np.ndarray
    s_tm: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelength, dtype=float)
        te = np.asarray(self.s_te, dtype=float)
        tm = np.asarray(self.s_tm, dtype=float)
        if not (wl.ndim == 1 and wl.shape == te.shape == tm.shape and wl.size >= 2):
            raise ValueError("spectrum arrays must be 1D, of equal length >= 2")
        if np.any(np.diff(wl) <= 0):
            raise ValueError("wavelength grid must be strictly increasing")
        for name, arr in (("s_te", te), ("s_tm", tm)):
            if np.any(~np.isfinite(arr)) or np.any((arr < 0) | (arr > 1)):
                bad = wl[(arr < 0) | (arr > 1) | ~np.isfinite(arr)]
                raise ValueError(f"{name} outside [0, 1] at wavelengths {bad[:5]} m")
        object.__setattr__(self, "wavelength", wl)
        object.__setattr__(self, "s_te", te)
        object.__setattr__(self, "s_tm", tm)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["wavelength_nm", "s_te", "s_tm"])
            for wl, te, tm in zip(self.wavelength, self.s_te, self.s_tm):
                writer.writerow([f"{wl * 1e9:.6f}", f"{te:.12f}", f"{tm:.12f}"])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SplittingSpectrum":
        """Read ``wavelength_nm, s_te, s_tm``; every ratio must lie in [0, 1]."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"wavelength_nm", "s_te", "s_tm"} - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    vals = tuple(float(row[k]) for k in ("wavelength_nm", "s_te", "s_tm"))
                except (TypeError, ValueError) as exc:
                    raise ValueError(f"{path}:{lineno}: non-numeric entry") from exc
                if not (0.0 <= vals[1] <= 1.0 and 0.0 <= vals[2] <= 1.0):
                    raise ValueError(f"{path}:{lineno}: splitting ratio outside [0, 1]: {vals[1:]}")
                rows.append(vals)
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0] * 1e-9, arr[:, 1], arr[:, 2])


def beat_length(n_s: float, n_as: float, wavelength: float) -> float:
    """Beat length pi / (beta_S - beta_AS) = lambda / (2 (n_S - n_AS))."""
    dn = n_s - n_as
    if not dn > 0:
        raise DegenerateModesError(f"n_S - n_AS = {dn:.3e} <= 0: infinite beat length")
    return wavelength / (2.0 * dn)


def splitting_ratios(length, lc_te, lc_tm):
    """(s_TE, s_TM) for a straight coupling section of ``length``."""
    length = np.asarray(length, dtype=float)
    lc_te = np.asarray(lc_te, dtype=float)
    lc_tm = np.asarray(lc_tm, dtype=float)
    if np.any(length < 0) or np.any(lc_te <= 0) or np.any(lc_tm <= 0):
        raise ValueError("coupling length must be >= 0 and beat lengths > 0")
    s_te = 0.5 * (1.0 + np.cos(np.pi * length / lc_te))
    s_tm = 0.5 * (1.0 - np.cos(np.pi * length / lc_tm))
    if s_te.ndim == 0:
        return float(s_te), float(s_tm)
    return s_te, s_tm


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown mode-solving method {method!r}; choose from {METHODS}")


def _beat_lengths_from_vertical(vert: dict, width: float, gap: float, wavelength: float) -> tuple[float, float]:
    out = []
    for pol in ("TE", "TM"):
        n_r, n_e, degraded = vert[pol]
        lat = LateralProfile(n_r, n_e, width, gap, pol, degraded)
        n_s, n_as = supermodes(lat, wavelength)
        out.append(beat_length(n_s, n_as, wavelength))
    return out[0], out[1]


def _vertical(stack: LayerStack, wavelength: float) -> dict:
    return {pol: vertical_indices(stack, wavelength, pol) for pol in ("TE", "TM")}


def _pair_beat_lengths(stack: LayerStack, width: float, gap: float, wavelength: float, method: str, vert=None):
    if method == "eim":
        return _beat_lengths_from_vertical(vert or _vertical(stack, wavelength), width, gap, wavelength)
    return tuple(
        beat_length(*coupled_supermodes(stack, width, gap, wavelength, pol), wavelength) for pol in ("TE", "TM")
    )


def beat_lengths(
    stack: LayerStack, geometry: CouplerGeometry, wavelength: float, method: str = "expansion"
) -> tuple[float, float]:
    """TE and TM beat lengths of the coupled-guide cross-section."""
    _check_method(method)
    return _pair_beat_lengths(geometry.stack_for(stack), geometry.width, geometry.gap, wavelength, method)


def splitting_spectrum(
    stack: LayerStack, geometry: CouplerGeometry, wavelengths: Sequence[float], method: str = "expansion"
) -> SplittingSpectrum:
    """Modelled s_TE, s_TM over ``wavelengths`` using the effective length gamma * L."""
    _check_method(method)
    wl = np.asarray(wavelengths, dtype=float)
    lc = np.empty((wl.size, 2))
    for i, lam in enumerate(wl):
        try:
            lc[i] = beat_lengths(stack, geometry, lam, method)
        except (ModeSolverError, DegenerateModesError) as exc:
            raise ModeSolverError(f"at wavelength {lam * 1e9:.3f} nm: {exc}") from exc
    s_te, s_tm = splitting_ratios(geometry.effective_length, lc[:, 0], lc[:, 1])
    return SplittingSpectrum(wl, np.clip(s_te, 0.0, 1.0), np.clip(s_tm, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Design sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignPoint:
    width: float
    gap: float
    length: float
    objective: float
    ratio_residual: float
    lc_te: float
    lc_tm: float


@dataclass
class SweepResult:
    best: DesignPoint
    widths: np.ndarray
    gaps: np.ndarray
    lc_te: np.ndarray  # (n_w, n_g) at the design wavelength, NaN where uncoupled
    lc_tm: np.ndarray
    objective: np.ndarray
    wavelength: float
    band: np.ndarray = field(repr=False)

    @property
    def ratio(self) -> np.ndarray:
        return self.lc_te / self.lc_tm

    def surface(self, length: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """s_TE, s_TM over the (w, g) grid at a common coupling length (default: the optimum)."""
        length = self.best.length if length is None else length
        s_te = 0.5 * (1 + np.cos(np.pi * length / self.lc_te))
        s_tm = 0.5 * (1 - np.cos(np.pi * length / self.lc_tm))
        return s_te, s_tm

    def surface_to_csv(self, path: str | Path, length: float | None = None) -> None:
        s_te, s_tm = self.surface(length)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["w_um", "g_um", "s_te", "s_tm", "ratio"])
            for i, w in enumerate(self.widths):
                for j, g in enumerate(self.gaps):
                    writer.writerow(
                        [f"{w * 1e6:.6f}", f"{g * 1e6:.6f}", f"{s_te[i, j]:.9f}", f"{s_tm[i, j]:.9f}", f"{self.ratio[i, j]:.9f}"]
                    )


def band_objective(lc_te_band, lc_tm_band, length) -> float:
    """Band average of min(s_TE, s_TM) at ``length``."""
    s_te, s_tm = splitting_ratios(length, lc_te_band, lc_tm_band)
    return float(np.mean(np.minimum(s_te, s_tm)))


def design_sweep(
    stack: LayerStack,
    wavelength: float,
    width_range: tuple[float, float],
    gap_range: tuple[float, float],
    band: float,
    n_width: int = 50,
    n_gap: int = 50,
    band_points: int = 7,
    ratio_tolerance: float = 0.01,
    method: str = "expansion",
) -> SweepResult:
    """Grid search for the (w, g) best suited to p = 3 splitting over ``band``.

    Each grid point gets L* = 4 L_c^TE(wavelength). Candidates are the points
    whose beat-length ratio lies within ``ratio_tolerance`` of 3/4; among them
    the band-averaged min(s_TE, s_TM) at L* is maximized. Points within
    1e-3 of the best objective are ranked by ratio residual, then by L*.
    """
    widths = np.linspace(*width_range, n_width)
    gaps = np.linspace(*gap_range, n_gap)
    _check_method(method)
    band_wl = wavelength + np.linspace(-0.5, 0.5, band_points) * band
    vert0 = _vertical(stack, wavelength) if method == "eim" else None
    vert_band = [_vertical(stack, lam) if method == "eim" else None for lam in band_wl]

    lc_te = np.full((n_width, n_gap), np.nan)
    lc_tm = np.full((n_width, n_gap), np.nan)
    objective = np.full((n_width, n_gap), np.nan)
    for i, w in enumerate(widths):
        for j, g in enumerate(gaps):
            try:
                lc_te[i, j], lc_tm[i, j] = _pair_beat_lengths(stack, w, g, wavelength, method, vert0)
            except (ModeSolverError, DegenerateModesError):
                continue
            if abs(lc_te[i, j] / lc_tm[i, j] - DESIGN_RATIO) >= ratio_tolerance:
                continue
            try:
                band_lc = np.array(
                    [_pair_beat_lengths(stack, w, g, lam, method, v) for v, lam in zip(vert_band, band_wl)]
                )
            except (ModeSolverError, DegenerateModesError):
                continue
            objective[i, j] = band_objective(band_lc[:, 0], band_lc[:, 1], 4.0 * lc_te[i, j])

    feasible = np.isfinite(objective)
    if not feasible.any():
        raise NoCouplingRegionError(
            f"no grid point with both polarizations coupled and L_TE/L_TM within {ratio_tolerance} of 3/4 "
            f"(w in [{width_range[0]:.3e}, {width_range[1]:.3e}] m, g in [{gap_range[0]:.3e}, {gap_range[1]:.3e}] m)"
        )
    best_obj = np.nanmax(objective)
    idx = np.argwhere(feasible & (objective >= best_obj - TIE_TOLERANCE))
    residual = np.abs(lc_te / lc_tm - DESIGN_RATIO)
    i, j = min(idx, key=lambda ij: (residual[ij[0], ij[1]], lc_te[ij[0], ij[1]]))
    best = DesignPoint(
        width=float(widths[i]),
        gap=float(gaps[j]),
        length=float(4.0 * lc_te[i, j]),
        objective=float(objective[i, j]),
        ratio_residual=float(residual[i, j]),
        lc_te=float(lc_te[i, j]),
        lc_tm=float(lc_tm[i, j]),
    )
    log.info("design optimum w=%.4g g=%.4g L=%.4g obj=%.4f", best.width, best.gap, best.length, best.objective)
    return SweepResult(best, widths, gaps, lc_te, lc_tm, objective, wavelength, band_wl)
