"""Slab and effective-index mode solving for the layered ridge structure.

Vertical problem: transfer matrices across the epitaxial stack. Lateral
problem: the same machinery applied to the piecewise-constant effective-index
profile of one guide or of the two coupled guides. Polarization labels refer to
the dominant electric field of the ridge mode: "TE" is horizontal (in the layer
plane), "TM" vertical. In the lateral step the roles swap, TE ridge modes see
TM-type boundary conditions and vice versa.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Literal, Sequence

import numpy as np
import yaml
from scipy.optimize import bisect, minimize_scalar

from .materials import refractive_index

if TYPE_CHECKING:
    from .coupler import CouplerGeometry

Polarization = Literal["TE", "TM"]

SCAN_POINTS = 2000
ROOT_TOL = 1e-13


class ModeSolverError(RuntimeError):
    pass


class CouplingError(ModeSolverError):
    """Too few lateral modes for a supermode pair (uncoupled or cut off)."""


class BraggModeError(ModeSolverError):
    pass


# ---------------------------------------------------------------------------
# Layer stacks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Layer:
    thickness: float
    x: float


@dataclass(frozen=True)
class LayerStack:
    """Epitaxial stack, listed from the substrate upwards.

    ``core`` is the position of the guiding core in ``layers``; everything
    above it forms the upper mirror, and ``etch_depth`` is removed from the top
    outside the ridge. ``superstrate_x = None`` means air.
    """

    layers: tuple[Layer, ...]
    core: int
    substrate_x: float
    etch_depth: float
    superstrate_x: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        problems = self.violations()
        if problems:
            raise ValueError("invalid layer stack: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        for i, layer in enumerate(self.layers):
            if not layer.thickness > 0:
                out.append(f"layers[{i}].thickness must be > 0 (got {layer.thickness})")
            if not 0.0 <= layer.x <= 1.0:
                out.append(f"layers[{i}].x must be in [0, 1] (got {layer.x})")
        if not 0 <= self.core < len(self.layers):
            out.append(f"core index {self.core} outside 0..{len(self.layers) - 1}")
        if not 0.0 <= self.substrate_x <= 1.0:
            out.append(f"substrate_x must be in [0, 1] (got {self.substrate_x})")
        if self.superstrate_x is not None and not 0.0 <= self.superstrate_x <= 1.0:
            out.append(f"superstrate_x must be in [0, 1] (got {self.superstrate_x})")
        if self.etch_depth < 0:
            out.append(f"etch_depth must be >= 0 (got {self.etch_depth})")
        elif 0 <= self.core < len(self.layers) and self.etch_depth > self.upper_thickness * (1 + 1e-9):
            out.append(
                f"etch_depth {self.etch_depth:.4g} m exceeds the upper mirror "
                f"({self.upper_thickness:.4g} m); the core is never etched"
            )
        return out

    @property
    def upper_thickness(self) -> float:
        return float(sum(layer.thickness for layer in self.layers[self.core + 1 :]))

    @property
    def core_layer(self) -> Layer:
        return self.layers[self.core]

    def etched(self) -> "LayerStack":
        """The stack left outside the ridge once ``etch_depth`` is removed."""
        remaining = self.etch_depth
        layers = list(self.layers)
        while remaining > 0 and len(layers) > self.core + 1:
            top = layers[-1]
            if top.thickness <= remaining * (1 + 1e-12):
                remaining -= top.thickness
                layers.pop()
            else:
                layers[-1] = Layer(top.thickness - remaining, top.x)
                remaining = 0.0
        return replace(self, layers=tuple(layers), etch_depth=0.0)

    def with_etch_depth(self, depth: float) -> "LayerStack":
        return replace(self, etch_depth=depth)

    def to_mapping(self) -> dict:
        return {
            "substrate_x": self.substrate_x,
            "superstrate_x": self.superstrate_x,
            "core": self.core,
            "etch_depth_m": self.etch_depth,
            "layers": [{"thickness_m": l.thickness, "x": l.x} for l in self.layers],
        }

    @classmethod
    def from_mapping(cls, raw: dict) -> "LayerStack":
        layers = tuple(Layer(float(l["thickness_m"]), float(l["x"])) for l in raw["layers"])
        sup = raw.get("superstrate_x")
        return cls(
            layers=layers,
            core=int(raw["core"]),
            substrate_x=float(raw["substrate_x"]),
            etch_depth=float(raw["etch_depth_m"]),
            superstrate_x=None if sup is None else float(sup),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "LayerStack":
        with open(path) as fh:
            return cls.from_mapping(yaml.safe_load(fh))


# Layer thicknesses of the default stack (metres). The core thickness and the
# 800 nm upper-mirror height are fixed; the mirror bilayer split is calibrated
# so that the published coupler design point (w = 1.134 um, g = 1.286 um)
# sits on the L_TE / L_TM = 3/4 condition at 1525 nm.
MIRROR_LOW_X, MIRROR_HIGH_X, CORE_X = 0.80, 0.25, 0.45
MIRROR_LOW_T, MIRROR_HIGH_T, CORE_T = 257e-9, 143e-9, 351e-9


def paper_stack(etch_depth: float | None = None) -> LayerStack:
    """6-period Al0.80/Al0.25 lower mirror, 351 nm Al0.45 core, 2-period upper mirror."""
    lower = [Layer(MIRROR_LOW_T, MIRROR_LOW_X), Layer(MIRROR_HIGH_T, MIRROR_HIGH_X)] * 6
    upper = [Layer(MIRROR_HIGH_T, MIRROR_HIGH_X), Layer(MIRROR_LOW_T, MIRROR_LOW_X)] * 2
    layers = tuple(lower + [Layer(CORE_T, CORE_X)] + upper)
    depth = 2 * (MIRROR_LOW_T + MIRROR_HIGH_T) if etch_depth is None else etch_depth
    return LayerStack(layers=layers, core=len(lower), substrate_x=MIRROR_LOW_X, etch_depth=depth)


# ---------------------------------------------------------------------------
# Generic 1D piecewise-constant profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Index profile: lower cladding, interior layers (bottom to top), upper cladding."""

    n_low: float
    indices: tuple[float, ...]
    thicknesses: tuple[float, ...]
    n_high: float
    degraded: bool = False

    @property
    def n_max(self) -> float:
        return max(self.n_low, self.n_high, *self.indices)

    @property
    def n_clad(self) -> float:
        return max(self.n_low, self.n_high)

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.thicknesses)])

    def regions(self) -> list[tuple[float, float]]:
        """(index, width) of every region including claddings (width inf)."""
        return [(self.n_low, np.inf), *zip(self.indices, self.thicknesses), (self.n_high, np.inf)]


def stack_profile(stack: LayerStack, wavelength: float) -> Profile:
    xs = [layer.x for layer in stack.layers]
    n = np.atleast_1d(refractive_index(np.array(xs), wavelength))
    n_sub = refractive_index(stack.substrate_x, wavelength)
    n_sup = 1.0 if stack.superstrate_x is None else refractive_index(stack.superstrate_x, wavelength)
    return Profile(
        n_low=float(n_sub),
        indices=tuple(float(v) for v in n),
        thicknesses=tuple(l.thickness for l in stack.layers),
        n_high=float(n_sup),
    )


def _weight(n, pol: Polarization):
    return 1.0 if pol == "TE" else 1.0 / (np.asarray(n, dtype=float) ** 2)


def _layer_terms(n, d, ne, k0):
    """cos-like, sin/q-like and q*sin-like factors of one layer, vectorized over ne."""
    q2 = k0 * k0 * (n * n - ne * ne)
    osc = q2 > 0
    q = np.sqrt(np.abs(q2))
    qd = q * d
    c = np.where(osc, np.cos(qd), np.cosh(qd))
    with np.errstate(invalid="ignore", divide="ignore"):
        s_q = np.where(q > 0, np.where(osc, np.sin(qd), np.sinh(qd)) / np.where(q > 0, q, 1.0), d)
    qs = np.where(osc, -q * np.sin(qd), q * np.sinh(qd))
    return c, s_q, qs


def _propagate(E, D, n, d, ne, k0, pol):
    c, s_q, qs = _layer_terms(n, d, ne, k0)
    w = _weight(n, pol)
    return c * E + s_q / w * D, w * qs * E + c * D


def _decay(n, ne, k0):
    return k0 * np.sqrt(np.maximum(ne * ne - n * n, 0.0))


def _guidance(profile: Profile, ne, k0, pol):
    """Guidance residual: zero when the field decays into both claddings."""
    ne = np.asarray(ne, dtype=float)
    E = np.ones_like(ne)
    D = _weight(profile.n_low, pol) * _decay(profile.n_low, ne, k0)
    for n, d in zip(profile.indices, profile.thicknesses):
        E, D = _propagate(E, D, n, d, ne, k0, pol)
        # keep magnitudes bounded; only the sign of the residual matters
        scale = np.maximum(np.abs(E), np.abs(D) / k0)
        scale = np.where(scale > 0, scale, 1.0)
        E, D = E / scale, D / scale
    return D + _weight(profile.n_high, pol) * _decay(profile.n_high, ne, k0) * E


def _scan_roots(func, lo: float, hi: float, points: int = SCAN_POINTS) -> list[float]:
    """Sign-change scan on the open interval (lo, hi), each bracket refined by bisection."""
    if not hi > lo:
        return []
    grid = np.linspace(lo, hi, points + 2)[1:-1]
    values = func(grid)
    roots = []
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        a, b = grid[i], grid[i + 1]
        try:
            r = bisect(lambda v: float(func(np.array([v]))[0]), a, b, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps, maxiter=200)
        except (ValueError, RuntimeError) as exc:
            raise ModeSolverError(f"root refinement failed in bracket [{a:.12f}, {b:.12f}]") from exc
        roots.append(float(r))
    return sorted(roots, reverse=True)


def solve_profile(profile: Profile, wavelength: float, pol: Polarization) -> list[float]:
    """Effective indices of all guided modes of ``profile``, descending."""
    k0 = 2 * np.pi / wavelength
    return _scan_roots(lambda ne: _guidance(profile, ne, k0, pol), profile.n_clad, profile.n_max)


def mode_field(profile: Profile, n_eff: float, wavelength: float, pol: Polarization, x) -> np.ndarray:
    """Dominant field component sampled at positions ``x`` (0 = bottom of the first interior layer).

    Normalized to unit peak magnitude over the sampled positions.
    """
    x = np.asarray(x, dtype=float)
    k0 = 2 * np.pi / wavelength
    ne = np.array(n_eff, dtype=float)
    bounds = profile.boundaries
    out = np.zeros_like(x)

    g_low = _decay(profile.n_low, ne, k0)
    below = x < 0
    out[below] = np.exp(g_low * x[below])
    E, D = 1.0, _weight(profile.n_low, pol) * g_low
    for j, (n, d) in enumerate(zip(profile.indices, profile.thicknesses)):
        x0 = bounds[j]
        inside = (x >= x0) & (x < bounds[j + 1])
        if np.any(inside):
            c, s_q, _ = _layer_terms(n, x[inside] - x0, ne, k0)
            out[inside] = c * E + s_q / _weight(n, pol) * D
        E, D = _propagate(E, D, n, d, ne, k0, pol)
        E, D = float(E), float(D)
    above = x >= bounds[-1]
    out[above] = E * np.exp(-_decay(profile.n_high, ne, k0) * (x[above] - bounds[-1]))
    peak = np.max(np.abs(out))
    return out / peak if peak > 0 else out


# ---------------------------------------------------------------------------
# Vertical (slab) modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuidedMode:
    n_eff: float
    wavelength: float
    polarization: Polarization
    symmetry: Literal["single", "S", "AS"] = "single"

    @property
    def beta(self) -> float:
        return 2 * np.pi * self.n_eff / self.wavelength


def slab_modes(stack: LayerStack, wavelength: float, pol: Polarization) -> list[GuidedMode]:
    profile = stack_profile(stack, wavelength)
    return [GuidedMode(n, wavelength, pol) for n in solve_profile(profile, wavelength, pol)]


def dump_field_csv(path: str | Path, x, field_values) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["position_m", "field_amplitude"])
        for xi, fi in zip(x, field_values):
            writer.writerow([f"{xi:.9e}", f"{fi:.9e}"])


# ---------------------------------------------------------------------------
# Effective-index reduction and supermodes
# ---------------------------------------------------------------------------


def _lateral_pol(pol: Polarization) -> Polarization:
    return "TM" if pol == "TE" else "TE"


@dataclass(frozen=True)
class LateralProfile:
    """Piecewise-constant lateral index profile from the effective-index reduction.

    ``pol`` is the ridge-mode polarization; the lateral solve uses the swapped
    boundary conditions.
    """

    n_ridge: float
    n_etched: float
    width: float
    gap: float | None
    pol: Polarization
    degraded: bool = False

    @property
    def coupled(self) -> bool:
        return self.gap is not None

    def regions(self) -> list[tuple[float, float]]:
        """[(index, width)] from left to right; outer regions are semi-infinite."""
        if self.coupled:
            return [
                (self.n_etched, np.inf),
                (self.n_ridge, self.width),
                (self.n_etched, self.gap),
                (self.n_ridge, self.width),
                (self.n_etched, np.inf),
            ]
        return [(self.n_etched, np.inf), (self.n_ridge, self.width), (self.n_etched, np.inf)]

    def as_profile(self) -> Profile:
        inner = self.regions()[1:-1]
        return Profile(
            n_low=self.n_etched,
            indices=tuple(n for n, _ in inner),
            thicknesses=tuple(w for _, w in inner),
            n_high=self.n_etched,
            degraded=self.degraded,
        )


def vertical_indices(stack: LayerStack, wavelength: float, pol: Polarization) -> tuple[float, float, bool]:
    """Fundamental slab index in the ridge and in the etched region.

    When the etched region has no guided mode its index falls back to the
    superstrate index and the result is flagged as degraded.
    """
    ridge = solve_profile(stack_profile(stack, wavelength), wavelength, pol)
    if not ridge:
        raise ModeSolverError(f"no {pol} slab mode in the ridge region at {wavelength:.4e} m")
    if stack.etch_depth == 0:
        return ridge[0], ridge[0], False
    etched_profile = stack_profile(stack.etched(), wavelength)
    etched = solve_profile(etched_profile, wavelength, pol)
    if etched:
        return ridge[0], etched[0], False
    return ridge[0], etched_profile.n_high, True


def effective_index_profile(
    stack: LayerStack,
    geometry: "CouplerGeometry | None",
    wavelength: float,
    pol: Polarization,
    width: float | None = None,
) -> LateralProfile:
    """Lateral profile of the coupler cross-section, or of a single guide.

    Pass ``geometry=None`` and an explicit ``width`` for the single-guide
    (generation waveguide) reduction.
    """
    n_r, n_e, degraded = vertical_indices(stack, wavelength, pol)
    if geometry is None:
        if width is None:
            raise ValueError("single-guide reduction needs a width")
        return LateralProfile(n_r, n_e, width, None, pol, degraded)
    return LateralProfile(n_r, n_e, geometry.width, geometry.gap, pol, degraded)


def _half_residual(lat: LateralProfile, ne, k0, parity: str):
    """Residual of the half-structure with a symmetry plane at the gap centre."""
    pol = _lateral_pol(lat.pol)
    ne = np.asarray(ne, dtype=float)
    if parity == "even":
        E, D = np.ones_like(ne), np.zeros_like(ne)
    else:
        E, D = np.zeros_like(ne), np.ones_like(ne) * k0
    half_gap = 0.5 * lat.gap if lat.coupled else 0.0
    if half_gap > 0:
        E, D = _propagate(E, D, lat.n_etched, half_gap, ne, k0, pol)
    guide = lat.width if lat.coupled else 0.5 * lat.width
    E, D = _propagate(E, D, lat.n_ridge, guide, ne, k0, pol)
    return D + _weight(lat.n_etched, pol) * _decay(lat.n_etched, ne, k0) * E


def lateral_modes(lat: LateralProfile, wavelength: float, parity: str) -> list[float]:
    k0 = 2 * np.pi / wavelength
    return _scan_roots(lambda ne: _half_residual(lat, ne, k0, parity), lat.n_etched, lat.n_ridge)


def single_guide_index(lat: LateralProfile, wavelength: float) -> float:
    """Fundamental index of a single guide (even mode of the 3-region profile)."""
    if lat.n_ridge <= lat.n_etched:
        return lat.n_ridge
    modes = lateral_modes(replace(lat, gap=None), wavelength, "even")
    if not modes:
        raise ModeSolverError("single guide has no lateral mode")
    return modes[0]


def supermodes(lat: LateralProfile, wavelength: float) -> tuple[float, float]:
    """Effective indices (n_S, n_AS) of the symmetric and antisymmetric supermodes."""
    if not lat.coupled:
        raise ValueError("supermodes need a two-guide profile")
    if not lat.n_ridge > lat.n_etched:
        raise CouplingError("no lateral index contrast (n_ridge <= n_etched): guides uncoupled/cut off")
    even = lateral_modes(lat, wavelength, "even")
    odd = lateral_modes(lat, wavelength, "odd")
    if not even or not odd:
        raise CouplingError(
            f"{lat.pol}: found {len(even)} symmetric and {len(odd)} antisymmetric lateral modes; "
            "guides too narrow or too shallow for a supermode pair"
        )
    return even[0], odd[0]


def supermode_field(lat: LateralProfile, n_eff: float, wavelength: float, x) -> np.ndarray:
    """Lateral field of a mode of ``lat`` on positions ``x`` measured from the structure centre."""
    prof = lat.as_profile()
    total = sum(prof.thicknesses)
    return mode_field(prof, n_eff, wavelength, _lateral_pol(lat.pol), np.asarray(x) + 0.5 * total)


# ---------------------------------------------------------------------------
# Bragg pump mode
# ---------------------------------------------------------------------------


def bragg_band_center(stack: LayerStack, wavelength: float) -> float:
    """Index at which the mirror bilayer below the core is a half-wave (quarter-wave per layer sum)."""
    if stack.core < 2:
        raise BraggModeError("stack has no mirror bilayer below the core")
    pair = stack.layers[stack.core - 2 : stack.core]
    n = np.atleast_1d(refractive_index(np.array([l.x for l in pair]), wavelength))
    d = np.array([l.thickness for l in pair])
    k0 = 2 * np.pi / wavelength

    def phase(ne):
        return k0 * np.sum(np.sqrt(np.maximum(n**2 - ne**2, 0.0)) * d) - np.pi

    lo, hi = 1.0, float(np.min(n))
    if phase(lo) < 0 or phase(hi) > 0:
        raise BraggModeError(f"no half-wave bilayer condition for indices in [{lo}, {hi}]")
    return float(bisect(phase, lo, hi, xtol=1e-12))


def _leakage(profile: Profile, ne, k0, pol):
    """Substrate radiation amplitude relative to the core amplitude (TE weights).

    The field is started as a decaying wave in the upper cladding and carried
    down; below the lower cladding index the substrate field is a standing wave
    whose amplitude measures leakage.
    """
    ne = np.asarray(ne, dtype=float)
    E = np.ones_like(ne)
    D = -_weight(profile.n_high, pol) * _decay(profile.n_high, ne, k0)
    core_amp = np.zeros_like(ne)
    n_core = max(profile.indices)
    for n, d in zip(reversed(profile.indices), reversed(profile.thicknesses)):
        c, s_q, qs = _layer_terms(n, -d, ne, k0)
        w = _weight(n, pol)
        E, D = c * E + s_q / w * D, w * qs * E + c * D
        q = k0 * np.sqrt(np.maximum(n * n - ne * ne, 1e-30))
        amp = np.sqrt(E * E + (D / (w * q)) ** 2)
        core_amp = np.maximum(core_amp, amp)
    q_sub = k0 * np.sqrt(np.maximum(profile.n_low**2 - ne * ne, 1e-30))
    w_sub = _weight(profile.n_low, pol)
    sub_amp = np.sqrt(E * E + (D / (w_sub * q_sub)) ** 2)
    return sub_amp / core_amp


def bragg_resonances(stack: LayerStack, wavelength: float, window: float = 0.3, points: int = SCAN_POINTS) -> list[float]:
    """Quasi-guided TE resonances below the substrate index (minima of substrate leakage)."""
    profile = stack_profile(stack, wavelength)
    k0 = 2 * np.pi / wavelength
    hi = profile.n_low
    lo = max(profile.n_high, hi - window)
    grid = np.linspace(lo, hi, points + 2)[1:-1]
    logr = np.log(_leakage(profile, grid, k0, "TE"))
    found = []
    for i in range(1, len(grid) - 1):
        if logr[i] < logr[i - 1] and logr[i] <= logr[i + 1]:
            res = minimize_scalar(
                lambda v: float(np.log(_leakage(profile, np.array([v]), k0, "TE"))[0]),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": 1e-12},
            )
            found.append(float(res.x))
    return found


def bragg_slab_index(stack: LayerStack, wavelength: float) -> float:
    """Quasi-guided Bragg resonance nearest the mirror band centre."""
    found = bragg_resonances(stack, wavelength)
    if not found:
        prof = stack_profile(stack, wavelength)
        raise BraggModeError(
            f"no Bragg resonance at {wavelength:.4e} m in index range "
            f"[{max(prof.n_high, prof.n_low - 0.3):.4f}, {prof.n_low:.4f}]"
        )
    center = bragg_band_center(stack, wavelength)
    return min(found, key=lambda v: abs(v - center))


def bragg_pump_index(
    stack: LayerStack,
    wavelength: float,
    width: float | None = None,
    offset: float = 0.0,
) -> float:
    """Effective index of the TE Bragg pump mode, plus a calibration offset.

    With ``width`` given the lateral confinement of a single ridge of that
    width is included through the effective-index reduction.
    """
    n_ridge = bragg_slab_index(stack, wavelength)
    if width is None:
        return n_ridge + offset
    degraded = False
    try:
        n_etched = bragg_slab_index(stack.etched(), wavelength) if stack.etch_depth > 0 else n_ridge
    except BraggModeError:
        n_etched, degraded = 1.0 if stack.superstrate_x is None else refractive_index(stack.superstrate_x, wavelength), True
    lat = LateralProfile(n_ridge, min(n_etched, n_ridge), width, None, "TE", degraded)
    return single_guide_index(lat, wavelength) + offset


def field_grid(lat: LateralProfile, margin: float = 3e-6, points: int = 4001) -> np.ndarray:
    total = sum(w for _, w in lat.regions()[1:-1])
    half = 0.5 * total + margin
    return np.linspace(-half, half, points)


__all__ = [
    "BraggModeError",
    "CouplingError",
    "GuidedMode",
    "Layer",
    "LayerStack",
    "LateralProfile",
    "ModeSolverError",
    "Profile",
    "bragg_pump_index",
    "effective_index_profile",
    "mode_field",
    "paper_stack",
    "single_guide_index",
    "slab_modes",
    "solve_profile",
    "stack_profile",
    "supermodes",
    "vertical_indices",
]
