"""Type-II SPDC biphoton state of a CW-pumped ridge waveguide.

With a monochromatic pump of angular frequency ``omega_p`` the joint spectral
amplitude collapses onto the line omega_1 + omega_2 = omega_p, so the state is
a 1D amplitude f over the detuning Omega. Photon 1 is the TE (H) photon at
omega_0 + Omega, photon 2 the TM (V) photon at omega_0 - Omega, with
omega_0 = omega_p / 2.

    f(Omega) ~ sinc(dbeta L / 2) exp(i dbeta L / 2),   sum |f|^2 dOmega = 1
    dbeta(Omega) = delta + dk1 Omega + gvd Omega^2 / 2     (surrogate)
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml
from scipy.constants import c as C
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect, brentq, minimize_scalar

from .materials import MaterialDomainError

TWO_PI_C = 2 * np.pi * C

#: phase-matching anchors: (guide width, pump wavelength), metres
PM_ANCHORS = ((5.0e-6, 762.5e-9), (1.5e-6, 770.5e-9))
PM_WIDTH_RANGE = (1.0e-6, 6.0e-6)
DEFAULT_PUMP_WAVELENGTH = 762.5e-9
DEFAULT_BANDWIDTH = 60e-9
DEFAULT_POINTS = 4096

# level of |f|^2 at which the bandwidth is read: half maximum, or 1/e^2
_LEVELS = {"fwhm": 0.5, "e2": np.exp(-2.0)}


class NormalizationError(ValueError):
    """The amplitude vanishes on the grid (nothing to normalize)."""


class CalibrationError(RuntimeError):
    pass


def _sinc_level_root(level: float) -> float:
    """u > 0 in the main lobe with sinc(u)^2 = level, sinc(u) = sin(u)/u."""
    return brentq(lambda u: np.sinc(u / np.pi) ** 2 - level, 1e-9, np.pi - 1e-12, xtol=1e-15)


def detuning_half_width(bandwidth: float, signal_wavelength: float) -> float:
    """Detuning Omega at which the signal wavelengths omega_0 -+ Omega span ``bandwidth``."""
    w0 = TWO_PI_C / signal_wavelength
    # bandwidth = 2 pi c (1/(w0 - W) - 1/(w0 + W)), solved for W
    return (-4 * np.pi * C + np.sqrt((4 * np.pi * C) ** 2 + 4 * bandwidth**2 * w0**2)) / (2 * bandwidth)


def calibrated_dk1(bandwidth: float, pump_wavelength: float, length: float, definition: str = "e2") -> float:
    """dk1 (s/m) for which |f|^2 with gvd = delta = 0 spans ``bandwidth`` at the chosen level."""
    if definition not in _LEVELS:
        raise ValueError(f"definition must be one of {sorted(_LEVELS)}")
    u = _sinc_level_root(_LEVELS[definition])
    # |dk1 * half * length / 2| = u at the band edge
    return 2 * u / (detuning_half_width(bandwidth, 2 * pump_wavelength) * length)


DEFAULT_LENGTH = 2e-3


@dataclass(frozen=True)
class SourceParams:
    """Generation-region parameters.

    length : m
    dk1 : s/m, group-delay mismatch k'_TM - k'_TE of the telecom modes
    gvd : s^2/m, second-order term of the phase mismatch
    delta : rad/m, constant mismatch offset (spectral asymmetry)
    brightness : pairs/s/mW/nm, and ``pair_rate`` (pairs/s) for count rates
    """

    length: float = DEFAULT_LENGTH
    dk1: float = calibrated_dk1(DEFAULT_BANDWIDTH, DEFAULT_PUMP_WAVELENGTH, DEFAULT_LENGTH)
    gvd: float = 0.0
    delta: float = 0.0
    brightness: float = 2e5
    pair_rate: float = 7e6

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("invalid source parameters: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not (np.isfinite(self.length) and self.length > 0):
            out.append(f"length must be > 0 (got {self.length})")
        for name in ("dk1", "gvd", "delta", "brightness", "pair_rate"):
            if not np.isfinite(getattr(self, name)):
                out.append(f"{name} must be finite")
        if self.brightness < 0 or self.pair_rate < 0:
            out.append("brightness and pair_rate must be >= 0")
        return out

    @classmethod
    def for_bandwidth(
        cls,
        bandwidth: float = DEFAULT_BANDWIDTH,
        pump_wavelength: float = DEFAULT_PUMP_WAVELENGTH,
        definition: str = "e2",
        **kwargs,
    ) -> "SourceParams":
        """Choose dk1 so that |f|^2 (gvd = delta = 0) has the given width in signal wavelength.

        ``definition`` is "fwhm" (half maximum) or "e2" (1/e^2 of maximum).
        """
        length = kwargs.pop("length", DEFAULT_LENGTH)
        return cls(length=length, dk1=calibrated_dk1(bandwidth, pump_wavelength, length, definition), **kwargs)

    @property
    def walkoff_delay(self) -> float:
        """Delay dk1 L / 2 at which the interference of the pair is centred."""
        return 0.5 * self.dk1 * self.length


def phase_mismatch(params: SourceParams, detuning, stack=None, width: float | None = None, pump_wavelength=None):
    """dbeta(Omega) in rad/m.

    Without ``stack`` the quadratic surrogate of ``params`` is used. With a
    stack, width and pump wavelength, the single-guide mode solutions supply
    beta_pump - beta_TE(omega_0 + Omega) - beta_TM(omega_0 - Omega) plus
    ``params.delta``. The pump is taken at its phase-matching wavelength,
    so beta_pump = beta_TE(omega_0) + beta_TM(omega_0). The solver path is
    slow; keep the detuning array short.
    """
    omega = np.asarray(detuning, dtype=float)
    if stack is None:
        return params.delta + params.dk1 * omega + 0.5 * params.gvd * omega**2
    if width is None or pump_wavelength is None:
        raise ValueError("the solver path needs width and pump_wavelength")
    w0 = np.pi * C / pump_wavelength
    te = np.array([_guide_beta(stack, width, TWO_PI_C / (w0 + o), "TE") for o in omega.ravel()])
    tm = np.array([_guide_beta(stack, width, TWO_PI_C / (w0 - o), "TM") for o in omega.ravel()])
    beta_p = _guide_beta(stack, width, TWO_PI_C / w0, "TE") + _guide_beta(stack, width, TWO_PI_C / w0, "TM")
    return (beta_p - te - tm).reshape(omega.shape) + params.delta


def _guide_beta(stack, width, wavelength, pol):
    from .modes import effective_index_profile, single_guide_index

    lat = effective_index_profile(stack, None, wavelength, pol, width=width)
    return 2 * np.pi * single_guide_index(lat, wavelength) / wavelength


def fit_surrogate(stack, width: float, pump_wavelength: float, step: float = 2e12, **kwargs) -> SourceParams:
    """SourceParams whose dk1 and gvd are central differences of the solver mismatch."""
    base = SourceParams(**kwargs)
    d = phase_mismatch(replace(base, delta=0.0), np.array([-step, 0.0, step]), stack, width, pump_wavelength)
    dk1 = (d[2] - d[0]) / (2 * step)
    gvd = (d[2] - 2 * d[1] + d[0]) / step**2
    return replace(base, dk1=float(dk1), gvd=float(gvd))


@dataclass(frozen=True)
class BiphotonState:
    """CW-pump biphoton amplitude on a uniform detuning grid symmetric about 0.

    ``pair_transmission`` accumulates the fraction of pairs surviving filters
    applied to the state (the amplitude itself is always renormalized).
    ``delay_reference`` is the group-delay walk-off between the two photons;
    interferometric delays are measured from it.
    """

    pump_frequency: float
    detuning: np.ndarray
    amplitude: np.ndarray
    delay_reference: float = 0.0
    pair_transmission: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.detuning, dtype=float)
        amp = np.asarray(self.amplitude, dtype=complex)
        if grid.ndim != 1 or grid.shape != amp.shape or grid.size < 4:
            raise ValueError("detuning and amplitude must be 1D arrays of equal length >= 4")
        step = np.diff(grid)
        if np.any(step <= 0) or not np.allclose(step, step[0], rtol=1e-9, atol=0):
            raise ValueError("detuning grid must be uniform and increasing")
        if not np.allclose(grid, -grid[::-1], rtol=0, atol=1e-9 * step[0]):
            raise ValueError("detuning grid must be symmetric about zero")
        norm = np.sum(np.abs(amp) ** 2) * step[0]
        if not abs(norm - 1.0) < 1e-9:
            raise NormalizationError(f"sum |f|^2 dOmega = {norm:.12g}, expected 1")
        object.__setattr__(self, "detuning", grid)
        object.__setattr__(self, "amplitude", amp)

    @classmethod
    def normalized(cls, pump_frequency: float, detuning, amplitude, **kwargs) -> "BiphotonState":
        grid = np.asarray(detuning, dtype=float)
        amp = np.asarray(amplitude, dtype=complex)
        step = grid[1] - grid[0]
        norm = np.sum(np.abs(amp) ** 2) * step
        if not (np.isfinite(norm) and norm > 0):
            raise NormalizationError(
                f"amplitude vanishes on the detuning grid [{grid[0]:.3e}, {grid[-1]:.3e}] rad/s"
            )
        return cls(pump_frequency, grid, amp / np.sqrt(norm), **kwargs)

    @property
    def step(self) -> float:
        return float(self.detuning[1] - self.detuning[0])

    @property
    def omega0(self) -> float:
        return 0.5 * self.pump_frequency

    @property
    def pump_wavelength(self) -> float:
        return TWO_PI_C / self.pump_frequency

    @property
    def signal_wavelength(self) -> np.ndarray:
        """Wavelength of photon 1 (TE) at every grid point."""
        return TWO_PI_C / (self.omega0 + self.detuning)

    @property
    def idler_wavelength(self) -> np.ndarray:
        return TWO_PI_C / (self.omega0 - self.detuning)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density) * self.step)

    def mirrored(self) -> np.ndarray:
        """f(-Omega) on the same grid."""
        return self.amplitude[::-1]

    def asymmetry(self) -> float:
        """Integral of (|f(Omega)| - |f(-Omega)|)^2."""
        a = np.abs(self.amplitude)
        return float(np.sum((a - a[::-1]) ** 2) * self.step)

    def bandwidth(self, level: float = 0.5) -> float:
        """Full width (m, signal wavelength) of |f|^2 at ``level`` of its maximum."""
        dens = self.density / self.density.max()
        lam = self.signal_wavelength
        above = np.nonzero(dens >= level)[0]
        lo, hi = above[0], above[-1]
        if lo == 0 or hi == dens.size - 1:
            raise ValueError("spectrum not resolved: level crossing at the grid edge")

        def cross(i, j):  # linear interpolation between samples i (below) and j (above)
            t = (level - dens[i]) / (dens[j] - dens[i])
            return lam[i] + t * (lam[j] - lam[i])

        return float(abs(cross(hi + 1, hi) - cross(lo - 1, lo)))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["detuning_rad_s", "wavelength_signal_nm", "re_f", "im_f", "abs2_f"])
            for om, lam, f in zip(self.detuning, self.signal_wavelength, self.amplitude):
                writer.writerow([f"{om:.10e}", f"{lam * 1e9:.6f}", f"{f.real:.12e}", f"{f.imag:.12e}", f"{abs(f) ** 2:.12e}"])


def default_grid(params: SourceParams, points: int = DEFAULT_POINTS, span: float = 3.0) -> np.ndarray:
    """Symmetric detuning grid covering ``span`` times the 1/e^2 full width on each side."""
    if points < 4 or points % 2:
        raise ValueError("grid needs an even number (>= 4) of points")
    full_width = 4 * _sinc_level_root(_LEVELS["e2"]) / abs(params.dk1 * params.length)
    shift = abs(params.delta / params.dk1) if params.dk1 else 0.0
    half = span * full_width + shift
    step = 2 * half / points
    return (np.arange(points) - (points - 1) / 2) * step


def biphoton_amplitude(
    params: SourceParams,
    delta_beta,
    detuning,
    pump_wavelength: float = DEFAULT_PUMP_WAVELENGTH,
    spectral_phase: bool = True,
) -> BiphotonState:
    """Normalized sinc amplitude from a sampled phase mismatch."""
    arg = 0.5 * np.asarray(delta_beta, dtype=float) * params.length
    amp = np.sinc(arg / np.pi).astype(complex)
    if spectral_phase:
        amp = amp * np.exp(1j * arg)
    return BiphotonState.normalized(
        TWO_PI_C / pump_wavelength,
        detuning,
        amp,
        delay_reference=params.walkoff_delay if spectral_phase else 0.0,
    )


def generate_state(
    params: SourceParams,
    pump_wavelength: float = DEFAULT_PUMP_WAVELENGTH,
    points: int = DEFAULT_POINTS,
    detuning=None,
    spectral_phase: bool = True,
) -> BiphotonState:
    """Surrogate phase mismatch sampled on the default (or a given) grid."""
    grid = default_grid(params, points) if detuning is None else np.asarray(detuning, dtype=float)
    return biphoton_amplitude(params, phase_mismatch(params, grid), grid, pump_wavelength, spectral_phase)


def filter_transmission(wavelength, center: float, width: float, order: int = 4):
    """Super-Gaussian power transmission, FWHM ``width``; order 1 is Gaussian."""
    if not (width > 0 and order >= 1):
        raise ValueError("filter width must be > 0 and order >= 1")
    if np.isinf(width):
        return np.ones_like(np.asarray(wavelength, dtype=float))
    x = 2 * (np.asarray(wavelength, dtype=float) - center) / width
    return np.exp(-np.log(2.0) * np.abs(x) ** (2 * order))


def apply_filter(state: BiphotonState, center: float, width: float, order: int = 4) -> BiphotonState:
    """Filter both photons; the pair survives only if both are transmitted."""
    t = filter_transmission(state.signal_wavelength, center, width, order) * filter_transmission(
        state.idler_wavelength, center, width, order
    )
    amp = state.amplitude * np.sqrt(t)
    surviving = float(np.sum(np.abs(amp) ** 2) * state.step)
    if not surviving > 0:
        raise NormalizationError(
            f"filter at {center * 1e9:.2f} nm (width {width * 1e9:.2f} nm) transmits no pairs on the grid"
        )
    return BiphotonState.normalized(
        state.pump_frequency,
        state.detuning,
        amp,
        delay_reference=state.delay_reference,
        pair_transmission=state.pair_transmission * surviving,
    )


def calibrate_asymmetry(
    target_visibility: float,
    params: SourceParams | None = None,
    pump_wavelength: float = DEFAULT_PUMP_WAVELENGTH,
    points: int = DEFAULT_POINTS,
    tol: float = 1e-6,
) -> float:
    """delta >= 0 giving the requested HOM visibility with a perfect splitter.

    Bisection over [0, pi / L], on which the visibility falls monotonically
    from 1 to 0 for the sinc amplitude.
    """
    from .hom import perfect_splitting, visibility_of

    if not 0.5 < target_visibility <= 1.0:
        raise CalibrationError(f"target visibility must lie in (0.5, 1], got {target_visibility}")
    params = params or SourceParams.for_bandwidth(pump_wavelength=pump_wavelength)
    if target_visibility == 1.0:
        return 0.0

    def vis(delta):
        p = replace(params, delta=delta)
        state = generate_state(p, pump_wavelength, points)
        return visibility_of(state, perfect_splitting(state))

    hi = np.pi / params.length
    f_lo, f_hi = 1.0 - target_visibility, vis(hi) - target_visibility
    if f_lo * f_hi > 0:
        raise CalibrationError(f"visibility {target_visibility} not reachable for delta in [0, {hi:.4g}] rad/m")
    return float(bisect(lambda d: vis(d) - target_visibility, 0.0, hi, xtol=tol / params.length))


# ---------------------------------------------------------------------------
# Phase matching versus guide width
# ---------------------------------------------------------------------------


def index_mismatch(stack, width: float, pump_wavelength: float, offset: float = 0.0) -> float:
    """n_pump + offset - (n_TE + n_TM) / 2; zero at phase matching of the degenerate pair."""
    from .modes import bragg_pump_index, effective_index_profile, single_guide_index

    n_pump = bragg_pump_index(stack, pump_wavelength, width, offset)
    lam_s = 2 * pump_wavelength
    n_pair = [
        single_guide_index(effective_index_profile(stack, None, lam_s, pol, width=width), lam_s) for pol in ("TE", "TM")
    ]
    return float(n_pump - 0.5 * sum(n_pair))


def model_pm_wavelength(stack, width: float, offset: float, bracket=(740e-9, 800e-9)) -> float:
    """Pump wavelength at which :func:`index_mismatch` vanishes."""
    try:
        return float(brentq(lambda lam: index_mismatch(stack, width, lam, offset), *bracket, xtol=1e-13))
    except ValueError as exc:
        raise CalibrationError(
            f"no phase matching for w={width:.3e} m with offset {offset:.5f} in "
            f"[{bracket[0] * 1e9:.1f}, {bracket[1] * 1e9:.1f}] nm"
        ) from exc


def calibrate_pump_offset(stack, anchors: Sequence[tuple[float, float]] = PM_ANCHORS, bounds=(0.0, 0.2)) -> float:
    """Single pump-index offset minimizing the squared anchor misfit."""

    def misfit(offset):
        try:
            return sum((model_pm_wavelength(stack, w, offset) - lam) ** 2 for w, lam in anchors) * 1e18
        except CalibrationError:
            return 1e6

    res = minimize_scalar(misfit, bounds=bounds, method="bounded", options={"xatol": 1e-7})
    return float(res.x)


@dataclass(frozen=True)
class PhaseMatchingCurve:
    """Model phase-matching wavelength versus width, mapped affinely onto the anchors."""

    widths: np.ndarray
    model_wavelengths: np.ndarray
    offset: float
    anchors: tuple[tuple[float, float], ...] = PM_ANCHORS

    def __post_init__(self):
        w = np.asarray(self.widths, dtype=float)
        lam = np.asarray(self.model_wavelengths, dtype=float)
        if np.any(np.diff(w) <= 0):
            raise ValueError("widths must increase")
        if not (np.all(np.diff(lam) < 0) or np.all(np.diff(lam) > 0)):
            raise ValueError("model phase-matching curve is not monotone")
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "model_wavelengths", lam)

    @property
    def _interp(self):
        return PchipInterpolator(self.widths, self.model_wavelengths)

    @property
    def affine(self) -> tuple[float, float]:
        """(a, b) with a + b * model(w) exact at both anchors."""
        (w1, l1), (w2, l2) = self.anchors
        m1, m2 = self._interp([w1, w2])
        b = (l1 - l2) / (m1 - m2)
        return float(l1 - b * m1), float(b)

    def anchor_residuals(self) -> np.ndarray:
        """Uncorrected model minus anchor wavelength (m)."""
        return np.array([self._interp(w) - lam for w, lam in self.anchors])

    def __call__(self, width):
        w = np.asarray(width, dtype=float)
        lo, hi = self.widths[0], self.widths[-1]
        if np.any(~np.isfinite(w)) or np.any((w < lo) | (w > hi)):
            raise MaterialDomainError(f"width outside the calibrated range [{lo:.3e}, {hi:.3e}] m: {width}")
        a, b = self.affine
        out = a + b * self._interp(w)
        return float(out) if out.ndim == 0 else out

    def to_mapping(self) -> dict:
        return {
            "offset": self.offset,
            "anchors_m": [list(a) for a in self.anchors],
            "widths_m": self.widths.tolist(),
            "model_wavelengths_m": self.model_wavelengths.tolist(),
        }

    @classmethod
    def from_mapping(cls, raw: dict) -> "PhaseMatchingCurve":
        return cls(
            widths=np.array(raw["widths_m"], dtype=float),
            model_wavelengths=np.array(raw["model_wavelengths_m"], dtype=float),
            offset=float(raw["offset"]),
            anchors=tuple(tuple(float(v) for v in a) for a in raw["anchors_m"]),
        )


def build_phase_matching_curve(stack, widths=None, anchors=PM_ANCHORS) -> PhaseMatchingCurve:
    """Calibrate the pump offset and tabulate the model curve (slow: ~1 min)."""
    widths = np.linspace(*PM_WIDTH_RANGE, 11) if widths is None else np.asarray(widths, dtype=float)
    offset = calibrate_pump_offset(stack, anchors)
    lam = np.array([model_pm_wavelength(stack, w, offset) for w in widths])
    return PhaseMatchingCurve(widths, lam, offset, tuple(anchors))


@lru_cache(maxsize=None)
def default_phase_matching() -> PhaseMatchingCurve:
    source = resources.files("pairsplit") / "data" / "phase_matching.yaml"
    with source.open() as fh:
        return PhaseMatchingCurve.from_mapping(yaml.safe_load(fh))


def pm_pump_wavelength(width) -> float:
    """Phase-matched pump wavelength (m) of a generation guide of ``width`` (m), 1-6 um."""
    return default_phase_matching()(width)
