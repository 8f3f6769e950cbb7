"""Hong-Ou-Mandel interference behind a frequency-dependent polarizing splitter.

Photon 1 (H) sits at omega_0 + Omega, photon 2 (V) at omega_0 - Omega. With
the CW-pump amplitude f(Omega) and splitting ratios s_H(omega), s_V(omega)
the coincidence probability splits into a separated and a bunched part:

    P_sep   = 1/4 sum_br int |A_br(Omega) e^{-2i Omega tau} - A_br(-Omega)|^2 dOmega
              A_sep1 = f(Omega) sqrt(s_H(w0+Omega) s_V(w0-Omega))
              A_sep2 = f(Omega) sqrt((1-s_H(w0+Omega)) (1-s_V(w0-Omega)))
    P_bunch = 1/2 int |u(Omega) e^{-i omega_p tau} - v(Omega)|^2 dOmega
              u = f(Omega) sqrt(s_H(w0+Omega) (1-s_V(w0-Omega)))
              v = f(-Omega) sqrt((1-s_H(w0-Omega)) s_V(w0+Omega))

P_bunch = const - Re(Y e^{-i omega_p tau}) oscillates at the pump period. A
centred boxcar of width T multiplies the oscillating part by
sinc(omega_p T / 2), which is how the experimental curve P_exp is formed.
Delays are measured from the walk-off delay stored in the state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coupler import SplittingSpectrum
from .source import TWO_PI_C, BiphotonState, SourceParams

DEFAULT_WINDOW = 30e-15
PLATEAU_FRACTION = 0.2
PLATEAU_TOLERANCE = 0.01


class CoverageError(ValueError):
    """Splitting functions do not cover the frequencies carried by the state."""


class PlateauError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


class DegenerateProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class SplittingFunctions:
    """s_H(omega), s_V(omega) sampled on an increasing angular-frequency grid."""

    frequency: np.ndarray
    s_h: np.ndarray
    s_v: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.frequency, dtype=float)
        sh = np.asarray(self.s_h, dtype=float)
        sv = np.asarray(self.s_v, dtype=float)
        if not (om.ndim == 1 and om.shape == sh.shape == sv.shape and om.size >= 2):
            raise ValueError("splitting functions need 1D arrays of equal length >= 2")
        if np.any(np.diff(om) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        for name, arr in (("s_h", sh), ("s_v", sv)):
            if np.any(~np.isfinite(arr)) or np.any((arr < 0) | (arr > 1)):
                raise ValueError(f"{name} samples must lie in [0, 1]")
        object.__setattr__(self, "frequency", om)
        object.__setattr__(self, "s_h", sh)
        object.__setattr__(self, "s_v", sv)

    @classmethod
    def from_spectrum(cls, spectrum: SplittingSpectrum) -> "SplittingFunctions":
        """TE -> H, TM -> V, reordered onto increasing frequency."""
        om = TWO_PI_C / spectrum.wavelength
        return cls(om[::-1], spectrum.s_te[::-1], spectrum.s_tm[::-1])

    @classmethod
    def constant(cls, s_h: float, s_v: float, lo: float, hi: float) -> "SplittingFunctions":
        return cls(np.array([lo, hi]), np.full(2, float(s_h)), np.full(2, float(s_v)))

    def __call__(self, omega) -> tuple[np.ndarray, np.ndarray]:
        om = np.asarray(omega, dtype=float)
        lo, hi = self.frequency[0], self.frequency[-1]
        tol = 1e-12 * hi
        if np.any(om < lo - tol) or np.any(om > hi + tol):
            missing_lo, missing_hi = float(om.min()), float(om.max())
            raise CoverageError(
                f"splitting data cover [{TWO_PI_C / hi * 1e9:.2f}, {TWO_PI_C / lo * 1e9:.2f}] nm but the state "
                f"needs [{TWO_PI_C / missing_hi * 1e9:.2f}, {TWO_PI_C / missing_lo * 1e9:.2f}] nm"
            )
        # clip: interp rounding can step just outside [0, 1] and 1 - s would go negative
        s_h = np.clip(np.interp(om, self.frequency, self.s_h), 0.0, 1.0)
        s_v = np.clip(np.interp(om, self.frequency, self.s_v), 0.0, 1.0)
        return s_h, s_v


def perfect_splitting(state: BiphotonState, s: float = 1.0) -> SplittingFunctions:
    """Frequency-independent s_H = s_V = ``s`` covering the state's support."""
    om = state.omega0 + state.detuning
    return SplittingFunctions.constant(s, s, float(om.min()), float(om.max()))


@dataclass(frozen=True)
class HomInterferogram:
    tau: np.ndarray
    p_sep: np.ndarray
    p_bunch: np.ndarray
    p_exp: np.ndarray
    window: float = DEFAULT_WINDOW

    @property
    def c_ref(self) -> float:
        return plateau_level(self)

    @property
    def c_min(self) -> float:
        return float(np.min(self.p_exp))

    @property
    def visibility(self) -> float:
        return visibility(self)

    @property
    def fwhm(self) -> float:
        return dip_width(self)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau_fs", "p_sep", "p_bunch", "p_exp"])
            for row in zip(self.tau * 1e15, self.p_sep, self.p_bunch, self.p_exp):
                writer.writerow([f"{row[0]:.6f}", *(f"{v:.12e}" for v in row[1:])])


def delay_grid(span: float = 1e-12, points: int = 801) -> np.ndarray:
    """Symmetric delay grid [-span, span] (s)."""
    return np.linspace(-span, span, points)


def _branches(state: BiphotonState, s: SplittingFunctions):
    w0 = state.omega0
    sh_p, sv_p = s(w0 + state.detuning)
    sh_m, sv_m = s(w0 - state.detuning)
    f, f_rev = state.amplitude, state.mirrored()
    a = f * np.sqrt(sh_p * sv_m)
    b = f * np.sqrt((1 - sh_p) * (1 - sv_m))
    u = f * np.sqrt(sh_p * (1 - sv_m))
    v = f_rev * np.sqrt((1 - sh_m) * sv_p)
    return a, b, u, v


def _exchange_overlap(amp: np.ndarray, detuning: np.ndarray, tau: np.ndarray, step: float) -> np.ndarray:
    """sum_Omega amp(Omega) conj(amp(-Omega)) exp(-2i Omega tau) dOmega for every tau."""
    kernel = amp * np.conj(amp[::-1])
    out = np.empty(tau.size, dtype=complex)
    for lo in range(0, tau.size, 256):
        t = tau[lo : lo + 256]
        out[lo : lo + 256] = np.exp(-2j * np.outer(t, detuning)) @ kernel
    return out * step


def coincidence_probability(
    state: BiphotonState,
    s: SplittingFunctions,
    tau=None,
    window: float = DEFAULT_WINDOW,
) -> HomInterferogram:
    """Separated, bunched and delay-averaged coincidence probabilities versus delay."""
    tau = delay_grid() if tau is None else np.asarray(tau, dtype=float)
    t = tau + state.delay_reference
    a, b, u, v = _branches(state, s)
    h = state.step
    n_a, n_b = np.sum(np.abs(a) ** 2) * h, np.sum(np.abs(b) ** 2) * h
    p_sep = 0.5 * (n_a + n_b - np.real(_exchange_overlap(a, state.detuning, t, h) + _exchange_overlap(b, state.detuning, t, h)))
    n_u, n_v = np.sum(np.abs(u) ** 2) * h, np.sum(np.abs(v) ** 2) * h
    y = np.sum(u * np.conj(v)) * h
    osc = np.real(y * np.exp(-1j * state.pump_frequency * t))
    p_bunch = 0.5 * (n_u + n_v) - osc
    damping = np.sinc(state.pump_frequency * window / (2 * np.pi))  # sin(x)/x at x = omega_p T / 2
    p_exp = p_sep + 0.5 * (n_u + n_v) - damping * osc
    return HomInterferogram(tau, _clip(p_sep), _clip(p_bunch), _clip(p_exp), window)


def with_polarizers(
    state: BiphotonState,
    s: SplittingFunctions,
    tau=None,
    window: float = DEFAULT_WINDOW,
) -> HomInterferogram:
    """Interferogram with an H polarizer on arm a and a V polarizer on arm b.

    Only the H-in-a / V-in-b branch reaches the 50/50 splitter; the curve is
    renormalized by the probability that a pair survives the polarizers.
    """
    tau = delay_grid() if tau is None else np.asarray(tau, dtype=float)
    t = tau + state.delay_reference
    a, _, _, _ = _branches(state, s)
    h = state.step
    surviving = np.sum(np.abs(a) ** 2) * h
    if surviving < 1e-9:
        raise DegenerateProjectionError(f"only {surviving:.3e} of the pairs survive the polarizers")
    p_sep = 0.5 * (surviving - np.real(_exchange_overlap(a, state.detuning, t, h))) / surviving
    p_sep = _clip(p_sep)
    return HomInterferogram(tau, p_sep, np.zeros_like(p_sep), p_sep.copy(), window)


def _clip(p: np.ndarray) -> np.ndarray:
    # round-off only; the expressions are bounded by construction
    return np.clip(p, 0.0, 1.0)


def plateau_level(ig: HomInterferogram) -> float:
    """Mean of the outer 20% of the averaged curve (10% at each end)."""
    n = max(1, int(round(0.5 * PLATEAU_FRACTION * ig.p_exp.size)))
    outer = np.concatenate([ig.p_exp[:n], ig.p_exp[-n:]])
    mean = float(np.mean(outer))
    spread = float(np.ptp(outer))
    if mean <= 0 or spread > PLATEAU_TOLERANCE * mean:
        raise PlateauError(
            f"no plateau: outer samples vary by {spread / max(mean, 1e-300):.2%} (> 1%); use a longer delay grid"
        )
    return mean


def visibility(ig: HomInterferogram) -> float:
    """(C_ref - C_min) / C_ref of the delay-averaged curve."""
    c_ref = plateau_level(ig)
    return float((c_ref - np.min(ig.p_exp)) / c_ref)


def dip_width(ig: HomInterferogram) -> float:
    """Full width at half depth of C_ref - P_exp (s), by linear interpolation."""
    c_ref = plateau_level(ig)
    depth = c_ref - ig.p_exp
    i_min = int(np.argmax(depth))
    half = 0.5 * depth[i_min]
    if not half > 0:
        raise ResolutionError("no dip: the curve never falls below its plateau")
    below = depth >= half
    lo = i_min
    while lo > 0 and below[lo - 1]:
        lo -= 1
    hi = i_min
    while hi < depth.size - 1 and below[hi + 1]:
        hi += 1
    if lo == 0 or hi == depth.size - 1 or hi - lo < 2:
        raise ResolutionError("dip not resolved by the delay grid; refine or extend it")

    def cross(i, j):
        f = (half - depth[i]) / (depth[j] - depth[i])
        return ig.tau[i] + f * (ig.tau[j] - ig.tau[i])

    return float(cross(hi + 1, hi) - cross(lo - 1, lo))


def visibility_of(state: BiphotonState, s: SplittingFunctions, tau=None, polarizers: bool = False) -> float:
    if tau is None:
        tau = delay_grid(max(1e-12, 20 * abs(state.delay_reference)), 801)
    fn = with_polarizers if polarizers else coincidence_probability
    return visibility(fn(state, s, tau))


def franson_period(state: BiphotonState) -> float:
    """Period (s) of the bunched-term oscillation, 2 pi / omega_p."""
    return 2 * np.pi / state.pump_frequency


def mixture(interferograms, weights) -> HomInterferogram:
    """Interferogram of an incoherent mixture of states (probabilities add)."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, rtol=0, atol=1e-12):
        raise ValueError("mixture weights must be >= 0 and sum to 1")
    first = interferograms[0]
    if any(ig.tau.shape != first.tau.shape or np.any(ig.tau != first.tau) for ig in interferograms):
        raise ValueError("interferograms must share one delay grid")
    comb = {k: sum(w * getattr(ig, k) for w, ig in zip(weights, interferograms)) for k in ("p_sep", "p_bunch", "p_exp")}
    return HomInterferogram(first.tau, window=first.window, **comb)


def distinguishable(state: BiphotonState) -> BiphotonState:
    """Pair with the same photon-1 spectrum support on Omega > 0 only, so no exchange overlap survives."""
    amp = np.where(state.detuning > 0, state.amplitude, 0.0)
    return BiphotonState.normalized(state.pump_frequency, state.detuning, amp, delay_reference=state.delay_reference)


# ---------------------------------------------------------------------------
# 2D oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Jsa2D:
    """Joint spectral amplitude on a square grid omega_i = omega_0 + x_i (both photons)."""

    omega0: float
    offsets: np.ndarray
    amplitude: np.ndarray  # [i, j] -> C(omega_0 + x_i, omega_0 + x_j)
    delay_reference: float = 0.0

    @property
    def step(self) -> float:
        return float(self.offsets[1] - self.offsets[0])

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.step**2)


def narrow_pump_jsa(
    params: SourceParams,
    pump_wavelength: float,
    offsets,
    envelope_width: float,
    spectral_phase: bool = True,
) -> Jsa2D:
    """C(w1, w2) = alpha(w1 + w2 - w_p) * f((w1 - w2) / 2) with a Gaussian pump envelope.

    ``envelope_width`` is the 1/e amplitude half-width of alpha (rad/s).
    """
    from .source import phase_mismatch

    x = np.asarray(offsets, dtype=float)
    w_p = TWO_PI_C / pump_wavelength
    xi, xj = np.meshgrid(x, x, indexing="ij")
    omega = 0.5 * (xi - xj)
    arg = 0.5 * phase_mismatch(params, omega) * params.length
    f = np.sinc(arg / np.pi).astype(complex)
    if spectral_phase:
        f = f * np.exp(1j * arg)
    alpha = np.exp(-0.5 * ((xi + xj) / envelope_width) ** 2)
    amp = alpha * f
    h = x[1] - x[0]
    amp = amp / np.sqrt(np.sum(np.abs(amp) ** 2) * h * h)
    return Jsa2D(0.5 * w_p, x, amp, params.walkoff_delay if spectral_phase else 0.0)


def oracle_2d(jsa: Jsa2D, s: SplittingFunctions, tau=None, window: float = DEFAULT_WINDOW) -> HomInterferogram:
    """Direct double-sum evaluation of the separated and bunched probabilities.

    Memory: a handful of N x N complex arrays (N = 256 -> ~1 MB each).
    """
    tau = delay_grid() if tau is None else np.asarray(tau, dtype=float)
    h = jsa.step
    om = jsa.omega0 + jsa.offsets
    sh, sv = s(om)
    c12 = jsa.amplitude
    c21 = c12.T
    sh1, sh2 = sh[:, None], sh[None, :]
    sv1, sv2 = sv[:, None], sv[None, :]
    w1, w2 = om[:, None], om[None, :]
    sep_a = (c12 * np.sqrt(sh1 * sv2), c21 * np.sqrt(sh2 * sv1))
    sep_b = (c12 * np.sqrt((1 - sh1) * (1 - sv2)), c21 * np.sqrt((1 - sh2) * (1 - sv1)))
    bun = (c12 * np.sqrt(sh1 * (1 - sv2)), c21 * np.sqrt((1 - sh2) * sv1))
    total = w1 + w2
    damping = np.sinc(total * window / (2 * np.pi))
    p_sep = np.empty(tau.size)
    p_bunch = np.empty(tau.size)
    p_avg = np.empty(tau.size)
    for k, t in enumerate(tau + jsa.delay_reference):
        ph = np.exp(-1j * (w1 - w2) * t)
        p_sep[k] = 0.25 * h * h * sum(np.sum(np.abs(x1 * ph - x2) ** 2) for x1, x2 in (sep_a, sep_b))
        pb = np.exp(-1j * total * t)
        x1, x2 = bun
        p_bunch[k] = 0.5 * h * h * np.sum(np.abs(x1 * pb - x2) ** 2)
        # exact boxcar mean of |x1 e^{-i(w1+w2)t'} - x2|^2 over t' in [t - T/2, t + T/2]
        p_avg[k] = 0.5 * h * h * np.sum(
            np.abs(x1) ** 2 + np.abs(x2) ** 2 - 2 * damping * np.real(x1 * np.conj(x2) * pb)
        )
    return HomInterferogram(tau, _clip(p_sep), _clip(p_bunch), _clip(p_sep + p_avg), window)
