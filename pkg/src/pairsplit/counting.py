"""Photon-counting observables: pair-splitting configurations and count rates.

Two photons leave the splitter in one of four configurations (H photon to arm
a or b, V photon to arm a or b). Their probabilities are overlaps of the
biphoton density with products of the splitting ratios. Count rates follow a
leading-order model: the pair rate is linear in pump power, every detected
photon passes one loss/collection/detection chain, and accidentals are the
product of the two singles rates times the coincidence window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .hom import SplittingFunctions
from .source import BiphotonState

CONFIG_LABELS = ("split", "both_b", "both_a", "swapped")


class WindowError(ValueError):
    """Coincidence window is zero or negative, so accidentals are undefined."""


@dataclass(frozen=True)
class EfficiencyBudget:
    """Loss and efficiency chain between pair generation and the detectors.

    Parameters
    ----------
    eta : float
        Collection efficiency of each arm.
    eta_det : float
        Detector efficiency.
    alpha_te, alpha_tm : float
        Propagation loss coefficients (1/m).
    length : float
        Propagation length (m).
    window : float
        Coincidence window (s).
    pair_rate_per_mw : float
        Internal pair rate per mW of pump power (pairs/s/mW).
    """

    eta: float = 0.117
    eta_det: float = 0.85
    alpha_te: float = 90.0  # 0.9 /cm
    alpha_tm: float = 150.0  # 1.5 /cm
    length: float = 7e-3
    window: float = 1e-9
    pair_rate_per_mw: float = 1.2e7

    def violations(self) -> list[str]:
        out = []
        for name in ("eta", "eta_det"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name}: must lie in [0, 1], got {v}")
        for name in ("alpha_te", "alpha_tm", "length", "pair_rate_per_mw"):
            v = getattr(self, name)
            if not v >= 0.0:
                out.append(f"{name}: must be >= 0, got {v}")
        if not self.window > 0.0:
            out.append(f"window: must be > 0, got {self.window}")
        return out

    @property
    def transmission_te(self) -> float:
        return float(np.exp(-self.alpha_te * self.length))

    @property
    def transmission_tm(self) -> float:
        return float(np.exp(-self.alpha_tm * self.length))

    def to_mapping(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ConfigurationProbabilities:
    p_split: float  # H -> a, V -> b
    p_both_b: float
    p_both_a: float
    p_swapped: float  # H -> b, V -> a

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_split, self.p_both_b, self.p_both_a, self.p_swapped)

    @property
    def total(self) -> float:
        return float(sum(self.as_tuple()))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["config_label", "probability"])
            for label, p in zip(CONFIG_LABELS, self.as_tuple()):
                w.writerow([label, f"{p:.12f}"])


def four_config_probabilities(state: BiphotonState, s: SplittingFunctions) -> ConfigurationProbabilities:
    """Probabilities of the four output configurations of the pair."""
    sh, _ = s(state.omega0 + state.detuning)
    _, sv = s(state.omega0 - state.detuning)
    rho = state.density / state.density.sum()
    p_split = float(rho @ (sh * sv))
    p_both_b = float(rho @ ((1 - sh) * sv))
    p_both_a = float(rho @ (sh * (1 - sv)))
    # remainder keeps the unit sum exact; analytically rho @ ((1-sh)(1-sv))
    p_swapped = 1.0 - p_split - p_both_b - p_both_a
    return ConfigurationProbabilities(p_split, p_both_b, p_both_a, max(p_swapped, 0.0))


@dataclass(frozen=True)
class CountTable:
    pump_mw: np.ndarray
    pair_rate: np.ndarray
    singles_a: np.ndarray
    singles_b: np.ndarray
    coincidences: np.ndarray
    accidentals: np.ndarray
    car: np.ndarray  # nan where undefined (zero power)

    @property
    def car_defined(self) -> np.ndarray:
        return np.isfinite(self.car)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pump_mw", "coincidences_hz", "accidentals_hz", "car"])
            for row in zip(self.pump_mw, self.coincidences, self.accidentals, self.car):
                w.writerow([f"{v:.9g}" for v in row])


def count_rates(budget: EfficiencyBudget, pump_mw) -> CountTable:
    """Singles, coincidences, accidentals and CAR over a pump-power grid (mW).

    Zero power gives zero rates and an undefined (nan) CAR. A vanishing
    accidental rate at non-zero power gives ``inf``.
    """
    if not budget.window > 0:
        raise WindowError(f"coincidence window must be > 0, got {budget.window}")
    bad = budget.violations()
    if bad:
        raise ValueError("; ".join(bad))
    p = np.atleast_1d(np.asarray(pump_mw, dtype=float))
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("pump powers must be finite and >= 0")
    rate = budget.pair_rate_per_mw * p
    chain = budget.eta * budget.eta_det
    singles_a = rate * budget.transmission_te * chain
    singles_b = rate * budget.transmission_tm * chain
    coinc = rate * budget.transmission_te * budget.transmission_tm * chain**2
    acc = singles_a * singles_b * budget.window
    with np.errstate(divide="ignore", invalid="ignore"):
        car = np.where(coinc > 0, coinc / acc, np.nan)
    return CountTable(p, rate, singles_a, singles_b, coinc, acc, car)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
