"""Refractive index of Al(x)Ga(1-x)As below the direct gap.

The dispersion follows the modified single-oscillator form of Afromowitz,

    eps(E) = 1 + Ed/E0 + Ed E^2/E0^3 + eta E^4/pi * ln((2 E0^2 - Eg^2 - E^2) / (Eg^2 - E^2))
    eta    = pi Ed / (2 E0^3 (E0^2 - Eg^2))

with E0, Ed and Eg quadratic in the aluminium fraction. Coefficients live in
``data/afromowitz.yaml``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

#: eV * m, photon energy = HC_EV_M / wavelength
HC_EV_M = 1.239841984e-6


class MaterialDomainError(ValueError):
    """Raised when (x, wavelength) falls outside the dispersion model's domain."""


@dataclass(frozen=True)
class AlloyDispersionModel:
    name: str
    oscillator_energy: tuple[float, float, float]
    dispersion_energy: tuple[float, float, float]
    gap_energy: tuple[float, float, float]
    window: tuple[float, float]
    gap_margin: float = 0.02

    @classmethod
    def from_file(cls, path: str | Path) -> "AlloyDispersionModel":
        with open(path) as fh:
            raw = yaml.safe_load(fh)
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict) -> "AlloyDispersionModel":
        coeffs = raw["coefficients"]
        lo, hi = raw["window_m"]
        return cls(
            name=raw["model"],
            oscillator_energy=tuple(float(c) for c in coeffs["oscillator_energy_ev"]),
            dispersion_energy=tuple(float(c) for c in coeffs["dispersion_energy_ev"]),
            gap_energy=tuple(float(c) for c in coeffs["gap_energy_ev"]),
            window=(float(lo), float(hi)),
            gap_margin=float(raw.get("gap_margin_ev", 0.0)),
        )

    @staticmethod
    def _poly(c, x):
        return c[0] + c[1] * x + c[2] * x * x

    def gap(self, x):
        """Direct band gap (eV) at aluminium fraction ``x``."""
        return self._poly(self.gap_energy, x)

    def check(self, x, wavelength):
        x = np.asarray(x, dtype=float)
        wavelength = np.asarray(wavelength, dtype=float)
        if np.any(~np.isfinite(x)) or np.any((x < 0.0) | (x > 1.0)):
            raise MaterialDomainError(f"aluminium fraction outside [0, 1]: {x}")
        lo, hi = self.window
        if np.any(~np.isfinite(wavelength)) or np.any((wavelength < lo) | (wavelength > hi)):
            raise MaterialDomainError(
                f"wavelength outside {self.name} window [{lo:.3e}, {hi:.3e}] m: {wavelength}"
            )
        energy = HC_EV_M / wavelength
        if np.any(energy >= self.gap(x) - self.gap_margin):
            raise MaterialDomainError(
                f"photon energy at or above the Al{float(np.max(x)):.2f}GaAs absorption edge "
                f"(lambda={wavelength} m)"
            )

    def index(self, x, wavelength):
        """Real refractive index. Broadcasts over ``x`` and ``wavelength``."""
        self.check(x, wavelength)
        x = np.asarray(x, dtype=float)
        energy = HC_EV_M / np.asarray(wavelength, dtype=float)
        e0 = self._poly(self.oscillator_energy, x)
        ed = self._poly(self.dispersion_energy, x)
        eg = self._poly(self.gap_energy, x)
        eta = np.pi * ed / (2.0 * e0**3 * (e0**2 - eg**2))
        e2 = energy * energy
        log_term = np.log((2.0 * e0**2 - eg**2 - e2) / (eg**2 - e2))
        eps = 1.0 + ed / e0 + ed * e2 / e0**3 + eta * e2 * e2 / np.pi * log_term
        n = np.sqrt(eps)
        return float(n) if n.ndim == 0 else n


@lru_cache(maxsize=None)
def default_model() -> AlloyDispersionModel:
    source = resources.files("pairsplit") / "data" / "afromowitz.yaml"
    with source.open() as fh:
        return AlloyDispersionModel.from_mapping(yaml.safe_load(fh))


def refractive_index(x, wavelength, model: AlloyDispersionModel | None = None):
    """Index of Al(x)Ga(1-x)As at ``wavelength`` (m).

    Raises :class:`MaterialDomainError` rather than extrapolating outside the
    fit window or above the absorption edge.
    """
    return (model or default_model()).index(x, wavelength)
