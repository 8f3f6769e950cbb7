"""Independent reference solutions used by several test modules."""

import numpy as np
from scipy.optimize import brentq


def symmetric_slab_fundamental(n_core, n_clad, thickness, wavelength, pol="TE"):
    """Fundamental even mode of a symmetric slab from the textbook dispersion relation.

    tan(kappa d / 2) = p gamma / kappa, p = 1 (TE) or n_core^2 / n_clad^2 (TM).
    """
    k0 = 2 * np.pi / wavelength
    p = 1.0 if pol == "TE" else (n_core / n_clad) ** 2

    def f(ne):
        kappa = k0 * np.sqrt(n_core**2 - ne**2)
        gamma = k0 * np.sqrt(ne**2 - n_clad**2)
        return np.tan(0.5 * kappa * thickness) - p * gamma / kappa

    # the fundamental has kappa d / 2 < pi / 2
    lo = np.sqrt(max(n_clad**2, n_core**2 - (np.pi / (k0 * thickness)) ** 2))
    eps = 1e-13
    return brentq(f, lo + eps, n_core - eps, xtol=1e-15)


def symmetric_slab_mode_count(n_core, n_clad, thickness, wavelength):
    """Number of guided TE modes, floor(V / (pi/2)) + 1 with V = k0 d NA / 2."""
    v = np.pi * thickness / wavelength * np.sqrt(n_core**2 - n_clad**2)
    return int(np.floor(v / (np.pi / 2))) + 1
