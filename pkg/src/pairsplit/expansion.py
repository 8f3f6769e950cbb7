"""Semi-vectorial supermodes of the coupled ridge pair by vertical-mode expansion.

The scalar effective-index reduction treats the ridge sidewall as a step in a
single lateral index and so misses the polarization dependence of the
sidewall discontinuity. That dependence sets the TE/TM beat-length ratio of
the coupler, so the coupler solves the semi-vectorial wave equation instead:

    TE (E = E_x):  d/dx[(1/eps) d/dx(eps E)] + d2E/dy2 + k0^2 eps E = beta^2 E
    TM (E = E_y):  d2E/dx2 + d/dy[(1/eps) d/dy(eps E)] + k0^2 eps E = beta^2 E

The field is expanded over a few vertical eigenmodes of the ridge and etched
columns (computed once per wavelength on a fine y grid), while x is
discretized by finite volumes with cell faces on the ridge edges. The
symmetry plane in the gap halves the domain; the even and odd problems give
the S and AS supermodes directly. Each solve is one sparse shift-invert
eigenproblem of size (lateral cells) x (basis size).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.linalg import eigh_tridiagonal

from .modes import CouplingError, LayerStack, ModeSolverError, Polarization, stack_profile

RIDGE, ETCHED = 0, 1


@dataclass(frozen=True)
class ExpansionSettings:
    """Discretization of the expansion solver (lengths in metres)."""

    dy: float = 5e-9
    below: float = 0.8e-6
    above: float = 1.0e-6
    n_basis: int = 8
    dx: float = 40e-9
    outer: float = 4.0e-6
    outer_cells: int = 40


DEFAULT_SETTINGS = ExpansionSettings()


@dataclass(frozen=True)
class VerticalBasis:
    pol: Polarization
    wavelength: float
    y: np.ndarray
    eps: tuple[np.ndarray, np.ndarray]  # ridge, etched column permittivity on the y grid
    basis: np.ndarray  # (n_y, n) orthonormal columns
    reduced: tuple[np.ndarray, np.ndarray]  # projected vertical operators
    n_top: tuple[float, float]  # fundamental index of each column

    @property
    def size(self) -> int:
        return self.basis.shape[1]

    def project(self, weight: np.ndarray) -> np.ndarray:
        return self.basis.T @ (weight[:, None] * self.basis)


def _column_eps(stack: LayerStack, wavelength: float, y: np.ndarray, dy: float, etched: bool, pol: Polarization):
    """Cell-averaged permittivity; arithmetic mean for TE, harmonic for TM."""
    prof = stack_profile(stack, wavelength)
    edges = np.concatenate([[-np.inf], prof.boundaries, [np.inf]])
    eps_layers = np.array([prof.n_low**2, *np.square(prof.indices), prof.n_high**2])
    if etched and stack.etch_depth > 0:
        top = prof.boundaries[-1]
        cut = np.searchsorted(edges, top - stack.etch_depth, side="right")
        edges = np.concatenate([edges[:cut], [top - stack.etch_depth, np.inf]])
        eps_layers = np.concatenate([eps_layers[:cut], [prof.n_high**2]])
    lo, hi = y - dy / 2, y + dy / 2
    overlap = np.clip(np.minimum(hi[:, None], edges[None, 1:]) - np.maximum(lo[:, None], edges[None, :-1]), 0, None)
    frac = overlap / dy
    if pol == "TE":
        return frac @ eps_layers
    return 1.0 / (frac @ (1.0 / eps_layers))


def _vertical_tridiagonal(eps: np.ndarray, dy: float, k0: float, pol: Polarization):
    """(sub, main, super) diagonals of the vertical operator acting on E, Dirichlet box ends."""
    n = eps.size
    if pol == "TE":
        off = np.full(n - 1, 1.0 / dy**2)
        return off, k0**2 * eps - 2.0 / dy**2, off
    den = 0.5 * dy * (eps[:-1] + eps[1:]) * dy
    sup = eps[1:] / den
    sub = eps[:-1] / den
    main = k0**2 * eps
    main[:-1] -= eps[:-1] / den
    main[1:] -= eps[1:] / den
    main[[0, -1]] -= 1.0 / dy**2
    return sub, main, sup


def _top_modes(sub, main, sup, count: int):
    """Largest eigenpairs of a tridiagonal matrix with positive off-diagonal products."""
    off = np.sqrt(sub * sup)
    # diagonal similarity S = D A D^-1 with d[k+1]/d[k] = sqrt(sub[k] / sup[k])
    d = np.concatenate([[1.0], np.cumprod(np.sqrt(sub / sup))])
    n = main.size
    vals, vecs = eigh_tridiagonal(main, off, select="i", select_range=(n - count, n - 1))
    vecs = vecs / d[:, None]
    return vals[::-1], vecs[:, ::-1]


@lru_cache(maxsize=64)
def vertical_basis(
    stack: LayerStack, wavelength: float, pol: Polarization, settings: ExpansionSettings = DEFAULT_SETTINGS
) -> VerticalBasis:
    k0 = 2 * np.pi / wavelength
    s = settings
    height = stack_profile(stack, wavelength).boundaries[-1]
    y = np.arange(-s.below, height + s.above, s.dy) + s.dy / 2
    eps = tuple(_column_eps(stack, wavelength, y, s.dy, etched, pol) for etched in (False, True))
    ops, vecs, n_top = [], [], []
    for e in eps:
        sub, main, sup = _vertical_tridiagonal(e, s.dy, k0, pol)
        ops.append(sp.diags([sub, main, sup], [-1, 0, 1], format="csr"))
        vals, v = _top_modes(sub, main, sup, s.n_basis)
        n_top.append(float(np.sqrt(vals[0]) / k0))
        vecs.append(v)
    u, sv, _ = np.linalg.svd(np.hstack(vecs), full_matrices=False)
    basis = u[:, sv > 1e-8 * sv[0]]
    reduced = tuple(basis.T @ (op @ basis) for op in ops)
    return VerticalBasis(pol, wavelength, y, eps, basis, reduced, (n_top[0], n_top[1]))


def _lateral_cells(width: float, gap: float, s: ExpansionSettings):
    n_gap = max(4, int(np.ceil(0.5 * gap / s.dx)))
    n_ridge = max(8, int(np.ceil(width / s.dx)))
    ridge_h = width / n_ridge
    outer = np.geomspace(ridge_h, 10 * ridge_h, s.outer_cells)
    outer *= s.outer / outer.sum()
    h = np.concatenate([np.full(n_gap, 0.5 * gap / n_gap), np.full(n_ridge, ridge_h), outer])
    kind = np.array([ETCHED] * n_gap + [RIDGE] * n_ridge + [ETCHED] * s.outer_cells)
    return h, kind


def _operator(vb: VerticalBasis, width: float, gap: float, parity: str, s: ExpansionSettings):
    h, kind = _lateral_cells(width, gap, s)
    nx, nb = h.size, vb.size
    eye = np.eye(nb)
    diag = np.array([vb.reduced[k] for k in kind])
    upper = np.empty((nx - 1, nb, nb))
    lower = np.empty((nx - 1, nb, nb))
    for i in range(nx - 1):
        j = i + 1
        if kind[i] == kind[j] or vb.pol == "TM":
            c = 1.0 / (0.5 * (h[i] + h[j]))
            self_i = self_j = -c * eye
            to_j = to_i = c * eye
        else:
            ea, eb = vb.eps[kind[i]], vb.eps[kind[j]]
            den = 0.5 * (ea * h[i] + eb * h[j])
            self_i, to_j = vb.project(-ea / den), vb.project(eb / den)
            self_j, to_i = vb.project(-eb / den), vb.project(ea / den)
        diag[i] += self_i / h[i]
        upper[i] = to_j / h[i]
        diag[j] += self_j / h[j]
        lower[i] = to_i / h[j]
    if parity == "odd":
        diag[0] -= 2.0 * eye / h[0] ** 2
    diag[-1] -= 2.0 * eye / h[-1] ** 2
    # block-tridiagonal BSR assembly
    data, indices, indptr = [], [], [0]
    for i in range(nx):
        if i > 0:
            data.append(lower[i - 1])
            indices.append(i - 1)
        data.append(diag[i])
        indices.append(i)
        if i < nx - 1:
            data.append(upper[i])
            indices.append(i + 1)
        indptr.append(len(indices))
    return sp.bsr_matrix((np.array(data), np.array(indices), np.array(indptr)), shape=(nx * nb, nx * nb)).tocsc()


def coupled_mode_index(
    stack: LayerStack,
    width: float,
    gap: float,
    wavelength: float,
    pol: Polarization,
    parity: str,
    settings: ExpansionSettings = DEFAULT_SETTINGS,
) -> float:
    """Effective index of the fundamental even (S) or odd (AS) supermode."""
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if not (width > 0 and gap > 0):
        raise ValueError(f"width and gap must be > 0 (got {width}, {gap})")
    vb = vertical_basis(stack, wavelength, pol, settings)
    k0 = 2 * np.pi / wavelength
    n_ridge, n_etched = vb.n_top
    if not n_ridge > n_etched:
        raise CouplingError(f"{pol}: no lateral index contrast, guides uncoupled/cut off")
    op = _operator(vb, width, gap, parity, settings)
    sigma = (k0 * (n_ridge + 1e-4)) ** 2
    try:
        # fixed start vector: ARPACK otherwise draws a random one and the last digits wander
        v0 = np.ones(op.shape[0])
        vals = sla.eigs(op, k=3, sigma=sigma, v0=v0, return_eigenvectors=False)
    except (sla.ArpackNoConvergence, RuntimeError) as exc:
        raise ModeSolverError(f"{pol} {parity} eigensolve failed: {exc}") from exc
    vals = vals.real[np.abs(vals.imag) < 1e-6 * np.abs(vals.real)]
    n = np.sqrt(vals[vals > 0]) / k0
    n = n[(n < n_ridge + 1e-9) & (n > n_etched)]
    if n.size == 0:
        raise CouplingError(f"{pol}: no guided {parity} supermode above the etched-region index {n_etched:.5f}")
    return float(n.max())


def coupled_supermodes(
    stack: LayerStack,
    width: float,
    gap: float,
    wavelength: float,
    pol: Polarization,
    settings: ExpansionSettings = DEFAULT_SETTINGS,
) -> tuple[float, float]:
    """(n_S, n_AS) of the coupled ridge pair."""
    n_s = coupled_mode_index(stack, width, gap, wavelength, pol, "even", settings)
    n_as = coupled_mode_index(stack, width, gap, wavelength, pol, "odd", settings)
    return n_s, n_as
