import numpy as np
import pytest

from pairsplit.expansion import ExpansionSettings, coupled_mode_index, coupled_supermodes, vertical_basis
from pairsplit.modes import CouplingError, paper_stack, slab_modes

LAM = 1525e-9
W, G = 1.134e-6, 1.286e-6


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_vertical_basis_reproduces_slab_indices(pol):
    stack = paper_stack()
    vb = vertical_basis(stack, LAM, pol)
    ridge = slab_modes(stack, LAM, pol)[0].n_eff
    etched = slab_modes(stack.etched(), LAM, pol)[0].n_eff
    # 5 nm vertical grid against the exact transfer-matrix roots
    assert vb.n_top[0] == pytest.approx(ridge, abs=1e-4)
    assert vb.n_top[1] == pytest.approx(etched, abs=1e-4)
    assert np.allclose(vb.basis.T @ vb.basis, np.eye(vb.size), atol=1e-10)


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_supermodes_ordered_inside_lateral_window(pol):
    vb = vertical_basis(paper_stack(), LAM, pol)
    n_s, n_as = coupled_supermodes(paper_stack(), W, G, LAM, pol)
    assert vb.n_top[1] < n_as < n_s < vb.n_top[0]


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_beat_length_converged_under_refinement(pol):
    coarse = coupled_supermodes(paper_stack(), W, G, LAM, pol)
    fine = coupled_supermodes(paper_stack(), W, G, LAM, pol, ExpansionSettings(dx=20e-9, dy=2.5e-9))
    lc = [LAM / (2 * (a - b)) for a, b in (coarse, fine)]
    assert abs(lc[0] / lc[1] - 1) < 0.01


def test_splitting_falls_with_gap():
    split = [np.subtract(*coupled_supermodes(paper_stack(), W, g, LAM, "TE")) for g in (0.8e-6, 1.2e-6, 1.6e-6, 2.0e-6)]
    assert np.all(np.diff(split) < 0) and split[-1] > 0


def test_te_couples_more_strongly_than_tm():
    # the sidewall discontinuity is stronger for the field normal to it
    te = np.subtract(*coupled_supermodes(paper_stack(), W, G, LAM, "TE"))
    tm = np.subtract(*coupled_supermodes(paper_stack(), W, G, LAM, "TM"))
    assert te > tm


def test_unetched_stack_has_no_lateral_guide():
    with pytest.raises(CouplingError):
        coupled_supermodes(paper_stack(etch_depth=0.0), W, G, LAM, "TE")


@pytest.mark.parametrize("kwargs", [dict(parity="both"), dict(parity="even", width=-1e-6)])
def test_argument_checks(kwargs):
    args = dict(stack=paper_stack(), width=W, gap=G, wavelength=LAM, pol="TE", parity="even")
    args.update(kwargs)
    with pytest.raises(ValueError):
        coupled_mode_index(**args)
