import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairsplit.coupler import (
    DESIGN_RATIO,
    CouplerGeometry,
    DegenerateModesError,
    NoCouplingRegionError,
    SplittingSpectrum,
    band_objective,
    beat_length,
    beat_lengths,
    design_sweep,
    splitting_ratios,
    splitting_spectrum,
)
from pairsplit.modes import paper_stack

LAM = 1525e-9
lengths = st.floats(1e-6, 5e-3)


def test_beat_length_definition():
    dn = LAM / (2 * 864e-6)
    assert beat_length(3.1 + dn, 3.1, LAM) == pytest.approx(864e-6, rel=1e-12)


@pytest.mark.parametrize("n_as", [3.1, 3.2])
def test_beat_length_degenerate(n_as):
    with pytest.raises(DegenerateModesError):
        beat_length(3.1, n_as, LAM)


def test_splitting_identities():
    s_te, s_tm = splitting_ratios(0.0, 200e-6, 300e-6)
    assert (s_te, s_tm) == (1.0, 0.0)
    lc_te = 216e-6
    s_te, s_tm = splitting_ratios(4 * lc_te, lc_te, lc_te / DESIGN_RATIO)
    assert abs(s_te - 1) < 1e-12 and abs(s_tm - 1) < 1e-12
    assert abs(splitting_ratios(lc_te, lc_te, 1e-3)[0]) < 1e-12


@given(lengths, lengths, lengths)
def test_period_and_complementarity(length, lc_te, lc_tm):
    s_te, s_tm = splitting_ratios(length, lc_te, lc_tm)
    assert 0 <= s_te <= 1 and 0 <= s_tm <= 1
    assert splitting_ratios(length + 2 * lc_te, lc_te, lc_tm)[0] == pytest.approx(s_te, abs=1e-9)
    assert s_te + splitting_ratios(length + lc_te, lc_te, lc_tm)[0] == pytest.approx(1.0, abs=1e-9)
    assert s_tm + splitting_ratios(length + lc_tm, lc_te, lc_tm)[1] == pytest.approx(1.0, abs=1e-9)


def test_band_objective_bounds():
    lc = np.full(5, 216e-6)
    assert band_objective(lc, lc / DESIGN_RATIO, 4 * 216e-6) == pytest.approx(1.0)
    assert 0 <= band_objective(lc * 1.1, lc, 4 * 216e-6) < 1


@pytest.mark.parametrize(
    "kwargs", [dict(width=-1e-6), dict(gap=0.0), dict(length=-1.0), dict(gamma=-1.0), dict(gamma=1.6)]
)
def test_geometry_invariants(kwargs):
    args = dict(width=1e-6, gap=1e-6, length=1e-3)
    args.update(kwargs)
    with pytest.raises(ValueError):
        CouplerGeometry(**args)


def test_published_design_point_on_three_quarter_contour():
    lc_te, lc_tm = beat_lengths(paper_stack(), CouplerGeometry(1.134e-6, 1.286e-6, 864e-6), LAM)
    assert abs(lc_te / lc_tm - DESIGN_RATIO) < 0.01
    assert 4 * lc_te == pytest.approx(864e-6, rel=0.05)


def test_eim_beat_lengths_available():
    lc = beat_lengths(paper_stack(), CouplerGeometry(1.134e-6, 1.286e-6, 864e-6), LAM, method="eim")
    assert all(np.isfinite(lc)) and all(v > 0 for v in lc)


@pytest.fixture(scope="module")
def band_wl():
    return np.arange(1400e-9, 1701e-9, 10e-9)


def _peak(spec):
    return spec.wavelength[np.argmax(np.minimum(spec.s_te, spec.s_tm))]


def test_spectrum_peak_moves_monotonically_with_length(band_wl):
    peaks = [_peak(splitting_spectrum(paper_stack(), CouplerGeometry(1.29e-6, 1.51e-6, L), band_wl)) for L in (800e-6, 900e-6, 1000e-6)]
    # coupling strengthens with wavelength in this model, so longer devices peak at shorter wavelength
    assert peaks[0] > peaks[1] > peaks[2]


def test_gamma_is_a_pure_length_rescaling(band_wl):
    wl = band_wl[::5]
    a = splitting_spectrum(paper_stack(), CouplerGeometry(1.2e-6, 1.3e-6, 1e-3, gamma=0.8), wl)
    b = splitting_spectrum(paper_stack(), CouplerGeometry(1.2e-6, 1.3e-6, 0.8e-3, gamma=1.0), wl)
    assert np.allclose(a.s_te, b.s_te, atol=1e-12) and np.allclose(a.s_tm, b.s_tm, atol=1e-12)


def test_spectrum_csv_round_trip_is_deterministic(tmp_path, band_wl):
    geo = CouplerGeometry(1.134e-6, 1.286e-6, 1080e-6)
    wl = band_wl[::3]
    a, b = (splitting_spectrum(paper_stack(), geo, wl) for _ in range(2))
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    back = SplittingSpectrum.from_csv(tmp_path / "a.csv")
    assert np.allclose(back.s_te, a.s_te, atol=1e-11) and np.all((back.s_tm >= 0) & (back.s_tm <= 1))


@pytest.mark.parametrize(
    "rows",
    ["wavelength_nm,s_te,s_tm\n1500,0.5,1.2\n1510,0.4,0.3\n", "wavelength_nm,s_te,s_tm\n1510,0.5,0.2\n1500,0.4,0.3\n"],
)
def test_spectrum_ingestion_is_strict(tmp_path, rows):
    path = tmp_path / "bad.csv"
    path.write_text(rows)
    with pytest.raises(ValueError):
        SplittingSpectrum.from_csv(path)


def test_small_sweep_returns_feasible_point():
    res = design_sweep(paper_stack(), LAM, (1.0e-6, 1.3e-6), (1.0e-6, 1.4e-6), 60e-9, n_width=4, n_gap=5, band_points=3)
    p = res.best
    assert abs(p.lc_te / p.lc_tm - DESIGN_RATIO) < 0.01
    assert 0 <= p.objective <= 1
    assert p.length == pytest.approx(4 * p.lc_te)
    assert res.objective.shape == (4, 5)


def test_sweep_without_feasible_point():
    with pytest.raises(NoCouplingRegionError):
        design_sweep(paper_stack(), LAM, (2.5e-6, 2.6e-6), (0.3e-6, 0.35e-6), 60e-9, n_width=2, n_gap=2, ratio_tolerance=1e-4)
