from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import small_state
from pairsplit.materials import MaterialDomainError
from pairsplit.modes import paper_stack
from pairsplit.source import (
    PM_ANCHORS,
    TWO_PI_C,
    BiphotonState,
    CalibrationError,
    NormalizationError,
    SourceParams,
    apply_filter,
    biphoton_amplitude,
    calibrate_asymmetry,
    calibrated_dk1,
    default_phase_matching,
    detuning_half_width,
    fit_surrogate,
    generate_state,
    phase_mismatch,
    pm_pump_wavelength,
)


def test_state_is_normalized_on_symmetric_grid(symmetric_state):
    s = symmetric_state
    assert s.norm() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(s.detuning, -s.detuning[::-1])
    assert s.detuning.size == 4096


def test_amplitude_peaks_where_mismatch_vanishes():
    p = replace(SourceParams.for_bandwidth(), delta=3000.0)
    s = generate_state(p)
    zero = -p.delta / p.dk1
    assert abs(s.detuning[np.argmax(s.density)] - zero) <= s.step


def test_symmetric_state_has_even_modulus(symmetric_state):
    a = np.abs(symmetric_state.amplitude)
    assert np.allclose(a, a[::-1], atol=1e-12)
    assert symmetric_state.asymmetry() < 1e-20


def test_linear_mismatch_changes_sign_at_degeneracy():
    p = SourceParams.for_bandwidth()
    d = phase_mismatch(p, np.array([-1e13, 0.0, 1e13]))
    assert d[1] == 0 and np.sign(d[0]) == -np.sign(d[2])


@pytest.mark.parametrize("definition, level", [("e2", np.exp(-2.0)), ("fwhm", 0.5)])
def test_bandwidth_calibration(definition, level):
    p = SourceParams.for_bandwidth(60e-9, definition=definition)
    s = generate_state(p)
    assert s.bandwidth(level) == pytest.approx(60e-9, rel=2e-3)


def test_detuning_half_width_spans_requested_band():
    lam0 = 1525e-9
    w = detuning_half_width(60e-9, lam0)
    w0 = TWO_PI_C / lam0
    assert TWO_PI_C / (w0 - w) - TWO_PI_C / (w0 + w) == pytest.approx(60e-9, rel=1e-12)


def test_walkoff_delay():
    p = SourceParams.for_bandwidth()
    assert p.walkoff_delay == pytest.approx(0.5 * p.dk1 * p.length)
    assert calibrated_dk1(60e-9, 762.5e-9, 2e-3) == p.dk1


@pytest.mark.parametrize("kwargs", [dict(length=0.0), dict(dk1=float("nan")), dict(brightness=-1.0)])
def test_source_param_checks(kwargs):
    with pytest.raises(ValueError):
        SourceParams(**kwargs)


def test_zero_amplitude_rejected():
    grid = np.linspace(-1, 1, 8)
    with pytest.raises(NormalizationError, match="vanishes"):
        BiphotonState.normalized(1e15, grid, np.zeros(8))


@pytest.mark.parametrize(
    "grid", [np.array([0.0, 1.0, 2.0, 3.0]), np.array([-3.0, -1.0, 0.5, 3.0])]
)
def test_grid_must_be_symmetric_and_uniform(grid):
    with pytest.raises(ValueError):
        BiphotonState.normalized(1e15, grid, np.ones(4))


def test_state_csv(tmp_path, symmetric_state):
    path = tmp_path / "state.csv"
    symmetric_state.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "detuning_rad_s,wavelength_signal_nm,re_f,im_f,abs2_f"
    assert len(rows) == symmetric_state.detuning.size + 1


# filtering ------------------------------------------------------------------


def test_infinite_filter_is_identity(symmetric_state):
    out = apply_filter(symmetric_state, 1525e-9, np.inf)
    assert np.allclose(out.amplitude, symmetric_state.amplitude, rtol=1e-12, atol=0)
    assert out.pair_transmission == pytest.approx(1.0, abs=1e-12)


def test_12nm_filter_narrows_state(symmetric_state):
    out = apply_filter(symmetric_state, 1525e-9, 12e-9)
    assert out.bandwidth(0.5) <= 12e-9
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    assert 0 < out.pair_transmission < 0.5


def test_off_degeneracy_filter_blocks_pairs(symmetric_state):
    # signal at +20 nm forces the idler to ~-20 nm, outside a 12 nm passband
    out = apply_filter(symmetric_state, 1545e-9, 12e-9, order=1)
    assert out.pair_transmission < 1e-3


def test_filter_without_overlap_raises(symmetric_state):
    with pytest.raises(NormalizationError):
        apply_filter(symmetric_state, 1200e-9, 1e-9, order=8)


@given(st.floats(-5e3, 5e3), st.floats(1e-9, 40e-9), st.floats(1505e-9, 1545e-9))
def test_normalization_preserved(delta, width, center):
    s = small_state(delta=delta)
    try:
        out = apply_filter(s, center, width)
    except NormalizationError:
        return
    assert out.norm() == pytest.approx(1.0, abs=1e-9)


# asymmetry calibration ------------------------------------------------------


def test_unit_target_needs_no_asymmetry():
    assert calibrate_asymmetry(1.0) == 0.0


@pytest.mark.parametrize("target", [0.5, 1.2])
def test_unreachable_targets(target):
    with pytest.raises(CalibrationError):
        calibrate_asymmetry(target)


def test_calibrated_state(calibrated_delta, calibrated_state):
    assert calibrated_delta > 0
    assert calibrated_state.asymmetry() > 0


# solver-derived mismatch ----------------------------------------------------


def test_solver_mismatch_vanishes_at_degeneracy():
    d = phase_mismatch(SourceParams(), np.array([0.0]), paper_stack(), 5e-6, 762.5e-9)
    assert abs(d[0]) < 1e-6  # round-off on beta ~ 1e7 rad/m


def test_surrogate_matches_solver_to_second_order():
    stack, width, pump = paper_stack(), 5e-6, 762.5e-9
    fit = fit_surrogate(stack, width, pump, step=1e12)
    omega = np.array([2e12, 4e12, 8e12])
    exact = phase_mismatch(SourceParams(), omega, stack, width, pump)
    residual = np.abs(exact - phase_mismatch(fit, omega))
    assert np.all(residual < 1e-4 * np.abs(exact))
    # third-order remainder: doubling the detuning multiplies it by ~8
    ratios = residual[1:] / residual[:-1]
    assert np.all((ratios > 5) & (ratios < 13))


# phase matching versus width ------------------------------------------------


@pytest.mark.parametrize("width, lam", PM_ANCHORS)
def test_anchors_exact(width, lam):
    assert pm_pump_wavelength(width) == pytest.approx(lam, abs=1e-15)


def test_between_anchors_and_monotone():
    w = np.linspace(1e-6, 6e-6, 201)
    lam = pm_pump_wavelength(w)
    assert np.all(np.diff(lam) < 0)
    assert np.all((lam[(w > 1.5e-6) & (w < 5e-6)] > 762.5e-9) & (lam[(w > 1.5e-6) & (w < 5e-6)] < 770.5e-9))


@pytest.mark.parametrize("width", [0.5e-6, 7e-6])
def test_width_outside_calibrated_range(width):
    with pytest.raises(MaterialDomainError):
        pm_pump_wavelength(width)


def test_uncorrected_model_residuals_are_small():
    curve = default_phase_matching()
    assert np.all(np.abs(curve.anchor_residuals()) < 1.5e-9)
    a, b = curve.affine
    assert b > 0


def test_phase_matching_table_round_trip():
    curve = default_phase_matching()
    again = type(curve).from_mapping(curve.to_mapping())
    assert again(3e-6) == curve(3e-6)


def test_spectral_phase_flag(symmetric_state):
    p = SourceParams.for_bandwidth()
    grid = symmetric_state.detuning
    plain = biphoton_amplitude(p, phase_mismatch(p, grid), grid, spectral_phase=False)
    assert np.allclose(plain.amplitude.imag, 0)
    assert np.allclose(plain.density, symmetric_state.density)
    assert plain.delay_reference == 0.0
