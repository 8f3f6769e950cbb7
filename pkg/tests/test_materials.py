import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairsplit.materials import (
    AlloyDispersionModel,
    MaterialDomainError,
    default_model,
    refractive_index,
)

# GaAs at 1550 nm from room-temperature tabulations (Skauli et al. 2003: 3.375)
GAAS_1550 = 3.375


def test_gaas_matches_tabulated_index():
    assert refractive_index(0.0, 1550e-9) == pytest.approx(GAAS_1550, abs=0.01)


def test_alloy_ordering_at_1550():
    n25, n45, n80 = (refractive_index(x, 1550e-9) for x in (0.25, 0.45, 0.80))
    assert n25 > n45 > n80


@pytest.mark.parametrize("wavelength", [1300e-9, 1525e-9, 1550e-9, 1750e-9])
def test_monotone_in_fraction(wavelength):
    x = np.linspace(0, 1, 100)
    n = refractive_index(x, wavelength)
    assert np.all(np.diff(n) < 0)


@pytest.mark.parametrize("x", [0.25, 0.45, 0.80])
def test_normal_dispersion_in_telecom_band(x):
    lam = np.linspace(1450e-9, 1650e-9, 41)
    n = refractive_index(x, lam)
    assert np.all(np.diff(n) < 0)


@given(st.floats(0.0, 1.0), st.floats(1.0e-6, 2.0e-6))
def test_real_and_above_one(x, lam):
    n = refractive_index(x, lam)
    assert np.isfinite(n) and n > 1


@given(st.floats(0.0, 0.99), st.floats(1.1e-6, 1.9e-6))
def test_continuous(x, lam):
    n = refractive_index(x, lam)
    assert abs(refractive_index(x + 1e-7, lam) - n) < 1e-5
    assert abs(refractive_index(x, lam * (1 + 1e-7)) - n) < 1e-5


@pytest.mark.parametrize(
    "x, lam",
    [(-0.1, 1550e-9), (1.2, 1550e-9), (0.0, 500e-9), (0.0, 3e-6), (0.0, 860e-9), (float("nan"), 1550e-9)],
)
def test_domain_errors(x, lam):
    with pytest.raises(MaterialDomainError):
        refractive_index(x, lam)


def test_pump_wavelength_allowed_for_wide_gap_layers():
    # the 762.5 nm pump sits below the gap of Al >= 0.25 but above that of GaAs
    assert refractive_index(0.25, 762.5e-9) > refractive_index(0.80, 762.5e-9)
    with pytest.raises(MaterialDomainError):
        refractive_index(0.0, 762.5e-9)


def test_coefficient_file_round_trip(tmp_path):
    m = default_model()
    path = tmp_path / "coeffs.yaml"
    path.write_text(
        "model: copy\nwindow_m: [7.0e-7, 2.0e-6]\ngap_margin_ev: 0.02\ncoefficients:\n"
        f"  oscillator_energy_ev: {list(m.oscillator_energy)}\n"
        f"  dispersion_energy_ev: {list(m.dispersion_energy)}\n"
        f"  gap_energy_ev: {list(m.gap_energy)}\n"
    )
    copy = AlloyDispersionModel.from_file(path)
    assert refractive_index(0.3, 1.5e-6, copy) == refractive_index(0.3, 1.5e-6)
