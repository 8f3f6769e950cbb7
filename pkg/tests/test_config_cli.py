import dataclasses

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from pairsplit import config as cfg
from pairsplit.cli import main
from pairsplit.pipeline import ScenarioError, ValidationFailed, run


@pytest.fixture(scope="module")
def base():
    return cfg.preset()


def write(tmp_path, config, name="run.yaml"):
    path = tmp_path / name
    path.write_text(config.dumps())
    return path


def test_preset_is_valid(base):
    assert base.scenario == "hom"
    assert cfg.validate(base) == []


def test_single_bad_field(base):
    bad = dataclasses.replace(base, coupler=dataclasses.replace(base.coupler, gamma=-1.0))
    out = cfg.validate(bad)
    assert len(out) == 1 and out[0].startswith("coupler.gamma")


def test_missing_required_block(base):
    out = cfg.validate(dataclasses.replace(base, source=None))
    assert out == ["source: block required by scenario 'hom' is missing"]


def test_every_violation_is_listed(base):
    bad = dataclasses.replace(
        base,
        coupler=dataclasses.replace(base.coupler, gap_m=-1e-6),
        counts=dataclasses.replace(base.counts, eta=2.0, window_s=0.0),
    )
    assert len(cfg.validate(bad)) == 3


def test_model_spectra_need_the_stack(base):
    c = dataclasses.replace(base, spectra=cfg.SpectraBlock(kind="model", path=None), stack=None)
    assert any(v.startswith("stack:") for v in cfg.validate(c))


def test_yaml_error_has_position():
    with pytest.raises(cfg.ConfigError) as err:
        cfg.loads("scenario: hom\ncoupler:\n  width_m: [1, 2\n")
    assert err.value.line is not None and err.value.column is not None
    assert f"line {err.value.line}" in str(err.value)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("output_dir: x\n", "scenario"),
        ("scenario: hom\ncoupler:\n  width: 1\n", "unknown field"),
        ("scenario: hom\nbogus: {}\n", "unknown block"),
        ("scenario: hom\ncoupler:\n  gap_m: wide\n", "coupler.gap_m"),
        ("scenario: hom\nhom:\n  polarizers: 1\n", "true/false"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(cfg.ConfigError, match=fragment):
        cfg.loads(text)


finite = st.floats(1e-9, 1e3, allow_nan=False)


@given(
    st.sampled_from(cfg.SCENARIOS),
    st.integers(0, 2**31),
    finite,
    finite,
    st.booleans(),
    st.lists(st.floats(0, 100), min_size=1, max_size=5),
)
def test_round_trip(scenario, seed, width, gamma, polarizers, powers):
    c = cfg.preset()
    c = dataclasses.replace(
        c,
        scenario=scenario,
        seed=seed,
        coupler=dataclasses.replace(c.coupler, width_m=width, gamma=gamma),
        hom=dataclasses.replace(c.hom, polarizers=polarizers),
        counts=dataclasses.replace(c.counts, pump_mw=tuple(powers)),
    )
    assert cfg.loads(c.dumps()) == c


# runs ----------------------------------------------------------------------


def test_invalid_config_writes_nothing(tmp_path, base):
    bad = dataclasses.replace(base, output_dir=str(tmp_path / "out"), coupler=dataclasses.replace(base.coupler, gap_m=-1e-6))
    with pytest.raises(ValidationFailed):
        run(bad)
    assert not (tmp_path / "out").exists()
    assert main(["run", "--config", str(write(tmp_path, bad))]) == 1
    assert not (tmp_path / "out").exists()


def test_fig3_probabilities(tmp_path, base):
    c = base.with_overrides(scenario="fig3", output_dir=str(tmp_path))
    summary = run(c)
    assert abs(summary["probability_sum"] - 1.0) < 1e-12
    rows = (tmp_path / "configurations.csv").read_text().splitlines()
    assert len(rows) == 5


def _source_config(base, out):
    src = dataclasses.replace(base.source, target_visibility=None, delta_rad_per_m=400.0)
    return base.with_overrides(scenario="hom", output_dir=str(out), source=src)


def test_runs_are_deterministic(tmp_path, base):
    files = ("summary.yaml", "hom.csv", "config.yaml")
    snapshots = []
    for _ in range(2):
        run(_source_config(base, tmp_path))
        snapshots.append([(tmp_path / f).read_bytes() for f in files])
    assert snapshots[0] == snapshots[1]


def test_summary_keys(tmp_path, base):
    summary = run(base.with_overrides(scenario="counts", output_dir=str(tmp_path)))
    for key in ("visibility", "dip_width_fs", "p_split", "design_point"):
        assert key in summary
    on_disk = yaml.safe_load((tmp_path / "summary.yaml").read_text())
    assert on_disk == summary
    assert summary["coincidence_slope"] == pytest.approx(1.0, abs=1e-9)


def test_coverage_failure_is_a_scenario_error(tmp_path, base):
    narrow = tmp_path / "narrow.csv"
    narrow.write_text("wavelength_nm,s_te,s_tm\n1500,0.9,0.9\n1550,0.9,0.9\n")
    c = _source_config(base, tmp_path / "out")
    c = dataclasses.replace(c, spectra=cfg.SpectraBlock(kind="file", path=str(narrow)))
    with pytest.raises(ScenarioError, match="nm"):
        run(c)


# command line --------------------------------------------------------------


def test_cli_validate(tmp_path, base, capsys):
    assert main(["validate", "--config", str(write(tmp_path, base))]) == 0
    assert main(["validate", "--config", "preset:paper_defaults"]) == 0
    assert "ok" in capsys.readouterr().out


def test_cli_unreadable_config(tmp_path):
    (tmp_path / "broken.yaml").write_text("scenario: [\n")
    assert main(["validate", "--config", str(tmp_path / "broken.yaml")]) == 1
    assert main(["validate", "--config", str(tmp_path / "missing.yaml")]) == 1


def test_cli_run(tmp_path, base, capsys):
    path = write(tmp_path, _source_config(base, "out"))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "res")]) == 0
    summary = yaml.safe_load(capsys.readouterr().out)
    assert 0.0 < summary["visibility"] < 1.0
    assert (tmp_path / "res" / "hom.csv").exists()


def test_cli_computation_failure(tmp_path, base):
    narrow = tmp_path / "narrow.csv"
    narrow.write_text("wavelength_nm,s_te,s_tm\n1500,0.9,0.9\n1550,0.9,0.9\n")
    c = dataclasses.replace(_source_config(base, "out"), spectra=cfg.SpectraBlock(kind="file", path="narrow.csv"))
    assert main(["run", "--config", str(write(tmp_path, c))]) == 2


def test_cli_sweep(tmp_path, base, capsys):
    sweep = dataclasses.replace(
        base.sweep, width_range_m=(1.0e-6, 1.3e-6), gap_range_m=(1.0e-6, 1.4e-6), n_width=4, n_gap=5, band_points=3
    )
    path = write(tmp_path, dataclasses.replace(base, sweep=sweep))
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "sw")]) == 0
    point = yaml.safe_load(capsys.readouterr().out)["design_point"]
    assert 1.0 <= point["width_um"] <= 1.3
    assert (tmp_path / "sw" / "sweep_surface.csv").exists()
