import io
import json
import math

import pandas as pd
import pytest
from pydantic import ValidationError

from src.cli import parse_and_dispatch
from src.run_config import MANIFEST_NAME, RunConfig, RunManifest, resolve_run_config


def run(*argv: str) -> int:
    return parse_and_dispatch(list(argv))


def test_units_prints_scales(tmp_path, capsys) -> None:
    code = run("units", "--period", "1e-6", "--mass-amu", "40", "--output-dir", str(tmp_path))
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    for key in ("r_a_m", "eps_a_J", "eps_a_eV", "eps_a_K", "E_adc_Vm", "v_a_ms", "t_a_s"):
        assert data[key] > 0
    assert 1e-6 < data["hbar_eff"] < 1e-4
    assert (tmp_path / "units.json").exists()
    assert (tmp_path / MANIFEST_NAME).exists()


def test_units_feasibility_extras(tmp_path, capsys) -> None:
    code = run(
        "units",
        "--period",
        "20e-6",
        "--depth-kelvin",
        "0.025",
        "--omega0",
        "0.3",
        "--output-dir",
        str(tmp_path),
    )
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["nu_max_pinned"] == pytest.approx(0.84, abs=0.01)
    assert data["omega0_K"] > 0


def test_two_ion_phonons(tmp_path, capsys) -> None:
    code = run(
        "phonons", "--n", "2", "--k", "0", "--omega-tr", "0.014", "--output-dir", str(tmp_path)
    )
    assert code == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert len(frame) == 2
    assert frame["omega"].tolist() == pytest.approx([0.014, 0.014 * math.sqrt(3)], rel=1e-8)
    on_disk = pd.read_csv(tmp_path / "phonons.csv")
    assert list(on_disk.columns) == [
        "mode_index",
        "k_scaled",
        "omega",
        "participation_ratio",
        "centroid",
        "spread",
    ]


def test_configuration_written_by_ground_state(tmp_path, capsys) -> None:
    out = str(tmp_path)
    code = run("ground-state", "--n", "5", "--omega-tr", "0.05", "--k", "0.1", "--output-dir", out)
    assert code == 0
    text = (tmp_path / "configuration.csv").read_text()
    assert text.splitlines()[0] == "index,position,spacing_to_next"
    assert text.splitlines()[-1].endswith(",nan")
    assert capsys.readouterr().out == text


def test_usage_errors_exit_two(tmp_path) -> None:
    assert run("no-such-command") == 2
    assert run("units", "--no-such-flag") == 2
    assert run("units", "--n", "0", "--output-dir", str(tmp_path)) == 2


def test_unknown_config_key_is_usage_error(tmp_path) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"lattice_amplitud": 0.1}))
    assert run("units", "--config", str(config), "--output-dir", str(tmp_path)) == 2


def test_domain_error_exits_one_and_records_failure(tmp_path) -> None:
    code = run(
        "map-orbit",
        "--map",
        "ion",
        "--x0",
        "1.5707963",
        "--y0",
        "0.1",
        "--k",
        "0.2",
        "--steps",
        "5",
        "--output-dir",
        str(tmp_path),
    )
    assert code == 1
    manifest = RunManifest.load(tmp_path / MANIFEST_NAME)
    assert manifest.stages["map-orbit"].startswith("failed")


def test_config_precedence(tmp_path) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"n_ions": 3, "lattice_amplitude": 0.1}))

    defaults = resolve_run_config(None, {})
    from_file = resolve_run_config(config, {})
    with_flags = resolve_run_config(config, {"n_ions": 4, "seed": 9})
    flags_only = resolve_run_config(None, {"lattice_amplitude": 0.2})

    assert (defaults.n_ions, defaults.lattice_amplitude) == (50, 0.03)
    assert (from_file.n_ions, from_file.lattice_amplitude) == (3, 0.1)
    assert (with_flags.n_ions, with_flags.lattice_amplitude, with_flags.seed) == (4, 0.1, 9)
    assert (flags_only.n_ions, flags_only.lattice_amplitude) == (50, 0.2)


def test_run_config_forbids_unknown_keys() -> None:
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"n_ion": 5})


def test_replay_reproduces_data_bytes(tmp_path) -> None:
    first = tmp_path / "first"
    second = tmp_path / "second"
    assert run("map-orbit", "--steps", "200", "--k-eff", "1.2", "--output-dir", str(first)) == 0
    assert run("replay", str(first / MANIFEST_NAME), "--output-dir", str(second)) == 0
    assert (first / "orbit.csv").read_bytes() == (second / "orbit.csv").read_bytes()
    replayed = RunManifest.load(second / MANIFEST_NAME)
    assert replayed.command == "map-orbit"
    assert replayed.config["k_eff"] == 1.2


def test_json_output_format(tmp_path, capsys) -> None:
    assert run("map-orbit", "--steps", "3", "--format", "json", "--output-dir", str(tmp_path)) == 0
    records = json.loads((tmp_path / "orbit.json").read_text())
    assert len(records) == 4
    assert set(records[0]) == {"step", "x", "y"}
    assert json.loads(capsys.readouterr().out) == records


def test_small_sweep_writes_table_plot_and_manifest(tmp_path) -> None:
    code = run(
        "sweep-k",
        "--n-list",
        "6",
        "--omega-tr",
        "0.06",
        "--k-grid",
        "0.0",
        "0.1",
        "--n-starts",
        "1",
        "--plot",
        "--output-dir",
        str(tmp_path),
    )
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "K,N,omega_tr,omega0,energy,n_minima,converged"
    assert len(lines) == 3
    assert (tmp_path / "gap_vs_k.svg").exists()
    manifest = RunManifest.load(tmp_path / MANIFEST_NAME)
    assert manifest.config["n_list"] == [6]
    assert manifest.config["k_grid"] == [0.0, 0.1]
    assert manifest.outputs == ["sweep.csv", "gap_vs_k.svg"]


@pytest.mark.slow
def test_sweep_with_defaults(tmp_path) -> None:
    assert run("sweep-k", "--output-dir", str(tmp_path)) == 0
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / MANIFEST_NAME).exists()
