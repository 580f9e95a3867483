import pytest

from entrofv.cli import build_config, _parser, main
from entrofv.experiments import RunConfig, build_mesh, parse_config_text
from entrofv.mesh import import_mesh


def test_mesh_info(capsys):
    assert main(["mesh", "info", "--mesh", "cart:3x2"]) == 0
    out = capsys.readouterr().out
    assert "zeta" in out


def test_mesh_export_round_trip(tmp_path):
    path = tmp_path / "m.txt"
    assert main(["mesh", "export", "--mesh", "tri:1", "--out", str(path)]) == 0
    a, b = build_mesh("tri:1"), import_mesh(path)
    assert a.n_cells == b.n_cells and abs(a.areas.sum() - b.areas.sum()) < 1e-14
    assert build_mesh(f"file:{path}").n_cells == a.n_cells


def test_validate_case_command(tmp_path, capsys):
    assert main(["validate-case", "--out", str(tmp_path)]) == 0
    assert "pde_ok = True" in capsys.readouterr().out
    assert (tmp_path / "summary.txt").exists()
    assert main(["validate-case", "--sign", "1"]) == 0
    assert "pde_ok = False" in capsys.readouterr().out


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# decay run\nmesh = cart:8\ndt = 5e-3\np = 1, 1.5, 2\nmean = max\n")
    args = _parser().parse_args(["decay-tpfa", "--config", str(cfg), "--dt", "1e-3"])
    config = build_config(args)
    assert config.mesh == "cart:8" and config.dt == 1e-3 and config.p == (1.0, 1.5, 2.0) and config.mean == "max"


def test_config_echo_round_trip():
    config = RunConfig(mesh="quad:8:0.2", p=(1.0, 2.0), out=None, means=("max",))
    assert RunConfig(**parse_config_text(config.echo())) == config


@pytest.mark.parametrize("text", ["bogus = 1", "no equals sign"])
def test_config_errors(text):
    with pytest.raises(ValueError):
        parse_config_text(text)


def test_invalid_values_exit_code(capsys):
    assert main(["decay-tpfa", "--dt", "-1"]) == 2
    assert "dt must be positive" in capsys.readouterr().err


def test_series_reproducible(tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / str(k)
        assert main(["decay-tpfa", "--mean", "logarithmic", "--dt", "1e-3", "--tfinal", "0.05", "--out", str(out)]) == 0
        runs.append((out / "series.csv").read_bytes())
    assert runs[0] == runs[1]
    header = runs[0].decode().splitlines()[0]
    assert header.startswith("t,E1,E2,I1,mass_primal")


def test_decay_ddfv_short(tmp_path):
    assert main(["decay-ddfv", "--mesh", "cart:8", "--tfinal", "0.1", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "summary.txt").read_text()
    assert "clipped_initial_values" in text and "mass_primal_drift" in text


def test_convergence_small(tmp_path):
    assert main(["convergence", "--levels", "1", "--means", "arithmetic", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "table.csv").read_text().splitlines()
    assert rows[0].startswith("mean,level") and len(rows) == 3
