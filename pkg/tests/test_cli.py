import numpy as np
import pytest

from lbgk_hydro import cli, serialization
from lbgk_hydro.experiments import ConvergenceConfig


def test_converge_example_maps_to_convergence_config():
    cfg = cli.parse_cli(
        "converge --ic tg --n 64 --nu 1e-4 --t-final 1 --eps 0.4,0.2,0.1".split()
    )
    conv = cfg.convergence_config()
    assert isinstance(conv, ConvergenceConfig)
    assert conv.grid_n == 64 and conv.nu == 1e-4 and conv.t_final == 1.0
    assert conv.epsilons == (0.4, 0.2, 0.1)
    assert conv.initial_condition.kind == "taylor_green"
    assert conv.nonlinear and conv.initial_density == "uniform"


def test_large_scale_run_ns_config():
    cfg = cli.parse_cli(
        "run-ns --ic perturbed-tg --n 128 --nu 1e-4 --t-final 32 --dt 2e-6".split()
    )
    assert cfg.command == "run-ns"
    assert (cfg["ic"], cfg["n"], cfg["nu"], cfg["t_final"], cfg["dt"]) == (
        "perturbed-tg", 128, 1e-4, 32.0, 2e-6
    )


def test_large_preset_and_override():
    cfg = cli.parse_cli(["converge", "--preset", "large", "--n", "32"])
    assert cfg["n"] == 32 and cfg["t_final"] == 32.0 and cfg["ic"] == "perturbed-tg"


def test_linear_shorthand():
    assert cli.parse_cli(["run-lbgk", "--linear"])["nonlinear"] is False
    assert cli.parse_cli(["run-lbgk"])["nonlinear"] is True


def test_config_file_with_flag_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# converge settings\nn = 32\nt-final = 0.5\neps = 0.4,0.2\n")
    cfg = cli.parse_cli(["converge", "--config", str(path), "--n", "16"])
    assert cfg["n"] == 16
    assert cfg["t_final"] == 0.5
    assert cfg["eps"] == (0.4, 0.2)
    path.write_text("bogus = 1\n")
    with pytest.raises(cli.UsageError, match="bogus"):
        cli.parse_cli(["converge", "--config", str(path)])


@pytest.mark.parametrize(
    "argv, key",
    [
        (["run-ns", "--n", "abc"], "n"),
        (["run-ns", "--nu", "-1"], "nu"),
        (["run-lbgk", "--lattice", "d2q5"], "lattice"),
        (["converge", "--eps", ""], "eps"),
    ],
)
def test_invalid_values_name_the_key(argv, key):
    with pytest.raises(cli.UsageError, match=f"for {key}"):
        cli.parse_cli(argv)


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["validate-lattice", "d2q9", "--tol", "1e-12"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["run-ns", "--bogus", "1"]) == 2
    assert cli.main(["run-ns", "--n", "zero"]) == 2
    # a grid size the spectral grid rejects is a validation error
    assert cli.main(["tg-validate", "--n", "7", "--t-final", "0.01", "--dt", "0.01"]) == 2
    # decreasing-epsilon check lives in the experiment layer
    out = tmp_path / "conv"
    assert cli.main(["converge", "--eps", "0.2,0.4", "--out", str(out)]) == 2


def test_validate_lattice_failure_exits_one(tmp_path, capsys):
    from lbgk_hydro.lattice import Lattice, d2q9

    lat = d2q9()
    w = lat.weights.copy()
    w[0] += 1e-6
    w /= w.sum()
    path = tmp_path / "bad.txt"
    serialization.write_lattice(path, Lattice(2, lat.velocities, w, lat.sound_speed))
    assert cli.main(["validate-lattice", str(path)]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert cli.main(["validate-lattice", str(tmp_path / "missing.txt")]) == 2


def test_converge_blowup_exits_one(tmp_path):
    out = tmp_path / "conv"
    argv = ["converge", "--n", "16", "--t-final", "1", "--eps", "0.4", "--dt", "0.01",
            "--out", str(out)]
    assert cli.main(argv) == 1
    assert (out / "config.txt").exists()


def test_tg_validate_and_run_ns_outputs(tmp_path, capsys):
    assert cli.main(["tg-validate", "--n", "16", "--t-final", "0.1", "--dt", "0.01"]) == 0
    assert "relative L2 error" in capsys.readouterr().out
    out = tmp_path / "ns"
    argv = ["run-ns", "--n", "16", "--t-final", "0.2", "--output-every", "0.1",
            "--out", str(out)]
    assert cli.main(argv) == 0
    cfg = serialization.read_config(out / "config.txt")
    assert cfg["n"] == "16" and cfg["ic"] == "perturbed-tg"
    header, rows = serialization.read_csv(out / "ns_series.csv")
    assert header[0] == "time" and len(rows) == 3


def test_run_directory_reproduces_bit_identically(tmp_path):
    def run(out):
        argv = ["run-lbgk", "--n", "16", "--t-final", "0.02", "--eps", "0.4",
                "--out", str(out)]
        assert cli.main(argv) == 0
        return sorted(p.name for p in out.iterdir())

    a, b = tmp_path / "a", tmp_path / "b"
    names = run(a)
    # rerun from the recorded config only
    argv = ["run-lbgk", "--config", str(a / "config.txt"), "--out", str(b)]
    assert cli.main(argv) == 0
    assert sorted(p.name for p in b.iterdir()) == names
    for name in names:
        if name != "config.txt":
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
