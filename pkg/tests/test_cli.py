import json
import os

import pytest

from quclab.cli import main


def run(tmp_path, name, toml, argv_extra=(), outname="out"):
    cfg = tmp_path / f"{name}.toml"
    cfg.write_text(toml)
    out = tmp_path / outname
    code = main([name, "--config", str(cfg), "--out", str(out),
                 *argv_extra])
    return code, out


def read_manifest(out):
    with open(out / "manifest.json") as fh:
        return json.load(fh)


def test_verify_weights(tmp_path):
    code, out = run(tmp_path, "verify-weights",
                    "[weights]\ns = 0.5\nlam = 50.0\n")
    assert code == 0
    m = read_manifest(out)
    assert all(m["checks"].values())
    assert (out / "sigma_table.csv").exists()
    assert m["constants"]["ode_residual"] <= 1e-6


def test_verify_kernels(tmp_path):
    code, out = run(tmp_path, "verify-kernels",
                    "[kernels]\na_values = [-0.5, 0.0]\ntol = 1e-5\n")
    assert code == 0
    assert (out / "kernel_identities.csv").exists()


def test_verify_operator_deterministic(tmp_path):
    toml = "[operator]\ns_values = [0.5]\nmodes = 16\nfields = 3\n"
    code1, out1 = run(tmp_path, "verify-operator", toml, outname="o1")
    code2, out2 = run(tmp_path, "verify-operator", toml, outname="o2")
    assert code1 == code2 == 0
    assert (out1 / "operator_battery.csv").read_bytes() \
        == (out2 / "operator_battery.csv").read_bytes()


def test_solve_extension(tmp_path):
    # data decaying toward the lateral boundary keeps the interior residual
    # at the discretization scale
    toml = ("[extension]\ns = 0.5\ndata = \"exp(-x1**2 - y**2)\"\n"
            "potential = \"0\"\n"
            "[grid]\nextent = 3.0\nnx = 49\nny = 24\nnt = 17\n"
            "time_extent = 0.2\n")
    code, out = run(tmp_path, "solve-extension", toml)
    assert code == 0
    assert (out / "extension_solution.npz").exists()


def test_solve_extension_inconsistent_a_exits_2(tmp_path):
    toml = ("[extension]\ns = 0.5\na = 0.3\ndata = \"y**2\"\n")
    code, _ = run(tmp_path, "solve-extension", toml)
    assert code == 2


def test_verify_inequalities_hardy(tmp_path):
    toml = ("[inequalities]\nwhich = \"hardy\"\n"
            "[hardy]\ncount = 4\nb_values = [0.1, 1.0]\n")
    code, out = run(tmp_path, "verify-inequalities", toml)
    assert code == 0
    assert (out / "hardy_battery.csv").exists()


def test_verify_inequalities_monotonicity(tmp_path):
    toml = "[inequalities]\nwhich = \"monotonicity\"\n[monotonicity]\ns = 0.5\n"
    code, out = run(tmp_path, "verify-inequalities", toml)
    assert code == 0
    m = read_manifest(out)
    assert m["checks"]["constant"] and m["checks"]["polynomial"]


def test_measure_order(tmp_path):
    toml = ("[order]\nradii = [0.5, 0.25, 0.125, 0.0625, 0.03125]\n"
            "family = \"homogeneous\"\nkappa = 2\nn = 2\n")
    code, out = run(tmp_path, "measure-order", toml)
    assert code == 0
    m = read_manifest(out)
    assert abs(m["constants"]["slope"] - 6.0) < 0.12


def test_measure_order_empty_radii_exits_2(tmp_path):
    code, _ = run(tmp_path, "measure-order", "[order]\nradii = []\n")
    assert code == 2


def test_doubling_command(tmp_path):
    toml = "[doubling]\nfield = \"ones\"\nradii = [0.125, 0.25, 0.5]\n"
    code, out = run(tmp_path, "doubling", toml)
    assert code == 0
    m = read_manifest(out)
    assert abs(m["constants"]["max_ratio"] - 4.0) < 1e-6


def test_failing_check_exits_1(tmp_path):
    # an impossible tolerance forces a failed check and exit code 1
    toml = "[kernels]\na_values = [0.0]\ntol = 1e-18\n"
    code, _ = run(tmp_path, "verify-kernels", toml)
    assert code == 1


def test_missing_config_exits_2(tmp_path):
    code = main(["verify-weights", "--config", str(tmp_path / "nope.toml"),
                 "--out", str(tmp_path / "o")])
    assert code == 2


def test_bad_toml_exits_2(tmp_path):
    code, _ = run(tmp_path, "verify-weights", "this is not [toml\n")
    assert code == 2


def test_manifest_hash_tracks_seed(tmp_path):
    toml = "[operator]\ns_values = [0.5]\nmodes = 16\nfields = 2\n"
    _, out1 = run(tmp_path, "verify-operator", toml, outname="s1")
    cfg = tmp_path / "verify-operator.toml"
    code = main(["verify-operator", "--config", str(cfg), "--out",
                 str(tmp_path / "s2"), "--seed", "7"])
    assert code == 0
    m1 = read_manifest(out1)
    m2 = read_manifest(tmp_path / "s2")
    assert m1["seed"] == 0 and m2["seed"] == 7
    assert m1["config_hash"] != m2["config_hash"]
