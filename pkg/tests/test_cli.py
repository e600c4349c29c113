import json

import pytest

from voatwist.cli import read_config, run


@pytest.fixture(autouse=True)
def serial(monkeypatch):
    monkeypatch.setenv("VOATWIST_THREADS", "1")


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_zhu_heisenberg(capsys):
    code, out, _ = call(capsys, "zhu", "--voa", "heisenberg", "--twist", "theta", "--trunc", "6")
    assert code == 0
    data = json.loads(out)
    assert data["dim"] == 1
    assert set(data) >= {"dim", "basis", "structure_constants"}


def test_zhu_lattice_structure_constants(capsys):
    code, out, _ = call(capsys, "zhu", "--voa", "lattice-a1", "--trunc", "5")
    data = json.loads(out)
    assert code == 0 and data["dim"] == 2
    assert data["basis"] == ["1", "e(1/1)"]
    assert data["structure_constants"]["1,1"] == ["1/16", "0/1"]


def test_output_is_deterministic(capsys):
    argv = ("fusion", "--voa", "lattice-a1", "--m1", "V{L+a/2}", "--m2", "T+", "--m3", "T-", "--trunc", "3")
    first = call(capsys, *argv)
    second = call(capsys, *argv)
    assert first == second
    data = json.loads(first[1])
    assert data["dimension"] == 1
    assert data["route"] == {"tensor": 1, "blocks": 1}


def test_fusion_table_latex(capsys):
    code, out, _ = call(capsys, "fusion", "--table", "--trunc", "2", "--format", "latex")
    assert code == 0
    rows = [line for line in out.splitlines() if line.endswith(r"\\") and "&" in line][1:]
    assert [line.split("&")[-2:] for line in rows] == [
        [" 1 ", r" 1 \\"], [" 1 ", r" 1 \\"], [" 0 ", r" 0 \\"], [" 0 ", r" 0 \\"], [" 1 ", r" 1 \\"],
        [" 1 ", r" 1 \\"], [" 0 ", r" 0 \\"], [" 0 ", r" 0 \\"], [" 1 ", r" 1 \\"],
    ]


def test_bimodule_modes(capsys):
    code, out, _ = call(capsys, "bimodule", "--voa", "lattice-a1", "--module", "V{L+a/2}", "--trunc", "3")
    data = json.loads(out)
    assert code == 0 and data["dim"] == 2 and data["commute"]
    code, out, _ = call(capsys, "bimodule", "--voa", "lattice-a1", "--module", "V{L+a/2}", "--mode", "Bg:0", "--trunc", "3")
    assert json.loads(out)["dim"] == 2


def test_kernels_json_and_latex(capsys):
    code, out, _ = call(capsys, "kernels", "--n", "1/2", "--i", "1", "--trunc", "3")
    data = json.loads(out)
    assert code == 0 and data["terms"] == 3
    assert [len(data["expansions"][k]["terms"]) for k in ("zero", "infinity")] == [3, 3]
    code, out, _ = call(capsys, "kernels", "--n", "1/2", "--format", "latex")
    assert out.startswith(r"\begin{align*}")


def test_corr_checks_and_emit(capsys, tmp_path):
    datum = tmp_path / "datum.cfg"
    datum.write_text("voa = heisenberg\nm1 = M(1,1)\nm2 = M(1)_tw\nm3 = M(1)_tw\n# window\ntrunc = 3\n")
    code, out, _ = call(capsys, "corr", "--datum", str(datum), "--check", "assoc")
    data = json.loads(out)
    assert code == 0
    (rep,) = data["results"][0]["reports"]
    assert rep["check"] == "associativity" and rep["cases"] > 0 and rep["failures"] == []
    inputs = tmp_path / "in.json"
    inputs.write_text(json.dumps({"voa": "lattice-a1", "m1": "V", "m2": "T+", "m3": "T+", "insertions": ["a0[-1]"], "v": "1"}))
    code, out, _ = call(capsys, "corr", "--emit", "n-point", "--inputs", str(inputs))
    assert code == 0
    # one insertion of a theta-odd vector between equal bottoms vanishes
    assert json.loads(out)["function"] == "0"


def test_selftest_subset(capsys):
    code, out, _ = call(capsys, "selftest", "--suites", "kernels,residue")
    data = json.loads(out)
    assert code == 0 and data["failed"] == []


def test_selftest_reports_lambda(capsys):
    code, out, _ = call(capsys, "selftest", "--suites", "lambda")
    assert code == 1
    assert json.loads(out)["failed"] == ["lambda"]


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "session.cfg"
    cfg.write_text("voa=heisenberg\ntrunc=5\nformat=text\n")
    code, out, _ = call(capsys, "zhu", "--config", str(cfg))
    assert code == 0 and "dim: 1" in out.splitlines()
    assert read_config(str(cfg))["trunc"] == "5"


def test_out_file(capsys, tmp_path):
    target = tmp_path / "z.json"
    code, out, _ = call(capsys, "zhu", "--voa", "heisenberg", "--trunc", "4", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["dim"] == 1


@pytest.mark.parametrize(
    "argv, flag",
    [
        (("zhu", "--denominator", "3"), "--denominator"),
        (("zhu", "--twist", "sigma"), "--twist"),
        (("zhu", "--format", "xml"), "--format"),
        (("kernels", "--n", "1/3"), "--n"),
        (("bimodule", "--module", "V", "--mode", "C"), "--mode"),
        (("fusion", "--m1", "V"), "--m2"),
        (("corr", "--check", "all"), "--datum"),
        (("bogus",), "voatwist"),
        ((), "voatwist"),
    ],
)
def test_usage_errors(capsys, argv, flag):
    code, _, err = call(capsys, *argv)
    assert code == 2
    assert flag in err


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("VOATWIST_THREADS", "many")
    code, _, err = call(capsys, "selftest", "--suites", "kernels")
    assert code == 2 and "VOATWIST_THREADS" in err
