import json

from naikit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_catalog(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == 0 and len(out.strip().splitlines()) == 11
    code, out, _ = run(capsys, "catalog", "--json")
    assert len(json.loads(out)) == 10
    code, out, _ = run(capsys, "catalog", "--id", "gelu", "--json")
    assert json.loads(out)[0]["fd_order_k"] == 2


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "catalog", "--id", "nope")[0] == 2
    assert run(capsys, "approximate", "--dims", "2", "--m", "10")[0] == 2
    assert run(capsys, "bfunc-grid", "--dims", "4")[0] == 2
    assert run(capsys, "bfunc-grid", "--params", "q")[0] == 2


def test_bfunc_grid_1d(capsys, tmp_path):
    out = tmp_path / "g.csv"
    code, s, _ = run(capsys, "bfunc-grid", "--activation", "repu", "--params", "q=1", "--grid-res", "101",
                     "--out", str(out))
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[1] == "x1,value" and rows[52] == "0.0,1.0"
    cfg = json.loads(rows[0][2:])
    assert cfg["seed"] == 0 and cfg["activation"]["id"] == "repu"


def test_bfunc_grid_2d_max_at_origin(capsys, tmp_path):
    code, s, _ = run(capsys, "bfunc-grid", "--params", "q=5", "--dims", "2", "--grid-res", "41",
                     "--out", str(tmp_path / "g2.csv"))
    assert json.loads(s)["argmax"] == [0.0, 0.0]


def test_bfunc_grid_3d(capsys, tmp_path):
    code, s, _ = run(capsys, "bfunc-grid", "--activation", "sigmoid", "--dims", "3", "--grid-res", "33",
                     "--out", str(tmp_path / "g3.csv"))
    d = json.loads(s)
    assert code == 0 and d["rows"] == 33 ** 3
    lv = json.loads((tmp_path / "g3.levels.json").read_text())
    assert len(lv["levels"]) == 4 and "config" in lv


def test_approximate_1d(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, s, _ = run(capsys, "approximate", "--target", "hat", "--activation", "repu", "--params", "q=1",
                     "--theta", "0.05", "--m", "200")
    d = json.loads(s)
    assert code == 0 and d["sup_grid_error"] <= 4 * d["error_budget"]["total"]
    assert d["neuron_count"] == 600 and (tmp_path / "network.json").exists()


def test_approximate_zero(capsys, tmp_path):
    code, s, _ = run(capsys, "approximate", "--target", "zero", "--out", str(tmp_path / "z.json"))
    assert json.loads(s)["sup_grid_error"] == 0.0


def test_approximate_2d_reproducible(capsys, tmp_path):
    outs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        args = ["approximate", "--target", "radial_bump", "--dims", "2", "--activation", "sigmoid",
                "--samples", "512", "--seed", "7", "--theta", "0.2", "--grid-res", "16", "--out", "net.json"]
        import os

        cwd = os.getcwd()
        os.chdir(d)
        try:
            assert run(capsys, *args)[0] == 0
        finally:
            os.chdir(cwd)
        outs.append((d / "net.json").read_bytes())
    assert outs[0] == outs[1]


def test_verify_commands(capsys):
    assert run(capsys, "verify", "--alternating-sum", "--kmax", "12")[0] == 0
    assert run(capsys, "verify", "--id", "repu", "--irwin-hall")[0] == 0
    assert run(capsys, "verify", "--id", "tanh")[0] == 0
    code, out, _ = run(capsys, "verify", "--id", "sigmoid", "--general", "--json")
    assert code == 0 and json.loads(out)["passed"]
    assert run(capsys, "verify", "--id", "repu", "--general")[0] == 1
    assert run(capsys, "verify", "--stated-bounds")[0] == 1
    assert run(capsys, "verify", "--id", "gelu", "--irwin-hall")[0] == 2


def test_verify_all(capsys):
    assert run(capsys, "verify", "--all", "--tol", "1e-6")[0] == 0


def test_rate_study_cli(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        code, s, err = run(capsys, "rate-study", "--samples", "64,256", "--trials", "8", "--theta", "0.1",
                           "--out", str(p))
        assert code == 0
    rows_a = a.read_text().splitlines()
    assert rows_a[1] == "N,trial,error" and len(rows_a) == 2 + 16
    assert rows_a[2:] == b.read_text().splitlines()[2:]
    code, s, err = run(capsys, "rate-study", "--samples", "64,128", "--trials", "1", "--out", str(a))
    assert code == 0 and "meaningless" in err
