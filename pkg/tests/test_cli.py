import json

from subdivforms.cli import main
from subdivforms.stencils import default_table


def test_verify_ok(tmp_path, capsys):
    assert main(["verify", "--levels", "2", "--n", "2", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "verify.json").read_text())
    assert data[0]["passed"]
    assert "PASS" in capsys.readouterr().out


def test_verify_corrupted_stencils(tmp_path):
    t = default_table()
    key = (0, "interior-odd", 0)
    t.records[key] = [(r, w * 2 if r == "far0" else w) for r, w in t.records[key]]
    p = tmp_path / "bad.txt"
    t.write(p)
    assert main(["verify", "--levels", "2", "--n", "2", "--stencils", str(p),
                 "--out", str(tmp_path)]) == 1


def test_usage_errors(tmp_path, capsys):
    assert main(["verify", "--levels", "3:1", "--out", str(tmp_path)]) == 2
    assert main(["plot", str(tmp_path / "empty"), "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "c.txt"
    cfg.write_text("nonsense = 1\n")
    assert main(["verify", "--config", str(cfg)]) == 2
    assert "error" in capsys.readouterr().err


def test_config_and_flags(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("scheme = whitney\nn = 2\npairs = 0:1\n")
    assert main(["verify", "--config", str(cfg), "--levels", "2", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "verify.json").read_text())
    assert data[0]["scheme"] == "whitney" and data[0]["L"] == 2


def test_project_and_plot(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["project", "--levels", "0:3", "--n", "2", "--k", "0,2", "--out", out]) == 0
    assert (tmp_path / "projection.csv").read_text().startswith("k,l,L,n_r,n_s,dofs,error")
    assert main(["plot", "--out", out]) == 0
    assert (tmp_path / "projection_k0.svg").exists()
    assert (tmp_path / "projection_k2.svg").exists()


def test_maxwell_and_timing(tmp_path):
    out = str(tmp_path)
    assert main(["maxwell", "--case", "ii", "--levels", "1:3", "--n", "2", "--out", out]) == 0
    assert main(["timing", "--levels", "0:2,1:2,2:2", "--n", "2", "--n-eigs", "5",
                 "--out", out]) == 0
    assert (tmp_path / "timing.csv").read_text().startswith("l,L,dofs")
    assert main(["plot", "--out", out]) == 0
    assert (tmp_path / "timing.svg").exists() and (tmp_path / "maxwell_spectrum.svg").exists()


def test_fit(tmp_path):
    assert main(["fit", "--n", "4", "--levels", "2", "--out", str(tmp_path)]) == 0
    info = json.loads((tmp_path / "fit.json").read_text())
    assert info["corner_deviation_fitted"] < info["corner_deviation_unfitted"]
    assert (tmp_path / "fitted.off").exists()
