import io
import json
import subprocess
import sys

import pytest

from mmle.cli import main, read_column
from mmle.errors import DomainError  # noqa: F401  (error classes are part of the CLI contract)

E = 2.7182818284590452


def run(argv, capsys=None):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


@pytest.fixture
def data(tmp_path):
    def write(text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_estimate_gamma_json(data):
    code, out = run(["estimate", "--dist", "gamma", "--input", data("1.0\n2.7182818284590452\n"), "--method", "mmle"])
    assert code == 0
    doc = json.loads(out)
    assert doc["dist"] == "gamma" and doc["method"] == "mmle" and doc["n"] == 2
    assert doc["estimates"]["lambda"] == pytest.approx((1 + E) / 2, rel=1e-12)
    assert doc["estimates"]["phi"] == pytest.approx(2 * (1 + E) / (E - 1), rel=1e-12)
    assert set(doc) == {"dist", "method", "n", "estimates", "std_errors", "avar", "flags"}
    assert set(doc["std_errors"]) == {"lambda", "phi"}
    assert len(doc["avar"]) == 2


def test_estimate_json_round_trip(data):
    code, out = run(["estimate", "--dist", "beta", "--input", data("0.3333333333\n0.6666666667\n")])
    assert code == 0
    doc = json.loads(out)
    assert json.dumps(doc, indent=2) + "\n" == out
    assert doc["estimates"]["alpha"] == pytest.approx(5.0, rel=1e-8)
    assert doc["estimates"]["beta"] == pytest.approx(5.0, rel=1e-8)
    assert "avar_out_of_domain" not in doc["flags"]


def test_estimate_comments_header_and_text(data):
    path = data("# sample\nx\n\n1.0\n# mid comment\n2.0\n4.0\n")
    code, out = run(["estimate", "--dist", "nakagami", "--input", path, "--format", "text", "--method", "both"])
    assert code == 0
    assert "[mmle]" in out and "[mle]" in out and "[mmle - mle]" in out


def test_estimate_both_json(data):
    code, out = run(["estimate", "--dist", "wilson-hilferty", "--input", data("1.0\n1.3\n0.8\n1.1\n"),
                     "--method", "both"])
    doc = json.loads(out)
    assert code == 0 and doc["method"] == "both"
    assert doc["mmle"]["estimates"]["lambda"] == doc["mle"]["estimates"]["lambda"]
    d = doc["mmle"]["estimates"]["phi"] - doc["mle"]["estimates"]["phi"]
    assert doc["difference"]["phi"] == pytest.approx(d)


def test_estimate_negative_value_exit_4(data, capsys):
    code, _ = run(["estimate", "--dist", "gamma", "--input", data("1.0\n# c\n-2.0\n")])
    assert code == 4
    assert ":3:" in capsys.readouterr().err


def test_estimate_beta_out_of_range_exit_4(data, capsys):
    code, _ = run(["estimate", "--dist", "beta", "--input", data("0.2\n1.0\n")])
    assert code == 4
    assert ":2:" in capsys.readouterr().err


def test_estimate_parse_error_exit_2(data, capsys):
    code, _ = run(["estimate", "--dist", "gamma", "--input", data("1.0\nabc\n")])
    assert code == 2
    assert ":2:" in capsys.readouterr().err


def test_estimate_missing_file_exit_2(tmp_path):
    code, _ = run(["estimate", "--dist", "gamma", "--input", str(tmp_path / "nope.csv")])
    assert code == 2


def test_estimate_degenerate_exit_3(data):
    assert run(["estimate", "--dist", "gamma", "--input", data("2.0\n2.0\n2.0\n")])[0] == 3
    assert run(["estimate", "--dist", "beta", "--input", data("0.5\n")])[0] == 3


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--dist", "weibull", "--input", "x"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--points", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--dist", "gamma", "--lambda", "1.5", "--out", "o.csv"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--dist", "gamma", "--lambda", "1.5", "--phi", "2", "--n-grid", "10:5:1", "--out", "o.csv"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--dist", "gamma", "--lambda", "-1", "--phi", "2", "--out", "o.csv"])
    assert exc.value.code == 2


def _simulate(tmp_path, name, extra=()):
    out = tmp_path / name
    argv = ["simulate", "--dist", "gamma", "--lambda", "1.5", "--phi", "2", "--n-grid", "10:100:5",
            "--reps", "200", "--seed", "42", "--out", str(out), *extra]
    code, _ = run(argv)
    assert code == 0
    return out


def test_simulate_csv_shape_and_manifest(tmp_path):
    out = _simulate(tmp_path, "fig1.csv", ["--json", str(tmp_path / "fig1.json")])
    lines = out.read_text().splitlines()
    assert lines[0] == "estimator,parameter,n,bias,rmse,var_scaled,failures"
    assert len(lines) == 1 + 19 * 2 * 2
    manifest = json.loads((tmp_path / "fig1.csv.manifest.json").read_text())
    assert manifest["command"] == "simulate" and manifest["seed"] == 42
    assert {"args", "version", "started_at", "finished_at", "outputs", "config"} <= set(manifest)
    assert manifest["outputs"] == [str(out), str(tmp_path / "fig1.json")]
    doc = json.loads((tmp_path / "fig1.json").read_text())
    assert doc["config"]["n_grid"][0] == 10 and len(doc["rows"]) == 76


def test_simulate_byte_identical_across_workers(tmp_path):
    texts = {_simulate(tmp_path, f"w{w}.csv", ["--workers", str(w)]).read_bytes() for w in (1, 4, 16)}
    assert len(texts) == 1


def test_replay_reproduces_outputs(tmp_path):
    out = _simulate(tmp_path, "a.csv")
    first = out.read_bytes()
    out.unlink()
    code, _ = run(["replay", str(tmp_path / "a.csv.manifest.json")])
    assert code == 0
    assert out.read_bytes() == first


def test_simulate_beta_and_nakagami(tmp_path):
    code, _ = run(["simulate", "--dist", "beta", "--alpha", "3", "--beta", "2.5", "--n-grid", "10:20:10",
                   "--reps", "100", "--out", str(tmp_path / "b.csv"), "--estimators", "mmle"])
    assert code == 0
    rows = (tmp_path / "b.csv").read_text().splitlines()[1:]
    assert len(rows) == 4 and all(r.startswith("mmle,") for r in rows)
    code, _ = run(["simulate", "--dist", "nakagami", "--lambda", "10", "--phi", "4", "--n-grid", "10:20:10",
                   "--reps", "100", "--out", str(tmp_path / "n.csv")])
    assert code == 0


def test_verify_default_passes():
    code, out = run(["verify", "--points", "6"])
    assert code == 0
    assert "FAIL" not in out
    for check in ("score_zero", "j_invertible", "sandwich_identity", "residual_oracle"):
        assert check in out


def test_verify_include_invalid_fails():
    code, out = run(["verify", "--dist", "beta", "--points", "3", "--include-invalid"])
    assert code == 1
    assert "DomainError" in out


def test_read_column(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("x\n0.5,\n0.25\n")
    assert list(read_column(p, "unit_interval").values) == [0.5, 0.25]


def test_module_entry_point(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1.0\n2.0\n3.5\n")
    res = subprocess.run([sys.executable, "-m", "mmle", "estimate", "--dist", "gamma", "--input", str(p)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["n"] == 3
