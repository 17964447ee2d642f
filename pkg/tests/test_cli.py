import json
import subprocess
import sys

import pytest

from openasep import __version__
from openasep.cli import main, parse_config, resolve_params


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_flags_resolve_uv():
    cfg = parse_config(["exact", "--n", "6", "--q", "0.5", "--alpha", "0.25", "--beta", "0.25"])
    p = resolve_params(cfg)
    assert (p.u, p.v) == pytest.approx((1.0, 1.0))
    assert cfg.echo()["n"] == 6


def test_interval_flag():
    cfg = parse_config(["exact", "--n", "6", "--q", "0", "--alpha", "1", "--beta", "1", "--interval", "3:5"])
    assert cfg.get("interval") == (3, 5)


def test_file_and_flag_conflict(tmp_path):
    conf = tmp_path / "run.ini"
    conf.write_text("# model\nn = 4\nq = 0.5\nalpha = 0.3\nbeta = 0.2\n")
    import io

    err = io.StringIO()
    cfg = parse_config(["exact", "--config", str(conf), "--n", "5"], stderr=err)
    assert cfg.get("n") == 5 and cfg.get("alpha") == 0.3
    assert "warning" in err.getvalue() and "--n" in err.getvalue()


def test_unknown_key_in_file(tmp_path, capsys):
    conf = tmp_path / "run.ini"
    conf.write_text("n = 4\nbogus = 1\n")
    code, _, err = run_cli(capsys, "exact", "--config", str(conf))
    assert code == 1 and "bogus" in err


def test_type_mismatch_names_key(capsys):
    code, _, err = run_cli(capsys, "exact", "--n", "six", "--q", "0", "--alpha", "1", "--beta", "1")
    assert code == 1 and "n" in err


def test_missing_required_key(capsys):
    code, _, err = run_cli(capsys, "exact", "--n", "4", "--q", "0.2", "--alpha", "0.3")
    assert code == 1 and "beta" in err


def test_unknown_flag_exits_one(capsys):
    code, _, _ = run_cli(capsys, "exact", "--nope", "1")
    assert code == 1


def test_mpa_report(capsys):
    code, out, _ = run_cli(capsys, "mpa", "--k", "1", "--v", "1", "--q", "0.5", "--n", "1", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["distribution"]["1"] == pytest.approx(0.4)
    assert rep["version"] == f"openasep {__version__}"
    assert rep["relations"]["bulk_scaling"] == pytest.approx(0.5)


def test_csv_header_and_rows(capsys):
    code, out, _ = run_cli(capsys, "exact", "--n", "2", "--q", "0", "--alpha", "1", "--beta", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"# openasep {__version__}"
    assert lines[1].startswith("# config: command=exact")
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0] == "config,probability"
    rows = dict(ln.split(",") for ln in body[1:])
    assert float(rows["10"]) == pytest.approx(0.4)
    assert rows["10"] == f"{float(rows['10']):.17g}"


def test_compare_columns(capsys):
    code, out, _ = run_cli(
        capsys, "compare", "--against", "bernoulli", "--rho", "auto", "--q", "0.5", "--u", "0", "--v", "0",
        "--n-values", "20,40,80",
    )
    assert code == 0
    body = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert body[0] == "n,tv_distance"
    assert [int(r.split(",")[0]) for r in body[1:]] == [20, 40, 80]
    tvs = [float(r.split(",")[1]) for r in body[1:]]
    assert tvs[0] > tvs[-1]


def test_dry_run(capsys):
    code, out, _ = run_cli(capsys, "sim", "--n", "3", "--q", "0", "--alpha", "1", "--beta", "1", "--dry-run")
    assert code == 0
    assert json.loads(out)["config"]["n"] == 3


def test_byte_identical_outputs(capsys):
    argv = ["sim", "--n", "4", "--q", "0.3", "--alpha", "0.5", "--beta", "0.5", "--samples", "500",
            "--burn-in", "20", "--seed", "7"]
    _, a, _ = run_cli(capsys, *argv)
    _, b, _ = run_cli(capsys, *argv)
    assert a == b
    _, c, _ = run_cli(capsys, *argv[:-1], "8")
    assert c != a


def test_output_file(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code, out, _ = run_cli(capsys, "lpp", "--n", "3", "--q", "0", "--alpha", "1", "--beta", "1",
                           "--t", "1", "--samples", "1000", "--output", str(path))
    assert code == 0 and out == ""
    text = path.read_bytes()
    assert b"\r" not in text and text.startswith(b"# openasep")


@pytest.mark.parametrize("argv", [
    ["polymer", "--n", "6", "--q", "0.3", "--u", "0.2", "--v", "0.1", "--i", "3", "--j", "1", "--m", "0"],
    ["motzkin", "--n", "8", "--q", "0.3", "--alpha", "0.4", "--beta", "0.5", "--interval", "2:4"],
    ["shock", "--n", "4", "--q", "0.5", "--k", "1", "--v", "1"],
    ["exact", "--n", "64", "--epsilon", "0.25", "--c-q", "1", "--u", "0", "--v", "0"],
])
def test_commands_run(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    if argv[0] == "exact":
        assert code == 1 and "capped" in err
    else:
        assert code == 0 and out.startswith("# openasep")


def test_numerical_failure_exit_two(capsys):
    # shock-region transfer without signed mode refuses to sample negative mass
    code, _, err = run_cli(capsys, "motzkin", "--n", "10", "--q", "0.3", "--u", "3", "--v", "2")
    assert code == 2 and "shock region" in err
    code, _, _ = run_cli(capsys, "motzkin", "--n", "10", "--q", "0.3", "--u", "3", "--v", "2", "--signed", "true")
    assert code == 0


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("OPENASEP_THREADS", "3")
    assert parse_config(["exact", "--n", "2"]).threads == 3


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "openasep.cli", "mpa", "--k", "1", "--v", "1", "--q", "0.5",
                          "--n", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.40000000000000002" in res.stdout
