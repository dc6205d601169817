import json
from pathlib import Path

import pytest

from juliadim.cli import main, parse_point
from juliadim.config import Config


def run(args):
    return main(args)


def test_parse_point_big_exponent():
    z = parse_point("23008,-1.32,0.25")
    assert z.rho_int() == 23008 - 2
    assert z.theta.to_float() == 0.25


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "cfg"
    p.write_text("N=7\nkmax=9\nlambda=0.06\n# comment\nCprime=0.5\n")
    cfg = Config.from_file(str(p))
    assert cfg.N == 7 and cfg.kmax == 9 and cfg.lam == 0.06 and cfg.Cprime == 0.5
    d = cfg.to_dict()
    assert "lambda" in d and "lam" not in d
    with pytest.raises(KeyError):
        cfg.set_key("nope", "1")


def test_params_subcommand(tmp_path, capsys):
    out = tmp_path / "p.json"
    rc = run(["params", "--N", "5", "--kmax", "6", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    rows = {r["j"]: r for r in doc["table"]}
    assert rows[4] == {"j": 4, "M": 16, "c": "2^-128", "r": "2^56"}
    assert rows[1]["r"] == "2^4" and rows[2]["r"] == "2^6" and rows[3]["r"] == "2^12"


def test_verify_subcommand_exit_zero(tmp_path):
    out = tmp_path / "v.json"
    rc = run(["verify", "--N", "5", "--kmax", "8", "--khi", "1",
              "--samples", "4096", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["N"] == 5
    assert any(c["name"] == "inner_circle_max_below_quarter_next"
               for c in doc["certificates"])


def test_eval_and_orbit_subcommands(tmp_path):
    out = tmp_path / "e.csv"
    rc = run(["eval", "--N", "5", "--kmax", "8",
              "--point", "23008,0.0,0.125", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("rho_int,")
    assert "power(6)" in lines[1]

    out2 = tmp_path / "o.jsonl"
    rc = run(["orbit", "--N", "5", "--kmax", "8",
              "--point", "23011,0.0,0.125", "--nmax", "4", "--out", str(out2)])
    assert rc == 0
    rec = json.loads(out2.read_text().splitlines()[0])
    assert rec["classification"] == "FatouEscape(2)"


def test_backward_subcommand(tmp_path):
    out = tmp_path / "b.json"
    rc = run(["backward", "--N", "5", "--kmax", "12",
              "--itinerary", "V(1);V(2);V(3)",
              "--anchor", "183764352,0.0,0.2", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["regions"] == ["V(1)", "V(2)", "V(3)"]


def test_dims_subcommand_and_sweep(tmp_path):
    out = tmp_path / "d.json"
    rc = run(["dims", "--N", "10", "--kmax", "12", "--t", "0.1", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["reports"]["origin"]["verdict"] == "converges"
    assert doc["reports"]["min_N"] == 5
    sw = tmp_path / "sweep.csv"
    rc = run(["dims", "--sweep", "0.5,0.05", "--sweep-Nmax", "6",
              "--out", str(sw)])
    assert rc == 0
    lines = sw.read_text().splitlines()
    assert lines[0] == "N,t,origin,backwards,layers,singleton"
    assert len(lines) == 5


def test_trace_and_render_subcommands(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = run(["trace", "--N", "5", "--kmax", "10", "--k", "1", "--depth", "2",
              "--grid", "256", "--out", "t.csv"])
    assert rc == 0
    lines = Path("t.csv").read_text().splitlines()
    assert lines[0] == "theta,inner_rho,outer_rho"
    assert len(lines) == 257

    rc = run(["render", "--N", "5", "--kmax", "10", "--what", "annuli",
              "--khi", "3", "--out", "a.svg"])
    assert rc == 0
    svg = Path("a.svg").read_text()
    assert 'id="Ak-2"' in svg and 'id="petal-1-1"' in svg


def test_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        run(["verify", "--N", "5", "--kmax", "8", "--khi", "1",
             "--samples", "4096", "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()


def test_orbit_batch_input(tmp_path):
    src = tmp_path / "pts.csv"
    src.write_text("rho_int,rho_frac,theta\n23011,0.0,0.125\n23010,0.5,0.25\n")
    out = tmp_path / "o.jsonl"
    rc = run(["orbit", "--N", "5", "--kmax", "8", "--input", str(src),
              "--nmax", "3", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert all('"classification"' in ln for ln in lines)
