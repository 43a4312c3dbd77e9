import json
import subprocess
import sys

import pytest

import brkl.cli as cli
from brkl.cli import ParseError, ResultCache, fmt, main, parse_config, run, to_csv
from brkl.errors import CacheIoError, NonIncreasingExponents, ValidationError

MINIMAL = {"variety": {"n": 1, "L": 2, "L1": 1, "d": [2]}, "alpha": 0.25}
SCAN = dict(MINIMAL, scan={"p": [1.3], "m_min": 4, "m_max": 7, "samples": 400})


@pytest.fixture
def cfg_file(tmp_path):
    def write(obj, name="cfg.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)
    return write


def test_defaults(cfg_file):
    cfg = parse_config(cfg_file(MINIMAL))
    assert cfg.variety.delta == 0.5
    assert (cfg.delta1, cfg.E, cfg.seed, cfg.threads) == (0.05, 1000.0, 0, 1)
    assert cfg.scan.p == (0.9, 1.3) and (cfg.scan.m_min, cfg.scan.m_max) == (8, 14)


def test_flags_override_file(cfg_file):
    cfg = parse_config(cfg_file(MINIMAL), {"alpha": 0.5, "seed": 9, "p": [1.1], "threads": "auto"})
    assert cfg.alpha == 0.5 and cfg.seed == 9 and cfg.scan.p == (1.1,) and cfg.threads == "auto"


def test_delegated_validation():
    bad = {"variety": {"n": 1, "L": 2, "L1": 2, "d": [3, 2]}, "alpha": 0.25}
    with pytest.raises(NonIncreasingExponents):
        parse_config(text=json.dumps(bad))


def test_parse_errors_locate_problem():
    with pytest.raises(ParseError, match="line 2"):
        parse_config(text='{"alpha": 1,\n "variety": [}')
    with pytest.raises(ParseError, match="scan.samples"):
        parse_config(text=json.dumps(dict(MINIMAL, scan={"samples": "many"})))
    with pytest.raises(ParseError, match="scan.bogus"):
        parse_config(text=json.dumps(dict(MINIMAL, scan={"bogus": 1})))
    with pytest.raises(ParseError, match="threads"):
        parse_config(text=json.dumps(dict(MINIMAL, threads=0)))
    with pytest.raises(ParseError, match="alpha"):
        parse_config(text=json.dumps({"variety": MINIMAL["variety"]}))
    with pytest.raises(ParseError, match="points"):
        parse_config(text=json.dumps(dict(MINIMAL, points=[{"x": [1, 2], "y": [1], "z": [0]}])))


def test_canonical_is_stable_and_versioned(monkeypatch):
    a = parse_config(text=json.dumps(MINIMAL))
    b = parse_config(text=json.dumps({"alpha": 0.25, "variety": {"d": [2], "L1": 1, "L": 2, "n": 1}}))
    assert a.canonical("scan") == b.canonical("scan")
    c = parse_config(text=json.dumps(MINIMAL), overrides={"threads": 4})
    assert a.canonical("scan") == c.canonical("scan")
    before = a.canonical("scan")
    monkeypatch.setattr(cli, "__version__", "9.9.9")
    assert a.canonical("scan") != before


def test_fmt_and_csv():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "1" and fmt(None) == "" and fmt(3) == "3"
    out = to_csv(["a", "b"], [{"a": 1.5, "b": "x"}, {"a": 2}])
    assert out == b"a,b\n1.5,x\n2,\n"


def test_exponents_row():
    payload, code = run("exponents", parse_config(text=json.dumps(MINIMAL)), use_cache=False)
    header, row = payload.decode().splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert code == 0 and rec["p_star"] == "1.0909090909090908"


def test_eval_kernel(capsys):
    code = main(["eval-kernel", "--n", "1", "--L", "2", "--L1", "1", "--d", "2", "--alpha", "1",
                 "--x", "2", "--y", "3", "--z", "1", "--no-cache"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0 and out[0].startswith("r_x,y1,r_z,Re_k")
    assert len(out) == 2


def test_scan_then_fit(tmp_path):
    cfg = parse_config(text=json.dumps(SCAN))
    payload, code = run("scan", cfg, use_cache=False)
    lines = payload.decode().splitlines()
    assert lines[0] == ",".join(cli.SCAN_COLUMNS)
    assert len(lines) == 1 + 4 + 1 and lines[-1].startswith("fit,1.3,")
    assert code in (0, 2)
    path = tmp_path / "scan.csv"
    path.write_bytes(payload)
    import argparse
    fit_payload, fit_code = run("fit", cfg, argparse.Namespace(input=str(path)), use_cache=False)
    assert fit_payload.decode().splitlines()[1] == lines[-1]
    assert fit_code == code


def test_scan_inconclusive_exit_two():
    cfg = parse_config(text=json.dumps(dict(MINIMAL, scan={"p": [1.0], "m_min": 4, "m_max": 5,
                                                           "samples": 50})))
    _, code = run("scan", cfg, use_cache=False)
    assert code == 2


def test_fit_requires_input():
    with pytest.raises(ValidationError):
        run("fit", parse_config(text=json.dumps(MINIMAL)), use_cache=False)


def test_cache_hit_and_corruption(tmp_path, caplog):
    cfg = parse_config(text=json.dumps(dict(SCAN, cache_dir=str(tmp_path))))
    first = run("scan", cfg)
    key = ResultCache.key(cfg.canonical("scan"))
    assert (tmp_path / f"{key}.csv").exists()
    assert run("scan", cfg) == first
    (tmp_path / f"{key}.csv").write_bytes(b"garbage\n")
    with pytest.raises(CacheIoError):
        ResultCache(tmp_path).lookup(cfg.canonical("scan"))
    with caplog.at_level("WARNING"):
        again = run("scan", cfg)
    assert again == first and "corrupted" in caplog.text


def test_cache_threads_share_entry(tmp_path):
    base = dict(SCAN, cache_dir=str(tmp_path))
    a = run("scan", parse_config(text=json.dumps(dict(base, threads=1))))
    b = run("scan", parse_config(text=json.dumps(dict(base, threads=4))), use_cache=False)
    assert a == b
    assert len(list(tmp_path.glob("*.csv"))) == 1


def test_unknown_command_exit_one():
    proc = subprocess.run([sys.executable, "-m", "brkl", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 1 and "usage" in proc.stderr


def test_error_exit_one(capsys):
    code = main(["exponents", "--n", "1", "--L", "2", "--L1", "2", "--d", "3,2", "--alpha", "1"])
    assert code == 1 and "NonIncreasingExponents" in capsys.readouterr().err


def test_out_file(tmp_path, cfg_file):
    out = tmp_path / "e.csv"
    assert main(["exponents", "--config", cfg_file(MINIMAL), "--out", str(out), "--no-cache"]) == 0
    assert out.read_bytes().startswith(b"n,L,L1,d,alpha,p_star")
