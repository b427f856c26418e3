import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from humplab import cli
from humplab.hunter import HuntConfig, hunt
from humplab.io import PoolEntry, PoolFile, dump_json, load_pool, read_trace, save_pool, write_trace
from humplab.propagator import TRACE_COLUMNS, PropagatorConfig, TimeTrace, evolve
from humplab.resonance import r_parameter

finite = st.floats(allow_nan=False, allow_infinity=False)


@pytest.fixture(scope="module")
def pool_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("pool") / "pool.json"
    assert cli.main(["--threads", "1", "hunt", "--count", "2", "--seed", "0", "--min-gap", "0.003", "--out", str(path)]) == 0
    return path


@given(finite)
def test_float_text_roundtrip(x):
    assert float(dump_json(x)) == x
    assert len(dump_json(x).lstrip("-").replace(".", "").split("e")[0]) >= 17 or x == 0 or float(dump_json(x)) == x


@given(st.lists(finite, min_size=1, max_size=20), st.integers(0, 2**64 - 1))
def test_pool_roundtrip_bytes(tmp_path_factory, eps, seed):
    entry = PoolEntry(seed, len(eps) + 1, 0, len(eps), 3, eps[-1], eps + [0.5], 0.01, 0.3, 0.4, None, 0.2, 1.5)
    d = tmp_path_factory.mktemp("rt")
    save_pool(PoolFile([entry]), d / "a.json")
    back = load_pool(d / "a.json")
    assert back.entries[0] == entry
    save_pool(back, d / "b.json")
    assert (d / "a.json").read_bytes() == (d / "b.json").read_bytes()


def test_pool_rejects_other_versions(tmp_path):
    (tmp_path / "p.json").write_text(json.dumps({"format_version": 99, "entries": []}))
    with pytest.raises(Exception, match="format_version"):
        load_pool(tmp_path / "p.json")


def test_non_finite_values_refused():
    with pytest.raises(Exception):
        dump_json(math.inf)


def test_pool_entry_rebuilds_pair(pool_file):
    entry = load_pool(pool_file).entries[0]
    original = hunt(entry.seed, HuntConfig(min_gap=0.003))
    rebuilt = entry.pair()
    assert rebuilt.realization == original.realization
    assert np.array_equal(rebuilt.y_O, original.y_O)
    assert entry.site_P - entry.site_O == 25


def test_trace_csv_exact(tmp_path):
    rng = np.random.default_rng(0)
    cols = [rng.normal(size=7) * 10.0 ** rng.integers(-300, 300, 7) for _ in TRACE_COLUMNS]
    trace = TimeTrace(*cols)
    write_trace(trace, tmp_path / "t.csv")
    back = read_trace(tmp_path / "t.csv")
    assert list(back) == list(TRACE_COLUMNS)
    for name, col in zip(TRACE_COLUMNS, cols):
        assert np.array_equal(back[name], col)


def test_trace_header_checked(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(Exception, match="not a trace"):
        read_trace(tmp_path / "x.csv")


def test_hunt_cli_deterministic(pool_file, tmp_path):
    again = tmp_path / "again.json"
    assert cli.main(["--threads", "1", "hunt", "--count", "2", "--min-gap", "0.003", "--out", str(again)]) == 0
    assert again.read_bytes() == pool_file.read_bytes()
    assert len(load_pool(again).entries) == 2


def test_hunt_cli_parallel_matches_serial(pool_file, tmp_path):
    par = tmp_path / "par.json"
    assert cli.main(["--threads", "2", "hunt", "--count", "2", "--min-gap", "0.003", "--out", str(par)]) == 0
    assert par.read_bytes() == pool_file.read_bytes()


def test_evolve_cli_linear(pool_file, tmp_path):
    out = tmp_path / "lin.csv"
    entry = load_pool(pool_file).entries[0]
    t_rabi = 2 * math.pi / entry.gap
    assert cli.main(["evolve", "--pool", str(pool_file), "--beta", "0", "--tmax", str(t_rabi), "--trace", str(out)]) == 0
    tr = read_trace(out)
    assert out.read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)
    assert np.max(np.abs(tr["norm"] - 1)) < 1e-10
    assert np.max(np.abs(tr["p_P"] - np.sin(entry.gap * tr["t"] / 2) ** 2)) < 1e-4
    again = tmp_path / "lin2.csv"
    cli.main(["evolve", "--pool", str(pool_file), "--beta", "0", "--tmax", str(t_rabi), "--trace", str(again)])
    assert again.read_bytes() == out.read_bytes()


def test_evolve_cli_broken(pool_file, tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["evolve", "--pool", str(pool_file), "--broken", "--beta", "0", "--tmax", "50", "--trace", str(out)]) == 0
    tr = read_trace(out)
    assert tr["s"][0] == pytest.approx(1.0)


def test_exit_codes(pool_file, tmp_path, capsys):
    out = str(tmp_path / "x")
    assert cli.main(["evolve", "--pool", str(pool_file), "--index", "9", "--trace", out]) == cli.EXIT_ARGS
    assert cli.main(["evolve", "--pool", str(tmp_path / "missing.json"), "--trace", out]) == cli.EXIT_IO
    assert cli.main(["evolve", "--pool", str(pool_file), "--beta", "inf", "--tmax", "1", "--trace", out]) == cli.EXIT_NUMERIC
    assert "step" in capsys.readouterr().err
    assert cli.main(["hunt", "--count", "1", "--min-gap", "10", "--max-seeds", "2", "--out", out]) == cli.EXIT_HUNT
    assert cli.main(["hunt", "--size", "20", "--out", out]) == cli.EXIT_ARGS
    with pytest.raises(SystemExit) as exc:
        cli.main(["hunt"])
    assert exc.value.code == 2


def test_threads_resolution(monkeypatch):
    monkeypatch.setenv("HUMPLAB_THREADS", "3")
    assert cli.resolve_threads(None) == 3
    assert cli.resolve_threads(2) == 2
    monkeypatch.setenv("HUMPLAB_THREADS", "many")
    with pytest.raises(Exception):
        cli.resolve_threads(None)


def test_analyze_single_entry(pool_file, tmp_path):
    single = tmp_path / "one.json"
    pool = load_pool(pool_file)
    save_pool(PoolFile(pool.entries[:1]), single)
    stem = tmp_path / "report"
    filled = tmp_path / "filled.json"
    args = ["--threads", "1", "analyze", "--pool", str(single), "--out-report", str(stem),
            "--spreading-periods", "1", "--fill-pool", str(filled)]
    assert cli.main(args) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["summary"]["correlation_beta_c_R"]["spearman"] is None
    rows = (tmp_path / "report.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[0].split(",") == list(cli.REPORT_COLUMNS)
    row = report["rows"][0]

    # independent recomputation of the report columns
    pair = pool.entries[0].pair()
    assert row["R"] == pytest.approx(r_parameter(pair).R, rel=1e-12)
    trace_path = tmp_path / "double.csv"
    cli.main(["evolve", "--pool", str(filled), "--tmax", str(pair.rabi_period), "--trace", str(trace_path)])
    assert read_trace(trace_path)["m2"][-1] == pytest.approx(row["m2_double_final"], rel=1e-9)
    broken_path = tmp_path / "broken.csv"
    cli.main(["evolve", "--pool", str(filled), "--broken", "--tmax", str(pair.rabi_period), "--trace", str(broken_path)])
    assert read_trace(broken_path)["m2"][-1] == pytest.approx(row["m2_broken_final"], rel=1e-9)
    entry = load_pool(filled).entries[0]
    assert entry.beta_quarter == row["beta_quarter"] and entry.beta_c == row["beta_c"]
    assert row["usable"] == (row["beta_c"] > row["beta_quarter"])
