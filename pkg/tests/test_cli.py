import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from kurisym import __version__
from kurisym.cli import (
    EXIT_BUDGET,
    EXIT_HYPOTHESIS,
    EXIT_IO,
    EXIT_MALFORMED,
    CurveSpecError,
    _cache_key,
    _cache_path,
    load_cached_symbol,
    main,
    parse_curve_spec,
    store_cached_symbol,
)
from kurisym.curves import WeierstrassModel
from kurisym.kurihara import sweep

from support import setup

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_plain_and_file():
    assert parse_curve_spec("0,-1,1,-10,-20") == WeierstrassModel(0, -1, 1, -10, -20)
    assert parse_curve_spec(" 0, -1 ,1,-10,-20 ") == WeierstrassModel(0, -1, 1, -10, -20)
    assert parse_curve_spec(f"@{DATA / 'curves.txt'}:3") == WeierstrassModel(1, 0, 1, 4, -6)


@pytest.mark.parametrize("text,code", [
    ("0,0,0,0,0", EXIT_HYPOTHESIS),
    ("0,-1,1,-10", EXIT_MALFORMED),
    ("a,b,c,d,e", EXIT_MALFORMED),
    ("0,-1,1,-10,-20.5", EXIT_MALFORMED),
    ("@nowhere/missing.txt:1", EXIT_IO),
    ("@curves.txt", EXIT_MALFORMED),
])
def test_parse_errors(text, code):
    with pytest.raises(CurveSpecError) as info:
        parse_curve_spec(text)
    assert info.value.code == code


def test_parse_line_past_end():
    with pytest.raises(CurveSpecError) as info:
        parse_curve_spec(f"@{DATA / 'curves.txt'}:99")
    assert info.value.code == EXIT_IO
    with pytest.raises(CurveSpecError) as info:
        parse_curve_spec(f"@{DATA / 'curves.txt'}:4")  # the singular line
    assert info.value.code == EXIT_HYPOTHESIS


def test_exit_codes(capsys, tmp_path):
    cache = str(tmp_path / "c")
    assert run(capsys, "analyze", "--curve", "0,0,0,0,0", "--p", "5", "--cache-dir", cache)[0] == EXIT_HYPOTHESIS
    assert run(capsys, "analyze", "--curve", "1,2", "--p", "5", "--cache-dir", cache)[0] == EXIT_MALFORMED
    assert run(capsys, "analyze", "--curve", "@/no/such/file:1", "--p", "5", "--cache-dir", cache)[0] == EXIT_IO
    assert run(capsys, "analyze", "--curve", "0,-1,1,-10,-20", "--p", "9", "--cache-dir", cache)[0] == EXIT_HYPOTHESIS
    code, out, err = run(capsys, "sweep", "--curve", "0,0,1,-1,0", "--p", "5", "--lmax", "1000",
                         "--budget", "100", "--cache-dir", cache)
    assert code == EXIT_BUDGET and out == "" and "budget" in err
    code, _, _ = run(capsys, "heegner", "--curve", "0,-1,1,-10,-20", "--p", "5", "--disc", "12")
    assert code == EXIT_HYPOTHESIS


def test_analyze_report(capsys, tmp_path):
    code, out, _ = run(capsys, "analyze", "--curve", "0,-1,1,-10,-20", "--p", "7", "--cache-dir", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["tool_version"] == __version__
    assert rep["curve"]["N"] == 11 and rep["curve"]["tam_E"] == 5
    assert rep["symbol"]["epsilon"] == 1
    assert rep["delta_1"]["residue"] == "1/5"
    assert rep["numeric"]["crosscheck"]["ok"] is True
    assert rep["timings"]["cache_hit"] is False
    assert out == json.dumps(rep, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def test_sweep_report_and_caveats(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", "--curve", "0,0,1,-1,0", "--p", "3", "--lmax", "200", "--rmax", "2",
                       "--cache-dir", str(tmp_path), "--no-timings", "--diagnostic-parity")
    assert code == 0
    rep = json.loads(out)
    assert "timings" not in rep
    assert any("p = 3" in c for c in rep["caveats"])
    assert rep["sweep"]["verdict"] in {"CONSISTENT_WITNESS", "COUNTEREXAMPLE_SIGNAL", "INCONCLUSIVE"}
    assert rep["sweep"]["wrong_parity"]["nonvanishing"] == []
    assert all(isinstance(d["residue"], str) for d in rep["sweep"]["deltas"])


def test_heegner_report(capsys):
    code, out, _ = run(capsys, "heegner", "--curve", "0,-1,1,-10,-20", "--p", "5", "--disc", "19", "--no-timings")
    assert code == 0
    rep = json.loads(out)["heegner"]
    assert rep["predictions"] == {"heeg": 1, "lambda": 3}


def test_determinism_cold_and_warm(capsys, tmp_path):
    argv = ["sweep", "--curve", "0,1,1,-23,-50", "--p", "7", "--lmax", "300", "--rmax", "2", "--no-timings"]
    cold = run(capsys, *argv, "--cache-dir", str(tmp_path))[1]
    warm = run(capsys, *argv, "--cache-dir", str(tmp_path))[1]
    nocache = run(capsys, *argv, "--no-cache")[1]
    assert cold == warm == nocache
    shutil.rmtree(tmp_path)
    assert run(capsys, *argv, "--cache-dir", str(tmp_path))[1] == cold


def test_cache_env_and_hit_flag(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("KURISYM_CACHE_DIR", str(tmp_path / "env"))
    argv = ["analyze", "--curve", "0,-1,1,-10,-20", "--p", "7"]
    first = json.loads(run(capsys, *argv)[1])
    second = json.loads(run(capsys, *argv)[1])
    assert first["timings"]["cache_hit"] is False and second["timings"]["cache_hit"] is True
    files = list((tmp_path / "env").iterdir())
    assert len(files) == 1 and not files[0].name.startswith(".tmp")


def test_cache_round_trip_gives_identical_sweeps(tmp_path):
    cur, sym, _ = setup("37a1", 5)
    key = _cache_key(cur.N, cur.minimal_model.ainvs, 5)
    store_cached_symbol(tmp_path, key, sym, cur.epsilon)
    loaded, eps = load_cached_symbol(tmp_path, key)
    assert eps == cur.epsilon and loaded.value_table == sym.value_table
    assert sweep(loaded, cur, 5, 400, 3).as_dict() == sweep(sym, cur, 5, 400, 3).as_dict()


def test_stale_cache_is_ignored(tmp_path):
    cur, sym, _ = setup("37a1", 5)
    key = _cache_key(cur.N, cur.minimal_model.ainvs, 5)
    store_cached_symbol(tmp_path, key, sym, cur.epsilon)
    path = _cache_path(tmp_path, key)
    data = json.loads(path.read_text())
    data["key"]["version"] = "0.0.0"
    path.write_text(json.dumps(data))
    assert load_cached_symbol(tmp_path, key) is None
    path.write_text("{not json")
    assert load_cached_symbol(tmp_path, key) is None


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kurisym.cli", "analyze", "--curve", "0,-1,1,-10,-20",
                           "--p", "7", "--no-timings", "--cache-dir", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["curve"]["N"] == 11
    usage = subprocess.run([sys.executable, "-m", "kurisym.cli", "analyze"], capture_output=True, text=True)
    assert usage.returncode == 2
