"""Command-line front end: ``kurisym analyze | sweep | heegner``.

Reports are JSON on stdout with sorted keys.  Exit codes: 0 success,
2 singular curve or failed hypothesis, 3 work budget refused,
4 malformed curve text, 5 file I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .arith import is_prime
from .curves import SingularCurveError, WeierstrassModel, analyze_curve
from .heegner import SupersingularError, heegner_report
from .kurihara import DEFAULT_BUDGET, BudgetExceeded, caveats_for, delta, sweep
from .modsym import (
    EigenspaceError,
    EigenSymbol,
    atkin_lehner_sign,
    build_plus_space,
    normalize_p_integral,
    rational_eigensymbol,
    symbol_from_dict,
    symbol_to_dict,
)
from .numeric import delta_one_crosscheck, real_period

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_BUDGET = 3
EXIT_MALFORMED = 4
EXIT_IO = 5

CACHE_ENV = "KURISYM_CACHE_DIR"

_CURVE_RE = re.compile(r"^\s*[+-]?\d+(\s*,\s*[+-]?\d+){4}\s*$")


class CurveSpecError(ValueError):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def parse_curve_spec(text: str) -> WeierstrassModel:
    """Parse ``a1,a2,a3,a4,a6`` or ``@file:line`` (1-based line of such a file)."""
    if text.startswith("@"):
        path, sep, line = text[1:].rpartition(":")
        if not sep or not line.isdigit() or int(line) < 1:
            raise CurveSpecError(f"expected @file:line, got {text!r}", EXIT_MALFORMED)
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as exc:
            raise CurveSpecError(f"cannot read {path}: {exc}", EXIT_IO) from exc
        if int(line) > len(lines):
            raise CurveSpecError(f"{path} has only {len(lines)} lines", EXIT_IO)
        text = lines[int(line) - 1]
    if not _CURVE_RE.match(text):
        raise CurveSpecError(f"malformed curve {text!r}; expected a1,a2,a3,a4,a6", EXIT_MALFORMED)
    coeffs = [int(x) for x in text.split(",")]
    try:
        return WeierstrassModel(*coeffs)
    except SingularCurveError as exc:
        raise CurveSpecError(str(exc), EXIT_HYPOTHESIS) from exc


# ---------------------------------------------------------------------------
# cache


def cache_dir(override: str | None) -> Path:
    if override:
        return Path(override)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "kurisym"


def _cache_key(N: int, ainvs, p: int) -> dict:
    return {"version": __version__, "N": N, "ainvs": list(ainvs), "p": p}


def _cache_path(directory: Path, key: dict) -> Path:
    ainv = "_".join(str(a) for a in key["ainvs"])
    return directory / f"symbol-v{key['version']}-N{key['N']}-p{key['p']}-{ainv}.json"


def load_cached_symbol(directory: Path, key: dict) -> tuple[EigenSymbol, int] | None:
    path = _cache_path(directory, key)
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if data.get("key") != key:
        return None  # stale or foreign record, rebuilt rather than migrated
    try:
        return symbol_from_dict(data["symbol"]), int(data["epsilon"])
    except (KeyError, ValueError, TypeError):
        return None


def store_cached_symbol(directory: Path, key: dict, sym: EigenSymbol, epsilon: int) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    payload = json.dumps({"key": key, "symbol": symbol_to_dict(sym), "epsilon": epsilon}, sort_keys=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, _cache_path(directory, key))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def eigensymbol_for(curve, p: int, directory: Path | None) -> tuple[EigenSymbol, int, bool]:
    """Normalized eigensymbol and root number, through the cache when enabled."""
    key = _cache_key(curve.N, curve.minimal_model.ainvs, p)
    if directory is not None:
        hit = load_cached_symbol(directory, key)
        if hit is not None:
            return hit[0], hit[1], True
    space = build_plus_space(curve.N)
    sym = normalize_p_integral(rational_eigensymbol(space, curve), p)
    eps = atkin_lehner_sign(space, sym)
    if directory is not None:
        store_cached_symbol(directory, key, sym, eps)
    return sym, eps, False


# ---------------------------------------------------------------------------
# commands


def _config(args) -> dict:
    cfg = {"command": args.command, "curve": args.curve, "p": args.p}
    for name in ("lmax", "rmax", "m", "disc", "diagnostic_parity", "budget"):
        if hasattr(args, name):
            cfg[name] = getattr(args, name)
    return cfg


def _curve_block(curve) -> dict:
    d = curve.as_dict()
    return {k: d[k] for k in ("ainvs", "N", "tam_E", "local", "reduction_at_p", "t", "flags")}


def _run(args) -> tuple[dict, int]:
    timings: dict = {}
    t0 = time.perf_counter()
    W = parse_curve_spec(args.curve)
    curve = analyze_curve(W, args.p)
    timings["curve"] = time.perf_counter() - t0
    report: dict = {
        "tool_version": __version__,
        "config": _config(args),
        "curve": _curve_block(curve),
        "caveats": caveats_for(curve, args.p),
    }

    if args.command == "heegner":
        t1 = time.perf_counter()
        rep = heegner_report(curve, args.disc, args.p, ell_max=args.lmax)
        report["heegner"] = rep.as_dict()
        timings["heegner"] = time.perf_counter() - t1
        return _finish(report, timings, args), EXIT_OK

    t1 = time.perf_counter()
    directory = None if args.no_cache else cache_dir(args.cache_dir)
    sym, eps, hit = eigensymbol_for(curve, args.p, directory)
    curve = curve.with_epsilon(eps)
    timings["symbol"] = time.perf_counter() - t1
    timings["cache_hit"] = hit
    space = build_plus_space(curve.N)
    report["symbol"] = {
        "dim": space.cuspidal_dimension,
        "probes": [[q, a] for q, a in sorted(sym.probe_eigenvalues.items())],
        "epsilon": eps,
        "scale": str(sym.normalization_content),
    }
    d1 = delta(sym, [], args.p)
    report["delta_1"] = d1.as_dict()

    t2 = time.perf_counter()
    check = delta_one_crosscheck(sym, curve)
    report["numeric"] = {"omega_plus": real_period(curve.minimal_model), "crosscheck": check}
    timings["numeric"] = time.perf_counter() - t2

    if args.command == "sweep":
        t3 = time.perf_counter()
        rep = sweep(sym, curve, args.p, args.lmax, args.rmax, args.m, eps,
                    diagnostic_parity=args.diagnostic_parity, workers=args.threads, budget=args.budget)
        timings["sweep"] = time.perf_counter() - t3
        block = rep.as_dict()
        block.pop("caveats")
        report["sweep"] = block
        report["caveats"] = sorted(set(report["caveats"]) | set(rep.caveats))
    return _finish(report, timings, args), EXIT_OK


def _finish(report: dict, timings: dict, args) -> dict:
    if not args.no_timings:
        report["timings"] = {k: (round(v, 6) if isinstance(v, float) else v) for k, v in timings.items()}
    return report


def emit_report(report: dict, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False))
    stream.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kurisym", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kurisym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--curve", required=True, help="a1,a2,a3,a4,a6 or @file:line")
        sp.add_argument("--p", type=int, required=True, help="odd prime")
        sp.add_argument("--cache-dir", default=None, help=f"cache directory (default ${CACHE_ENV})")
        sp.add_argument("--no-cache", action="store_true")
        sp.add_argument("--no-timings", action="store_true", help="omit the timings block")
        sp.add_argument("--threads", type=int, default=1)

    common(sub.add_parser("analyze", help="curve data, eigensymbol and delta_1"))
    sw = sub.add_parser("sweep", help="delta_n over products of Kolyvagin primes")
    common(sw)
    sw.add_argument("--lmax", type=int, default=1000)
    sw.add_argument("--rmax", type=int, default=2)
    sw.add_argument("--m", type=int, default=1)
    sw.add_argument("--diagnostic-parity", action="store_true", help="also evaluate wrong-parity n")
    sw.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="cap on the sum of phi(n)")
    hg = sub.add_parser("heegner", help="Heegner hypotheses and index predictions")
    common(hg)
    hg.add_argument("--disc", type=int, required=True, help="D_K, with K = Q(sqrt(-D_K))")
    hg.add_argument("--lmax", type=int, default=1000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.p < 3 or not is_prime(args.p):
        print(f"error: p must be an odd prime, got {args.p}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    try:
        report, code = _run(args)
    except CurveSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (EigenspaceError, SupersingularError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    emit_report(report)
    return code


if __name__ == "__main__":
    sys.exit(main())
