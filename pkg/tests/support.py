"""Shared, memoized curve and symbol construction for the test modules."""

from functools import lru_cache

from kurisym.curves import WeierstrassModel, analyze_curve
from kurisym.modsym import atkin_lehner_sign, build_plus_space, normalize_p_integral, rational_eigensymbol

from oracles import FIXTURES


@lru_cache(maxsize=None)
def curve_data(ainvs: tuple, p: int):
    return analyze_curve(WeierstrassModel(*ainvs), p)


@lru_cache(maxsize=None)
def raw_symbol(ainvs: tuple):
    """Eigensymbol before p-normalization (p only affects curve flags)."""
    curve = curve_data(ainvs, 5)
    space = build_plus_space(curve.N)
    return rational_eigensymbol(space, curve)


@lru_cache(maxsize=None)
def setup(label_or_ainvs, p: int):
    """(curve with root number, normalized symbol, space) for a fixture at p."""
    ainvs = tuple(FIXTURES[label_or_ainvs]) if isinstance(label_or_ainvs, str) else tuple(label_or_ainvs)
    curve = curve_data(ainvs, p)
    space = build_plus_space(curve.N)
    sym = normalize_p_integral(raw_symbol(ainvs), p)
    eps = atkin_lehner_sign(space, sym)
    return curve.with_epsilon(eps), sym, space
