"""Truncated coarse measures on compact products, with exact oracles.

For a window of levels e..D (ball radii between 2**(-(D+1)) and
2**(-e)), the two truncated set functions of a gauge g on a product K
are

    cover value:   min over ball covers     of  sum g(fine radius)
    packing value: max over disjoint balls  of  sum g(coarse radius)

where a ball at level j contributes g(2**(-(j+1))) to covers and
g(2**(-j)) to packings (the two ends of its dyadic radius band).  Both
optima factor over subtrees, giving a one-pass recurrence

    opt_D = cost_D,   opt_j = min/max(cost_j, n_(j+1) * opt_(j+1)),

with total value v_e * opt_e.  The oracles below instead enumerate
every antichain of the ball tree (as level-count profiles, deduplicated
across isomorphic subtrees) and optimize exactly, which is what the
recurrences are tested against.

Exact optimization needs exact arithmetic on sums  sum_f r_f * 2**f
with rational r_f and exponents f in [0, 1): such a sum vanishes only
when all r_f do, because x**q - 2 is irreducible over the rationals,
so a zero test is coefficient inspection and a sign test is certified
numeric evaluation at escalating precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .enclosure import (DEFAULT_PRECISION, LogReal, Pow2, iv_add, iv_exp,
                        iv_from_int, iv_ln2, iv_mul_pos_fraction, iv_neg)
from .errors import InvalidParameterError, TooLargeError
from .gauge import Gauge
from .product import CompactProduct, StreamExtrema, stream_extrema

_ORACLE_LEAF_CAP = 24
_SIGN_PRECISION_CAP = 1 << 20
_EXPONENT_FOLD_CAP = 1 << 20


@dataclass(frozen=True)
class TruncationWindow:
    """Inclusive level range e..D selecting ball radii 2**(-(D+1))..2**(-e)."""

    e: int
    D: int

    def __post_init__(self):
        if not (isinstance(self.e, int) and isinstance(self.D, int)):
            raise InvalidParameterError("window bounds must be integers")
        if not 0 <= self.e <= self.D:
            raise InvalidParameterError(f"invalid window {self.e}..{self.D}")

    def check(self, product: CompactProduct) -> None:
        if self.D > product.depth:
            raise InvalidParameterError(
                f"window end {self.D} exceeds product depth {product.depth}")

    def levels(self) -> range:
        return range(self.e, self.D + 1)


# ---------------------------------------------------------------------------
# exact sums of rational powers of two
# ---------------------------------------------------------------------------


class Pow2Sum:
    """Exact finite sum  sum_f coeff_f * 2**f  with f rational in [0, 1)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[dict] = None):
        self.terms: dict = {}
        if terms:
            for f, c in terms.items():
                self._accumulate(Fraction(f), Fraction(c))

    def _accumulate(self, exponent: Fraction, coeff: Fraction) -> None:
        if coeff == 0:
            return
        shift = exponent.numerator // exponent.denominator
        if abs(shift) > _EXPONENT_FOLD_CAP:
            raise TooLargeError(f"exponent {exponent} too large to fold exactly")
        frac = exponent - shift
        coeff = coeff * (Fraction(2) ** shift)
        cur = self.terms.get(frac, Fraction(0)) + coeff
        if cur == 0:
            self.terms.pop(frac, None)
        else:
            self.terms[frac] = cur

    @classmethod
    def from_pow2(cls, p: Pow2, count=1) -> "Pow2Sum":
        out = cls()
        out._accumulate(p.exp2, p.coeff * count)
        return out

    def add_pow2(self, p: Pow2, count=1) -> "Pow2Sum":
        out = Pow2Sum(self.terms)
        out._accumulate(p.exp2, p.coeff * count)
        return out

    def sub(self, other: "Pow2Sum") -> "Pow2Sum":
        out = Pow2Sum(self.terms)
        for f, c in other.terms.items():
            out._accumulate(f, -c)
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def sign(self) -> int:
        """Exact sign; certified numeric evaluation resolves nonzero sums."""
        if not self.terms:
            return 0
        if all(c > 0 for c in self.terms.values()):
            return 1
        if all(c < 0 for c in self.terms.values()):
            return -1
        prec = 128
        while prec <= _SIGN_PRECISION_CAP:
            lo, hi = self._enclosure(prec)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            prec *= 2
        raise TooLargeError("sign of exact sum unresolved within precision cap")

    def _enclosure(self, prec: int):
        zero = iv_from_int(0, prec)
        total = None
        for f, c in self.terms.items():
            # 2**f enclosed as exp(f * ln 2)
            e = iv_exp(iv_mul_pos_fraction(iv_ln2(prec), f, prec) if f else zero,
                       prec)
            t = iv_mul_pos_fraction(e, c, prec) if c > 0 else \
                iv_neg(iv_mul_pos_fraction(e, -c, prec))
            total = t if total is None else iv_add(total, t, prec)
        return total

    def compare(self, other: "Pow2Sum") -> int:
        return self.sub(other).sign()

    def to_float(self) -> float:
        return sum(float(c) * 2 ** float(f) for f, c in self.terms.items())

    def to_fraction(self) -> Optional[Fraction]:
        """Exact rational value when every exponent is an integer (folded to 0)."""
        if not self.terms:
            return Fraction(0)
        if set(self.terms) == {Fraction(0)}:
            return self.terms[Fraction(0)]
        return None

    def __repr__(self) -> str:
        inner = " + ".join(f"{c}*2^{f}" for f, c in sorted(self.terms.items()))
        return f"Pow2Sum({inner or '0'})"


# ---------------------------------------------------------------------------
# recurrence evaluation of the truncated values
# ---------------------------------------------------------------------------


@dataclass
class PremeasureValue:
    """Optimal truncated cover or packing value with its attaining level.

    The enclosure always carries the value; when the gauge is exact at
    the relevant levels the `exact` tag on the enclosure is set and
    `value` recovers a Fraction where one exists.
    """

    value_log: LogReal
    kind: str                   # "hausdorff" | "packing"
    level: int                  # optimizing level (argmin / argmax of v_j cost_j)

    @property
    def argmin_level(self) -> int:
        if self.kind != "hausdorff":
            raise InvalidParameterError("argmin applies to hausdorff values")
        return self.level

    @property
    def argmax_level(self) -> int:
        if self.kind != "packing":
            raise InvalidParameterError("argmax applies to packing values")
        return self.level

    @property
    def value(self):
        p = self.value_log.exact
        if p is not None and p.exp2.denominator == 1:
            return p.coeff * Fraction(2) ** int(p.exp2)
        return self.value_log

    def float(self) -> float:
        return self.value_log.float()


def _level_costs(product: CompactProduct, gauge: Gauge, window: TruncationWindow,
                 shift: int, precision_bits: int) -> list:
    return [gauge.eval_log(j + shift, precision_bits) for j in window.levels()]


def _premeasure(product: CompactProduct, gauge: Gauge, window: TruncationWindow,
                kind: str, precision_bits: int,
                rows: Optional[list] = None) -> tuple:
    """Backward recursion; returns (value, optimizing level).

    With `rows` given, appends per-level dicts (ascending j) carrying the
    branch cost and the running optimum v_j * opt_j for inspection.
    """
    window.check(product)
    shift = 1 if kind == "cover" else 0
    costs = _level_costs(product, gauge, window, shift, precision_bits)
    e, D = window.e, window.D
    opt = costs[-1]
    level = D
    trace = [(opt, level)]
    for j in range(D - 1, e - 1, -1):
        spread = opt.mul_int(product.n[j])      # n_(j+1) * opt_(j+1)
        cost = costs[j - e]
        c = cost.compare(spread)
        if c is None:
            # enclosure tie: fall back to midpoints to stay deterministic
            take_cost = (cost.value < spread.value) if kind == "cover" \
                else (cost.value > spread.value)
        elif kind == "cover":
            take_cost = c <= 0
        else:
            take_cost = c >= 0
        if take_cost:
            opt, level = cost, j
        else:
            opt = spread
        trace.append((opt, level))
    if rows is not None:
        trace.reverse()
        for i, j in enumerate(window.levels()):
            running = trace[i][0].mul_int(product.v(j))
            rows.append({
                "j": j,
                "v_j_log2": math.log2(product.v(j)),
                "cost_log": costs[j - e].log_float(),
                "running_opt_log": running.log_float(),
            })
    return opt.mul_int(product.v(e)), level


def hausdorff_premeasure(product: CompactProduct, gauge: Gauge,
                         window: TruncationWindow,
                         precision_bits: int = DEFAULT_PRECISION
                         ) -> PremeasureValue:
    """Cheapest window ball cover weighted by gauge at fine band ends."""
    value, level = _premeasure(product, gauge, window, "cover", precision_bits)
    return PremeasureValue(value_log=value, kind="hausdorff", level=level)


def packing_premeasure(product: CompactProduct, gauge: Gauge,
                       window: TruncationWindow,
                       precision_bits: int = DEFAULT_PRECISION
                       ) -> PremeasureValue:
    """Richest disjoint window ball family weighted at coarse band ends."""
    value, level = _premeasure(product, gauge, window, "pack", precision_bits)
    return PremeasureValue(value_log=value, kind="packing", level=level)


def premeasure_rows(product: CompactProduct, gauge: Gauge,
                    window: TruncationWindow, kind: str,
                    precision_bits: int = DEFAULT_PRECISION) -> list:
    """Per-level recursion trace for reporting: j, v_j_log2, cost_log,
    running_opt_log (the sub-value v_j * opt_j)."""
    if kind not in ("cover", "pack"):
        raise InvalidParameterError(f"unknown premeasure kind: {kind!r}")
    rows: list = []
    _premeasure(product, gauge, window, kind, precision_bits, rows=rows)
    return rows


def premeasure_csv(rows: Sequence[dict]) -> str:
    """CSV serialization of a recursion trace: j, v_j_log2, cost_log,
    running_opt_log."""
    lines = ["j,v_j_log2,cost_log,running_opt_log"]
    for r in rows:
        lines.append(f"{r['j']},{r['v_j_log2']!r},{r['cost_log']!r},"
                     f"{r['running_opt_log']!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# exact brute-force oracles
# ---------------------------------------------------------------------------


def _profile_sums(profiles: frozenset, count: int, width: int) -> frozenset:
    acc = {(0,) * width}
    for _ in range(count):
        acc = {tuple(a + b for a, b in zip(p, q)) for p in acc for q in profiles}
    return frozenset(acc)


def _subtree_profiles(product: CompactProduct, window: TruncationWindow,
                      kind: str) -> frozenset:
    e, D = window.e, window.D
    width = D - e + 1

    def unit(j: int) -> tuple:
        t = [0] * width
        t[j - e] = 1
        return tuple(t)

    memo: dict = {}

    def rec(j: int) -> frozenset:
        if j in memo:
            return memo[j]
        own = {unit(j)}
        if kind == "pack":
            own.add((0,) * width)
        if j < D:
            children = _profile_sums(rec(j + 1), product.n[j], width)
            own |= children
        memo[j] = frozenset(own)
        return memo[j]

    return rec(e)


def _oracle(product: CompactProduct, gauge: Gauge, window: TruncationWindow,
            kind: str) -> Pow2Sum:
    window.check(product)
    if product.v(window.D) > _ORACLE_LEAF_CAP:
        raise TooLargeError(
            f"oracle supports at most {_ORACLE_LEAF_CAP} finest-level balls, "
            f"got {product.v(window.D)}")
    shift = 1 if kind == "cover" else 0
    costs = []
    for j in window.levels():
        p = gauge.eval_exact(j + shift)
        if p is None:
            raise InvalidParameterError(
                "oracle needs a gauge with exact dyadic values")
        costs.append(p)
    subtree = _subtree_profiles(product, window, kind)
    width = window.D - window.e + 1
    totals = _profile_sums(subtree, product.v(window.e), width)
    best: Optional[Pow2Sum] = None
    want_min = kind == "cover"
    for profile in sorted(totals):
        val = Pow2Sum()
        for c, cost in zip(profile, costs):
            if c:
                val = val.add_pow2(cost, c)
        if kind == "pack" and val.is_zero():
            continue
        if best is None:
            best = val
            continue
        s = val.compare(best)
        if (s < 0) if want_min else (s > 0):
            best = val
    if best is None:
        raise InvalidParameterError("no admissible ball family in the window")
    return best


def cover_oracle(product: CompactProduct, gauge: Gauge,
                 window: TruncationWindow) -> Pow2Sum:
    """Exact minimum over every ball cover of the window; exponential scan."""
    return _oracle(product, gauge, window, "cover")


def pack_oracle(product: CompactProduct, gauge: Gauge,
                window: TruncationWindow) -> Pow2Sum:
    """Exact maximum over every disjoint ball family; exponential scan."""
    return _oracle(product, gauge, window, "pack")


# ---------------------------------------------------------------------------
# measure estimates from density streams
# ---------------------------------------------------------------------------


@dataclass
class MeasureReport:
    hausdorff: LogReal          # 1 / max(upper phi-stream on window)
    packing: LogReal            # 1 / min(lower psi-stream on window)
    hausdorff_status: str       # "ok" | "degenerate"
    packing_status: str
    hausdorff_trend: Optional[str]   # "zero" | "infinite" | None
    packing_trend: Optional[str]
    window: TruncationWindow
    upper_extrema: StreamExtrema
    lower_extrema: StreamExtrema
    flags: list = field(default_factory=list)

    def to_json(self) -> dict:
        def side(value: LogReal, status: str, trend: Optional[str]) -> dict:
            out = {"value_log": value.log_float(),
                   "error_bound": float(value.error_bound),
                   "status": status}
            if trend is not None:
                out["trend"] = trend
            return out

        return {
            "hausdorff": side(self.hausdorff, self.hausdorff_status,
                              self.hausdorff_trend),
            "packing": side(self.packing, self.packing_status,
                            self.packing_trend),
            "window": [self.window.e, self.window.D],
            "flags": list(self.flags),
        }


def _edge_trend(stream: list, ex: StreamExtrema, window: TruncationWindow,
                which: str) -> Optional[str]:
    """Divergence direction when the extremum rides the window edge.

    which="max": a maximum at the deep edge with a definite net rise means
    the true supremum keeps growing (value trend "zero" for its
    reciprocal); a maximum at the shallow edge with a definite net fall
    means deeper windows shrink it ("infinite").  which="min" mirrors.
    """
    if window.D == window.e:
        return None
    first, last = stream[window.e - 1], stream[window.D - 1]
    c = last.compare(first)
    if c is None:
        return None
    arg = ex.argmax if which == "max" else ex.argmin
    if which == "max":
        if arg == window.D and c > 0:
            return "zero"
        if arg == window.e and c < 0:
            return "infinite"
    else:
        if arg == window.D and c < 0:
            return "infinite"
        if arg == window.e and c > 0:
            return "zero"
    return None


def measure_via_density(product: CompactProduct, phi: Gauge, psi: Gauge,
                        window: TruncationWindow,
                        precision_bits: int = DEFAULT_PRECISION
                        ) -> MeasureReport:
    """Two-sided measure estimates from ball-mass density extrema.

    The reciprocal of the windowed maximum of 1/(v_k phi(2**(-(k+1))))
    bounds the cover value; the reciprocal of the windowed minimum of
    1/(v_k psi(2**(-k))) bounds the packing value.  A side degenerates
    when its extremum sits at a window edge with the stream definitely
    trending past it, since then the window has not resolved the
    measure; the trend direction names the degenerate limit.
    """
    window.check(product)
    if window.e < 1:
        raise InvalidParameterError("density windows start at level 1")
    upper = product.density_stream(phi, "upper", precision_bits)
    lower = product.density_stream(psi, "lower", precision_bits)
    span = (window.e, window.D)
    up_ex = stream_extrema(upper, span)
    lo_ex = stream_extrema(lower, span)
    flags: list = []
    h_trend = _edge_trend(upper, up_ex, window, "max")
    p_trend = _edge_trend(lower, lo_ex, window, "min")
    if h_trend is not None:
        flags.append(f"hausdorff-{h_trend}-trend")
    if p_trend is not None:
        flags.append(f"packing-{p_trend}-trend")
    return MeasureReport(
        hausdorff=up_ex.maximum.recip(),
        packing=lo_ex.minimum.recip(),
        hausdorff_status="ok" if h_trend is None else "degenerate",
        packing_status="ok" if p_trend is None else "degenerate",
        hausdorff_trend=h_trend,
        packing_trend=p_trend,
        window=window, upper_extrema=up_ex, lower_extrema=lo_ex, flags=flags)
