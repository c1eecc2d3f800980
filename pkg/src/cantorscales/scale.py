"""Reading off measure scales from branching profiles by trend analysis.

For branch products v and a test gauge g, the two level streams

    S_k = ln(v_k * g(2**(-(k+1))))      (cover side)
    P_k = ln(v_k * g(2**(-k)))          (packing side)

track the windowed cover and packing values: the cover value behaves
like exp(min_k S_k) and the packing value like exp(max_k P_k).  When g
runs over a one-parameter scaling family, the measure transitions show
up as divergence of these streams:

    below the transition the stream escapes upward (value infinite),
    above it the relevant extremum escapes downward (value zero).

Divergence is decided by comparing the stream extremum over the first
third of the window against the last third: a windowed minimum sinking
at a definite per-level rate flags the zero side of the cover value, a
rising one flags the infinite side, and the packing value mirrors this
with maxima.  Block extrema are immune to the single wild level the
constructed chains take right after each oscillation event, and a
bounded oscillating stream (a product at its own gauges) moves neither
block, so it stays indeterminate.  Bisection on the family parameter
then encloses each transition in a bracket of prescribed width.

Streams must be windowed to the active range of a constructed chain:
below the first growth level and beyond the last oscillation event the
chain is flat, which would fake a divergence of every test gauge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .enclosure import DEFAULT_PRECISION
from .errors import InvalidParameterError
from .gauge import Gauge, PowerGauge, ScalingFamily

TOL_SLOPE = 0.01            # nats per level; smaller trends count as flat
_LN2 = math.log(2)


def log2_profile(source) -> tuple:
    """Coerce a product, chain, or float sequence to per-level log2 v_k."""
    if hasattr(source, "log2_v"):
        return tuple(float(x) for x in source.log2_v)
    if hasattr(source, "n") and hasattr(source, "depth"):
        out, acc = [], 0.0
        for m in source.n:
            acc += math.log2(m)
            out.append(acc)
        return tuple(out)
    return tuple(float(x) for x in source)


def extremum_drift(ys: Sequence[float], kind: str) -> float:
    """Per-level drift of the windowed extremum between the edge thirds.

    Compares min (or max) over the first third of the window against the
    last third, normalized by the level distance between the two blocks.
    """
    n = len(ys)
    if n < 3:
        return 0.0
    third = n // 3
    pick = min if kind == "min" else max
    head = pick(ys[:third])
    tail = pick(ys[n - third:])
    return (tail - head) / (n - third)


@dataclass
class ClassifyReport:
    verdict: str                # "zero" | "infinite" | "indeterminate"
    rule: str                   # "cover" | "packing"
    drift: float                # extremum change in nats per level
    levels: int
    notes: list = field(default_factory=list)


def classify_stream(ys: Sequence[float], rule: str,
                    tol_slope: float = TOL_SLOPE) -> ClassifyReport:
    """Divergence verdict for one stream under the cover or packing rule.

    The cover value follows the windowed minimum of S, so a minimum
    drifting down at a definite rate sends it to zero and a minimum
    drifting up sends it to infinity; the packing value follows the
    windowed maximum of P with the same dichotomy.  Drift within the
    tolerance leaves the verdict open.
    """
    if rule not in ("cover", "packing"):
        raise InvalidParameterError(f"unknown classification rule: {rule!r}")
    if len(ys) < 3:
        return ClassifyReport(verdict="indeterminate", rule=rule, drift=0.0,
                              levels=len(ys), notes=["window too short"])
    d = extremum_drift(ys, "min" if rule == "cover" else "max")
    if d <= -tol_slope:
        verdict = "zero"
    elif d >= tol_slope:
        verdict = "infinite"
    else:
        verdict = "indeterminate"
    return ClassifyReport(verdict=verdict, rule=rule, drift=d, levels=len(ys))


def chain_stream(log2_v: Sequence[float], gauge: Gauge, rule: str,
                 window: tuple, precision_bits: int = DEFAULT_PRECISION) -> list:
    """[ln(v_k g(2**(-(k+shift))))] over the window, shift 1 for covers."""
    if rule not in ("cover", "packing"):
        raise InvalidParameterError(f"unknown stream rule: {rule!r}")
    lo, hi = window
    if not 1 <= lo <= hi <= len(log2_v):
        raise InvalidParameterError(
            f"window {window} outside chain levels 1..{len(log2_v)}")
    shift = 1 if rule == "cover" else 0
    if isinstance(gauge, PowerGauge):
        alpha = float(gauge.alpha)
        return [(log2_v[k - 1] - alpha * (k + shift)) * _LN2
                for k in range(lo, hi + 1)]
    return [log2_v[k - 1] * _LN2 + gauge.eval_log(k + shift,
                                                  precision_bits).log_float()
            for k in range(lo, hi + 1)]


def classify_gauge_on_chain(log2_v: Sequence[float], gauge: Gauge, rule: str,
                            window: tuple, tol_slope: float = TOL_SLOPE,
                            precision_bits: int = DEFAULT_PRECISION
                            ) -> ClassifyReport:
    ys = chain_stream(log2_v, gauge, rule, window, precision_bits)
    return classify_stream(ys, rule, tol_slope)


_KIND_TO_RULE = {"hausdorff": "cover", "packing": "packing"}


def classify_gauge_on_product(product, gauge: Gauge, kind: str,
                              window: Optional[tuple] = None,
                              tol_slope: float = TOL_SLOPE,
                              precision_bits: int = DEFAULT_PRECISION) -> str:
    """Verdict "zero" / "infinite" / "indeterminate" for one gauge.

    kind "hausdorff" classifies the cover-side stream v_k g(2**(-(k+1))),
    kind "packing" the coarse-end stream v_k g(2**(-k)).
    """
    rule = _KIND_TO_RULE.get(kind)
    if rule is None:
        raise InvalidParameterError(f"unknown classification kind: {kind!r}")
    log2_v = log2_profile(product)
    if window is None:
        window = (1, len(log2_v))
    return classify_gauge_on_chain(log2_v, gauge, rule, window,
                                   tol_slope, precision_bits).verdict


# ---------------------------------------------------------------------------
# transition bracketing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleSearch:
    """Bisection domain and target bracket width on the family parameter."""

    alpha_lo: float = 0.0625
    alpha_hi: float = 6.0
    tol: float = 0.02

    def __post_init__(self):
        if not (0 < self.alpha_lo < self.alpha_hi) or self.tol <= 0:
            raise InvalidParameterError(
                f"invalid search parameters ({self.alpha_lo}, {self.alpha_hi}, "
                f"{self.tol})")

    @staticmethod
    def coerce(search) -> "ScaleSearch":
        if search is None:
            return ScaleSearch()
        if isinstance(search, ScaleSearch):
            return search
        if isinstance(search, dict):
            return ScaleSearch(**search)
        lo, hi, *rest = search
        return ScaleSearch(lo, hi, *rest)


@dataclass
class ScaleEstimate:
    value: float                # midpoint; 0.0 or +inf under edge conventions
    bracket: tuple              # (lo, hi): highest "infinite", lowest "zero"
    depth_used: int
    classification_trace: list  # (alpha, verdict) pairs in evaluation order
    rule: str
    flags: list = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    @property
    def midpoint(self) -> float:
        return (self.bracket[0] + self.bracket[1]) / 2


def _bracket_transition(verdict_of: Callable[[float], str],
                        search: ScaleSearch, rule: str, depth_used: int
                        ) -> ScaleEstimate:
    lo, hi, tol_alpha = search.alpha_lo, search.alpha_hi, search.tol
    trace: list = []
    flags: list = []
    memo: dict = {}

    def v(x: float) -> str:
        if x not in memo:
            memo[x] = verdict_of(x)
            trace.append((x, memo[x]))
        return memo[x]

    # sup of the infinite side
    if v(lo) != "infinite":
        flags.append("no-infinite-verdict-at-search-lower-bound")
        inf_edge = lo
    else:
        a, b = lo, hi
        if v(hi) == "infinite":
            flags.append("infinite-verdict-at-search-upper-bound")
            inf_edge = hi
        else:
            while b - a > tol_alpha:
                m = (a + b) / 2
                if v(m) == "infinite":
                    a = m
                else:
                    b = m
            inf_edge = a

    # inf of the zero side
    if v(hi) != "zero":
        flags.append("no-zero-verdict-at-search-upper-bound")
        zero_edge = hi
    else:
        a, b = lo, hi
        if v(lo) == "zero":
            flags.append("zero-verdict-at-search-lower-bound")
            zero_edge = lo
        else:
            while b - a > tol_alpha:
                m = (a + b) / 2
                if v(m) == "zero":
                    b = m
                else:
                    a = m
            zero_edge = b

    if zero_edge < inf_edge:
        flags.append("edges-crossed")
        inf_edge, zero_edge = zero_edge, inf_edge
    bracket = (inf_edge, zero_edge)
    return ScaleEstimate(value=(inf_edge + zero_edge) / 2, bracket=bracket,
                         depth_used=depth_used, classification_trace=trace,
                         rule=rule, flags=flags)


def _verdict_factory(log2_v, family: ScalingFamily, rule: str, window: tuple,
                     tol_slope: float, precision_bits: int):
    def verdict_of(x: float) -> str:
        g = family.member(Fraction(x).limit_denominator(1 << 24))
        return classify_gauge_on_chain(log2_v, g, rule, window,
                                       tol_slope, precision_bits).verdict
    return verdict_of


def estimate_hausdorff_scale(product, family: ScalingFamily,
                             search=None, window: Optional[tuple] = None,
                             tol_slope: float = TOL_SLOPE,
                             precision_bits: int = DEFAULT_PRECISION
                             ) -> ScaleEstimate:
    """Bracket the cover-side transition parameter of the family."""
    search = ScaleSearch.coerce(search)
    log2_v = log2_profile(product)
    if window is None:
        window = (1, len(log2_v))
    verdict_of = _verdict_factory(log2_v, family, "cover", window,
                                  tol_slope, precision_bits)
    return _bracket_transition(verdict_of, search, "cover", window[1])


def estimate_packing_scale(product, family: ScalingFamily,
                           search=None, window: Optional[tuple] = None,
                           tol_slope: float = TOL_SLOPE,
                           precision_bits: int = DEFAULT_PRECISION
                           ) -> ScaleEstimate:
    """Bracket the packing-side transition parameter of the family."""
    search = ScaleSearch.coerce(search)
    log2_v = log2_profile(product)
    if window is None:
        window = (1, len(log2_v))
    verdict_of = _verdict_factory(log2_v, family, "packing", window,
                                  tol_slope, precision_bits)
    return _bracket_transition(verdict_of, search, "packing", window[1])


@dataclass
class LocalScaleEstimate:
    """Pointwise density exponents of the uniform mass (point-free by
    homogeneity): lower = where the fine-end density stops vanishing,
    upper = where the coarse-end density stops vanishing."""

    lower: float
    upper: float
    lower_bracket: tuple
    upper_bracket: tuple
    flags: list = field(default_factory=list)


def estimate_local_scales(product, family: ScalingFamily,
                          search=None, window: Optional[tuple] = None,
                          tol_slope: float = TOL_SLOPE,
                          precision_bits: int = DEFAULT_PRECISION
                          ) -> LocalScaleEstimate:
    """Bracket both pointwise density exponents of the uniform mass.

    The mass of the ball around any point at band k is 1/v_k, so the
    pointwise densities  mass / g(radius)  vanish exactly when the
    corresponding classification stream diverges upward.  The parameter
    set with vanishing density is then {alpha : verdict(alpha) =
    infinite}; its supremum is bracketed by bisection, with the empty
    set reported as 0 and a set exhausting the search interval clipped
    to the upper endpoint.
    """
    search = ScaleSearch.coerce(search)
    log2_v = log2_profile(product)
    if window is None:
        window = (1, len(log2_v))

    lower_est = _bracket_transition(
        _verdict_factory(log2_v, family, "cover", window, tol_slope,
                         precision_bits),
        search, "cover", window[1])
    upper_est = _bracket_transition(
        _verdict_factory(log2_v, family, "packing", window, tol_slope,
                         precision_bits),
        search, "packing", window[1])

    flags: list = []

    def collapse(est: ScaleEstimate, side: str) -> tuple:
        if "no-infinite-verdict-at-search-lower-bound" in est.flags:
            flags.append(f"{side}-empty-below-search")
            return 0.0, (0.0, 0.0)
        if "no-zero-verdict-at-search-upper-bound" in est.flags:
            flags.append(f"{side}-exhausts-search")
            return search.alpha_hi, (search.alpha_hi, search.alpha_hi)
        return est.value, est.bracket

    lower, lower_bracket = collapse(lower_est, "lower")
    upper, upper_bracket = collapse(upper_est, "upper")
    return LocalScaleEstimate(lower=lower, upper=upper,
                              lower_bracket=lower_bracket,
                              upper_bracket=upper_bracket, flags=flags)


def check_scale_order(scl_h: ScaleEstimate, scl_p: ScaleEstimate,
                      local: Optional[LocalScaleEstimate] = None) -> list:
    """Order relations between the estimates, each True unless the
    brackets certify a violation.

    Checks, in order: cover transition at or below the packing
    transition; lower local at or below the cover transition; upper
    local at or below the packing transition.  Brackets are interval
    data, so a check only fails when the intervals are disjoint in the
    wrong order; overlap counts as consistent.
    """
    checks = [scl_h.bracket[0] <= scl_p.bracket[1]]
    if local is not None:
        checks.append(local.lower_bracket[0] <= scl_h.bracket[1])
        checks.append(local.upper_bracket[0] <= scl_p.bracket[1])
    return checks


def order_check_details(scl_h: ScaleEstimate, scl_p: ScaleEstimate,
                        local: Optional[LocalScaleEstimate] = None) -> list:
    """Per-check dicts (name, holds, strict, inconclusive) for reports."""
    triples = [("hausdorff-below-packing", scl_h.bracket, scl_p.bracket)]
    if local is not None:
        triples.append(("lower-local-below-hausdorff",
                        local.lower_bracket, scl_h.bracket))
        triples.append(("upper-local-below-packing",
                        local.upper_bracket, scl_p.bracket))
    out = []
    for name, lo_br, hi_br in triples:
        holds = lo_br[0] <= hi_br[1]
        strict = lo_br[1] < hi_br[0]
        overlap = holds and not strict and lo_br[1] >= hi_br[0]
        out.append({"name": name, "holds": holds, "strict": strict,
                    "inconclusive": overlap})
    return out


def construction_window(chain_k0: Optional[int], times: Sequence[int],
                        depth: int) -> tuple:
    """The active stream window [k0, last oscillation event + 1].

    Outside it the chain is flat (all ones below k0, one long plateau
    after the last event), which would fake divergences.
    """
    if chain_k0 is None:
        raise InvalidParameterError("chain never grew; no active window")
    hi = min(depth, (max(times) + 1) if times else depth)
    if hi < chain_k0:
        hi = chain_k0
    return (chain_k0, hi)
