"""Compact ultrametric products with uniform mass and density streams.

A branching profile n = (n_1, ..., n_D) with n_k >= 1 defines the
product K of the finite sets {1..n_k} carrying the ultrametric

    delta(x, y) = 2**(-chi),   chi = first index where x and y differ,

with delta = 0 when the points coincide.  Finite prefixes denote full
points through the all-ones tail convention, so distances are exact
dyadic rationals.  An open ball of radius eps in the dyadic band
(2**(-(k+1)), 2**(-k)] is a cylinder fixing the first k coordinates.
Under the uniform product measure that ball has mass exactly 1 / v_k
with v_k = n_1 * ... * n_k, and v_k balls cover K.

The density streams compare ball mass against a gauge g at the two
ends of each dyadic band:

    lower_k = 1 / (v_k * g(2**(-k)))          (radius at the coarse end)
    upper_k = 1 / (v_k * g(2**(-(k+1))))      (radius at the fine end)

Their window extrema bound the coarse measures of K from both sides,
which is how finite reports certify positivity and finiteness.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .enclosure import DEFAULT_PRECISION, LogReal, Pow2
from .errors import InvalidParameterError, OutOfDepthError, TooLargeError
from .gauge import Gauge


@dataclass(frozen=True)
class PointPrefix:
    """First m coordinates of a point, each within its branching range.

    Coordinates beyond the stored length are all 1 by convention, so a
    prefix stands for a genuine point of the infinite product.
    """

    coords: tuple

    def __post_init__(self):
        if not isinstance(self.coords, tuple):
            object.__setattr__(self, "coords", tuple(self.coords))
        for i, c in enumerate(self.coords, start=1):
            if not isinstance(c, int) or isinstance(c, bool) or c < 1:
                raise InvalidParameterError(
                    f"coordinate {i} must be a positive integer, got {c!r}")

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> int:
        return self.coords[i]

    def coordinate(self, k: int) -> int:
        """1-indexed coordinate with the all-ones tail applied."""
        if k < 1:
            raise InvalidParameterError("coordinate index must be >= 1")
        return self.coords[k - 1] if k <= len(self.coords) else 1


def _coords(x) -> tuple:
    return x.coords if isinstance(x, PointPrefix) else tuple(x)


def first_differing_index(x, y) -> Optional[int]:
    """1-indexed first coordinate where the full points differ, or None.

    Prefixes of different lengths are compared through the all-ones
    tail convention.
    """
    cx, cy = _coords(x), _coords(y)
    m = max(len(cx), len(cy))
    for k in range(m):
        a = cx[k] if k < len(cx) else 1
        b = cy[k] if k < len(cy) else 1
        if a != b:
            return k + 1
    return None


def ultrametric_distance(x, y) -> Fraction:
    """2**(-chi) for the first differing index chi; 0 for equal points."""
    chi = first_differing_index(x, y)
    if chi is None:
        return Fraction(0)
    return Fraction(1, 2 ** chi)


def level_of_radius(eps, depth: int) -> int:
    """The k with 2**(-(k+1)) < eps <= 2**(-k), for eps in (2**(-depth-1), 1]."""
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidParameterError("radius must be positive")
    if eps > 1:
        raise InvalidParameterError(f"radius {eps} exceeds the diameter 1")
    num, den = eps.numerator, eps.denominator
    k = max(0, den.bit_length() - num.bit_length() - 1)
    while num * 2 ** (k + 1) <= den:
        k += 1
    while num * 2 ** k > den:
        k -= 1
    if k > depth:
        raise OutOfDepthError(
            f"radius {eps} is finer than the resolved depth {depth}")
    return k


class CompactProduct:
    """The product of {1..n_k} for a finite branching profile n."""

    def __init__(self, n: Sequence[int]):
        n = tuple(n)
        if not n:
            raise InvalidParameterError("branching profile must be nonempty")
        for i, m in enumerate(n, start=1):
            if not isinstance(m, int) or isinstance(m, bool) or m < 1:
                raise InvalidParameterError(
                    f"branch count at level {i} must be a positive integer")
        self.n = n
        v, cur = [], 1
        for m in n:
            cur *= m
            v.append(cur)
        self._v = tuple(v)

    @property
    def depth(self) -> int:
        return len(self.n)

    def v(self, k: int) -> int:
        """v_k = n_1 * ... * n_k; v_0 = 1."""
        if k == 0:
            return 1
        if not 1 <= k <= self.depth:
            raise OutOfDepthError(f"level {k} outside 0..{self.depth}")
        return self._v[k - 1]

    def ball_mass(self, k: int) -> Fraction:
        """Uniform mass 1/v_k of any open ball whose radius lies in the
        level-k band (2**(-(k+1)), 2**(-k)]; center-free by homogeneity."""
        if not isinstance(k, int) or isinstance(k, bool) or k < 0:
            raise InvalidParameterError("ball level must be an integer >= 0")
        if k > self.depth:
            raise OutOfDepthError(f"level {k} exceeds the resolved depth {self.depth}")
        return Fraction(1, self.v(k))

    def cover_number(self, eps) -> int:
        """Minimal number of radius-eps open balls covering the whole product."""
        return self.v(level_of_radius(eps, self.depth))

    def validate_point(self, x) -> PointPrefix:
        p = x if isinstance(x, PointPrefix) else PointPrefix(tuple(x))
        if len(p) > self.depth:
            raise OutOfDepthError(
                f"prefix of length {len(p)} exceeds depth {self.depth}")
        for i, c in enumerate(p.coords, start=1):
            if c > self.n[i - 1]:
                raise InvalidParameterError(
                    f"coordinate {i} is {c}, above the branch count {self.n[i-1]}")
        return p

    def sample_point(self, seed: int, m: Optional[int] = None) -> PointPrefix:
        """Deterministic pseudo-random prefix, coordinate j uniform on 1..n_j."""
        m = self.depth if m is None else m
        if not 1 <= m <= self.depth:
            raise OutOfDepthError(f"prefix length {m} outside 1..{self.depth}")
        rng = random.Random(seed)
        return self.draw_point(rng, m)

    def draw_point(self, rng: random.Random,
                   m: Optional[int] = None) -> PointPrefix:
        """Like sample_point but advancing a caller-owned generator."""
        m = self.depth if m is None else m
        if not 1 <= m <= self.depth:
            raise OutOfDepthError(f"prefix length {m} outside 1..{self.depth}")
        return PointPrefix(tuple(rng.randint(1, b) for b in self.n[:m]))

    # -- serialization -----------------------------------------------------

    def to_spec(self) -> dict:
        return {"n": [int(x) for x in self.n], "depth": self.depth}

    @staticmethod
    def from_spec(spec) -> "CompactProduct":
        if not isinstance(spec, dict) or set(spec) - {"n", "depth"}:
            raise InvalidParameterError(
                'product spec must be an object with keys "n" and "depth"')
        n = spec.get("n")
        if not isinstance(n, list) or not n:
            raise InvalidParameterError('"n" must be a nonempty list')
        product = CompactProduct(tuple(n))
        depth = spec.get("depth", product.depth)
        if depth != product.depth:
            raise InvalidParameterError(
                f'"depth" {depth} disagrees with the {product.depth} branch counts')
        return product

    # -- density streams -------------------------------------------------

    def density_stream(self, gauge: Gauge, side: str = "lower",
                       precision_bits: int = DEFAULT_PRECISION) -> list:
        """[1/(v_k * g(eps_k))] for k = 1..depth as certified values.

        side="lower" uses eps_k = 2**(-k) (coarse band end), "upper" uses
        eps_k = 2**(-(k+1)) (fine end).  Raises on gauge overflow; the
        wrapper density_ratio_stream truncates instead.
        """
        if side not in ("lower", "upper"):
            raise InvalidParameterError(f"unknown stream side: {side!r}")
        shift = 0 if side == "lower" else 1
        out = []
        for k in range(1, self.depth + 1):
            g = gauge.eval_log(k + shift, precision_bits)
            vk = LogReal.from_pow2(Pow2(Fraction(self.v(k)), Fraction(0)),
                                   precision_bits)
            out.append(vk.mul(g).recip())
        return out


@dataclass
class DensityStream:
    """Per-level mass/gauge ratios 1/(v_k g(eps_k)), k = 1..len(ratios)."""

    side: str                   # "lower" | "upper"
    gauge: Gauge
    ratios: list                # LogReal entries, level k at index k-1
    warnings: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ratios)


def density_ratio_stream(product: CompactProduct, gauge: Gauge,
                         side: str = "lower",
                         precision_bits: int = DEFAULT_PRECISION
                         ) -> DensityStream:
    """Density stream of the uniform measure against a gauge.

    Gauge overflow at deep levels truncates the stream and flags it
    instead of failing the whole computation.
    """
    if side not in ("lower", "upper"):
        raise InvalidParameterError(f"unknown stream side: {side!r}")
    shift = 0 if side == "lower" else 1
    ratios: list = []
    warnings: list = []
    for k in range(1, product.depth + 1):
        try:
            g = gauge.eval_log(k + shift, precision_bits)
        except TooLargeError:
            warnings.append(
                f"stream truncated at level {k}: gauge value overflows")
            break
        vk = LogReal.from_pow2(Pow2(Fraction(product.v(k)), Fraction(0)),
                               precision_bits)
        ratios.append(vk.mul(g).recip())
    return DensityStream(side=side, gauge=gauge, ratios=ratios,
                         warnings=warnings)


def density_stream_csv(stream) -> str:
    """CSV serialization of a density stream: k, log_ratio, error_bound."""
    ratios = stream.ratios if isinstance(stream, DensityStream) else stream
    lines = ["k,log_ratio,error_bound"]
    for k, r in enumerate(ratios, start=1):
        lines.append(f"{k},{r.log_float()!r},{float(r.error_bound)!r}")
    return "\n".join(lines) + "\n"


def density_stream_from_log2(log2_v: Sequence[float], gauge: Gauge,
                             side: str = "lower",
                             precision_bits: int = DEFAULT_PRECISION) -> list:
    """Float ln-densities for approximate chains: -(ln v_k + ln g(eps_k))."""
    if side not in ("lower", "upper"):
        raise InvalidParameterError(f"unknown stream side: {side!r}")
    import math
    shift = 0 if side == "lower" else 1
    out = []
    for k in range(1, len(log2_v) + 1):
        g = gauge.eval_log(k + shift, precision_bits).log_float()
        out.append(-(log2_v[k - 1] * math.log(2) + g))
    return out


@dataclass
class StreamExtrema:
    minimum: LogReal
    maximum: LogReal
    argmin: int                 # 1-indexed level
    argmax: int
    warnings: list


def stream_extrema(stream, window: tuple) -> StreamExtrema:
    """Enclosure-sound extrema of stream levels window[0]..window[1] inclusive."""
    ratios = stream.ratios if isinstance(stream, DensityStream) else stream
    lo, hi = window
    if not 1 <= lo <= hi <= len(ratios):
        raise InvalidParameterError(
            f"window {window} outside stream levels 1..{len(ratios)}")
    warnings: list = []
    mn = mx = ratios[lo - 1]
    argmin = argmax = lo
    for k in range(lo + 1, hi + 1):
        s = ratios[k - 1]
        c = s.compare(mx)
        if c is None:
            warnings.append(f"maximum blurred at level {k}")
            if s.value > mx.value:
                mx, argmax = s, k
        elif c > 0:
            mx, argmax = s, k
        c = s.compare(mn)
        if c is None:
            warnings.append(f"minimum blurred at level {k}")
            if s.value < mn.value:
                mn, argmin = s, k
        elif c < 0:
            mn, argmin = s, k
    return StreamExtrema(minimum=mn, maximum=mx, argmin=argmin, argmax=argmax,
                         warnings=warnings)


def window_limsup(stream, window: tuple) -> LogReal:
    """Maximum of the stream over the inclusive level window, with enclosure."""
    return stream_extrema(stream, window).maximum


def window_liminf(stream, window: tuple) -> LogReal:
    """Minimum of the stream over the inclusive level window, with enclosure."""
    return stream_extrema(stream, window).minimum
