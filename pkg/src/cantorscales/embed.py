"""Near-isometric realization of a product in bounded sequence space.

A point x = (x_1, x_2, ...) of a compact product maps to the bounded
sequence

    f(x)_i = sum over levels k with x_k = i  of  1 / (k * 2**k),

one coordinate per branch label i, under the supremum norm.  The unit
sequences e_1, e_2, ... form an equilateral set (pairwise sup-distance
exactly 1), so each level contributes its weight to exactly one
coordinate.  Prefixes are extended by an all-ones tail to a common
horizon so that the tail contributions cancel exactly in differences.

If two points first differ at level k0, so the product metric is
delta = 2**(-k0), the differing labels pick up 1/(k0 2**k0) and lose
at most the full deeper tail, giving the exact two-sided estimates

    delta / (4 k0**2)  <=  ||f(x) - f(y)||  <=  2 delta.

Hence f is injective and the log-distance ratio
ln ||f(x)-f(y)|| / ln delta lies in

    [(k0 - 1) / k0,  (k0 + 2 + 2 log2 k0) / k0],

an envelope shrinking to 1 as k0 grows: the realization distorts
scales only by o(1) in the exponent, which preserves measure scales.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import (CantorScalesError, InvalidParameterError,
                     UndefinedRatioError)
from .product import CompactProduct, PointPrefix, first_differing_index


@dataclass(frozen=True)
class EmbeddedPoint:
    """Sparse sequence-space element: branch label -> exact coordinate."""

    coords: tuple               # sorted ((label, Fraction), ...)
    horizon: int                # number of levels folded in

    def coord(self, label: int) -> Fraction:
        for i, c in self.coords:
            if i == label:
                return c
        return Fraction(0)


def _level_weight(k: int) -> Fraction:
    return Fraction(1, k * 2 ** k)


def embed_prefix(prefix, horizon: Optional[int] = None) -> EmbeddedPoint:
    """Map a prefix, padded with the all-ones tail up to the horizon."""
    coords_in = prefix.coords if isinstance(prefix, PointPrefix) else tuple(prefix)
    if not coords_in:
        raise InvalidParameterError("cannot embed an empty prefix")
    horizon = len(coords_in) if horizon is None else horizon
    if horizon < len(coords_in):
        raise InvalidParameterError("horizon shorter than the prefix")
    acc: dict[int, Fraction] = {}
    for k, label in enumerate(coords_in, start=1):
        acc[label] = acc.get(label, Fraction(0)) + _level_weight(k)
    for k in range(len(coords_in) + 1, horizon + 1):
        acc[1] = acc.get(1, Fraction(0)) + _level_weight(k)
    return EmbeddedPoint(coords=tuple(sorted(acc.items())), horizon=horizon)


def embedded_distance(p: EmbeddedPoint, q: EmbeddedPoint) -> Fraction:
    """Exact supremum-norm distance."""
    if p.horizon != q.horizon:
        raise InvalidParameterError(
            "points embedded to different horizons are not comparable")
    labels = {i for i, _ in p.coords} | {i for i, _ in q.coords}
    best = Fraction(0)
    for i in labels:
        d = abs(p.coord(i) - q.coord(i))
        if d > best:
            best = d
    return best


@dataclass
class DistortionRecord:
    k0: int                     # first differing coordinate
    delta: Fraction             # product distance 2**(-k0)
    dist: Fraction              # embedded sup distance
    ratio: float                # ln dist / ln delta
    lower_bound: Fraction       # delta / (4 k0**2)
    upper_bound: Fraction       # 2 delta

    @property
    def within_bounds(self) -> bool:
        return self.lower_bound <= self.dist <= self.upper_bound

    @property
    def envelope(self) -> tuple:
        """Ratio range implied by the distance bounds at this k0."""
        lo = (self.k0 - 1) / self.k0
        hi = (self.k0 + 2 + 2 * math.log2(self.k0)) / self.k0
        return (lo, hi)


def distortion_ratio(x, y, m: Optional[int] = None) -> DistortionRecord:
    """Exact distances and their log ratio for one pair of prefixes."""
    cx = x.coords if isinstance(x, PointPrefix) else tuple(x)
    cy = y.coords if isinstance(y, PointPrefix) else tuple(y)
    k0 = first_differing_index(cx, cy)
    if k0 is None:
        raise UndefinedRatioError("points agree on every coordinate")
    m = max(len(cx), len(cy)) if m is None else m
    dist = embedded_distance(embed_prefix(cx, m), embed_prefix(cy, m))
    delta = Fraction(1, 2 ** k0)
    # big-integer logs: float(dist) would underflow past ~2**-1000
    log_dist = math.log(dist.numerator) - math.log(dist.denominator)
    ratio = log_dist / (-k0 * math.log(2))
    return DistortionRecord(
        k0=k0, delta=delta, dist=dist, ratio=ratio,
        lower_bound=delta / (4 * k0 * k0),
        upper_bound=2 * delta)


def sample_split_pair(product: CompactProduct, rng: random.Random,
                      split_level: int, length: Optional[int] = None):
    """Two random points forced to first differ exactly at split_level."""
    length = product.depth if length is None else length
    if not 1 <= split_level <= length <= product.depth:
        raise InvalidParameterError(
            f"split level {split_level} outside 1..{length}")
    if product.n[split_level - 1] < 2:
        raise InvalidParameterError(
            f"level {split_level} has a single branch; points cannot split there")
    shared = [rng.randint(1, product.n[k]) for k in range(split_level - 1)]
    a, b = rng.sample(range(1, product.n[split_level - 1] + 1), 2)
    tail_x = [rng.randint(1, product.n[k]) for k in range(split_level, length)]
    tail_y = [rng.randint(1, product.n[k]) for k in range(split_level, length)]
    x = PointPrefix(tuple(shared + [a] + tail_x))
    y = PointPrefix(tuple(shared + [b] + tail_y))
    return x, y


def sample_distortion_pairs(product: CompactProduct, count: int, seed: int,
                            max_split: Optional[int] = None,
                            length: Optional[int] = None) -> list:
    """Seeded pair list cycling split levels 1..max_split.

    Levels with a single branch cannot split and are skipped in the cycle.
    """
    if count < 1:
        raise InvalidParameterError("need at least one pair")
    max_split = product.depth if max_split is None else max_split
    if not 1 <= max_split <= product.depth:
        raise InvalidParameterError("max split outside the product depth")
    levels = [r for r in range(1, max_split + 1) if product.n[r - 1] >= 2]
    if not levels:
        raise InvalidParameterError(
            "every level up to the split cap has a single branch")
    rng = random.Random(seed)
    return [sample_split_pair(product, rng, levels[i % len(levels)], length)
            for i in range(count)]


def verify_distortion_bounds(pairs: list, m: Optional[int] = None) -> dict:
    """Exact two-sided bound checks and ratio statistics over given pairs.

    The distance bounds are theorems of the construction; a violation
    means the implementation is broken, so it raises rather than being
    reported as data.
    """
    if not pairs:
        raise InvalidParameterError("need at least one pair")
    violations = []
    ratio_min = ratio_max = None
    by_k0: dict[int, dict] = {}
    for x, y in pairs:
        rec = distortion_ratio(x, y, m)
        if not rec.within_bounds:
            violations.append((x, y, rec))
            continue
        if ratio_min is None or rec.ratio < ratio_min:
            ratio_min = rec.ratio
        if ratio_max is None or rec.ratio > ratio_max:
            ratio_max = rec.ratio
        stats = by_k0.setdefault(rec.k0, {"k0": rec.k0, "count": 0,
                                          "ratio_lo": rec.ratio,
                                          "ratio_hi": rec.ratio})
        stats["count"] += 1
        stats["ratio_lo"] = min(stats["ratio_lo"], rec.ratio)
        stats["ratio_hi"] = max(stats["ratio_hi"], rec.ratio)
    if violations:
        x, y, rec = violations[0]
        raise CantorScalesError(
            f"embedded distance outside its certified bounds for {len(violations)} "
            f"of {len(pairs)} pairs; first at split level {rec.k0} "
            f"(dist {rec.dist}, bounds [{rec.lower_bound}, {rec.upper_bound}])")
    return {
        "pairs": len(pairs),
        "violations": 0,
        "ratio_min": ratio_min,
        "ratio_max": ratio_max,
        "by_k0": [by_k0[k] for k in sorted(by_k0)],
    }
