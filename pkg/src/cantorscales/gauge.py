"""Gauge functions evaluated at dyadic scales with certified enclosures.

A gauge is a non-decreasing function phi with phi(0+) = 0 used to weigh
coverings and packings.  Everything here evaluates gauges only at the
dyadic scales 2**(-k) and works with ln phi(2**(-k)) as a
:class:`~cantorscales.enclosure.LogReal`.

Supported shapes, closed under composition with scaling and argument
halving:

* ``power(alpha)``:            phi(eps) = eps**alpha
* ``iterated(p, q, alpha)``:   phi(eps) = 1 / exp_p(alpha * logp_q(1/eps))
  where exp_p is the p-fold iterated exponential and logp_q the q-fold
  iterated truncated logarithm  logp(x) = log(x) for x > 1, else 0
  (natural logarithm).
* ``scaled(c, inner)``:        phi(eps) = c * inner(eps)
* ``half(inner)``:             phi(eps) = inner(eps / 2)

The pair check ``check_domination`` certifies a constant C with
psi(2 eps) <= C * phi(eps) across the sampled levels, which is the
compatibility condition the sequence construction needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import gmpy2

from .enclosure import (DEFAULT_PRECISION, LogReal, Pow2, iv_exp, iv_ln2,
                        iv_log_plus, iv_mul_pos_fraction, iv_neg)
from .errors import InvalidParameterError, InvalidSpecError, TooLargeError

Number = Union[int, float, Fraction]


def _as_positive_fraction(x: Number, what: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, float, Fraction)):
        raise InvalidSpecError(f"{what} must be a positive number")
    if isinstance(x, float) and not math.isfinite(x):
        raise InvalidSpecError(f"{what} must be finite")
    fr = Fraction(x)
    if fr <= 0:
        raise InvalidSpecError(f"{what} must be positive")
    return fr


def _check_level(k: int) -> None:
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise InvalidParameterError("dyadic level must be an integer >= 0")


class Gauge:
    """Base class; concrete gauges are immutable dataclasses below."""

    def eval_log(self, k: int, precision_bits: int = DEFAULT_PRECISION) -> LogReal:
        """Enclosure of phi(2**(-k)) as a positive real in log-domain."""
        raise NotImplementedError

    def eval_exact(self, k: int) -> Optional[Pow2]:
        """Exact value c * 2**e when the gauge admits one at this level."""
        return None

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __str__(self) -> str:
        import json
        return json.dumps(self.to_spec(), sort_keys=True)


@dataclass(frozen=True)
class PowerGauge(Gauge):
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_positive_fraction(self.alpha, "alpha"))

    def eval_log(self, k: int, precision_bits: int = DEFAULT_PRECISION) -> LogReal:
        _check_level(k)
        return LogReal.from_pow2(Pow2(Fraction(1), -self.alpha * k), precision_bits)

    def eval_exact(self, k: int) -> Optional[Pow2]:
        _check_level(k)
        return Pow2(Fraction(1), -self.alpha * k)

    def to_spec(self) -> dict:
        return {"kind": "power", "alpha": float(self.alpha)}


@dataclass(frozen=True)
class IteratedGauge(Gauge):
    p: int
    q: int
    alpha: Fraction

    def __post_init__(self):
        if not isinstance(self.p, int) or not isinstance(self.q, int) \
                or self.p < 1 or self.q < 1:
            raise InvalidSpecError("iterated gauge needs integers p, q >= 1")
        object.__setattr__(self, "alpha", _as_positive_fraction(self.alpha, "alpha"))

    def eval_log(self, k: int, precision_bits: int = DEFAULT_PRECISION) -> LogReal:
        _check_level(k)
        prec = precision_bits
        if k == 0:
            w = (gmpy2.mpfr(0), gmpy2.mpfr(0))
        else:
            w = iv_mul_pos_fraction(iv_ln2(prec), Fraction(k), prec)
        for _ in range(self.q - 1):
            w = iv_log_plus(w, prec)
        y = iv_mul_pos_fraction(w, self.alpha, prec) if w[1] != 0 else w
        for _ in range(self.p - 1):
            y = iv_exp(y, prec)
            if gmpy2.is_infinite(y[1]):
                raise TooLargeError(
                    f"iterated gauge value overflows at level {k}; "
                    f"levels up to {k - 1} remain evaluable",
                    usable_depth=k - 1)
        return LogReal.from_log_iv(iv_neg(y), prec, exact=self.eval_exact(k))

    def eval_exact(self, k: int) -> Optional[Pow2]:
        _check_level(k)
        if self.p == 1 and self.q == 1:
            return Pow2(Fraction(1), -self.alpha * k)
        return None

    def to_spec(self) -> dict:
        return {"kind": "iterated", "p": self.p, "q": self.q,
                "alpha": float(self.alpha)}


@dataclass(frozen=True)
class ScaledGauge(Gauge):
    c: Fraction
    inner: Gauge

    def __post_init__(self):
        object.__setattr__(self, "c", _as_positive_fraction(self.c, "c"))
        if not isinstance(self.inner, Gauge):
            raise InvalidSpecError("scaled gauge needs an inner gauge")

    def eval_log(self, k: int, precision_bits: int = DEFAULT_PRECISION) -> LogReal:
        factor = LogReal.from_fraction(self.c, precision_bits)
        return factor.mul(self.inner.eval_log(k, precision_bits))

    def eval_exact(self, k: int) -> Optional[Pow2]:
        inner = self.inner.eval_exact(k)
        if inner is None:
            return None
        return Pow2(self.c, Fraction(0)).mul(inner)

    def to_spec(self) -> dict:
        return {"kind": "scaled", "c": float(self.c), "inner": self.inner.to_spec()}


@dataclass(frozen=True)
class HalfArgumentGauge(Gauge):
    inner: Gauge

    def __post_init__(self):
        if not isinstance(self.inner, Gauge):
            raise InvalidSpecError("half-argument gauge needs an inner gauge")

    def eval_log(self, k: int, precision_bits: int = DEFAULT_PRECISION) -> LogReal:
        _check_level(k)
        return self.inner.eval_log(k + 1, precision_bits)

    def eval_exact(self, k: int) -> Optional[Pow2]:
        _check_level(k)
        return self.inner.eval_exact(k + 1)

    def to_spec(self) -> dict:
        return {"kind": "half", "inner": self.inner.to_spec()}


def make_power_gauge(alpha: Number) -> Gauge:
    """Gauge eps -> eps**alpha; ln phi(2**(-k)) = -alpha k ln 2."""
    return PowerGauge(alpha)


def make_iterated_gauge(p: int, q: int, alpha: Number) -> Gauge:
    """Gauge 1/exp_p(alpha * logp_q(1/eps)) on the dyadic grid."""
    return IteratedGauge(p, q, alpha)


def eval_log_at_level(g: Gauge, k: int,
                      precision_bits: int = DEFAULT_PRECISION) -> LogReal:
    """Enclosure of ln g(2**(-k)).

    Level 0 is meaningful only for pure power shapes, where g(1) = 1;
    composite shapes must be queried at k >= 1.
    """
    _check_level(k)
    if k == 0 and not isinstance(g, PowerGauge):
        raise InvalidParameterError("level 0 is only valid for power gauges")
    return g.eval_log(k, precision_bits)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def parse_gauge(spec) -> Gauge:
    """Build a gauge from its JSON object form, validating strictly."""
    if not isinstance(spec, dict):
        raise InvalidSpecError("gauge spec must be a JSON object")
    kind = spec.get("kind")
    if kind == "power":
        _require_keys(spec, {"kind", "alpha"})
        return PowerGauge(_spec_number(spec, "alpha"))
    if kind == "iterated":
        _require_keys(spec, {"kind", "p", "q", "alpha"})
        p, q = spec.get("p"), spec.get("q")
        if not isinstance(p, int) or not isinstance(q, int) \
                or isinstance(p, bool) or isinstance(q, bool):
            raise InvalidSpecError("iterated gauge needs integer p and q")
        return IteratedGauge(p, q, _spec_number(spec, "alpha"))
    if kind == "scaled":
        _require_keys(spec, {"kind", "c", "inner"})
        return ScaledGauge(_spec_number(spec, "c"), parse_gauge(spec.get("inner")))
    if kind == "half":
        _require_keys(spec, {"kind", "inner"})
        return HalfArgumentGauge(parse_gauge(spec.get("inner")))
    raise InvalidSpecError(f"unknown gauge kind: {kind!r}")


def _require_keys(spec: dict, allowed: set) -> None:
    extra = set(spec) - allowed
    missing = allowed - set(spec)
    if extra or missing:
        raise InvalidSpecError(
            f"gauge spec keys mismatch (missing {sorted(missing)}, extra {sorted(extra)})")


def _spec_number(spec: dict, key: str) -> Fraction:
    val = spec.get(key)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InvalidSpecError(f"{key} must be a number")
    return _as_positive_fraction(val, key)


# ---------------------------------------------------------------------------
# pair compatibility
# ---------------------------------------------------------------------------


@dataclass
class DominationCertificate:
    """Certificate for psi(2 eps) <= C * phi(eps) over sampled dyadic levels."""

    C: LogReal                 # the maximal sampled ratio
    status: str                # "holds" | "fails" | "indeterminate"
    depth_checked: int
    ratio_logs: list           # float midpoints of ln ratio_k, k = 1..depth
    warnings: list
    max_level: int = 1         # level attaining the maximal ratio
    phi: Optional[Gauge] = None
    psi: Optional[Gauge] = None

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def check_domination(phi: Gauge, psi: Gauge, depth: int,
                     precision_bits: int = DEFAULT_PRECISION) -> DominationCertificate:
    """Certify C = max over 1 <= k <= depth of psi(2**(-(k-1))) / phi(2**(-k)).

    Status rule, applied to consecutive ratio comparisons over the final
    third of levels: any definite non-rise means the running maximum has
    stabilized ("holds"); definite rises on every step mean it has not
    ("fails"); definite rises mixed with unresolved steps leave the trend
    "indeterminate".  Steps unresolved at the working precision alone do
    not count against stability, since a genuinely diverging ratio grows
    past any enclosure width.
    """
    if depth < 2:
        raise InvalidParameterError("domination check needs depth >= 2")
    warnings: list[str] = []
    ratios = []
    for k in range(1, depth + 1):
        num = psi.eval_log(k - 1, precision_bits)
        den = phi.eval_log(k, precision_bits)
        ratios.append(num.div(den))

    cur = ratios[0]
    max_level = 1
    blurred = 0
    for i, r in enumerate(ratios[1:], start=2):
        c = r.compare(cur)
        if c is None:
            blurred += 1
            if r.value > cur.value:
                max_level = i
            lo = cur.log_lo if cur.log_lo > r.log_lo else r.log_lo
            hi = cur.log_hi if cur.log_hi > r.log_hi else r.log_hi
            cur = LogReal(lo, hi, min(cur.precision_bits, r.precision_bits))
        elif c > 0:
            cur = r
            max_level = i
    constant = cur
    if blurred:
        warnings.append(
            f"maximal ratio blurred by overlapping enclosures on {blurred} levels")

    tail_start = depth - depth // 3
    rises = flats = setbacks = 0
    for i in range(tail_start, depth):
        c = ratios[i].compare(ratios[i - 1])
        if c is None:
            flats += 1
        elif c > 0:
            rises += 1
        else:
            setbacks += 1
    if setbacks > 0:
        status = "holds"
    elif rises > 0:
        status = "fails" if flats == 0 else "indeterminate"
    else:
        status = "holds"

    if float(constant.log_hi) > 64 * math.log(2):
        warnings.append("domination constant exceeds 2**64")
    return DominationCertificate(C=constant, status=status, depth_checked=depth,
                                 ratio_logs=[r.log_float() for r in ratios],
                                 warnings=warnings, max_level=max_level,
                                 phi=phi, psi=psi)


# ---------------------------------------------------------------------------
# scaling families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFamily:
    """A one-parameter family alpha -> gauge, ordered by decay strength."""

    kind: str = "power"
    p: int = 1
    q: int = 1

    def __post_init__(self):
        if self.kind not in ("power", "iterated"):
            raise InvalidSpecError(f"unknown family kind: {self.kind!r}")
        if not isinstance(self.p, int) or not isinstance(self.q, int) \
                or self.p < 1 or self.q < 1:
            raise InvalidSpecError("family needs integers p, q >= 1")

    def member(self, alpha: Number) -> Gauge:
        a = _as_positive_fraction(alpha, "alpha")
        if self.kind == "power":
            return PowerGauge(a)
        return IteratedGauge(self.p, self.q, a)

    def to_spec(self) -> dict:
        if self.kind == "power":
            return {"kind": "power"}
        return {"kind": "iterated", "p": self.p, "q": self.q}

    @staticmethod
    def from_spec(spec) -> "ScalingFamily":
        if not isinstance(spec, dict):
            raise InvalidSpecError("family spec must be a JSON object")
        kind = spec.get("kind")
        if kind == "power":
            _require_keys(spec, {"kind"})
            return ScalingFamily("power")
        if kind == "iterated":
            _require_keys(spec, {"kind", "p", "q"})
            p, q = spec.get("p"), spec.get("q")
            if not isinstance(p, int) or not isinstance(q, int):
                raise InvalidSpecError("family needs integer p and q")
            return ScalingFamily("iterated", p, q)
        raise InvalidSpecError(f"unknown family kind: {kind!r}")


def scaling_member(family: "ScalingFamily", alpha: Number) -> Gauge:
    """The family member at parameter alpha."""
    return family.member(alpha)


@dataclass
class SeparationReport:
    """Trend evidence that the beta member decays strictly faster.

    Two ratio streams are tracked over levels 1..depth:

    * member_beta(2**(-k)) / member_alpha(2**(-ceil(lam k)))
    * member_beta(2**(-k)) / member_alpha(2**(-k))**lam

    Separation asks both to tend to zero; the finite-depth surrogate is a
    strictly decreasing final half plus a net drop of at least one nat.
    """

    separated: bool
    status: str                    # "separated" | "not-separated" | "indeterminate"
    drops_nats: tuple
    details: dict


def scaling_separation_trend(family: ScalingFamily, alpha: Number, beta: Number,
                             lam: Number, depth: int,
                             precision_bits: int = DEFAULT_PRECISION) -> SeparationReport:
    a = _as_positive_fraction(alpha, "alpha")
    b = _as_positive_fraction(beta, "beta")
    l = Fraction(lam)
    if l <= 1:
        raise InvalidParameterError("lambda must exceed 1")
    if depth < 6:
        raise InvalidParameterError("separation trend needs depth >= 6")
    ga, gb = family.member(a), family.member(b)

    stream_shift = []   # ln of member_b(2^-k) / member_a(2^-ceil(l k))
    stream_power = []   # ln of member_b(2^-k) / member_a(2^-k)^l
    for k in range(1, depth + 1):
        vb = gb.eval_log(k, precision_bits)
        mk = -((-l * k).numerator // (-l * k).denominator)  # ceil(l k)
        va_shift = ga.eval_log(int(mk), precision_bits)
        stream_shift.append(vb.div(va_shift))
        va = ga.eval_log(k, precision_bits)
        powered = iv_mul_pos_fraction((va.log_lo, va.log_hi), l, precision_bits)
        vb_over = vb.div(LogReal.from_log_iv(powered, precision_bits))
        stream_power.append(vb_over)

    def final_half_trend(stream):
        # ceil(lam k) advances in integer steps, so consecutive terms may
        # tie; the trend check tolerates ties and demands a net drop.
        start = depth // 2
        decreasing, blocked = True, False
        for i in range(start, depth):
            c = stream[i].compare(stream[i - 1])
            if c is None:
                blocked = True
            elif c > 0:
                decreasing = False
                break
        drop = stream[start - 1].log_float() - stream[-1].log_float()
        return decreasing, blocked, drop

    dec1, blk1, drop1 = final_half_trend(stream_shift)
    dec2, blk2, drop2 = final_half_trend(stream_power)
    toward_zero = dec1 and dec2 and drop1 >= 1.0 and drop2 >= 1.0
    if (blk1 or blk2) and not toward_zero:
        status = "indeterminate"
    elif toward_zero:
        status = "separated"
    else:
        status = "not-separated"
    return SeparationReport(
        separated=(status == "separated"), status=status,
        drops_nats=(drop1, drop2),
        details={"shifted_argument": {"decreasing": dec1, "drop_nats": drop1},
                 "powered_value": {"decreasing": dec2, "drop_nats": drop2}})
