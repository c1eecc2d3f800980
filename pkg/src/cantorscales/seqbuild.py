"""Branching-sequence construction with a certified divisibility chain.

Given a compatible gauge pair (phi, psi) with certificate constant C,
two target sequences are formed at the dyadic levels,

    a_k = 1 / phi(2**(-(k+1)))        (lower targets)
    b_k = C / psi(2**(-k))            (upper targets, a_k <= b_k),

and an oscillating envelope u between them is discretized into a chain
of integers v_1 | v_2 | ... whose quotients n_k = v_k / v_(k-1) are the
branching factors of a compact product set.  The chain keeps

    u_k / 2 <= v_k <= u_k       for k >= k0,

so the envelope's oscillation between the two targets transfers to v,
which is what pins both coarse measure scales of the product at once.

Oscillation times: T_0 = 0 and

    T_(l+1) = least k > T_l + 1 with a_k > b_(T_l + 1),

envelope: u_k = a_(T_l) at k = T_l (l >= 1), u_k = b_(T_l + 1) on the
gap T_l < k < T_(l+1).

Chain recursion: v_1 = 1 and

    v_(k+1) = v_k                             if 2 v_k > u_(k+1)
    v_(k+1) = floor(u_(k+1) / v_k) * v_k      otherwise,

with the floor taken from a certified integer enclosure of u_(k+1).

Two chain modes exist.  ``exact`` materializes the v_k as big integers
(the divisibility invariant is checked literally); ``approx`` tracks
only log2 v_k in floating point for depths where the integers would be
astronomically large, and asserts no divisibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

import gmpy2
from gmpy2 import mpz

from .enclosure import (COMPARISON_PRECISION_CAP, DEFAULT_PRECISION,
                        INTEGER_ENCLOSURE_PRECISION_CAP, LogReal, Pow2,
                        exp_floor_enclosure, resolve_greater)
from .errors import (CantorScalesError, DepthLimitError,
                     DominationViolatedError, InvalidParameterError,
                     TooLargeError)
from .gauge import (DominationCertificate, Gauge, HalfArgumentGauge,
                    ScalingFamily, check_domination)

_LN2 = math.log(2)


class TargetSequences:
    """Lower/upper branching targets a_k, b_k, re-evaluable at any precision."""

    def __init__(self, depth: int,
                 eval_a: Callable[[int, int], LogReal],
                 eval_b: Callable[[int, int], LogReal],
                 precision_bits: int = DEFAULT_PRECISION):
        if depth < 1:
            raise InvalidParameterError("depth must be >= 1")
        self.depth = depth
        self.precision_bits = precision_bits
        self.warnings: list = []
        self._eval_a = eval_a
        self._eval_b = eval_b
        self._cache_a: dict[int, LogReal] = {}
        self._cache_b: dict[int, LogReal] = {}

    def _get(self, cache, evalf, k: int, precision_bits: Optional[int]) -> LogReal:
        if not 1 <= k <= self.depth:
            raise InvalidParameterError(f"target index {k} outside 1..{self.depth}")
        prec = precision_bits or self.precision_bits
        cur = cache.get(k)
        if cur is None or cur.precision_bits < prec:
            cur = evalf(k, prec)
            cache[k] = cur
        return cur

    def a(self, k: int, precision_bits: Optional[int] = None) -> LogReal:
        return self._get(self._cache_a, self._eval_a, k, precision_bits)

    def b(self, k: int, precision_bits: Optional[int] = None) -> LogReal:
        return self._get(self._cache_b, self._eval_b, k, precision_bits)


def _constant_provider(C) -> Callable[[int], LogReal]:
    """Normalize the certificate constant into a precision-refinable form."""
    if isinstance(C, DominationCertificate):
        exact = C.C.exact
        if exact is not None:
            return lambda prec: LogReal.from_pow2(exact, prec)
        level = getattr(C, "max_level", None)
        if level is not None and C.phi is not None:
            phi, psi = C.phi, C.psi
            return lambda prec: psi.eval_log(level - 1, prec).div(
                phi.eval_log(level, prec))
        fixed = C.C
        return lambda prec: fixed
    if isinstance(C, LogReal):
        if C.exact is not None:
            exact = C.exact
            return lambda prec: LogReal.from_pow2(exact, prec)
        return lambda prec: C
    if isinstance(C, Pow2):
        return lambda prec: LogReal.from_pow2(C, prec)
    if isinstance(C, (int, Fraction)) or (isinstance(C, float) and math.isfinite(C)):
        fr = Fraction(C)
        if fr <= 0:
            raise InvalidParameterError("certificate constant must be positive")
        return lambda prec: LogReal.from_fraction(fr, prec)
    raise InvalidParameterError(f"unsupported certificate constant: {C!r}")


def targets_from_gauges(phi: Gauge, psi: Gauge, C, depth: int,
                        precision_bits: int = DEFAULT_PRECISION
                        ) -> TargetSequences:
    """Build target sequences a_k = 1/phi(2**-(k+1)), b_k = C/psi(2**-k).

    Levels where a_k definitely exceeds b_k raise DominationViolatedError;
    orderings unresolved at the working precision are warned about on the
    returned object.
    """
    c_of = _constant_provider(C)

    def eval_a(k: int, prec: int) -> LogReal:
        return phi.eval_log(k + 1, prec).recip()

    def eval_b(k: int, prec: int) -> LogReal:
        return c_of(prec).mul(psi.eval_log(k, prec).recip())

    targets = TargetSequences(depth, eval_a, eval_b, precision_bits)
    unresolved = 0
    for k in range(1, depth + 1):
        c = targets.a(k).compare(targets.b(k))
        if c is not None and c > 0:
            raise DominationViolatedError(
                f"lower target exceeds upper target at level {k}; "
                "the gauge pair is not compatible at this depth")
        if c is None:
            unresolved += 1
    if unresolved:
        targets.warnings.append(
            f"target ordering unresolved at working precision on {unresolved} levels")
    return targets


def targets_from_values(a_values, b_values,
                        precision_bits: int = DEFAULT_PRECISION) -> TargetSequences:
    """Targets from explicit positive rationals (used by traces and tests)."""
    a_list = [Fraction(x) for x in a_values]
    b_list = [Fraction(x) for x in b_values]
    if len(a_list) != len(b_list) or not a_list:
        raise InvalidParameterError("need equal-length nonempty target lists")
    if any(x <= 0 for x in a_list + b_list):
        raise InvalidParameterError("targets must be positive")

    def eval_a(k: int, prec: int) -> LogReal:
        return LogReal.from_fraction(a_list[k - 1], prec)

    def eval_b(k: int, prec: int) -> LogReal:
        return LogReal.from_fraction(b_list[k - 1], prec)

    return TargetSequences(len(a_list), eval_a, eval_b, precision_bits)


# ---------------------------------------------------------------------------
# oscillation times and the envelope
# ---------------------------------------------------------------------------


@dataclass
class OscillationSchedule:
    times: tuple                # (T_1, ..., T_L), strictly increasing, gaps >= 2
    complete_to: int            # depth the forward scan covered
    exhausted: bool             # True when the scan provably found all times <= depth
    warnings: list = field(default_factory=list)


def oscillation_times(targets: TargetSequences,
                      depth: Optional[int] = None) -> OscillationSchedule:
    """Scan for the switching times T_(l+1) = inf{k > T_l + 1 : a_k > b_(T_l+1)}."""
    depth = depth or targets.depth
    if depth > targets.depth:
        raise InvalidParameterError("scan depth exceeds target depth")
    times: list[int] = []
    warnings: list[str] = []
    t_prev = 0
    exhausted = True
    while True:
        b_idx = t_prev + 1
        if b_idx > depth:
            exhausted = False
            break
        found = None
        for k in range(t_prev + 2, depth + 1):
            greater, resolved = resolve_greater(
                lambda p, kk=k: targets.a(kk, p),
                lambda p, bi=b_idx: targets.b(bi, p),
                targets.precision_bits)
            if not resolved:
                warnings.append(
                    f"ordering of lower target {k} against upper target {b_idx} "
                    "unresolved at precision cap; treated as not greater")
            if greater:
                found = k
                break
        if found is None:
            break
        if times:
            c = targets.a(found).compare(targets.a(times[-1]))
            if c is not None and c <= 0:
                warnings.append(
                    f"lower target fails to grow strictly between switching times "
                    f"{times[-1]} and {found}")
        times.append(found)
        t_prev = found
    if not times:
        warnings.append("no oscillation time within depth; envelope is one plateau")
    return OscillationSchedule(times=tuple(times), complete_to=depth,
                               exhausted=exhausted, warnings=warnings)


@dataclass
class Envelope:
    """The oscillating branching envelope u_1..u_depth between the targets.

    Entries are references into the targets ("a" at switching times,
    "b" just after the previous one on each gap), so they can be
    re-evaluated at any precision.
    """

    targets: TargetSequences
    schedule: OscillationSchedule
    assignment: tuple           # entry k-1 is ("a", idx) or ("b", idx)

    @property
    def depth(self) -> int:
        return len(self.assignment)

    def eval(self, k: int, precision_bits: Optional[int] = None) -> LogReal:
        kind, idx = self.assignment[k - 1]
        if kind == "a":
            return self.targets.a(idx, precision_bits)
        return self.targets.b(idx, precision_bits)

    def validate(self) -> list:
        """Soft invariant checks: a_k <= u_k <= b_k and u nondecreasing."""
        issues: list[str] = []
        prev = None
        for k in range(1, self.depth + 1):
            u = self.eval(k)
            ca = self.targets.a(k).compare(u)
            if ca is not None and ca > 0:
                issues.append(f"envelope below the lower target at level {k}")
            cb = u.compare(self.targets.b(k))
            if cb is not None and cb > 0:
                issues.append(f"envelope above the upper target at level {k}")
            if prev is not None:
                cm = u.compare(prev)
                if cm is not None and cm < 0:
                    issues.append(f"envelope decreases at level {k}")
            prev = u
        return issues


def build_envelope(targets: TargetSequences,
                   schedule: Optional[OscillationSchedule] = None) -> Envelope:
    if schedule is None:
        schedule = oscillation_times(targets)
    depth = schedule.complete_to
    assignment: list = [None] * depth
    times = list(schedule.times)
    bounds = [0] + times + [depth + 1]
    for i in range(len(bounds) - 1):
        t_l, t_next = bounds[i], bounds[i + 1]
        for k in range(t_l + 1, min(t_next, depth + 1)):
            assignment[k - 1] = ("b", t_l + 1)
    for t in times:
        assignment[t - 1] = ("a", t)
    return Envelope(targets=targets, schedule=schedule, assignment=tuple(assignment))


# ---------------------------------------------------------------------------
# the divisibility chain
# ---------------------------------------------------------------------------


@dataclass
class DivisibilityChain:
    mode: str                         # "exact" | "approx"
    depth: int
    n: tuple                          # branch counts; None entries in approx mode
    v: Optional[tuple]                # big integers (exact mode only)
    log2_v: tuple                     # floats, both modes
    k0: Optional[int]                 # first level with v_k > 1
    warnings: list = field(default_factory=list)

    def v_int(self, k: int):
        if self.v is None:
            raise InvalidParameterError("integer chain values exist only in exact mode")
        return self.v[k - 1]


def build_chain(envelope: Envelope, mode: str = "exact",
                precision_bits: Optional[int] = None,
                enclosure_cap: int = INTEGER_ENCLOSURE_PRECISION_CAP
                ) -> DivisibilityChain:
    if mode not in ("exact", "approx"):
        raise InvalidParameterError(f"unknown chain mode: {mode!r}")
    if mode == "exact":
        return _build_chain_exact(envelope, precision_bits, enclosure_cap)
    return _build_chain_approx(envelope, precision_bits)


def _build_chain_exact(envelope: Envelope, precision_bits: Optional[int],
                       enclosure_cap: int) -> DivisibilityChain:
    prec = precision_bits or envelope.targets.precision_bits
    depth = envelope.depth
    warnings: list[str] = []
    v: list = [mpz(1)]
    n: list = [1]
    log2_v: list = [0.0]
    k0: Optional[int] = None
    for k in range(2, depth + 1):
        make_u = lambda p, kk=k: envelope.eval(kk, p)
        make_2v = lambda p, vv=v[-1]: LogReal.from_pow2(
            Pow2(Fraction(2 * vv), Fraction(0)), p)
        try:
            greater, resolved = resolve_greater(make_2v, make_u, prec)
            if not resolved:
                warnings.append(
                    f"level {k}: branch comparison unresolved at precision cap; "
                    "taking the divide branch")
            if greater:
                v.append(v[-1])
                n.append(1)
            else:
                u_floor, certified = exp_floor_enclosure(make_u, prec, enclosure_cap)
                if not certified:
                    warnings.append(
                        f"level {k}: integer enclosure straddles at precision cap; "
                        "rounded deterministically")
                m = int(u_floor // v[-1])
                if m < 1:
                    warnings.append(
                        f"level {k}: floored quotient below 1 after unresolved "
                        "comparison; clamped to 1")
                    m = 1
                v.append(v[-1] * m)
                n.append(m)
        except TooLargeError as exc:
            raise DepthLimitError(
                f"chain stops at level {k - 1}: {exc}", usable_depth=k - 1) from exc
        if k0 is None and v[-1] > 1:
            k0 = k
        log2_v.append(_log2_int(v[-1]))
    if k0 is None:
        warnings.append("chain never leaves 1 within depth; no growth level found")
    _check_sandwich(envelope, v, k0, warnings)
    return DivisibilityChain(mode="exact", depth=depth, n=tuple(n), v=tuple(v),
                             log2_v=tuple(log2_v), k0=k0, warnings=warnings)


def _check_sandwich(envelope: Envelope, v: list, k0: Optional[int],
                    warnings: list) -> None:
    # u_k / 2 <= v_k <= u_k for k >= k0; only v_k = 1 below k0
    if k0 is None:
        return
    for k in range(k0, envelope.depth + 1):
        u = envelope.eval(k)
        vk = LogReal.from_pow2(Pow2(Fraction(int(v[k - 1])), Fraction(0)),
                               u.precision_bits)
        c_hi = vk.compare(u)
        if c_hi is not None and c_hi > 0:
            warnings.append(f"sandwich violated above at level {k}")
        half_u = u.div(LogReal.from_int(2, u.precision_bits))
        c_lo = vk.compare(half_u)
        if c_lo is not None and c_lo < 0:
            warnings.append(f"sandwich violated below at level {k}")


def _build_chain_approx(envelope: Envelope,
                        precision_bits: Optional[int]) -> DivisibilityChain:
    prec = precision_bits or envelope.targets.precision_bits
    depth = envelope.depth
    warnings: list[str] = ["approximate mode: divisibility not asserted"]
    log2_v: list = [0.0]
    n: list = [1]
    k0: Optional[int] = None
    for k in range(2, depth + 1):
        lu = envelope.eval(k, prec).log_float() / _LN2
        cur = log2_v[-1]
        if cur + 1.0 > lu:
            log2_v.append(cur)
            n.append(1)
        else:
            delta = lu - cur
            if delta <= 52:
                m = max(1, math.floor(2 ** delta))
                n.append(m)
                log2_v.append(cur + math.log2(m))
            else:
                n.append(None)
                log2_v.append(lu)
        if k0 is None and log2_v[-1] > 0:
            k0 = k
    if k0 is None:
        warnings.append("chain never leaves 1 within depth; no growth level found")
    return DivisibilityChain(mode="approx", depth=depth, n=tuple(n), v=None,
                             log2_v=tuple(log2_v), k0=k0, warnings=warnings)


def _log2_int(x) -> float:
    return float(gmpy2.log2(mpz(x)))


def branching_from_chain(chain: DivisibilityChain) -> tuple:
    """Branch counts n_k = v_k / v_(k-1) with v_0 = 1, by exact division."""
    if chain.v is None:
        raise InvalidParameterError(
            "approximate chains carry no exact integers to divide")
    out = []
    prev = mpz(1)
    for k, vk in enumerate(chain.v, start=1):
        q, r = divmod(mpz(vk), prev)
        if r != 0:
            raise CantorScalesError(
                f"internal error: chain loses divisibility at level {k}")
        out.append(int(q))
        prev = mpz(vk)
    return tuple(out)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


@dataclass
class ConstructionResult:
    phi: Gauge
    psi: Gauge
    certificate: DominationCertificate
    depth: int
    precision_bits: int
    mode: str
    targets: TargetSequences
    schedule: OscillationSchedule
    envelope: Envelope
    chain: DivisibilityChain
    window_stats: Optional[dict]
    warnings: list

    def product(self):
        from .product import CompactProduct
        if self.chain.v is None:
            raise InvalidParameterError(
                "approximate chains do not materialize a product")
        return CompactProduct(tuple(int(x) for x in self.chain.n))

    def report(self) -> dict:
        chain = self.chain
        rep = {
            "schema": "construction/1",
            "mode": chain.mode,
            "depth": self.depth,
            "precision": self.precision_bits,
            "n": [int(x) if x is not None else None for x in chain.n],
            "v_log2": [float(x) for x in chain.log2_v],
            "T": [int(t) for t in self.schedule.times],
            "k0": chain.k0,
            "window": self.window_stats,
            "warnings": list(self.warnings),
            "params": {
                "phi": self.phi.to_spec(),
                "psi": self.psi.to_spec(),
                "C_log": float(self.certificate.C.value),
                "certificate_status": self.certificate.status,
            },
        }
        if chain.v is not None and self.depth <= 64:
            rep["v"] = [str(x) for x in chain.v]
        return rep


def construct_prescribed_product(phi: Gauge, psi: Gauge, depth: int,
                                 precision_bits: int = DEFAULT_PRECISION,
                                 mode: str = "exact",
                                 enclosure_cap: int = INTEGER_ENCLOSURE_PRECISION_CAP
                                 ) -> ConstructionResult:
    """Run the whole construction for a compatible gauge pair.

    Raises DominationViolatedError when the pair certificate fails, and
    DepthLimitError when exact mode cannot certify the integers within
    the enclosure precision cap.
    """
    if depth < 3:
        raise InvalidParameterError("construction depth must be >= 3")
    certificate = check_domination(phi, psi, depth + 1, precision_bits)
    if certificate.status == "fails":
        raise DominationViolatedError(
            "gauge pair fails the doubling domination check")
    warnings: list[str] = list(certificate.warnings)
    if certificate.status == "indeterminate":
        warnings.append("domination trend indeterminate at working precision")
    targets = targets_from_gauges(phi, psi, certificate, depth, precision_bits)
    warnings.extend(targets.warnings)
    schedule = oscillation_times(targets)
    warnings.extend(schedule.warnings)
    envelope = build_envelope(targets, schedule)
    chain = build_chain(envelope, mode=mode, precision_bits=precision_bits,
                        enclosure_cap=enclosure_cap)
    warnings.extend(chain.warnings)
    window_stats = _window_stats(targets, chain)
    if chain.k0 is None or not any(t >= chain.k0 for t in schedule.times):
        warnings.append(
            "incomplete: no oscillation time at or beyond the first growth "
            "level; window bounds are not certified at this depth")
    return ConstructionResult(
        phi=phi, psi=psi, certificate=certificate, depth=depth,
        precision_bits=precision_bits, mode=mode, targets=targets,
        schedule=schedule, envelope=envelope, chain=chain,
        window_stats=window_stats, warnings=warnings)


def _window_stats(targets: TargetSequences, chain: DivisibilityChain
                  ) -> Optional[dict]:
    """Extremes of a_k/v_k and b_k/v_k over the window k0..depth."""
    if chain.k0 is None:
        return None
    a_over_v_max = None
    b_over_v_min = None
    for k in range(chain.k0, chain.depth + 1):
        lv = chain.log2_v[k - 1] * _LN2
        ra = targets.a(k).log_float() - lv
        rb = targets.b(k).log_float() - lv
        if a_over_v_max is None or ra > a_over_v_max:
            a_over_v_max = ra
        if b_over_v_min is None or rb < b_over_v_min:
            b_over_v_min = rb
    return {"a_over_v_max": math.exp(a_over_v_max),
            "b_over_v_min": math.exp(b_over_v_min)}


def gauges_for_scale_pair(family: ScalingFamily, alpha, beta) -> tuple[Gauge, Gauge]:
    """The canonical compatible pair pinning scale alpha below and beta above.

    phi is the alpha member; psi is the beta member at half argument, so
    psi(2 eps) = member_beta(eps) <= C * member_alpha(eps) holds whenever
    beta >= alpha.
    """
    a, b = Fraction(alpha), Fraction(beta)
    if b < a:
        raise InvalidParameterError(
            "the upper scale must not be below the lower scale")
    return family.member(a), HalfArgumentGauge(family.member(b))
