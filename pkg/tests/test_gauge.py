"""Gauge evaluation, serialization, pair domination, scaling families."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cantorscales.errors import (InvalidParameterError, InvalidSpecError)
from cantorscales.gauge import (HalfArgumentGauge, IteratedGauge, PowerGauge,
                                ScaledGauge, ScalingFamily, check_domination,
                                eval_log_at_level, make_iterated_gauge,
                                make_power_gauge, parse_gauge, scaling_member,
                                scaling_separation_trend)

LN2 = math.log(2)


def approx_log(g, k: int) -> float:
    return g.eval_log(k, 128).log_float()


# -- evaluation -------------------------------------------------------------


def test_power_gauge_closed_form():
    assert math.isclose(approx_log(make_power_gauge(1), 3), -3 * LN2)
    assert math.isclose(approx_log(make_power_gauge(Fraction(1, 2)), 4),
                        -2 * LN2)
    assert approx_log(make_power_gauge(2), 0) == 0.0


def test_power_gauge_is_exact():
    p = make_power_gauge(Fraction(3, 2)).eval_exact(4)
    assert p.coeff == 1 and p.exp2 == -6


def test_iterated_double_exponential():
    # p=2, q=1: ln phi(2**-k) = -exp(k ln 2) = -2**k
    g = make_iterated_gauge(2, 1, 1)
    assert math.isclose(approx_log(g, 3), -8.0)
    assert math.isclose(approx_log(g, 5), -32.0)


def test_iterated_double_log():
    # p=1, q=2: ln phi(2**-k) = -ln(ln 2**k) for k >= 2
    g = make_iterated_gauge(1, 2, 1)
    assert math.isclose(approx_log(g, 8), -math.log(8 * LN2), rel_tol=1e-12)


def test_iterated_reduces_to_power_when_trivial():
    g = make_iterated_gauge(1, 1, Fraction(3, 4))
    assert math.isclose(approx_log(g, 8), -6 * LN2)
    assert g.eval_exact(8).exp2 == -6


def test_iterated_inner_log_truncates_at_zero():
    # log_+ of values <= 1 is 0, so phi(1/2) = 1/exp_p(0) = 1/e for p=2, q=2
    g = make_iterated_gauge(2, 2, 1)
    assert math.isclose(approx_log(g, 1), -1.0)


def test_scaled_gauge_multiplies():
    g = ScaledGauge(Fraction(5), make_power_gauge(1))
    assert math.isclose(approx_log(g, 3), math.log(5) - 3 * LN2)
    assert g.eval_exact(3).to_fraction() == Fraction(5, 8)


def test_half_argument_shifts_one_level():
    inner = make_power_gauge(Fraction(2))
    g = HalfArgumentGauge(inner)
    for k in range(1, 6):
        assert math.isclose(approx_log(g, k), approx_log(inner, k + 1))


def test_level_zero_restricted_to_power_shapes():
    assert eval_log_at_level(make_power_gauge(2), 0).log_float() == 0.0
    with pytest.raises(InvalidParameterError):
        eval_log_at_level(make_iterated_gauge(2, 1, 1), 0)
    with pytest.raises(InvalidParameterError):
        eval_log_at_level(HalfArgumentGauge(make_power_gauge(1)), 0)


def test_negative_level_rejected():
    with pytest.raises(InvalidParameterError):
        make_power_gauge(1).eval_log(-1)


def test_nonpositive_parameters_rejected():
    with pytest.raises(InvalidSpecError):
        make_power_gauge(0)
    with pytest.raises(InvalidSpecError):
        make_power_gauge(-2)
    with pytest.raises(InvalidSpecError):
        make_iterated_gauge(0, 1, 1)
    with pytest.raises(InvalidSpecError):
        ScaledGauge(Fraction(0), make_power_gauge(1))


# -- random gauges: monotonicity and refinement ------------------------------


@st.composite
def gauges(draw):
    alpha = draw(st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(1),
                                  Fraction(3, 2), Fraction(2), Fraction(3)]))
    base = draw(st.sampled_from(["power", "it21", "it12"]))
    if base == "power":
        g = PowerGauge(alpha)
    elif base == "it21":
        g = IteratedGauge(2, 1, alpha)
    else:
        g = IteratedGauge(1, 2, alpha)
    wrap = draw(st.sampled_from(["none", "scaled", "half"]))
    if wrap == "scaled":
        g = ScaledGauge(draw(st.sampled_from([Fraction(3, 4), Fraction(2),
                                              Fraction(7)])), g)
    elif wrap == "half":
        g = HalfArgumentGauge(g)
    return g


@given(gauges())
def test_gauges_are_nonincreasing_along_levels(g):
    prev = None
    for k in range(1, 12):
        cur = g.eval_log(k, 128)
        if prev is not None:
            c = cur.compare(prev)
            assert c is None or c <= 0
        prev = cur


@given(gauges(), st.integers(min_value=1, max_value=10))
def test_gauge_enclosures_nest_under_refinement(g, k):
    coarse = g.eval_log(k, 64)
    fine = g.eval_log(k, 512)
    assert coarse.log_lo <= fine.log_lo <= fine.log_hi <= coarse.log_hi


# -- serialization ----------------------------------------------------------


def test_parse_gauge_forms():
    assert parse_gauge({"kind": "power", "alpha": 0.5}) == PowerGauge(Fraction(1, 2))
    assert parse_gauge({"kind": "iterated", "p": 2, "q": 1, "alpha": 1.0}) == \
        IteratedGauge(2, 1, Fraction(1))
    g = parse_gauge({"kind": "scaled", "c": 2.0,
                     "inner": {"kind": "power", "alpha": 1}})
    assert g == ScaledGauge(Fraction(2), PowerGauge(Fraction(1)))
    g = parse_gauge({"kind": "half", "inner": {"kind": "power", "alpha": 1}})
    assert g == HalfArgumentGauge(PowerGauge(Fraction(1)))


def test_parse_gauge_rejects_malformed_specs():
    for bad in (
        "power",
        {"kind": "power"},
        {"kind": "power", "alpha": 1, "extra": 2},
        {"kind": "power", "alpha": "one"},
        {"kind": "power", "alpha": -1},
        {"kind": "iterated", "p": 1.5, "q": 1, "alpha": 1},
        {"kind": "iterated", "p": True, "q": 1, "alpha": 1},
        {"kind": "scaled", "c": 1},
        {"kind": "wavelet"},
    ):
        with pytest.raises(InvalidSpecError):
            parse_gauge(bad)


@given(gauges())
def test_spec_roundtrip(g):
    # all sampled parameters are dyadic, so float serialization is lossless
    assert parse_gauge(g.to_spec()) == g


# -- pair domination ---------------------------------------------------------


def test_self_pair_constant_is_the_doubling_jump():
    cert = check_domination(make_power_gauge(2), make_power_gauge(2), 10)
    assert cert.status == "holds" and cert.holds
    assert cert.C.exact.to_fraction() == 4
    assert cert.max_level == 1
    assert cert.depth_checked == 10
    assert len(cert.ratio_logs) == 10


def test_half_argument_partner_always_holds():
    for phi in (make_power_gauge(Fraction(1, 2)), make_iterated_gauge(2, 1, 1),
                ScaledGauge(Fraction(3), make_power_gauge(1))):
        cert = check_domination(phi, HalfArgumentGauge(phi), 12)
        assert cert.status == "holds"
        # psi(2 eps) = phi(eps) exactly, so the constant is 1
        assert math.isclose(float(cert.C.value), 0.0, abs_tol=1e-20)


def test_slower_decay_above_faster_decay_fails():
    cert = check_domination(make_power_gauge(1), make_power_gauge(Fraction(1, 2)), 12)
    assert cert.status == "fails"
    assert not cert.holds


def test_domination_needs_two_levels():
    with pytest.raises(InvalidParameterError):
        check_domination(make_power_gauge(1), make_power_gauge(1), 1)
    assert check_domination(make_power_gauge(1), make_power_gauge(1), 2).holds


def test_certificate_constant_tracks_the_maximal_ratio():
    # phi = eps, psi = 4 eps: ratio psi(2**-(k-1)) / phi(2**-k) = 8 at all k
    cert = check_domination(make_power_gauge(1),
                            ScaledGauge(Fraction(4), make_power_gauge(1)), 8)
    assert cert.status == "holds"
    assert cert.C.exact.to_fraction() == 8


# -- scaling families ---------------------------------------------------------


def test_family_members():
    fam = ScalingFamily(kind="power")
    assert fam.member(Fraction(1, 2)) == PowerGauge(Fraction(1, 2))
    fam = ScalingFamily(kind="iterated", p=2, q=1)
    assert fam.member(1) == IteratedGauge(2, 1, Fraction(1))
    assert scaling_member(fam, 2) == IteratedGauge(2, 1, Fraction(2))


def test_family_spec_roundtrip():
    for fam in (ScalingFamily("power"), ScalingFamily("iterated", 2, 1)):
        assert ScalingFamily.from_spec(fam.to_spec()) == fam
    with pytest.raises(InvalidSpecError):
        ScalingFamily("polynomial")
    with pytest.raises(InvalidSpecError):
        ScalingFamily.from_spec({"kind": "power", "p": 1})


def test_power_family_separates_distinct_parameters():
    fam = ScalingFamily("power")
    rep = scaling_separation_trend(fam, 1, 2, Fraction(3, 2), 40)
    assert rep.separated and rep.status == "separated"
    assert min(rep.drops_nats) >= 1.0


def test_equal_parameters_do_not_separate():
    fam = ScalingFamily("power")
    rep = scaling_separation_trend(fam, 1, 1, Fraction(3, 2), 40)
    assert not rep.separated
    assert rep.status == "not-separated"


def test_iterated_family_separates():
    # members decay like (ln 1/eps)**(-alpha), so the trend needs a wide
    # parameter gap before the finite surrogate sees a full nat of drop
    fam = ScalingFamily("iterated", p=1, q=2)
    rep = scaling_separation_trend(fam, 1, 4, Fraction(3, 2), 60)
    assert rep.separated


def test_separation_parameter_validation():
    fam = ScalingFamily("power")
    with pytest.raises(InvalidParameterError):
        scaling_separation_trend(fam, 1, 2, 1, 40)
    with pytest.raises(InvalidParameterError):
        scaling_separation_trend(fam, 1, 2, Fraction(3, 2), 4)
