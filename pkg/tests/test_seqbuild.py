"""Oscillation scan, envelope, divisibility chain, full construction."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cantorscales.errors import (CantorScalesError, DominationViolatedError,
                                 InvalidParameterError)
from cantorscales.gauge import (HalfArgumentGauge, ScalingFamily,
                                make_iterated_gauge, make_power_gauge)
from cantorscales.seqbuild import (DivisibilityChain, branching_from_chain,
                                   build_chain, build_envelope,
                                   construct_prescribed_product,
                                   gauges_for_scale_pair, oscillation_times,
                                   targets_from_gauges, targets_from_values)

LN2 = math.log(2)


def times_oracle(a: list, b: list) -> tuple:
    """Literal forward scan: T_(l+1) = inf{k > T_l + 1 : a_k > b_(T_l+1)}."""
    times, t = [], 0
    depth = len(a)
    while True:
        if t + 1 > depth:
            break
        nxt = next((k for k in range(t + 2, depth + 1) if a[k - 1] > b[t]),
                   None)
        if nxt is None:
            break
        times.append(nxt)
        t = nxt
    return tuple(times)


def chain_oracle(u: list) -> list:
    """Literal recursion: stay while 2 v > u, else jump to floor(u/v) * v."""
    v = [1]
    for k in range(2, len(u) + 1):
        if 2 * v[-1] > u[k - 1]:
            v.append(v[-1])
        else:
            v.append((int(u[k - 1] // v[-1])) * v[-1])
    return v


# -- oscillation times --------------------------------------------------------


def test_linear_against_quadratic_targets():
    depth = 130
    targets = targets_from_values(list(range(1, depth + 1)),
                                  [k * k for k in range(1, depth + 1)])
    schedule = oscillation_times(targets)
    assert schedule.times == (2, 10, 122)
    assert schedule.complete_to == depth


def test_equal_geometric_targets_switch_every_other_level():
    vals = [2 ** k for k in range(1, 13)]
    schedule = oscillation_times(targets_from_values(vals, vals))
    assert schedule.times == (2, 4, 6, 8, 10, 12)


def test_equal_linear_targets_switch_every_other_level():
    vals = list(range(1, 13))
    schedule = oscillation_times(targets_from_values(vals, vals))
    assert schedule.times == (2, 4, 6, 8, 10, 12)


def test_flat_targets_never_switch():
    schedule = oscillation_times(targets_from_values([1] * 10, [5] * 10))
    assert schedule.times == ()
    assert any("no oscillation" in w for w in schedule.warnings)


@given(st.lists(st.tuples(st.integers(1, 60), st.integers(0, 40)),
                min_size=3, max_size=40))
def test_times_match_literal_scan(pairs):
    a = [Fraction(x) for x, _ in pairs]
    b = [Fraction(x + d) for x, d in pairs]
    targets = targets_from_values(a, b)
    assert oscillation_times(targets).times == times_oracle(a, b)


# -- envelope ------------------------------------------------------------------


def test_envelope_oscillates_between_targets():
    depth = 11
    targets = targets_from_values(list(range(1, depth + 1)),
                                  [k * k for k in range(1, depth + 1)])
    envelope = build_envelope(targets)
    u = [envelope.eval(k).exact.to_fraction() for k in range(1, depth + 1)]
    assert u == [1, 2, 9, 9, 9, 9, 9, 9, 9, 10, 121]
    assert envelope.validate() == []


def test_envelope_assignment_references_targets():
    targets = targets_from_values([1, 2, 3, 4], [1, 4, 9, 16])
    envelope = build_envelope(targets)
    kinds = [kind for kind, _ in envelope.assignment]
    assert kinds[0] == "b"
    assert "a" in kinds


# -- divisibility chain --------------------------------------------------------


def chain_from_u(u: list, mode: str = "exact") -> DivisibilityChain:
    # equal targets make the envelope reproduce u literally
    targets = targets_from_values(u, u)
    return build_chain(build_envelope(targets), mode=mode)


def test_chain_on_linear_quadratic_envelope():
    depth = 11
    targets = targets_from_values(list(range(1, depth + 1)),
                                  [k * k for k in range(1, depth + 1)])
    chain = build_chain(build_envelope(targets))
    assert [int(x) for x in chain.v] == [1, 2, 8, 8, 8, 8, 8, 8, 8, 8, 120]
    assert chain.n == (1, 2, 4, 1, 1, 1, 1, 1, 1, 1, 15)
    assert chain.k0 == 2
    assert not any("sandwich" in w for w in chain.warnings)


def test_chain_on_powers_of_two():
    chain = chain_from_u([2 ** k for k in range(1, 9)])
    assert [int(x) for x in chain.v] == [1, 4, 8, 16, 32, 64, 128, 256]


def test_chain_on_linear_envelope():
    chain = chain_from_u(list(range(1, 9)))
    assert [int(x) for x in chain.v] == [1, 2, 2, 4, 4, 4, 4, 8]


@given(st.lists(st.integers(1, 10 ** 6), min_size=3, max_size=30))
def test_chain_matches_literal_recursion(raw):
    # nondecreasing envelopes are the contract; sort to enforce it
    u = sorted(raw)
    chain = chain_from_u(u)
    assert [int(x) for x in chain.v] == chain_oracle(u)


@given(st.lists(st.integers(1, 10 ** 9), min_size=3, max_size=30))
def test_chain_invariants(raw):
    u = sorted(raw)
    chain = chain_from_u(u)
    v = [int(x) for x in chain.v]
    assert v[0] == 1
    for k in range(1, len(v)):
        assert v[k] % v[k - 1] == 0
        assert v[k] // v[k - 1] == chain.n[k]
    if chain.k0 is not None:
        for k in range(chain.k0, len(u) + 1):
            assert 2 * v[k - 1] >= u[k - 1] >= v[k - 1]
    for k, x in enumerate(v):
        assert math.isclose(chain.log2_v[k], math.log2(x), abs_tol=1e-9)


def test_branching_from_chain_divides_exactly():
    targets = targets_from_values([1, 2, 8, 8], [1, 2, 8, 8])
    chain = build_chain(build_envelope(targets))
    assert [int(x) for x in chain.v] == [1, 2, 8, 8]
    assert branching_from_chain(chain) == (1, 2, 4, 1)


def test_branching_requires_exact_integers():
    chain = chain_from_u([1, 2, 4, 8], mode="approx")
    with pytest.raises(InvalidParameterError):
        branching_from_chain(chain)


def test_branching_flags_corrupted_chains():
    bad = DivisibilityChain(mode="exact", depth=3, n=(1, 3, 2), v=(1, 3, 7),
                            log2_v=(0.0, math.log2(3), math.log2(7)), k0=2)
    with pytest.raises(CantorScalesError):
        branching_from_chain(bad)


# -- targets from gauges --------------------------------------------------------


def test_targets_reject_incompatible_pairs():
    with pytest.raises(DominationViolatedError):
        targets_from_gauges(make_power_gauge(Fraction(6, 5)),
                            make_power_gauge(1), C=1, depth=6)


def test_targets_closed_form():
    phi = make_power_gauge(1)
    psi = HalfArgumentGauge(phi)
    targets = targets_from_gauges(phi, psi, C=2, depth=8)
    # a_k = 2**(k+1), b_k = 2 * 2**(k+1)
    for k in range(1, 9):
        assert targets.a(k).exact.to_fraction() == 2 ** (k + 1)
        assert targets.b(k).exact.to_fraction() == 2 ** (k + 2)
    with pytest.raises(InvalidParameterError):
        targets.a(0)
    with pytest.raises(InvalidParameterError):
        targets.b(9)


def test_target_refinement_tightens_enclosures():
    phi = make_iterated_gauge(1, 2, 1)
    targets = targets_from_gauges(phi, HalfArgumentGauge(phi), C=1, depth=6,
                                  precision_bits=64)
    coarse = targets.a(3)
    fine = targets.a(3, 512)
    assert coarse.log_lo <= fine.log_lo <= fine.log_hi <= coarse.log_hi


# -- full construction -----------------------------------------------------------


def test_construction_depth_guard():
    g = make_power_gauge(1)
    with pytest.raises(InvalidParameterError):
        construct_prescribed_product(g, g, 2)


def test_construction_rejects_failing_pairs():
    with pytest.raises(DominationViolatedError):
        construct_prescribed_product(make_power_gauge(1),
                                     make_power_gauge(Fraction(1, 2)), 10)


def test_self_pair_construction_small():
    g = make_power_gauge(1)
    result = construct_prescribed_product(g, g, 40)
    assert result.schedule.times == tuple(range(2, 41, 2))
    assert result.chain.k0 == 2
    stats = result.window_stats
    assert 1 - 1e-9 <= stats["a_over_v_max"] <= 2 + 1e-9
    assert 1 - 1e-9 <= stats["b_over_v_min"] <= 2 + 1e-9
    assert not any(w.startswith("incomplete") for w in result.warnings)


def test_construction_report_shape():
    g = make_power_gauge(1)
    result = construct_prescribed_product(g, g, 40)
    rep = result.report()
    for key in ("schema", "mode", "depth", "n", "v_log2", "T", "k0", "window",
                "warnings", "params"):
        assert key in rep
    assert rep["depth"] == 40 and len(rep["n"]) == 40
    assert "v" in rep                      # depth <= 64 keeps the integers
    assert rep["params"]["certificate_status"] == "holds"

    deep = construct_prescribed_product(g, g, 70)
    assert "v" not in deep.report()


def test_scale_pair_gauges_and_window_bounds():
    fam = ScalingFamily("power")
    phi, psi = gauges_for_scale_pair(fam, Fraction(1, 2), Fraction(3, 2))
    result = construct_prescribed_product(phi, psi, 120)
    stats = result.window_stats
    assert 1 - 1e-9 <= stats["a_over_v_max"] <= 2 + 1e-9
    assert 1 - 1e-9 <= stats["b_over_v_min"] <= 2 + 1e-9
    with pytest.raises(InvalidParameterError):
        gauges_for_scale_pair(fam, 2, 1)


def test_construction_is_deterministic():
    phi, psi = gauges_for_scale_pair(ScalingFamily("power"), Fraction(7, 10),
                                     Fraction(13, 10))
    r1 = construct_prescribed_product(phi, psi, 60)
    r2 = construct_prescribed_product(phi, psi, 60)
    assert r1.chain.v == r2.chain.v
    assert r1.schedule.times == r2.schedule.times
    assert r1.report() == r2.report()


def test_doubly_exponential_pair_exact():
    phi = make_iterated_gauge(2, 1, 1)
    result = construct_prescribed_product(phi, HalfArgumentGauge(phi), 10)
    v = [int(x) for x in result.chain.v]
    for k in range(1, len(v)):
        assert v[k] % v[k - 1] == 0
    # a_10 = exp(2**11), so the chain integers are thousands of bits wide
    assert v[-1].bit_length() > 2000
    assert not any("sandwich" in w for w in result.chain.warnings)


def test_approximate_mode_tracks_logs_only():
    phi = make_iterated_gauge(2, 1, 1)
    result = construct_prescribed_product(phi, HalfArgumentGauge(phi), 12,
                                          mode="approx")
    chain = result.chain
    assert chain.v is None
    assert any(x is None for x in chain.n)      # jumps too wide for integers
    assert any("approximate mode" in w for w in chain.warnings)
    with pytest.raises(InvalidParameterError):
        result.product()
    exact = construct_prescribed_product(phi, HalfArgumentGauge(phi), 12)
    for la, lb in zip(chain.log2_v, exact.chain.log2_v):
        assert math.isclose(la, lb, rel_tol=1e-9, abs_tol=1e-9)


def test_product_materialization_matches_chain():
    g = make_power_gauge(1)
    result = construct_prescribed_product(g, g, 30)
    K = result.product()
    assert K.n == tuple(int(x) for x in result.chain.n)
    assert K.v(30) == int(result.chain.v[-1])
