import math

import numpy as np
import pytest
from scipy import special, stats

import pathform as pf
from pathform import CylindricalFunctional, StreamConfig
from pathform.errors import (
    AtomAtOrigin,
    NonProbability,
    TruncationTooCoarse,
    UnsortedTimes,
    UnsupportedMeasure,
)
from pathform.sampler import sample_path_batch


def two_coord_f(T=1.0):
    return CylindricalFunctional(
        times=(T / 2, T), f=lambda a, b: 1.0 if (a == 0 and b == 0) else 0.0,
        batch=lambda c: ((c[:, 0] == 0) & (c[:, 1] == 0)).astype(float),
        bound=1.0, name="prod00")


# -- model construction ----------------------------------------------------------

def test_model_rejects_origin():
    with pytest.raises(AtomAtOrigin):
        pf.LatticeModel({0: 1.0})


def test_model_rejects_bad_mass():
    with pytest.raises(NonProbability):
        pf.LatticeModel({1: 0.6, -1: 0.6})


def test_model_rejects_non_lattice():
    m = pf.IntensityMeasure.discrete([(0.5, 1.0)])
    with pytest.raises(UnsupportedMeasure):
        pf.LatticeModel.from_measure(m)


def test_model_round_trip(pm1, pm1_model):
    back = pm1_model.to_measure()
    back.validate()
    assert sorted(map(tuple, back.points.tolist())) == [(-1.0,), (1.0,)]


# -- truncation ------------------------------------------------------------------

def test_poisson_truncation_minimal():
    for s in (0.1, 1.0, 3.0):
        m, tail = pf.poisson_truncation(s, 1e-12)
        assert tail <= 1e-12
        assert stats.poisson.sf(m - 1, s) > 1e-12  # minimality
    assert pf.poisson_truncation(0.0, 1e-12) == (0, 0.0)


# -- transition tables -------------------------------------------------------------

def test_transition_pmf_at_zero(pm1_model):
    t = pf.transition_pmf(pm1_model, 0.0)
    assert t.probs == {(0,): 1.0}
    assert t.tail_mass == 0.0


def test_transition_pmf_against_bessel(pm1_model):
    # independent closed form for unit-rate +-1 jumps: p_t(k) = e^-t I_k(t)
    t = pf.transition_pmf(pm1_model, 1.0)
    for k in range(-3, 4):
        assert abs(t.get(k) - float(special.ive(abs(k), 1.0))) <= 1e-12


def test_transition_pmf_normalized(pm1_model):
    for s in (0.1, 1.0, 3.0):
        t = pf.transition_pmf(pm1_model, s)
        assert abs(sum(t.probs.values()) + t.tail_mass - 1.0) <= 1e-10


def test_transition_pmf_matches_simulation(pm1, pm1_model):
    t = pf.transition_pmf(pm1_model, 1.0)
    n = 400_000
    batch = sample_path_batch(pm1, 1.0, StreamConfig(seed=51).rng(), n)
    end = batch.coords_at([1.0])[:, 0, 0]
    for k in (0, 1, -2):
        freq = float((end == k).mean())
        p = t.get(k)
        assert abs(freq - p) <= 4.0 * math.sqrt(p * (1 - p) / n)


def test_chapman_kolmogorov(pm1_model):
    eps = pm1_model.truncation_tolerance
    for s, r in ((0.3, 0.7), (0.5, 0.5), (1.0, 2.0)):
        a = pf.transition_pmf(pm1_model, s)
        b = pf.transition_pmf(pm1_model, r)
        c = pf.transition_pmf(pm1_model, s + r)
        for l in (0, 1, -1, 2):
            conv = sum(pa * b.get(l - u[0]) for u, pa in a.probs.items())
            assert abs(conv - c.get(l)) <= 2 * eps + 1e-13


# -- chained expectations -------------------------------------------------------------

def test_expect_constant(pm1_model):
    c = CylindricalFunctional(times=(1.0,), f=lambda a: 3.25,
                              batch=lambda v: np.full(len(v), 3.25), bound=3.25)
    got = pf.expect_cylindrical(pm1_model, 1.0, c)
    assert abs(got - 3.25) <= 3.25 * 1e-11  # off only by the certified tail


def test_expect_single_coordinate_reduces_to_pmf(pm1_model):
    F = pf.indicator_at(1.0, 0.0)
    assert pf.expect_cylindrical(pm1_model, 1.0, F) == pf.transition_pmf(pm1_model, 1.0).get(0)


def test_expect_two_coordinates_vs_mc(pm1, pm1_model):
    F = two_coord_f()
    exact = pf.expect_cylindrical(pm1_model, 1.0, F)
    mo = pf.moments_mc(F, pm1, 1.0, 400_000, StreamConfig(seed=52))
    assert abs(mo.mean.mean - exact) <= 4.0 * mo.mean.stderr


def test_expect_truncation_guard(pm1_model):
    F = pf.indicator_at(1.0, 0.0)
    with pytest.raises(TruncationTooCoarse):
        pf.expect_cylindrical(pm1_model, 1.0, F, max_error=1e-30)


# -- count-weighted expectations ---------------------------------------------------------

def test_count_weighted_pmf_mecke_identity(pm1_model):
    # the marked expansion must reproduce s nu(k) p_s(. - k)
    for s in (0.4, 1.0):
        for k in (1, -1):
            table, _ = pf.count_weighted_pmf(pm1_model, s, k)
            p = pf.transition_pmf(pm1_model, s)
            for point, val in table.items():
                ref = s * pm1_model.mass(k) * p.get(point[0] - k)
                assert abs(val - ref) <= 1e-12


def test_expect_with_count_of_one(pm1_model):
    one = CylindricalFunctional(times=(0.6,), f=lambda a: 1.0,
                                batch=lambda c: np.ones(len(c)), bound=1.0)
    for T in (1.0, 2.0):
        got = pf.expect_with_count(pm1_model, T, one, 1)
        assert abs(got - T * 0.5) <= 1e-10


def test_expect_with_count_requires_support(pm1_model):
    F = pf.indicator_at(1.0, 0.0)
    with pytest.raises(UnsupportedMeasure):
        pf.expect_with_count(pm1_model, 1.0, F, 3)


def test_expect_with_count_vs_mc(pm1, pm1_model):
    F = pf.indicator_at(1.0, 0.0)
    exact = pf.expect_with_count(pm1_model, 1.0, F, 1)
    n = 400_000
    batch = sample_path_batch(pm1, 1.0, StreamConfig(seed=53).rng(), n)
    end = batch.coords_at([1.0])[:, 0, 0]
    plus = np.bincount(batch.path_ids[batch.marks[:, 0] == 1.0], minlength=n)
    vals = (end == 0.0) * plus
    se = vals.std(ddof=1) / math.sqrt(n)
    assert abs(vals.mean() - exact) <= 4.0 * se


# -- shifted-law identity -------------------------------------------------------------------

def test_qi_check_constant(pm1_model):
    one = CylindricalFunctional(times=(0.5,), f=lambda a: 1.0,
                                batch=lambda c: np.ones(len(c)), bound=1.0)
    lhs, rhs = pf.qi_check(pm1_model, 1.0, one, 1)
    assert abs(lhs - 1.0) <= 1e-10 and abs(rhs - 1.0) <= 1e-10


def test_qi_check_indicator(pm1_model):
    lhs, rhs = pf.qi_check(pm1_model, 1.0, pf.indicator_at(1.0, 0.0), 1)
    assert abs(lhs - rhs) <= 1e-8


def test_qi_check_two_coordinates(pm1_model):
    lhs, rhs = pf.qi_check(pm1_model, 1.0, two_coord_f(), -1)
    assert abs(lhs - rhs) <= 1e-8


# -- variance/energy inequality ----------------------------------------------------------------

def test_poincare_constant_degenerate(pm1_model):
    c = CylindricalFunctional(times=(1.0,), f=lambda a: 0.7,
                              batch=lambda v: np.full(len(v), 0.7), bound=0.7)
    variance, bound = pf.poincare_check(pm1_model, 1.0, c)
    assert abs(variance) <= 1e-12 and abs(bound) <= 1e-12


def test_poincare_equality_at_coordinate(pm1_model):
    # the endpoint map attains the inequality with equality: both sides 1
    F = pf.coordinate(1.0, bound=100.0)
    variance, bound = pf.poincare_check(pm1_model, 1.0, F)
    assert abs(variance - 1.0) <= 1e-9
    assert abs(bound - 1.0) <= 1e-9


def test_poincare_strict_for_indicator(pm1_model):
    variance, bound = pf.poincare_check(pm1_model, 1.0, pf.indicator_at(1.0, 0.0))
    p0 = pf.transition_pmf(pm1_model, 1.0).get(0)
    assert abs(variance - p0 * (1 - p0)) <= 1e-10
    assert variance < bound


# -- semigroup variance identity ------------------------------------------------------------------

def test_semigroup_constant(pm1_model):
    lhs, rhs = pf.semigroup_gap(pm1_model, lambda p: np.ones(np.shape(p)), 1.0)
    assert abs(lhs) <= 1e-10 and abs(rhs) <= 1e-10


def test_semigroup_linear(pm1_model):
    lhs, rhs = pf.semigroup_gap(pm1_model, lambda p: np.asarray(p, float), 1.0)
    assert abs(lhs - 1.0) <= 1e-9
    assert abs(rhs - 1.0) <= 1e-9


def test_semigroup_indicator(pm1_model):
    lhs, rhs = pf.semigroup_gap(pm1_model, lambda p: (np.asarray(p) == 0).astype(float),
                                1.0, 0, 1e-3)
    assert abs(lhs - rhs) <= 1e-6


def test_semigroup_off_origin_start(pm1_model):
    lhs, rhs = pf.semigroup_gap(pm1_model, lambda p: (np.asarray(p) == 0).astype(float),
                                1.0, 2, 1e-3)
    assert abs(lhs - rhs) <= 1e-6


def test_semigroup_step_must_divide(pm1_model):
    with pytest.raises(UnsortedTimes):
        pf.semigroup_gap(pm1_model, lambda p: np.ones(np.shape(p)), 1.0, 0, 0.3)


# -- short-time diagnostics --------------------------------------------------------------------------

def test_small_time_rate_bound(pm1_model):
    rows = pf.small_time_table(pm1_model, [1, 2], [0.1, 0.01, 0.001])
    for row in rows:
        assert row.origin_ratio <= 1.0 + 1e-9


def test_small_time_deviations_shrink(pm1_model):
    rows = pf.small_time_table(pm1_model, [1, 2], [0.1, 0.01, 0.001])
    for point in ((1,), (2,)):
        devs = [abs(r.deviations[point]) for r in rows]
        assert devs[0] > devs[1] > devs[2]


def test_small_time_unsupported_point_vanishes(pm1_model):
    # nu(2) = 0, so p_s(2)/s is second order in s
    rows = pf.small_time_table(pm1_model, [2], [0.1, 0.001])
    big, small = (r.deviations[(2,)] for r in rows)
    assert small < big / 10.0


# -- count-variable calculus ---------------------------------------------------------------------------

def test_count_stats_identity_map():
    g = pf.CountFunctional(g=lambda m: float(m), batch=lambda c: c.astype(float))
    for T in (0.5, 1.0, 2.0):
        s = pf.poisson_count_stats(g, T, 80)
        assert abs(s.mean - T) <= 1e-10
        assert abs(s.variance - T) <= 1e-9
        assert abs(s.energy - 1.0) <= 1e-9


def test_count_stats_constant():
    g = pf.CountFunctional(g=lambda m: 1.0, batch=lambda c: np.ones(len(c)))
    s = pf.poisson_count_stats(g, 1.0, 60)
    assert abs(s.variance) <= 1e-12
    assert s.energy == 0.0
    assert abs(s.entropy) <= 1e-12


def test_count_stats_normalized_indicator():
    # 1{N = 10} / sqrt(p_10) at T = 1: unit second moment, energy 11,
    # entropy 1 + log(10!)
    p10 = float(stats.poisson.pmf(10, 1.0))
    scale = 1.0 / math.sqrt(p10)
    g = pf.CountFunctional(g=lambda m: scale if m == 10 else 0.0,
                           batch=lambda c: np.where(c == 10, scale, 0.0))
    s = pf.poisson_count_stats(g, 1.0, 200)
    assert abs(s.second - 1.0) <= 1e-10
    assert abs(s.energy - 11.0) <= 1e-9
    assert abs(s.entropy - (1.0 + math.lgamma(11))) <= 1e-9


def test_count_stats_truncation_guard():
    g = pf.CountFunctional(g=lambda m: float(m))
    with pytest.raises(TruncationTooCoarse):
        pf.poisson_count_stats(g, 2.0, 3)


def test_count_stats_vs_mc(pm1):
    cap = pf.capped_count(1000)
    s = pf.poisson_count_stats(cap, 1.0, 80)
    est = pf.energy_mc(cap, pm1, 1.0, 200_000, StreamConfig(seed=54))
    assert abs(est.mean - s.energy) <= 4.0 * est.stderr


# -- entropy/energy witness curve -------------------------------------------------------------------------

def test_witness_curve_frozen_values():
    curve = dict(pf.lsi_witness_curve(1.0, [10, 50]))
    assert abs(curve[10] - (1.0 + math.lgamma(11)) / 11.0) <= 1e-15
    assert abs(curve[50] - (1.0 + math.lgamma(51)) / 51.0) <= 1e-15
    assert abs(curve[10] - 1.4640375066432285) <= 1e-12
    assert abs(curve[50] - 2.9309366068975110) <= 1e-12


def test_witness_curve_matches_count_stats():
    for m in (10, 50):
        p = float(stats.poisson.pmf(m, 1.0))
        scale = 1.0 / math.sqrt(p)
        g = pf.CountFunctional(g=lambda j, m=m, scale=scale: scale if j == m else 0.0)
        s = pf.poisson_count_stats(g, 1.0, 200)
        assert abs(pf.witness_ratio(1.0, m) - s.entropy / s.energy) <= 1e-9


def test_witness_curve_increasing():
    ratios = [r for _, r in pf.lsi_witness_curve(1.0, range(10, 101, 10))]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


def test_exceed_level():
    for c in (2.0, 10.0, 40.0):
        m = pf.lsi_exceed_level(1.0, c)
        assert pf.witness_ratio(1.0, m) > c
        assert pf.witness_ratio(1.0, m - 1) <= c or m == 1
