import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holder_rbcd import analysis as an
from holder_rbcd.analysis import BoundSpec, ExponentConvention, Theorem
from holder_rbcd.blocks import BlockPartition
from holder_rbcd.objectives import (
    HolderProfile,
    make_nonconvex_objective,
    make_power_objective,
    make_quadratic_objective,
    make_regularized_power_objective,
)
from holder_rbcd.rbcd import SolverConfig, rbcd_step, run, run_many

S2 = BlockPartition.singletons(2)


def spec(theorem, gamma=1.0, L=(1.0, 1.0), alpha=0.0, gap=1.0, R=None, sigma=None, **kw):
    return BoundSpec(theorem, HolderProfile(gamma, L), alpha, gap, R, sigma=sigma, **kw)


# one-step oracles

def test_conditional_decrease_examples():
    q = make_quadratic_objective(2, S2, [1.0, 1.0])
    assert an.exact_conditional_decrease(q, 0, [0.0, 0.0]) == 0.0
    assert an.expected_decrease_lower_bound(q, 0, [0.0, 0.0]) == 0.0
    assert an.exact_conditional_decrease(q, 0, [2.0, 0.0]) == pytest.approx(1.0)
    assert an.expected_decrease_lower_bound(q, 0, [2.0, 0.0]) == pytest.approx(1.0)


def test_conditional_decrease_power_is_strict():
    m = make_power_objective(2, S2, [1.0, 3.0], 0.5)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.normal(size=2)
        assert an.exact_conditional_decrease(m, 0.5, x) > an.expected_decrease_lower_bound(m, 0.5, x)


# expectation oracles

def test_tree_small_depths():
    m = make_power_objective(2, S2, [1.0, 2.0], 0.5)
    x0 = np.array([1.0, -1.5])
    t = an.expectation_tree(m, 0.5, x0, 1)
    assert t.mean_f[0] == m.value(x0)
    assert t.mean_f[1] == pytest.approx(m.value(x0) - an.exact_conditional_decrease(m, 0.5, x0), rel=1e-14)
    with pytest.raises(an.BudgetExceeded):
        an.expectation_tree(m, 0.5, x0, 21)


def test_tree_matches_brute_force_enumeration():
    m = make_nonconvex_objective(3, None, [1.0, 0.5, 2.0], 0.5, amplitude=1.0, frequency=2.0)
    x0 = np.array([1.0, 2.0, -1.0])
    alpha, depth = 0.7, 4
    p = an.sampling_distribution(m.profile, alpha)
    t = an.expectation_tree(m, alpha, x0, depth)
    expect = 0.0
    for seq in np.ndindex(*(3,) * depth):
        x, w = x0, 1.0
        for i in seq:
            x, w = rbcd_step(m, x, i), w * p[i]
        expect += w * m.value(x)
    assert t.mean_f[-1] == pytest.approx(expect, rel=1e-13)


def test_tree_extra_norms():
    q = make_quadratic_objective(2, S2, [1.0, 4.0])
    t = an.expectation_tree(q, 1.0, [1.0, 1.0], 3, norms=[(0.0, 2.0)])
    assert t.norms[(0.0, 2.0)][0] == pytest.approx(math.hypot(1.0, 4.0))


def test_tree_is_consistent_with_conditional_decrease_along_levels():
    # E f(x^{k+1}) = E[f(x^k) - decrease(x^k)]
    m = make_regularized_power_objective(2, S2, [1.0, 2.0], 0.5, 0.5, x0=[1.0, -1.0])
    alpha = 0.3
    p = an.sampling_distribution(m.profile, alpha)
    t = an.expectation_tree(m, alpha, [1.0, -1.0], 3)
    level = [(np.array([1.0, -1.0]), 1.0)]
    for k in range(3):
        dec = sum(w * an.exact_conditional_decrease(m, alpha, x) for x, w in level)
        assert t.mean_f[k + 1] == pytest.approx(t.mean_f[k] - dec, rel=1e-12)
        level = [(rbcd_step(m, x, i), w * p[i]) for x, w in level for i in range(2)]


def test_monte_carlo_agrees_with_tree():
    q = make_quadratic_objective(4, BlockPartition([[0, 1], [2, 3]]), [1.0, 3.0, 2.0, 0.5])
    x0 = np.array([1.0, -1.0, 2.0, 0.5])
    t = an.expectation_tree(q, 0.5, x0, 10)
    mc = an.monte_carlo_expectation(run_many(q, SolverConfig(0.5, 10, seed=1), x0, 2000))
    assert mc.samples == 2000 and not mc.exact
    assert np.all(np.abs(mc.mean_f - t.mean_f) <= 4 * mc.se_f + 1e-15)


# radius

def test_level_set_radius_examples():
    q = make_quadratic_objective(2, S2, [1.0, 1.0])
    x0 = np.array([2.0, 0.0])  # f = 2
    assert an.level_set_radius(q, x0, 0.0, 2.0) == pytest.approx(2.0, rel=1e-12)
    p = make_power_objective(1, None, [1.0], 0.5)
    assert an.level_set_radius(p, [1.0], 0.0, 1.5) == pytest.approx(1.0, rel=1e-12)
    assert an.level_set_radius(q, [0.0, 0.0], 0.0, 2.0) == 0.0


def _brute_radius(model, x0, beta, q, n=401):
    # grid over the 2-d sublevel set, refined on the boundary
    F = model.value(x0)
    L = np.power(model.profile.block_constants, beta)
    best = 0.0
    for th in np.linspace(0, 2 * np.pi, n):
        d = np.array([math.cos(th), math.sin(th)])
        lo, hi = 0.0, 1.0
        while model.value(hi * d) <= F:
            hi *= 2
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if model.value(mid * d) <= F else (lo, mid)
        y = lo * d
        best = max(best, float(np.sum(L * np.abs(y) ** q)) ** (1 / q))
    return best


@pytest.mark.parametrize("model", [
    make_quadratic_objective(2, S2, [1.0, 3.0]),
    make_power_objective(2, S2, [1.0, 3.0], 0.5),
    make_power_objective(2, S2, [2.0, 0.5], 0.25),
    make_regularized_power_objective(2, S2, [1.0, 3.0], 0.5, 0.7, radius=10.0),
])
@pytest.mark.parametrize("beta,q", [(0.0, 2.0), (-1.0, 1.5), (0.5, 1.25), (-0.2, 3.0)])
def test_radius_against_boundary_search(model, beta, q):
    x0 = np.array([0.8, -1.1])
    exact = an.level_set_radius(model, x0, beta, q)
    brute = _brute_radius(model, x0, beta, q)
    assert brute <= exact * (1 + 1e-9)
    assert brute >= exact * (1 - 1e-3)


def test_kkt_path_matches_dual_solver():
    w = np.array([1.0, 2.0, 0.7])
    a = np.array([0.5, 1.0, 2.0])
    b = np.array([0.3, 0.1, 1.0])
    p, F = 1.5, 3.0
    T = np.array([an._inverse_growth(F, a[i], p, b[i]) for i in range(3)])
    kkt = an._radius_allocation_kkt(F, w, a, p, b, T)[0]
    lam_grid = np.geomspace(1e-4, 1e4, 4000)
    dual = min(l * F + sum(an._inner_max(w[i], p, a[i], p, b[i], l, T[i])[0] for i in range(3)) for l in lam_grid)
    assert kkt <= dual * (1 + 1e-9)
    assert kkt >= dual * (1 - 1e-4)


def test_radius_exponents():
    assert an.radius_exponents(2.0, 0.3, "as_printed") == pytest.approx(an.radius_exponents(2.0, 0.3, "corrected"))
    b1, q = an.radius_exponents(3.0, 1.0, "as_printed")
    b2, _ = an.radius_exponents(3.0, 1.0, "corrected")
    assert q == 1.5 and b1 == pytest.approx(2.0) and b2 == pytest.approx(0.5)


# closed-form bounds

def test_nonconvex_bound_examples():
    assert an.bound_T1(spec("nonconvex_T1", gap=0.0), 5) == 0.0
    assert an.bound_T1(spec("nonconvex_T1", L=(1.0, 1.0), gap=1.0), 0) == pytest.approx(2.0)
    s = spec("nonconvex_T1", gamma=0.5, L=(1.0, 1.0, 1.0), gap=9.0)
    assert an.bound_T1(s, 8) == pytest.approx(9 ** (1 / 3), rel=1e-14)


def test_nonconvex_bound_euclidean_forms():
    s = spec("nonconvex_T1", gamma=0.5, L=(1.0, 4.0), gap=1.0)
    base = an.bound_T1(s, 3)
    pref = max(L ** (0.25 - (1 - 3) / 3) for L in (1.0, 4.0))
    assert an.bound_T1_euclidean(s, 3, 0.5, "as_printed") == pytest.approx(pref * base / 2 ** (1 / 6))
    assert an.bound_T1_euclidean(s, 3, 0.5, "corrected") == pytest.approx(pref * base * 2 ** (1 / 6))


def test_convex_bound_examples():
    s = spec("convex_T2", L=(1.0,), R=1.0)
    assert an.bound_T2(s, 0) == pytest.approx(0.5)
    s = spec("convex_T2", L=(1.0, 2.0), alpha=1.0, R=1.7)
    for k in (0, 3, 50):
        assert an.bound_T2(s, k) == pytest.approx(2 * 3.0 * 1.7**2 / (k + 4), rel=1e-12)
    s = spec("convex_T2", gamma=0.5, L=(1.0, 1.0), R=1.0)
    assert an.bound_T2(s, 2) == pytest.approx(2 * math.sqrt(6) / math.sqrt(34), rel=1e-12)
    with pytest.raises(ValueError):
        an.bound_T2(spec("convex_T2"), 1)


def test_linear_rate_examples():
    s = spec("strongly_convex_linear_T3a", L=(1.0, 3.0), R=1.5, sigma=0.5)
    for k in (0, 1, 7):
        assert an.bound_T3(s, k) == pytest.approx((1 - 0.5 / 2) ** k * 2 * 1.5**2 / 2, rel=1e-13)
    s = spec("strongly_convex_linear_T3a", L=(1.0, 1.0), R=1.0, sigma=2.0)
    assert an.bound_T3(s, 1) == 0.0
    with pytest.raises(ValueError):
        spec("strongly_convex_linear_T3a", gamma=0.5, R=1.0, sigma=1.0)
    with pytest.raises(ValueError):
        spec("strongly_convex_sublinear_T3b", gamma=1.0, R=1.0, sigma=1.0)
    with pytest.raises(ValueError):
        spec("strongly_convex_linear_T3a", R=1.0)


def test_sublinear_strongly_convex_constants():
    s = spec("strongly_convex_sublinear_T3b", gamma=0.5, L=(1.0, 1.0), R=1.0, sigma=1.0)
    C0, C1, C2 = an.t3b_constants(s)
    assert C0 == pytest.approx(144 * 2 ** (1 / 3) * 2, rel=1e-14)
    assert an.bound_T3(s, 1) == pytest.approx(C0 / (C1 + C2) ** 2, rel=1e-14)


@pytest.mark.parametrize("gamma", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_corrected_simplified_form_matches_rate(gamma, alpha):
    s = spec("strongly_convex_sublinear_T3b", gamma=gamma, L=(0.5, 3.0), alpha=alpha, R=1.3, sigma=0.4)
    for k in range(0, 30):
        assert an.bound_T3(s, k, "corrected") == pytest.approx(
            an.t3b_rate(s, k, theta_form="corrected"), rel=1e-12)


def test_printed_simplified_form_differs_from_rate():
    s = spec("strongly_convex_sublinear_T3b", gamma=0.5, L=(1.0, 1.0), R=1.0, sigma=1.0)
    assert abs(an.bound_T3(s, 0) / an.t3b_rate(s, 0) - 1) > 1e-3


def test_gap_constant_dominates_level_set_constant():
    for nu in (2.0, 2.5, 3.0, 5.0, 9.0):
        assert an.t3_gap_constant(nu, 2.3, 1.7) >= an.level_set_gap_constant(nu, 2.3, 1.7)
    assert an.t3_gap_constant(2.0, 2.0, 1.0) == pytest.approx(1.0)


def test_interpolation_examples():
    s = spec("interpolation_C1", L=(1.0, 2.0), R=1.0, sigma=0.5, gap=3.0)
    assert an.bound_interpolation(s, 0, [2.5, 2.1, 2.01]) == [3.0, 3.0, 3.0]
    vals = an.bound_interpolation(s, 10, [2 + 10.0**-t for t in range(1, 9)])
    lim = an.interpolation_limit(s, 10)
    errs = [abs(v - lim) for v in vals]
    assert all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-6 * lim
    tiny = spec("interpolation_C1", L=(1.0, 2.0), R=1.0, sigma=1e-300, gap=3.0)
    assert an.bound_interpolation(tiny, 50, [2.5]) == pytest.approx([3.0])
    with pytest.raises(ValueError):
        an.bound_interpolation(s, 1, [2.0])


def test_recurrence_examples():
    assert an.recurrence_bound(0.7, 0.0, 2.0, 9) == 0.7
    assert an.recurrence_bound(1.0, 1.0, 2.0, 3) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        an.recurrence_bound(1.0, 1.0, 1.0, 3)
    A = 0.5
    for k in range(101):
        assert A <= an.recurrence_bound(0.5, 0.1, 3.0, k) * (1 + 1e-12)
        A = A - 0.1 * A**3


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 10), st.floats(1e-3, 1.0), st.floats(1.05, 4.0))
def test_recurrence_property(A0, theta, r):
    theta = min(theta, 0.5 / A0 ** (r - 1))  # keeps every A_k positive
    A = A0
    for k in range(200):
        assert A <= an.recurrence_bound(A0, theta, r, k) * (1 + 1e-12)
        A = A - theta * A**r


# level-set gap bound and co-coercivity

def test_level_set_gap_examples():
    q1 = make_quadratic_objective(1, None, [1.0])
    assert an.level_set_gap_bound(q1, [1.0], 0.0) == pytest.approx(0.5, rel=1e-12)
    q = make_quadratic_objective(2, S2, [1.0, 2.0])
    assert an.level_set_gap_bound(q, [0.0, 0.0], 0.5) == 0.0
    p = make_power_objective(2, S2, [1.0, 2.0], 0.5)
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.normal(size=2)
        for conv in ExponentConvention:
            assert p.value(x) < an.level_set_gap_bound(p, x, 0.5, conv)
    with pytest.raises(ValueError):
        an.level_set_gap_bound(make_nonconvex_objective(1, None, [1.0], 0.5), [1.0], 0.0)


def test_cocoercivity_examples():
    p = make_power_objective(2, S2, [1.0, 2.0], 0.5)
    x = np.array([0.3, -1.0])
    assert an.holder_cocoercivity_check(p, 0.5, x, x)
    q = make_quadratic_objective(3, None, [1.0, 2.0, 5.0])
    rng = np.random.default_rng(2)
    for _ in range(200):
        x, y = rng.normal(size=(2, 3))
        assert an.holder_cocoercivity_check(q, 0.3, x, y)


# certification

def test_certify_quadratic_linear_rate_passes():
    q = make_quadratic_objective(2, S2, [1.0, 4.0])
    x0 = np.array([1.0, 1.0])
    s = an.make_bound_spec(q, x0, 1.0, "strongly_convex_linear_T3a")
    rep = an.certify_run(an.expectation_tree(q, 1.0, x0, 12), s)
    assert rep.passed and rep.min_slack >= 0 and len(rep.rows) == 13
    assert "PASS" in rep.table()
    assert rep.to_dict()["passed"] is True


def test_certify_zero_gap_passes():
    q = make_quadratic_objective(2, S2, [1.0, 4.0])
    s = an.make_bound_spec(q, [0.0, 0.0], 0.0, "convex_T2")
    rep = an.certify_run(an.expectation_tree(q, 0.0, [0.0, 0.0], 4), s)
    assert rep.passed and all(r.observed == 0 for r in rep.rows)


def test_certify_negative_control_fails():
    q = make_quadratic_objective(2, S2, [1.0, 1.0])
    x0 = np.array([1.0, 1.0])
    s = an.make_bound_spec(q, x0, 0.0, "strongly_convex_linear_T3a", s_alpha_scale=0.5)
    rep = an.certify_run(an.expectation_tree(q, 0.0, x0, 6), s)
    assert not rep.passed


def test_certify_monte_carlo_source():
    m = make_power_objective(2, S2, [1.0, 2.0], 0.5)
    x0 = np.array([1.0, -2.0])
    s = an.make_bound_spec(m, x0, 0.5, "nonconvex_T1")
    rep = an.certify_run(run_many(m, SolverConfig(0.5, 20, seed=0), x0, 200), s)
    assert rep.passed and rep.source == "monte_carlo[200]"


def test_make_bound_spec_checks_convexity():
    nc = make_nonconvex_objective(2, S2, [1.0, 1.0], 0.5)
    with pytest.raises(ValueError):
        an.make_bound_spec(nc, [1.0, 1.0], 0.0, "convex_T2")
    p = make_power_objective(2, S2, [1.0, 1.0], 0.5)
    with pytest.raises(ValueError):
        an.make_bound_spec(p, [1.0, 1.0], 0.0, "strongly_convex_sublinear_T3b")


def test_contraction_check_on_quadratic():
    q = make_quadratic_objective(3, BlockPartition([[0, 1], [2]]), [1.0, 0.2, 3.0])
    rng = np.random.default_rng(4)
    for _ in range(100):
        lhs, rhs, ok = an.contraction_check(q, 0.4, rng.normal(size=3))
        assert ok


def test_rate_at_nu_two_is_exponential_limit():
    model = make_quadratic_objective(2, BlockPartition([[0], [1]]), [0.5, 2.0])
    spec = an.make_bound_spec(model, [1.0, -1.0], 0.0, Theorem.INTERPOLATION_C1)
    for k in (0, 1, 7, 40):
        got = an.t3b_rate(spec, k, gap=spec.initial_gap)
        assert got == pytest.approx(an.interpolation_limit(spec, k), rel=1e-12)
