import functools
import itertools

import numpy as np
import pytest
from scipy.optimize import minimize

from orcon.bench import (
    HeatGridConfig,
    build_disjunctive,
    build_gap_domain,
    build_heat_control,
    gap_closed_form,
    gap_domain_bruteforce,
    gap_domain_global,
    heat_coarse_global_estimate,
    sample_disjunctive_starts,
    sample_gap_starts,
    sample_gap_vector,
    sample_heat_starts,
)
from orcon.bench.heat import desired_controls, heat_data
from orcon.errors import TooLargeError
from orcon.model import feasibility, grad_check

# -- disjunctive -------------------------------------------------------------------


def test_disjunctive_shape_and_optimum():
    prob = build_disjunctive()
    assert (prob.n, prob.g.size, prob.h.size, prob.q) == (5, 5, 0, 1)
    assert prob.f(np.array([0.0, 0.0, 0.0, 4.0, 0.0])) == 9.0
    assert prob.known_optimum.f_min == 9.0


def test_disjunctive_local_minimizer_in_second_set():
    # (1, 0, 1) sits where both lens constraints of the second set are active.
    prob = build_disjunctive()
    w = np.array([1.0, 0.0, 1.0, 3.0, 0.0])
    assert feasibility(prob, w).max_violation == 0.0
    rng = np.random.default_rng(0)
    for _ in range(2000):
        d = rng.normal(size=5) * 1e-3
        d[3] = 0.0
        cand = w + d
        if feasibility(prob, cand).max_violation == 0.0:
            assert prob.f(cand) >= prob.f(w) - 1e-12


def test_disjunctive_starts():
    s = sample_disjunctive_starts(np.random.default_rng(1), 500)
    assert s.shape == (500, 5)
    assert s[:, :3].min() >= 0.0 and s[:, :3].max() <= 4.0
    assert s[:, 3:].min() >= -1.0 and s[:, 3:].max() <= 0.0


# -- gap domain ----------------------------------------------------------------------


def _enumerate_with_scipy(a, budget):
    """Per-branch convex QP solved by scipy SLSQP; independent of the water-filling kernel."""
    n = a.size
    best = np.inf
    for bits in itertools.product((False, True), repeat=n):
        up = np.array(bits)
        if up.sum() > budget + 1e-12 and up.all():
            continue
        bounds = [(1.0, None) if u else (None, 0.0) for u in up]
        x0 = np.where(up, 1.0, min(0.0, (budget - up.sum()) / max(1, n - up.sum())))
        res = minimize(
            lambda x: np.sum((x - a) ** 2), x0, jac=lambda x: 2 * (x - a), bounds=bounds,
            constraints=[{"type": "ineq", "fun": lambda x: budget - x.sum(), "jac": lambda x: -np.ones(n)}],
            method="SLSQP", options={"ftol": 1e-14, "maxiter": 500},
        )
        if res.success and res.x.sum() <= budget + 1e-9:
            best = min(best, res.fun)
    return best


def test_gap_bruteforce_examples():
    v, x = gap_domain_bruteforce(2, 2.0, np.array([0.6, 0.7]))
    assert v == pytest.approx(0.25, abs=1e-12) and np.allclose(x, [1.0, 1.0])
    v, x = gap_domain_bruteforce(1, 0.0, np.array([0.3]))
    assert v == pytest.approx(0.09, abs=1e-12) and np.allclose(x, [0.0])
    v, x = gap_domain_bruteforce(4, 1.0, np.array([0.1, 0.2, 0.8, 0.9]))
    assert v == pytest.approx(0.70, abs=1e-12) and np.allclose(x, [0, 0, 0, 1])


def test_gap_bruteforce_size_limit():
    with pytest.raises(TooLargeError):
        gap_domain_bruteforce(13, 4.0, np.linspace(0, 1, 13))


@pytest.mark.parametrize("seed", range(8))
def test_gap_bruteforce_matches_scipy_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    a = np.sort(rng.uniform(0, 1, n))
    budget = float(rng.uniform(0, n))
    assert gap_domain_bruteforce(n, budget, a)[0] == pytest.approx(_enumerate_with_scipy(a, budget), abs=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_gap_global_matches_bruteforce(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(1, 11))
    a = np.sort(rng.uniform(0, 1, n))
    budget = float(rng.uniform(0, n))
    assert gap_domain_global(budget, a)[0] == pytest.approx(gap_domain_bruteforce(n, budget, a)[0], abs=1e-12)


@functools.lru_cache(maxsize=None)
def gap_closed_form_suite(count=50, seed=0):
    """Closed form against brute force on small instances with budget and upper count 0.3 n."""
    out = []
    for k in range(count):
        rng = np.random.default_rng(seed + k)
        n = int(rng.choice([2, 4, 6, 8, 10, 12]))
        budget = int(round(0.3 * n))
        a = sample_gap_vector(rng, n, budget)
        out.append((k, gap_closed_form(a, budget)[0], gap_domain_bruteforce(n, budget, a)[0]))
    return out


def test_gap_closed_form_is_an_upper_bound():
    for _, closed, brute in gap_closed_form_suite():
        assert brute <= closed + 1e-12


def test_gap_closed_form_misses_branches_that_push_lower_entries_negative():
    # Driving the smallest entries below zero pays for one more entry at one.
    misses = [r for r in gap_closed_form_suite() if abs(r[1] - r[2]) > 1e-8]
    assert misses
    rng = np.random.default_rng(0)
    n = int(rng.choice([2, 4, 6, 8, 10, 12]))
    a = sample_gap_vector(rng, n, int(round(0.3 * n)))
    v, x = gap_domain_bruteforce(n, 4, a)
    assert n == 12 and np.sum(x >= 1.0) == 5 and np.any(x < 0)


def test_gap_closed_form_agrees_when_no_lower_shift_pays():
    a = np.array([0.1, 0.2, 0.8, 0.9])
    assert gap_closed_form(a, 1.0)[0] == pytest.approx(gap_domain_bruteforce(4, 1.0, a)[0], abs=1e-12)


def test_gap_problem_shape():
    a = np.array([0.1, 0.2, 0.8, 0.9])
    prob = build_gap_domain(4, 1.0, a)
    assert (prob.n, prob.g.size, prob.q) == (4, 1, 4)
    x = np.array([0.0, 0.0, 0.0, 1.0])
    assert feasibility(prob, x).max_violation == 0.0
    assert prob.known_optimum.f_min == pytest.approx(0.70)
    assert feasibility(prob, [0.5, 0, 0, 0]).or_violation[0] == 0.5


@pytest.mark.parametrize("a", [[0.3, 0.1], [-0.1, 0.5], [0.2, 1.1]])
def test_gap_rejects_invalid_vector(a):
    with pytest.raises(ValueError):
        build_gap_domain(2, 1.0, np.array(a))


def test_gap_samplers():
    rng = np.random.default_rng(5)
    a = sample_gap_vector(rng, 50, 15)
    assert np.all(np.diff(a) >= 0) and np.sum(a > 0.5) >= 15
    s = sample_gap_starts(rng, 10, 50)
    assert s.shape == (10, 50) and s.min() >= -1.0 and s.max() <= 2.0


def test_gap_grad_check():
    a = sample_gap_vector(np.random.default_rng(0), 10, 3)
    assert grad_check(build_gap_domain(10, 3.0, a)).worst <= 1e-5


# -- heat ----------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def heat():
    prob = build_heat_control()
    model, quad = heat_data(prob)
    return prob, model, quad


def test_heat_config_validation():
    for kw in ({"nodes": 2}, {"steps": 3}, {"alpha": 0.0}, {"beta": -1.0}):
        with pytest.raises(ValueError):
            HeatGridConfig(**kw)


def test_heat_shape(heat):
    prob, model, _ = heat
    assert prob.n == 2 * 25 and prob.q == 25
    assert model.laplacian.shape == (64, 64)
    # left half of the nodes drives u
    assert model.chi_u.sum() == 32


def test_heat_gradient_matches_simulation_oracle(heat):
    prob, model, quad = heat
    rng = np.random.default_rng(0)
    h = 1e-2  # exact for a quadratic up to rounding
    for _ in range(10):
        c = rng.uniform(-10, 10, prob.n)
        fd = np.empty(prob.n)
        for i in range(prob.n):
            e = np.zeros(prob.n)
            e[i] = h
            fd[i] = (model.objective_by_simulation(c + e, quad.y_desired)
                     - model.objective_by_simulation(c - e, quad.y_desired)) / (2 * h)
        an = prob.f.gradient(c)
        assert np.max(np.abs(an - fd) / np.maximum(1.0, np.abs(fd))) <= 1e-6


def test_heat_value_matches_simulation_oracle(heat):
    prob, model, quad = heat
    rng = np.random.default_rng(1)
    for _ in range(5):
        c = rng.uniform(-10, 10, prob.n)
        assert prob.f(c) == pytest.approx(model.objective_by_simulation(c, quad.y_desired), rel=1e-10, abs=1e-10)


def test_heat_state_map_is_linear(heat):
    _, model, _ = heat
    rng = np.random.default_rng(2)
    T = model.n_time
    for _ in range(5):
        u1, v1, u2, v2 = rng.normal(size=(4, T))
        a, b = rng.normal(size=2)
        lhs = model.simulate(a * u1 + b * u2, a * v1 + b * v2)
        rhs = a * model.simulate(u1, v1) + b * model.simulate(u2, v2)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_desired_controls_violate_exactly_between_one_and_three(heat):
    prob, model, _ = heat
    times = model.cfg.times
    u_d, v_d = desired_controls(times)
    viol = feasibility(prob, np.concatenate([u_d, v_d])).or_violation
    # t = 3 gives sin(pi) and cos(3 pi / 2), which round to about 1e-16
    violated = viol > 1e-12
    assert np.array_equal(violated, (times > 1.0) & (times < 3.0))
    assert violated.sum() == 7


def test_heat_objective_at_desired_controls_is_regularizer(heat):
    prob, model, quad = heat
    T = model.n_time
    u_d, v_d = quad.c_desired[:T], quad.c_desired[T:]
    assert prob.f(quad.c_desired) == pytest.approx(model.regularizer(u_d, v_d), rel=1e-9, abs=1e-12)


def test_heat_objective_at_zero_is_tracking_only(heat):
    prob, model, quad = heat
    assert prob.f(np.zeros(prob.n)) == pytest.approx(0.5 * model.state_l2(quad.y_desired), rel=1e-12)


def test_heat_csv_dump(heat, tmp_path):
    _, _, quad = heat
    path = tmp_path / "q.csv"
    quad.to_csv(path)
    data = np.loadtxt(path, delimiter=",", comments="#")
    assert np.array_equal(data[:, :-1], quad.A) and np.array_equal(data[:, -1], quad.b)


def test_heat_starts():
    s = sample_heat_starts(np.random.default_rng(0), 4, 50)
    assert s.shape == (4, 50) and np.abs(s).max() <= 10.0


def test_heat_coarse_estimate():
    cfg = HeatGridConfig()
    est = heat_coarse_global_estimate(cfg, coarse_steps=4)
    assert est.patterns == 32
    prob = build_heat_control(cfg)
    assert feasibility(prob, est.controls).max_violation == 0.0
    assert est.f_estimate == pytest.approx(prob.f(est.controls))


def test_heat_coarse_estimate_cap():
    with pytest.raises(TooLargeError):
        heat_coarse_global_estimate(HeatGridConfig(), coarse_steps=20, cap_patterns=1 << 10)
