import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orcon.bench import build_disjunctive, build_gap_domain, build_toy_branch, sample_gap_vector
from orcon.errors import DimensionMismatchError
from orcon.model import FEAS_TOL, MpocProblem, SmoothFn, VectorFn, feasibility, grad_check

from random_mpoc import random_instance


def test_feasibility_examples_toy_branch():
    toy = build_toy_branch()
    rep = feasibility(toy, [1.0, 0.0])
    assert rep.max_violation == 0.0 and rep.feasible()
    rep = feasibility(toy, [1.0, 1.0])
    assert rep.or_violation.tolist() == [1.0] and rep.max_violation == 1.0
    assert not rep.feasible()


def test_disjunctive_global_minimizer():
    prob = build_disjunctive()
    w = np.array([0.0, 0.0, 0.0, 4.0, 0.0])
    assert feasibility(prob, w).max_violation == 0.0
    assert prob.f(w) == 9.0
    assert prob.known_optimum.f_min == 9.0


def test_disjunctive_listed_point_with_negative_u_is_infeasible():
    # With u = -1 the first set needs x1 >= 5, so only the second slack can help.
    rep = feasibility(build_disjunctive(), [0.0, 0.0, 0.0, -1.0, 0.0])
    assert rep.g_violation[0] == 5.0 and rep.max_violation == 5.0


def test_disjunctive_local_points_are_feasible():
    prob = build_disjunctive()
    for w in ([1.0, 0.0, 1.0, 3.0, 0.0], [4.0, 2.0, -1.0, 0.0, 21.0]):
        assert feasibility(prob, w).max_violation == 0.0
    assert prob.f(np.array([1.0, 0.0, 1.0, 3.0, 0.0])) == 13.0


def test_empty_problem_has_zero_violation():
    n = 3
    f = SmoothFn(n, lambda x: 0.0, lambda x: np.zeros(n))
    e = VectorFn.empty(n)
    rep = feasibility(MpocProblem(n, f, e, e, e, e), np.ones(n))
    assert rep.max_violation == 0.0


def test_feasibility_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        feasibility(build_toy_branch(), [1.0, 2.0, 3.0])


def test_problem_rejects_wrong_dimension():
    f = SmoothFn(2, lambda x: 0.0, lambda x: np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        MpocProblem(2, f, VectorFn.empty(3), VectorFn.empty(2), VectorFn.empty(2), VectorFn.empty(2))


def test_default_tolerance():
    assert FEAS_TOL == 1e-4


def test_grad_check_benchmarks():
    assert grad_check(build_disjunctive(), probes=20, seed=0).worst <= 1e-5
    rng = np.random.default_rng(0)
    a = sample_gap_vector(rng, 10, 3)
    assert grad_check(build_gap_domain(10, 3.0, a), probes=20, seed=0).worst <= 1e-5


def test_grad_check_constant_function_is_exact():
    n = 4
    f = SmoothFn(n, lambda x: 3.0, lambda x: np.zeros(n))
    e = VectorFn.empty(n)
    rep = grad_check(MpocProblem(n, f, e, e, e, e), probes=5)
    assert rep.worst == 0.0


def test_grad_check_flags_a_wrong_gradient():
    n = 2
    f = SmoothFn(n, lambda x: float(x @ x), lambda x: x)
    e = VectorFn.empty(n)
    assert grad_check(MpocProblem(n, f, e, e, e, e), probes=5).worst > 0.1


def test_grad_check_rejects_zero_probes():
    with pytest.raises(ValueError):
        grad_check(build_toy_branch(), probes=0)


def _permuted(problem, perm):
    G, H = problem.G, problem.H
    return MpocProblem(
        problem.n, problem.f, problem.g, problem.h,
        VectorFn(problem.n, G.size, lambda x: G(x)[perm], lambda x: G.jacobian(x)[perm]),
        VectorFn(problem.n, H.size, lambda x: H(x)[perm], lambda x: H.jacobian(x)[perm]),
    )


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_feasibility_invariant_under_pair_permutation(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, "none")
    prob = inst.problem
    x = inst.x_bar + rng.normal(scale=0.5, size=prob.n)
    perm = rng.permutation(prob.q)
    a, b = feasibility(prob, x), feasibility(_permuted(prob, perm), x)
    assert a.max_violation == b.max_violation
    assert np.array_equal(a.or_violation[perm], b.or_violation)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_zero_violation_means_each_pair_holds(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, "none")
    prob = inst.problem
    for x in (inst.x_bar, inst.x_bar + rng.normal(scale=0.3, size=prob.n)):
        rep = feasibility(prob, x)
        if rep.max_violation == 0.0:
            G, H = prob.G(x), prob.H(x)
            assert np.all((G <= 0) | (H <= 0))


def test_random_instances_are_feasible_at_their_point():
    for seed in range(30):
        inst = random_instance(np.random.default_rng(seed), "S")
        assert feasibility(inst.problem, inst.x_bar).max_violation <= 1e-12
