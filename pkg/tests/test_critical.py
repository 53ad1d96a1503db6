import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddle_scope.critical import (
    Classification,
    NotCriticalPoint,
    classify,
    find_critical_points,
    newton_solve,
)
from saddle_scope.objective import Objective, QuadraticSpec, make_quadratic

from oracles import eig2x2

SADDLE = Classification.STRICT_SADDLE
MIN = Classification.LOCAL_MIN


def _pairs(reports):
    return [(r.location, r.classification) for r in reports]


def test_example0_points(ex0):
    reps = find_critical_points(ex0, n_starts=64)
    assert len(reps) == 3
    by_y = sorted(reps, key=lambda r: r.location[1])
    for rep, (y, cls) in zip(by_y, [(-1.0, MIN), (0.0, SADDLE), (1.0, MIN)]):
        np.testing.assert_allclose(rep.location, [0.0, y], atol=1e-8)
        assert rep.classification == cls
        assert rep.grad_norm <= 1e-10


def test_example1_origin(ex1):
    rep = classify(ex1, [0.0, 0.0])
    assert rep.classification == SADDLE
    np.testing.assert_array_equal(rep.hess_eigenvalues, [-2.0, 0.5])
    reps = find_critical_points(ex1, n_starts=64)
    assert len(reps) == 1
    np.testing.assert_allclose(reps[0].location, [0.0, 0.0], atol=1e-8)


def test_example2_points(ex2):
    reps = sorted(find_critical_points(ex2, n_starts=64), key=lambda r: r.location[0])
    assert [r.classification for r in reps] == [MIN, SADDLE, MIN]
    xmin = 2 * np.pi / 3 + 2 * np.sin(2 * np.pi / 3)
    np.testing.assert_allclose([r.location[0] for r in reps], [-xmin, 0.0, xmin], atol=1e-6)
    np.testing.assert_allclose(reps[1].hess_eigenvalues, [-4.0, 2.0], atol=1e-12)


def test_quadratic_single_minimum():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    b = np.array([1.0, -1.0])
    reps = find_critical_points(make_quadratic(QuadraticSpec(a, b)), n_starts=16)
    assert len(reps) == 1
    np.testing.assert_allclose(reps[0].location, np.linalg.solve(a, b), atol=1e-10)
    assert reps[0].classification == MIN
    np.testing.assert_allclose(reps[0].hess_eigenvalues, eig2x2(a), atol=1e-14)


def _cubic_objective():
    # f = x^2 - y^3: the origin has Hessian diag(2, 0)
    return Objective(
        name="cubic",
        dim=2,
        eval=lambda p: p[..., 0] ** 2 - p[..., 1] ** 3,
        grad=lambda p: np.stack([2 * p[..., 0], -3 * p[..., 1] ** 2], axis=-1),
        hess=lambda p: np.stack(
            [np.stack([np.full_like(p[..., 0], 2.0), np.zeros_like(p[..., 0])], -1),
             np.stack([np.zeros_like(p[..., 0]), -6 * p[..., 1]], -1)],
            -2,
        ),
        domain_box=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
    )


def test_zero_eigenvalue_is_indeterminate():
    assert classify(_cubic_objective(), [0.0, 0.0]).classification == Classification.INDETERMINATE


def test_local_maximum_counts_as_strict_saddle():
    obj = Objective(
        name="cap",
        dim=2,
        eval=lambda p: -np.sum(p * p, -1),
        grad=lambda p: -2 * p,
        hess=lambda p: np.broadcast_to(-2 * np.eye(2), np.shape(p)[:-1] + (2, 2)),
        domain_box=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
    )
    assert classify(obj, [0.0, 0.0]).classification == SADDLE


def test_non_critical_rejected(ex0):
    with pytest.raises(NotCriticalPoint):
        classify(ex0, [1.0, 1.0])


def test_class_tol_boundary(ex0):
    # eigenvalue -1 with a tolerance above 1 collapses to Indeterminate
    assert classify(ex0, [0.0, 0.0], class_tol=1.5).classification == Classification.INDETERMINATE


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-2.0, 2.0), st.floats(0.1, 10.0), st.floats(-5, 5), st.floats(-5, 5))
def test_newton_one_step_on_quadratics(d1, off, d2, b1, b2):
    a = np.array([[d1 + abs(off), off], [off, d2 + abs(off)]])
    b = np.array([b1, b2])
    obj = make_quadratic(QuadraticSpec(a, b), box_half_width=1e3)
    x, k, ok = newton_solve(obj, [3.0, -4.0], tol=1e-10 * (1 + np.linalg.norm(b)) * np.linalg.cond(a))
    assert ok and k <= 1
    np.testing.assert_allclose(obj.grad(x), 0.0, atol=1e-10 * (1 + np.linalg.norm(b)) * np.linalg.cond(a))


def test_newton_on_singular_line(ex0):
    # the Hessian of example0 is singular on y = 1/sqrt(3), which is also a
    # stationary set of |grad f|^2: the fallback must shrink the residual
    # without claiming convergence
    x0 = np.array([0.5, 1 / np.sqrt(3)])
    x, _, ok = newton_solve(ex0, x0)
    assert not ok
    assert np.linalg.norm(ex0.grad(x)) < np.linalg.norm(ex0.grad(x0))


def test_newton_near_singular_line(ex0):
    x, _, ok = newton_solve(ex0, [0.5, 1 / np.sqrt(3) + 1e-3])
    assert ok
    assert np.linalg.norm(ex0.grad(x)) <= 1e-10


def test_classification_scale_invariant(ex0):
    base = classify(ex0, [0.0, 0.0])
    for c in (0.5, 3.0, 100.0):
        obj = Objective(
            name="scaled",
            dim=2,
            eval=lambda p, c=c: c * ex0.eval(p),
            grad=lambda p, c=c: c * ex0.grad(p),
            hess=lambda p, c=c: c * ex0.hess(p),
            domain_box=ex0.domain_box,
        )
        rep = classify(obj, [0.0, 0.0])
        assert rep.classification == base.classification
        np.testing.assert_allclose(rep.hess_eigenvalues, c * base.hess_eigenvalues)


def test_found_points_are_critical(all_objectives):
    for obj in all_objectives:
        for rep in find_critical_points(obj, n_starts=32, newton_tol=1e-10):
            assert np.linalg.norm(obj.grad(rep.location)) <= 1e-10
            assert np.all(rep.location >= obj.domain_box[:, 0])
            assert np.all(rep.location <= obj.domain_box[:, 1])


def test_seed_and_workers_reproducible(ex2):
    a = find_critical_points(ex2, n_starts=32, seed=3)
    b = find_critical_points(ex2, n_starts=32, seed=3, workers=4)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_too_few_starts(ex0):
    with pytest.raises(ValueError):
        find_critical_points(ex0, n_starts=8)


def test_report_serializes(ex0):
    d = classify(ex0, [0.0, 1.0]).to_dict()
    assert d["classification"] == "LocalMin"
    assert d["location"] == [0.0, 1.0]
