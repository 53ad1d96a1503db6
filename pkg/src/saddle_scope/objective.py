"""Objective functions with analytic derivatives and finite-difference oracles.

Every objective evaluates on arrays of shape ``(..., dim)`` so the same callables
serve single points and whole batches of samples.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

__all__ = [
    "Objective",
    "QuadraticSpec",
    "ObjectiveError",
    "make_example0",
    "make_example1",
    "make_example2",
    "make_quadratic",
    "load_quadratic_spec",
    "objective_from_name",
    "fd_gradient",
    "fd_hessian",
    "example1_q",
    "example2_q",
    "example2_threshold",
    "validate_objective",
]


class ObjectiveError(ValueError):
    """Raised for invalid objective parameters or names."""


@dataclass(frozen=True)
class Objective:
    name: str
    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    domain_box: np.ndarray  # shape (dim, 2): [lo, hi] per coordinate
    # analytic critical points, when known in closed form
    critical_points: Optional[tuple] = None
    params: dict = field(default_factory=dict)

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain_box[:, 0], self.domain_box[:, 1]
        return bool(np.all(x >= lo + margin) and np.all(x <= hi - margin))


@dataclass(frozen=True)
class QuadraticSpec:
    matrix_a: np.ndarray
    vector_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix_a, dtype=float)
        b = np.asarray(self.vector_b, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ObjectiveError(f"A must be square, got shape {a.shape}")
        if b.shape != (a.shape[0],):
            raise ObjectiveError(f"b must have shape ({a.shape[0]},), got {b.shape}")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12):
            raise ObjectiveError("A must be symmetric")
        if np.min(np.linalg.eigvalsh(a)) <= 0.0:
            raise ObjectiveError("A must be positive definite")
        object.__setattr__(self, "matrix_a", a)
        object.__setattr__(self, "vector_b", b)


def _box(*intervals):
    return np.array(intervals, dtype=float)


def _sym2(h11, h12, h22):
    """Stack 2x2 symmetric matrices from broadcastable entries."""
    h11, h12, h22 = np.broadcast_arrays(h11, h12, h22)
    row0 = np.stack([h11, h12], axis=-1)
    row1 = np.stack([h12, h22], axis=-1)
    return np.stack([row0, row1], axis=-2)


# --------------------------------------------------------------------------
# example0: f(x, y) = x^2/2 + y^4/4 - y^2/2


def make_example0():
    def f(p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        return 0.5 * x**2 + 0.25 * y**4 - 0.5 * y**2

    def grad(p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        return np.stack([x, y**3 - y], axis=-1)

    def hess(p):
        p = np.asarray(p, dtype=float)
        y = p[..., 1]
        return _sym2(np.ones_like(y), np.zeros_like(y), 3.0 * y**2 - 1.0)

    ymax = math.sqrt(11.0 / 3.0) - 1e-9
    return Objective(
        name="example0",
        dim=2,
        eval=f,
        grad=grad,
        hess=hess,
        domain_box=_box((-2.0, 2.0), (-ymax, ymax)),
        critical_points=(np.array([0.0, 0.0]), np.array([0.0, 1.0]), np.array([0.0, -1.0])),
    )


# --------------------------------------------------------------------------
# example1: f(x, y) = y^2/4 - q(y) x^2 with a sigmoid interpolant q

_EXP_CLAMP = 500.0


def example1_q(y):
    """Return ``(q, q', q'')`` for the interpolant used by example1.

    ``q`` is 1 for y <= 10, -1 for y >= 30 and a logistic blend in between.
    """
    y = np.asarray(y, dtype=float)
    inside = (y > 10.0) & (y < 30.0)
    # park points outside the blend at y=20 so the rational term stays finite
    t = np.where(inside, y - 20.0, 0.0)
    den = t * t - 100.0
    u = 40.0 * t / den
    du = -40.0 * (t * t + 100.0) / den**2
    d2u = 80.0 * t * (t * t + 300.0) / den**3
    u = np.clip(u, -_EXP_CLAMP, _EXP_CLAMP)
    s = expit(-u)  # 1 / (1 + exp(u))
    ss = s * (1.0 - s)
    q_mid = 1.0 - 2.0 * s
    dq_mid = 2.0 * ss * du
    d2q_mid = 2.0 * ss * (d2u - (1.0 - 2.0 * s) * du**2)

    q = np.where(inside, q_mid, np.where(y <= 10.0, 1.0, -1.0))
    dq = np.where(inside, dq_mid, 0.0)
    d2q = np.where(inside, d2q_mid, 0.0)
    return q, dq, d2q


def make_example1():
    def f(p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        q, _, _ = example1_q(y)
        return 0.25 * y**2 - q * x**2

    def grad(p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        q, dq, _ = example1_q(y)
        return np.stack([-2.0 * q * x, 0.5 * y - dq * x**2], axis=-1)

    def hess(p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        q, dq, d2q = example1_q(y)
        return _sym2(-2.0 * q, -2.0 * dq * x, 0.5 - d2q * x**2)

    return Objective(
        name="example1",
        dim=2,
        eval=f,
        grad=grad,
        hess=hess,
        domain_box=_box((-1.0, 1.0), (-40.0, 40.0)),
        critical_points=(np.array([0.0, 0.0]),),
    )


# --------------------------------------------------------------------------
# example2: f(x, y) = Q(x) + y^2 / b with an even, piecewise Q


def example2_threshold(a, b):
    """Seam location where ``Q`` switches from the cosine to the quadratic branch."""
    if not (a > 0 and b > 0):
        raise ObjectiveError(f"a and b must be positive, got a={a}, b={b}")
    if a * b < 2.0:
        raise ObjectiveError(f"example2 needs a*b >= 2, got a*b={a * b}")
    return math.acos(-2.0 / (a * b))


def example2_q(x, a, b):
    """Return ``(Q, Q', Q'')`` evaluated at ``x``."""
    x = np.asarray(x, dtype=float)
    xt = example2_threshold(a, b)
    sin_t = math.sin(xt)
    r = np.abs(x)
    sgn = np.sign(x)
    shift = r - xt - 0.5 * a * b * sin_t
    inner = r <= xt
    q = np.where(inner, a * np.cos(r), shift**2 / b - 2.0 / b - 0.25 * a * a * b * sin_t**2)
    dq_r = np.where(inner, -a * np.sin(r), 2.0 * shift / b)
    d2q = np.where(inner, -a * np.cos(r), 2.0 / b)
    return q, sgn * dq_r, d2q


def make_example2(a=4.0, b=1.0):
    a = float(a)
    b = float(b)
    xt = example2_threshold(a, b)
    xmin = xt + 0.5 * a * b * math.sin(xt)

    def f(p):
        p = np.asarray(p, dtype=float)
        q, _, _ = example2_q(p[..., 0], a, b)
        return q + p[..., 1] ** 2 / b

    def grad(p):
        p = np.asarray(p, dtype=float)
        _, dq, _ = example2_q(p[..., 0], a, b)
        return np.stack([dq, 2.0 * p[..., 1] / b], axis=-1)

    def hess(p):
        p = np.asarray(p, dtype=float)
        _, _, d2q = example2_q(p[..., 0], a, b)
        return _sym2(d2q, np.zeros_like(d2q), np.full_like(d2q, 2.0 / b))

    half = xt + a * b
    return Objective(
        name=f"example2:a={a:g},b={b:g}",
        dim=2,
        eval=f,
        grad=grad,
        hess=hess,
        domain_box=_box((-half, half), (-5.0, 5.0)),
        critical_points=(np.array([0.0, 0.0]), np.array([xmin, 0.0]), np.array([-xmin, 0.0])),
        params={"a": a, "b": b, "x_tilde": xt},
    )


# --------------------------------------------------------------------------
# quadratic: f(x) = x^T A x / 2 - b^T x


def make_quadratic(spec, box_half_width=10.0, name="quadratic"):
    a = spec.matrix_a
    b = spec.vector_b
    d = a.shape[0]

    # row-wise sums rather than matmul so batch and single evaluations agree bitwise
    def _ax(p):
        return np.sum(a * p[..., None, :], axis=-1)

    def f(p):
        p = np.asarray(p, dtype=float)
        return 0.5 * np.sum(p * _ax(p), axis=-1) - np.sum(b * p, axis=-1)

    def grad(p):
        p = np.asarray(p, dtype=float)
        return _ax(p) - b

    def hess(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(a, p.shape[:-1] + (d, d)).copy()

    return Objective(
        name=name,
        dim=d,
        eval=f,
        grad=grad,
        hess=hess,
        domain_box=np.tile([-box_half_width, box_half_width], (d, 1)).astype(float),
        critical_points=(np.linalg.solve(a, b),),
        params={"A": a.tolist(), "b": b.tolist()},
    )


def load_quadratic_spec(path):
    with open(path) as fh:
        data = json.load(fh)
    for key in ("A", "b"):
        if key not in data:
            raise ObjectiveError(f"quadratic file {path} is missing key {key!r}")
    return QuadraticSpec(np.array(data["A"], dtype=float), np.array(data["b"], dtype=float))


def objective_from_name(name, **params):
    """Build an objective from a selector string.

    Accepted forms are ``example0``, ``example1``, ``example2`` (with optional
    ``:a=4,b=1`` suffix or ``a``/``b`` keyword overrides) and
    ``quadratic:<path to JSON with keys A and b>``.
    """
    base, _, rest = name.partition(":")
    if base == "example0":
        return make_example0()
    if base == "example1":
        return make_example1()
    if base == "example2":
        kw = {"a": 4.0, "b": 1.0}
        if rest:
            for item in rest.split(","):
                key, _, value = item.partition("=")
                key = key.strip()
                if key not in kw:
                    raise ObjectiveError(f"unknown example2 parameter {key!r}")
                try:
                    kw[key] = float(value)
                except ValueError:
                    raise ObjectiveError(f"example2 parameter {key!r} is not a number: {value!r}")
        for key in ("a", "b"):
            if params.get(key) is not None:
                kw[key] = float(params[key])
        return make_example2(**kw)
    if base == "quadratic":
        if not rest:
            raise ObjectiveError("quadratic objective needs a JSON file: quadratic:<path>")
        return make_quadratic(load_quadratic_spec(rest), name=name)
    raise ObjectiveError(f"unknown objective {name!r}")


# --------------------------------------------------------------------------
# finite-difference oracles


def _check_interior(obj, x, h):
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    if not obj.contains(x, margin=h):
        raise ValueError(f"point {x} is within {h} of the domain boundary of {obj.name}")


def fd_gradient(obj, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    _check_interior(obj, x, h)
    out = np.empty(obj.dim)
    for i in range(obj.dim):
        e = np.zeros(obj.dim)
        e[i] = h
        out[i] = (obj.eval(x + e) - obj.eval(x - e)) / (2.0 * h)
    return out


def fd_hessian(obj, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    _check_interior(obj, x, h)
    out = np.empty((obj.dim, obj.dim))
    for i in range(obj.dim):
        e = np.zeros(obj.dim)
        e[i] = h
        out[:, i] = (obj.grad(x + e) - obj.grad(x - e)) / (2.0 * h)
    return 0.5 * (out + out.T)


def _interior_points(obj, n, seed, margin):
    from scipy.stats import qmc

    box = obj.domain_box
    u = qmc.Halton(d=obj.dim, scramble=True, seed=seed).random(n)
    return qmc.scale(u, box[:, 0] + margin, box[:, 1] - margin)


def _seam_checks(obj):
    """Jumps of the piecewise pieces across their seams, per derivative order."""
    eps = 1e-7
    if obj.name == "example1":
        seams = [(10.0 - eps, 10.0 + eps), (30.0 - eps, 30.0 + eps)]
        fn = example1_q
    elif obj.name.startswith("example2"):
        a, b, xt = obj.params["a"], obj.params["b"], obj.params["x_tilde"]
        seams = [(xt - eps, xt + eps), (-xt - eps, -xt + eps)]
        fn = lambda v: example2_q(v, a, b)  # noqa: E731
    else:
        return []
    out = []
    for left, right in seams:
        parts = fn(np.array([left, right]))
        jumps = [abs(float(part[0] - part[1])) for part in parts]
        out.append({"seam": 0.5 * (left + right), "jumps": jumps})
    return out


def validate_objective(obj, n_points=100, seed=0, h_grad=1e-5, h_hess=1e-4,
                       grad_rtol=1e-6, hess_rtol=1e-4, seam_tol=1e-4):
    """Check analytic derivatives against finite differences at quasi-random points.

    Returns a dict of per-check results with an overall ``passed`` flag.
    """
    pts = _interior_points(obj, n_points, seed, margin=10 * h_hess)
    grad_err = hess_err = asym = 0.0
    for x in pts:
        g = obj.grad(x)
        err = np.max(np.abs(g - fd_gradient(obj, x, h_grad))) / (1.0 + np.max(np.abs(g)))
        grad_err = max(grad_err, float(err))
        hm = obj.hess(x)
        err = np.max(np.abs(hm - fd_hessian(obj, x, h_hess))) / (1.0 + np.max(np.abs(hm)))
        hess_err = max(hess_err, float(err))
        asym = max(asym, float(np.max(np.abs(hm - hm.T))))

    checks = {
        "gradient": {"max_scaled_error": grad_err, "tol": grad_rtol, "passed": grad_err <= grad_rtol},
        "hessian": {"max_scaled_error": hess_err, "tol": hess_rtol, "passed": hess_err <= hess_rtol},
        "symmetry": {"max_asymmetry": asym, "tol": 1e-12, "passed": asym <= 1e-12},
    }
    seams = _seam_checks(obj)
    if seams:
        worst = max(max(s["jumps"]) for s in seams)
        checks["seams"] = {"max_jump": worst, "tol": seam_tol, "passed": worst <= seam_tol, "detail": seams}
    if obj.name.startswith("example2"):
        xs = np.random.default_rng(seed).uniform(obj.domain_box[0, 0], obj.domain_box[0, 1], 1000)
        a, b = obj.params["a"], obj.params["b"]
        even = bool(np.array_equal(example2_q(xs, a, b)[0], example2_q(-xs, a, b)[0]))
        checks["even"] = {"passed": even}
    return {
        "objective": obj.name,
        "n_points": int(n_points),
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }
