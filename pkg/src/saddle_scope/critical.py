"""Multi-start damped Newton search for critical points and their classification."""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .spectral import sym_eigenvalues

__all__ = [
    "Classification",
    "CriticalPointReport",
    "NotCriticalPoint",
    "classify",
    "newton_solve",
    "find_critical_points",
]

DEDUP_RADIUS = 1e-6
MAX_HALVINGS = 30


class NotCriticalPoint(ValueError):
    pass


class Classification(str, enum.Enum):
    LOCAL_MIN = "LocalMin"
    STRICT_SADDLE = "StrictSaddle"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class CriticalPointReport:
    location: np.ndarray
    grad_norm: float
    hess_eigenvalues: np.ndarray
    classification: Classification
    newton_iters: int = 0

    def to_dict(self):
        return {
            "location": self.location.tolist(),
            "grad_norm": self.grad_norm,
            "hess_eigenvalues": self.hess_eigenvalues.tolist(),
            "classification": self.classification.value,
            "newton_iters": self.newton_iters,
        }


def _classify_eigs(eigs, class_tol):
    # local maxima land in StrictSaddle on purpose: any negative curvature counts
    if eigs[0] < -class_tol:
        return Classification.STRICT_SADDLE
    if eigs[0] > class_tol:
        return Classification.LOCAL_MIN
    return Classification.INDETERMINATE


def classify(obj, x, class_tol=1e-8, critical_tol=1e-6, newton_iters=0):
    x = np.asarray(x, dtype=float)
    gn = float(np.linalg.norm(obj.grad(x)))
    if gn > critical_tol:
        raise NotCriticalPoint(f"not a critical point: |grad f({x.tolist()})| = {gn:.3g}")
    eigs = sym_eigenvalues(obj.hess(x))
    return CriticalPointReport(x.copy(), gn, eigs, _classify_eigs(eigs, class_tol), newton_iters)


def _halving_search(obj, x, direction, gn):
    t = 1.0
    for _ in range(MAX_HALVINGS + 1):
        trial = x + t * direction
        g = obj.grad(trial)
        if np.all(np.isfinite(g)) and np.linalg.norm(g) < gn:
            return trial
        t *= 0.5
    return None


def newton_solve(obj, x0, tol=1e-10, max_iter=100, bounds=None):
    """Damped Newton on ``grad f = 0``.

    Steps are halved until the gradient norm decreases. When the Hessian is
    singular, or no halving helps, a descent step on ``|grad f|^2 / 2`` is
    tried instead. Returns ``(x, iterations, converged)``; leaving ``bounds``
    abandons the start.
    """
    x = np.asarray(x0, dtype=float).copy()
    for k in range(max_iter + 1):
        g = obj.grad(x)
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return x, k, True
        if k == max_iter:
            break
        h = obj.hess(x)
        trial = None
        try:
            if np.linalg.cond(h) < 1e12:
                trial = _halving_search(obj, x, np.linalg.solve(h, -g), gn)
        except np.linalg.LinAlgError:
            trial = None
        if trial is None:
            merit_dir = -(h @ g)
            if not np.any(merit_dir):
                break
            trial = _halving_search(obj, x, merit_dir, gn)
            if trial is None:
                break
        x = trial
        if bounds is not None and (np.any(x < bounds[:, 0]) or np.any(x > bounds[:, 1])):
            break
    return x, k, False


def _start_points(box, n, seed):
    sampler = qmc.Halton(d=box.shape[0], scramble=True, seed=seed)
    return qmc.scale(sampler.random(n), box[:, 0], box[:, 1])


def find_critical_points(obj, box=None, n_starts=64, newton_tol=1e-10, class_tol=1e-8,
                         seed=0, max_iter=100, workers=1):
    box = obj.domain_box if box is None else np.asarray(box, dtype=float)
    if n_starts < 16:
        raise ValueError(f"n_starts must be at least 16, got {n_starts}")
    center = box.mean(axis=1)
    half = box[:, 1] - box[:, 0]  # doubled box keeps the same center
    outer = np.column_stack([center - half, center + half])

    starts = _start_points(box, n_starts, seed)

    def solve(x0):
        return newton_solve(obj, x0, tol=newton_tol, max_iter=max_iter, bounds=outer)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, starts))
    else:
        results = [solve(s) for s in starts]

    found = [(x, k) for x, k, ok in results if ok]
    found.sort(key=lambda item: tuple(item[0]))
    kept = []
    for x, k in found:
        if all(np.linalg.norm(x - y) > DEDUP_RADIUS for y, _ in kept):
            kept.append((x, k))

    reports = []
    for x, k in kept:
        if np.any(x < box[:, 0]) or np.any(x > box[:, 1]):
            continue
        if np.linalg.norm(obj.grad(x)) > newton_tol:
            continue
        reports.append(classify(obj, x + 0.0, class_tol, critical_tol=newton_tol, newton_iters=k))
    return reports
