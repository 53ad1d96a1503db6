"""Gradient-descent iteration with fixed and scheduled step-sizes."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import sym_eigenvalues

__all__ = [
    "EvaluationBlowUp",
    "FixedSchedule",
    "ContractionSchedule",
    "StaircaseSchedule",
    "schedule_from_json",
    "RunConfig",
    "Status",
    "Trajectory",
    "BatchResult",
    "step",
    "next_alpha",
    "run",
    "run_batch",
]


class EvaluationBlowUp(FloatingPointError):
    """The gradient produced non-finite values."""


# --------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class FixedSchedule:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"fixed step-size must be positive, got {self.alpha}")

    def initial_alpha(self):
        return self.alpha

    def to_json(self):
        return {"fixed": self.alpha}


@dataclass(frozen=True)
class ContractionSchedule:
    """Step-sizes from the affine contraction ``h(a) = a* - rho (a - a*)``."""

    alpha0: float
    alpha_star: float
    rho: float

    def __post_init__(self):
        if not self.alpha_star > 0:
            raise ValueError(f"alpha_star must be positive, got {self.alpha_star}")
        if self.alpha0 < self.alpha_star:
            raise ValueError("alpha0 must be at least alpha_star")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")

    def initial_alpha(self):
        return self.alpha0

    def h(self, alpha):
        return self.alpha_star - self.rho * (alpha - self.alpha_star)

    def to_json(self):
        return {"contraction": {"alpha0": self.alpha0, "alpha_star": self.alpha_star, "rho": self.rho}}


@dataclass(frozen=True)
class StaircaseSchedule:
    """Piecewise-constant decreasing step-sizes.

    ``segments`` is a sequence of ``(count, alpha)``; the last count may be
    ``math.inf``. Iteration ``n`` (zero-based) uses the alpha of the first
    segment whose cumulative count exceeds ``n``; past a finite last segment
    its alpha is kept.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple((float(c) if math.isinf(c) else int(c), float(a)) for c, a in self.segments)
        if not segs:
            raise ValueError("staircase needs at least one segment")
        for i, (count, alpha) in enumerate(segs):
            if not alpha > 0:
                raise ValueError(f"segment {i}: alpha must be positive")
            if not count > 0:
                raise ValueError(f"segment {i}: count must be positive")
            if math.isinf(count) and i != len(segs) - 1:
                raise ValueError("only the last segment may be unbounded")
        alphas = [a for _, a in segs]
        if any(b >= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("staircase alphas must be strictly decreasing")
        object.__setattr__(self, "segments", segs)
        bounds = np.cumsum([c for c, _ in segs])
        object.__setattr__(self, "_bounds", bounds)

    def initial_alpha(self):
        return self.segments[0][1]

    def alpha_at(self, n):
        idx = int(np.searchsorted(self._bounds, n, side="right"))
        return self.segments[min(idx, len(self.segments) - 1)][1]

    def to_json(self):
        return {"staircase": [[None if math.isinf(c) else c, a] for c, a in self.segments]}


def _count(value):
    if value is None or (isinstance(value, str) and value.lower() in ("inf", "infinity")):
        return math.inf
    return value


def schedule_from_json(obj):
    """Parse ``{"fixed": a}``, ``{"contraction": {...}}`` or ``{"staircase": [[n, a], ...]}``.

    A staircase count of ``null`` or ``"inf"`` marks an unbounded last segment.
    """
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError("schedule must be an object with exactly one of fixed/contraction/staircase")
    (kind, body), = obj.items()
    if kind == "fixed":
        return FixedSchedule(float(body))
    if kind == "contraction":
        missing = {"alpha0", "alpha_star", "rho"} - set(body)
        if missing:
            raise ValueError(f"contraction schedule missing {sorted(missing)}")
        return ContractionSchedule(float(body["alpha0"]), float(body["alpha_star"]), float(body["rho"]))
    if kind == "staircase":
        return StaircaseSchedule(tuple((_count(c), a) for c, a in body))
    raise ValueError(f"unknown schedule kind {kind!r}")


def next_alpha(sched, it, alpha_prev):
    """Step-size for iteration ``it`` given the one used at ``it - 1``."""
    if isinstance(sched, FixedSchedule):
        return sched.alpha
    if isinstance(sched, ContractionSchedule):
        return sched.h(alpha_prev)
    if isinstance(sched, StaircaseSchedule):
        return sched.alpha_at(it)
    raise TypeError(f"unsupported schedule {sched!r}")


# --------------------------------------------------------------------------
# run configuration and results


@dataclass(frozen=True)
class RunConfig:
    max_iters: int = 100_000
    grad_tol: float = 1e-8
    diverge_radius: float = 1e6
    record_every: int = 1

    def __post_init__(self):
        if self.max_iters < 1 or self.record_every < 1:
            raise ValueError("max_iters and record_every must be positive")
        if not 0 < self.grad_tol <= 1e-2:
            raise ValueError(f"grad_tol must lie in (0, 1e-2], got {self.grad_tol}")
        if not self.diverge_radius > 0:
            raise ValueError("diverge_radius must be positive")

    def check_against(self, obj):
        extent = float(np.max(np.abs(obj.domain_box)))
        if self.diverge_radius < extent:
            raise ValueError(
                f"diverge_radius {self.diverge_radius} is smaller than the domain extent {extent}"
            )


class Status(enum.IntEnum):
    RUNNING = 0
    CONVERGED = 1
    DIVERGED = 2
    MAX_ITERS = 3

    @property
    def label(self):
        return {1: "ConvergedAtIter", 2: "DivergedAtIter", 3: "MaxItersExceeded"}.get(int(self), "Running")


@dataclass(frozen=True)
class Trajectory:
    points: np.ndarray
    alphas: np.ndarray
    record_iters: np.ndarray
    status: Status
    iterations: int
    final_point: np.ndarray
    final_grad_norm: float

    def to_dict(self):
        return {
            "status": self.status.label,
            "iterations": self.iterations,
            "final_point": self.final_point.tolist(),
            "final_grad_norm": self.final_grad_norm,
            "points": self.points.tolist(),
            "alphas": self.alphas.tolist(),
            "record_iters": self.record_iters.tolist(),
        }


@dataclass(frozen=True)
class BatchResult:
    final_points: np.ndarray
    status: np.ndarray
    iterations: np.ndarray
    final_grad_norm: np.ndarray
    final_alpha: np.ndarray
    degenerate_hit: Optional[np.ndarray]


def step(obj, x, alpha):
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        g = obj.grad(x)
    if not np.all(np.isfinite(g)):
        raise EvaluationBlowUp(f"non-finite gradient at {x}")
    return x - alpha * g


def _norm(v):
    return np.sqrt(np.sum(v * v, axis=-1))


def _iterate(obj, x0s, sched, cfg, record=False, eig_tol=None):
    x = np.array(x0s, dtype=float, copy=True)
    n = x.shape[0]
    status = np.zeros(n, dtype=np.int8)
    iters = np.zeros(n, dtype=np.int64)
    gnorm = np.full(n, np.nan)
    final_alpha = np.full(n, np.nan)
    degenerate = np.zeros(n, dtype=bool) if eig_tol is not None else None
    rec_pts, rec_alphas, rec_iters = [], [], []

    active = np.arange(n)
    alpha = sched.initial_alpha()
    with np.errstate(all="ignore"):
        for it in range(cfg.max_iters + 1):
            xa = x[active]
            g = obj.grad(xa)
            gn = _norm(g)
            finite = np.all(np.isfinite(g), axis=-1) & np.all(np.isfinite(xa), axis=-1)
            diverged = ~finite | (_norm(xa) > cfg.diverge_radius)
            converged = ~diverged & (gn <= cfg.grad_tol)
            stop = diverged | converged
            if it == cfg.max_iters:
                stop = np.ones_like(stop)
            on_record = it % cfg.record_every == 0

            if degenerate is not None and alpha > 0:
                check = stop | on_record
                sel = active[check & finite]
                if sel.size:
                    eigs = sym_eigenvalues(obj.hess(x[sel]))
                    hit = np.min(np.abs(eigs - 1.0 / alpha), axis=-1) <= eig_tol
                    degenerate[sel] |= hit

            if record and (on_record or stop[0]):
                rec_pts.append(xa[0].copy())
                rec_alphas.append(alpha)
                rec_iters.append(it)

            done = active[stop]
            status[done] = np.where(
                diverged[stop], Status.DIVERGED, np.where(converged[stop], Status.CONVERGED, Status.MAX_ITERS)
            )
            iters[done] = it
            gnorm[done] = gn[stop]
            final_alpha[done] = alpha

            keep = ~stop
            active = active[keep]
            if active.size == 0:
                break
            x[active] = xa[keep] - alpha * g[keep]
            alpha = next_alpha(sched, it + 1, alpha)

    result = BatchResult(x, status, iters, gnorm, final_alpha, degenerate)
    if record:
        return result, np.array(rec_pts), np.array(rec_alphas), np.array(rec_iters)
    return result


def run(obj, x0, sched, cfg=None):
    """Iterate gradient descent from ``x0`` and record the thinned trajectory."""
    cfg = cfg or RunConfig()
    cfg.check_against(obj)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (obj.dim,) or not np.all(np.isfinite(x0)):
        raise ValueError(f"x0 must be a finite vector of length {obj.dim}")
    res, pts, alphas, its = _iterate(obj, x0[None, :], sched, cfg, record=True)
    return Trajectory(
        points=pts,
        alphas=alphas,
        record_iters=its,
        status=Status(int(res.status[0])),
        iterations=int(res.iterations[0]),
        final_point=res.final_points[0],
        final_grad_norm=float(res.final_grad_norm[0]),
    )


def run_batch(obj, x0s, sched, cfg=None, eig_tol=None):
    """Run many initializations in lockstep, keeping only terminal state.

    Each row evolves exactly as :func:`run` would evolve it alone. With
    ``eig_tol`` set, also flags rows whose Hessian came within ``eig_tol`` of
    ``1/alpha`` at any recorded iterate.
    """
    cfg = cfg or RunConfig()
    cfg.check_against(obj)
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    return _iterate(obj, x0s, sched, cfg, eig_tol=eig_tol)
