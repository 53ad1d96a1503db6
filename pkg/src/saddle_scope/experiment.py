"""Monte Carlo estimates of how often gradient descent ends at a strict saddle."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .critical import Classification, classify
from .dynamics import FixedSchedule, RunConfig, Status, run_batch

__all__ = [
    "ExperimentConfig",
    "ExperimentSummary",
    "MissingCriticalPoints",
    "OUTCOMES",
    "uniform_samples",
    "wilson_interval",
    "run_experiment",
    "sweep_alpha",
    "schedule_experiment",
]

Z95 = 1.959963984540054

TO_LOCAL_MIN = "ToLocalMin"
TO_STRICT_SADDLE = "ToStrictSaddle"
TO_INDETERMINATE = "ToIndeterminate"
DIVERGED = "Diverged"
UNRESOLVED = "Unresolved"
OUTCOMES = (TO_LOCAL_MIN, TO_STRICT_SADDLE, TO_INDETERMINATE, DIVERGED, UNRESOLVED)

_OUTCOME_OF_CLASS = {
    Classification.LOCAL_MIN: TO_LOCAL_MIN,
    Classification.STRICT_SADDLE: TO_STRICT_SADDLE,
    Classification.INDETERMINATE: TO_INDETERMINATE,
}


class MissingCriticalPoints(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    objective: object
    schedule: object
    init_box: Optional[np.ndarray] = None
    n_samples: int = 10_000
    seed: int = 0
    run_config: RunConfig = field(default_factory=RunConfig)
    match_radius: float = 1e-3
    eig_tol: float = 1e-6
    class_tol: float = 1e-8
    unconstrained: bool = False
    # CriticalPointReport list; defaults to the objective's analytic points
    critical_points: Optional[tuple] = None

    def __post_init__(self):
        box = self.objective.domain_box if self.init_box is None else np.asarray(self.init_box, dtype=float)
        object.__setattr__(self, "init_box", box)
        if box.shape != (self.objective.dim, 2) or np.any(box[:, 0] > box[:, 1]):
            raise ValueError(f"init_box must be {self.objective.dim} intervals [lo, hi]")
        if self.n_samples < 100:
            raise ValueError(f"n_samples must be at least 100, got {self.n_samples}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        dom = self.objective.domain_box
        if not self.unconstrained and (np.any(box[:, 0] < dom[:, 0]) or np.any(box[:, 1] > dom[:, 1])):
            raise ValueError(
                f"init_box {box.tolist()} is outside the domain box of {self.objective.name}; "
                "set unconstrained to allow it"
            )


@dataclass(frozen=True)
class ExperimentSummary:
    n_samples: int
    counts: dict
    saddle_probability_estimate: float
    wilson_95_interval: tuple
    degenerate_hits: int
    final_alpha_range: tuple
    critical_points: tuple
    # per-sample detail, kept for auditing and CSV export
    x0: np.ndarray = field(repr=False, compare=False)
    outcome: np.ndarray = field(repr=False, compare=False)
    point_id: np.ndarray = field(repr=False, compare=False)
    final_points: np.ndarray = field(repr=False, compare=False)
    iterations: np.ndarray = field(repr=False, compare=False)

    def total(self, kind):
        value = self.counts[kind]
        return sum(value.values()) if isinstance(value, dict) else value

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "counts": self.counts,
            "saddle_probability_estimate": self.saddle_probability_estimate,
            "wilson_95_interval": list(self.wilson_95_interval),
            "degenerate_hits": self.degenerate_hits,
            "final_alpha_range": list(self.final_alpha_range),
            "critical_points": [dict(id=i, **cp.to_dict()) for i, cp in enumerate(self.critical_points)],
        }

    def sample_rows(self):
        """Rows ``index, x0..., outcome, point_id, final_point..., iters``."""
        for i in range(self.n_samples):
            yield (
                [i, *self.x0[i].tolist(), OUTCOMES[self.outcome[i]], int(self.point_id[i])]
                + self.final_points[i].tolist()
                + [int(self.iterations[i])]
            )

    def sample_header(self):
        d = self.x0.shape[1]
        return (
            ["index"] + [f"x0_{j}" for j in range(d)] + ["outcome", "point_id"]
            + [f"final_{j}" for j in range(d)] + ["iters"]
        )


def uniform_samples(seed, indices, box):
    """Uniform points in ``box``; sample ``i`` depends only on ``(seed, i)``.

    Each sample draws from a Philox generator keyed by ``seed`` whose counter
    starts at ``(0, i, 0, 0)``, so any subset can be regenerated on its own.
    """
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    out = np.empty((len(indices), d))
    for row, i in enumerate(indices):
        bitgen = np.random.Philox(key=int(seed), counter=[0, int(i), 0, 0])
        out[row] = np.random.Generator(bitgen).random(d)
    return box[:, 0] + out * (box[:, 1] - box[:, 0])


def wilson_interval(k, n, z=Z95):
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


def _critical_list(cfg):
    if cfg.critical_points is not None:
        return tuple(cfg.critical_points)
    known = cfg.objective.critical_points
    if not known:
        raise MissingCriticalPoints(
            f"no critical-point list for {cfg.objective.name}; pass one or run the critical-point finder"
        )
    return tuple(classify(cfg.objective, x, cfg.class_tol) for x in known)


def _run_chunk(cfg, crit_locs, crit_outcomes, indices):
    x0 = uniform_samples(cfg.seed, indices, cfg.init_box)
    res = run_batch(cfg.objective, x0, cfg.schedule, cfg.run_config, eig_tol=cfg.eig_tol)
    outcome = np.full(len(indices), OUTCOMES.index(UNRESOLVED), dtype=np.int8)
    point_id = np.full(len(indices), -1, dtype=np.int64)

    outcome[res.status == Status.DIVERGED] = OUTCOMES.index(DIVERGED)
    conv = np.flatnonzero(res.status == Status.CONVERGED)
    if conv.size:
        dist = np.linalg.norm(res.final_points[conv, None, :] - crit_locs[None, :, :], axis=-1)
        nearest = np.argmin(dist, axis=1)
        matched = dist[np.arange(conv.size), nearest] <= cfg.match_radius
        rows = conv[matched]
        point_id[rows] = nearest[matched]
        outcome[rows] = crit_outcomes[nearest[matched]]
    return x0, res, outcome, point_id


def run_experiment(cfg, workers=1, chunk_size=2500):
    """Sample ``n_samples`` uniform starts, descend, and tally where they end.

    A converged run is matched to the nearest known critical point within
    ``match_radius``; unmatched or unfinished runs count as Unresolved.
    """
    crits = _critical_list(cfg)
    crit_locs = np.array([c.location for c in crits])
    crit_outcomes = np.array([OUTCOMES.index(_OUTCOME_OF_CLASS[c.classification]) for c in crits])

    chunks = [np.arange(s, min(s + chunk_size, cfg.n_samples)) for s in range(0, cfg.n_samples, chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda idx: _run_chunk(cfg, crit_locs, crit_outcomes, idx), chunks))
    else:
        parts = [_run_chunk(cfg, crit_locs, crit_outcomes, idx) for idx in chunks]

    x0 = np.concatenate([p[0] for p in parts])
    outcome = np.concatenate([p[2] for p in parts])
    point_id = np.concatenate([p[3] for p in parts])
    final_points = np.concatenate([p[1].final_points for p in parts])
    iterations = np.concatenate([p[1].iterations for p in parts])
    final_alpha = np.concatenate([p[1].final_alpha for p in parts])
    degenerate = np.concatenate([p[1].degenerate_hit for p in parts])

    counts = {}
    for code, kind in enumerate(OUTCOMES):
        mask = outcome == code
        if kind in (DIVERGED, UNRESOLVED):
            counts[kind] = int(np.count_nonzero(mask))
        else:
            ids, n = np.unique(point_id[mask], return_counts=True)
            counts[kind] = {str(i): int(c) for i, c in zip(ids, n)}

    saddle = int(np.count_nonzero(outcome == OUTCOMES.index(TO_STRICT_SADDLE)))
    return ExperimentSummary(
        n_samples=cfg.n_samples,
        counts=counts,
        saddle_probability_estimate=saddle / cfg.n_samples,
        wilson_95_interval=wilson_interval(saddle, cfg.n_samples),
        degenerate_hits=int(np.count_nonzero(degenerate)),
        final_alpha_range=(float(np.min(final_alpha)), float(np.max(final_alpha))),
        critical_points=crits,
        x0=x0,
        outcome=outcome,
        point_id=point_id,
        final_points=final_points,
        iterations=iterations,
    )


def sweep_alpha(cfg, alphas, workers=1):
    """Run the same experiment (same seed) at each fixed step-size."""
    return [(float(a), run_experiment(replace(cfg, schedule=FixedSchedule(float(a))), workers)) for a in alphas]


def schedule_experiment(cfg, workers=1):
    """Experiment under a contraction or staircase schedule.

    The machinery is that of :func:`run_experiment`; the summary's
    ``final_alpha_range`` gives the step-sizes in force when runs stopped.
    """
    return run_experiment(cfg, workers)
