"""Hessian spectra: Jacobi eigenvalues, grid scans for L, L+ and the degenerate set."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralReport",
    "LinearizationReport",
    "sym_eigenvalues",
    "scan_box",
    "scan_refinement",
    "linearize",
    "cell_centers",
]

SYMMETRY_TOL = 1e-10
OFFDIAG_RTOL = 1e-12
MAX_SWEEPS = 60


@dataclass(frozen=True)
class SpectralReport:
    alpha: float
    box: tuple
    grid_shape: tuple
    lipschitz_estimate: float
    positive_lipschitz_estimate: float
    degenerate_fraction: float
    degenerate_count: int
    degenerate_tol: float

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "box": [list(iv) for iv in self.box],
            "grid_shape": list(self.grid_shape),
            "lipschitz_estimate": self.lipschitz_estimate,
            "positive_lipschitz_estimate": self.positive_lipschitz_estimate,
            "degenerate_fraction": self.degenerate_fraction,
            "degenerate_count": self.degenerate_count,
            "degenerate_tol": self.degenerate_tol,
        }


@dataclass(frozen=True)
class LinearizationReport:
    point: np.ndarray
    alpha: float
    dg_eigenvalues: np.ndarray
    dim_stable: int
    dim_center: int
    dim_unstable: int

    def to_dict(self):
        return {
            "point": self.point.tolist(),
            "alpha": self.alpha,
            "dg_eigenvalues": self.dg_eigenvalues.tolist(),
            "dim_stable": self.dim_stable,
            "dim_center": self.dim_center,
            "dim_unstable": self.dim_unstable,
        }


def sym_eigenvalues(m):
    """Eigenvalues of symmetric matrices by cyclic Jacobi rotations.

    Accepts a single ``(d, d)`` matrix or a stack ``(..., d, d)``; returns the
    eigenvalues in ascending order along the last axis. Rotations continue
    until the off-diagonal Frobenius norm drops to ``1e-12 * ||m||_F``.
    """
    a = np.array(m, dtype=float, copy=True)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if np.any(np.abs(a - np.swapaxes(a, -1, -2)) > SYMMETRY_TOL):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    d = a.shape[-1]
    if d == 1:
        return a[..., 0].copy()

    scale = np.sqrt(np.sum(a * a, axis=(-1, -2)))
    limit = OFFDIAG_RTOL * scale
    offmask = ~np.eye(d, dtype=bool)

    def off_norm(a):
        return np.sqrt(np.sum(np.where(offmask, a * a, 0.0), axis=(-1, -2)))

    for _ in range(MAX_SWEEPS):
        if np.all(off_norm(a) <= limit):
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[..., p, q]
                app = a[..., p, p]
                aqq = a[..., q, q]
                active = apq != 0.0
                safe = np.where(active, apq, 1.0)
                # a negligible apq can overflow theta; t then rounds to 0 (no rotation)
                with np.errstate(over="ignore"):
                    theta = (aqq - app) / (2.0 * safe)
                    t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate columns p, q then rows p, q
                col_p = a[..., :, p].copy()
                col_q = a[..., :, q].copy()
                a[..., :, p] = c[..., None] * col_p - s[..., None] * col_q
                a[..., :, q] = s[..., None] * col_p + c[..., None] * col_q
                row_p = a[..., p, :].copy()
                row_q = a[..., q, :].copy()
                a[..., p, :] = c[..., None] * row_p - s[..., None] * row_q
                a[..., q, :] = s[..., None] * row_p + c[..., None] * row_q
                a[..., p, q] = 0.0
                a[..., q, p] = 0.0
    return np.sort(np.diagonal(a, axis1=-2, axis2=-1), axis=-1)


def cell_centers(box, grid_shape):
    """Cell-center coordinates of a regular grid, flattened to ``(N, d)``."""
    box = np.asarray(box, dtype=float)
    axes = [
        lo + (np.arange(n) + 0.5) * (hi - lo) / n
        for (lo, hi), n in zip(box, grid_shape)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _gap_to(eigs, alpha):
    if alpha == 0:
        return np.full(eigs.shape[:-1], np.inf)
    return np.min(np.abs(eigs - 1.0 / alpha), axis=-1)


def _scan_chunk(obj, alpha, pts):
    eigs = sym_eigenvalues(obj.hess(pts))
    norms = np.max(np.abs(eigs), axis=-1)
    ell = np.maximum(eigs[..., -1], 0.0)
    return norms, ell, _gap_to(eigs, alpha)


def scan_box(obj, alpha, box=None, grid_shape=256, eig_tol=1e-6, workers=1,
             chunk_size=16384, return_raster=False):
    """Scan the Hessian over cell centers of a regular grid.

    Reports the largest spectral norm (estimate of L), the largest nonnegative
    eigenvalue (estimate of L+), and the fraction of cells whose spectrum comes
    within ``eig_tol`` of ``1/alpha``. With ``return_raster`` a second value is
    returned: an array with columns ``coords..., gap, norm`` per cell.
    """
    box = obj.domain_box if box is None else np.asarray(box, dtype=float)
    if np.isscalar(grid_shape):
        grid_shape = (int(grid_shape),) * obj.dim
    grid_shape = tuple(int(n) for n in grid_shape)
    if len(grid_shape) != obj.dim or box.shape != (obj.dim, 2):
        raise ValueError("box and grid_shape must match the objective dimension")
    if min(grid_shape) < 16:
        raise ValueError(f"grid_shape must be at least 16 per axis, got {grid_shape}")

    pts = cell_centers(box, grid_shape)
    chunks = [pts[i:i + chunk_size] for i in range(0, len(pts), chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _scan_chunk(obj, alpha, c), chunks))
    else:
        parts = [_scan_chunk(obj, alpha, c) for c in chunks]

    norms = np.concatenate([p[0] for p in parts])
    ell = np.concatenate([p[1] for p in parts])
    gaps = np.concatenate([p[2] for p in parts])
    count = int(np.count_nonzero(gaps <= eig_tol))
    report = SpectralReport(
        alpha=float(alpha),
        box=tuple(tuple(float(v) for v in iv) for iv in box),
        grid_shape=grid_shape,
        lipschitz_estimate=float(np.max(norms)),
        positive_lipschitz_estimate=float(np.max(ell)),
        degenerate_fraction=count / len(pts),
        degenerate_count=count,
        degenerate_tol=float(eig_tol),
    )
    if return_raster:
        return report, np.column_stack([pts, gaps, norms])
    return report


def scan_refinement(obj, alpha, box=None, grid_shape=256, levels=3, eig_tol=1e-6, workers=1):
    """Repeat :func:`scan_box` with the grid doubled at each level."""
    if np.isscalar(grid_shape):
        grid_shape = (int(grid_shape),) * obj.dim
    return [
        scan_box(obj, alpha, box, tuple(n * 2**k for n in grid_shape), eig_tol, workers)
        for k in range(levels)
    ]


def linearize(obj, x, alpha, eig_tol=1e-9):
    x = np.asarray(x, dtype=float)
    dg = np.eye(obj.dim) - alpha * obj.hess(x)
    lam = sym_eigenvalues(dg)
    mag = np.abs(lam)
    return LinearizationReport(
        point=x.copy(),
        alpha=float(alpha),
        dg_eigenvalues=lam,
        dim_stable=int(np.count_nonzero(mag < 1.0 - eig_tol)),
        dim_center=int(np.count_nonzero(np.abs(mag - 1.0) <= eig_tol)),
        dim_unstable=int(np.count_nonzero(mag > 1.0 + eig_tol)),
    )
