"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary
under "acceptance criteria". Run just this module with

    pytest tests/test_acceptance.py
"""
import json
import math
import time

import numpy as np

from saddle_scope.cli import main
from saddle_scope.critical import Classification, classify
from saddle_scope.dynamics import ContractionSchedule, FixedSchedule, StaircaseSchedule, run
from saddle_scope.experiment import OUTCOMES, ExperimentConfig, run_experiment, sweep_alpha
from saddle_scope.spectral import linearize, scan_box

from conftest import record_criterion
from oracles import EXAMPLE2_MIN

SADDLE = OUTCOMES.index("ToStrictSaddle")
LOCAL_MIN = OUTCOMES.index("ToLocalMin")


def _check(number, title, checks):
    """Record the outcome of named boolean checks, then assert them all."""
    failed = [name for name, ok in checks.items() if not ok]
    record_criterion(number, title, not failed, "failed: " + ", ".join(failed) if failed else "")
    assert not failed, failed


def _local_min_fraction(summary, locations, radius):
    kept = summary.outcome != OUTCOMES.index("Diverged")
    at_min = summary.outcome[kept] == LOCAL_MIN
    finals = summary.final_points[kept][at_min]
    near = np.min(np.linalg.norm(finals[:, None, :] - np.asarray(locations)[None], axis=-1), axis=1) <= radius
    return np.count_nonzero(near) / max(1, np.count_nonzero(kept))


def test_criterion_01_example0_avoidance(ex0):
    cfg = ExperimentConfig(ex0, FixedSchedule(0.1), n_samples=10_000, seed=42)
    start = time.perf_counter()
    s = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    _check(1, f"example0 Fixed(0.1) n=10000: no saddle hits ({elapsed:.2f}s)", {
        "saddle count 0": s.total("ToStrictSaddle") == 0,
        "runtime < 10 s": elapsed < 10.0,
        "all samples accounted": sum(s.total(k) for k in OUTCOMES) == 10_000,
    })


def test_criterion_02_example0_step_sizes(ex0):
    cfg = ExperimentConfig(ex0, FixedSchedule(0.1), n_samples=10_000, seed=42)
    checks = {}
    for alpha, s in sweep_alpha(cfg, [0.05, 0.1, 0.19]):
        checks[f"alpha={alpha}: saddle 0"] = s.total("ToStrictSaddle") == 0
        frac = _local_min_fraction(s, [[0.0, 1.0], [0.0, -1.0]], cfg.match_radius)
        checks[f"alpha={alpha}: local-min fraction {frac:.4f} >= 0.99"] = frac >= 0.99
    _check(2, "example0 sweep 0.05/0.1/0.19: no saddle hits, >= 99% to (0,+-1)", checks)


def test_criterion_03_example1_failure_mode(ex1):
    cfg = ExperimentConfig(ex1, FixedSchedule(0.5), init_box=[[-1.0, 1.0], [0.0, 40.0]], n_samples=10_000, seed=42)
    s = run_experiment(cfg)
    upper = s.x0[:, 1] >= 30.0
    _check(3, f"example1 Fixed(0.5): saddle estimate {s.saddle_probability_estimate:.4f} >= 0.24", {
        "estimate >= 0.24": s.saddle_probability_estimate >= 0.24,
        "upper strip non-empty": bool(upper.any()),
        "every y0 >= 30 ends at the saddle": bool(np.all(s.outcome[upper] == SADDLE)),
    })


def test_criterion_04_degenerate_detector(ex0, ex1):
    r1 = scan_box(ex1, 0.5, [[-1.0, 1.0], [0.0, 40.0]], 256, 1e-6)
    r0 = scan_box(ex0, 0.1, None, 256, 1e-6)
    r0_fine = scan_box(ex0, 0.1, None, 512, 1e-6)
    _check(4, (f"degenerate fraction ex1 {r1.degenerate_fraction:.5f}, "
               f"ex0 {r0.degenerate_fraction:g} -> {r0_fine.degenerate_fraction:g}"), {
        "example1 fraction in [0.24, 0.30]": 0.24 <= r1.degenerate_fraction <= 0.30,
        "example0 fraction <= 1/256": r0.degenerate_fraction <= 1 / 256,
        # both are exactly zero here, so refinement can only hold steady
        "example0 fraction non-increasing at 512": r0_fine.degenerate_fraction <= r0.degenerate_fraction,
    })


def test_criterion_05_lipschitz_estimates(ex0, ex2):
    r0 = scan_box(ex0, 0.1, grid_shape=256)
    r2 = scan_box(ex2, 0.5, grid_shape=256)
    _check(5, (f"L(ex0)={r0.lipschitz_estimate:.4f}, L(ex2)={r2.lipschitz_estimate:.4f}, "
               f"L+(ex2)={r2.positive_lipschitz_estimate:.4f}"), {
        "example0 L in [9.9, 10.0]": 9.9 <= r0.lipschitz_estimate <= 10.0,
        "example2 L in [3.9, 4.01]": 3.9 <= r2.lipschitz_estimate <= 4.01,
        "example2 L+ in [1.99, 2.01]": 1.99 <= r2.positive_lipschitz_estimate <= 2.01,
    })


def test_criterion_06_example2_positive_lipschitz(ex2):
    cfg = ExperimentConfig(ex2, FixedSchedule(0.5), init_box=[[-4.0, 4.0], [-2.0, 2.0]], n_samples=10_000, seed=42)
    s = run_experiment(cfg)
    frac = _local_min_fraction(s, [[EXAMPLE2_MIN, 0.0], [-EXAMPLE2_MIN, 0.0]], 1e-3)
    _check(6, f"example2 Fixed(0.5): no saddle hits, local-min fraction {frac:.4f}", {
        "saddle count 0": s.total("ToStrictSaddle") == 0,
        ">= 99% at +-(3.826445, 0)": frac >= 0.99,
    })


def test_criterion_07_quadratic_sharpness(quad13):
    cfg = ExperimentConfig(quad13, FixedSchedule(0.6), n_samples=10_000, seed=42)
    conv = run_experiment(cfg)
    div = run_experiment(ExperimentConfig(quad13, FixedSchedule(0.7), n_samples=10_000, seed=42))
    _check(7, "quadratic diag(1,3): alpha 0.6 converges, alpha 0.7 diverges", {
        "alpha=0.6 all converge": conv.counts["ToLocalMin"] == {"0": 10_000},
        "alpha=0.6 within 1e-6 of origin": bool(np.all(np.linalg.norm(conv.final_points, axis=1) <= 1e-6)),
        "alpha=0.7 all diverge": div.counts["Diverged"] == 10_000,
        "deterministic": run_experiment(cfg).to_dict() == conv.to_dict(),
    })


def test_criterion_08_schedules(ex0):
    stair = StaircaseSchedule(((50, 0.15), (math.inf, 0.1)))
    contr = ContractionSchedule(0.19, 0.1, 0.5)
    s_stair = run_experiment(ExperimentConfig(ex0, stair, n_samples=5000, seed=42))
    s_contr = run_experiment(ExperimentConfig(ex0, contr, n_samples=5000, seed=42))

    # alpha sequence along recorded trajectories from the same starts;
    # one ulp of 0.1 absorbs rounding, since 0.1 itself is not representable
    worst = -np.inf
    for x0 in s_contr.x0[:: 50]:
        traj = run(ex0, x0, contr)
        excess = np.abs(traj.alphas - 0.1) - 0.5 ** traj.record_iters * 0.09
        worst = max(worst, float(excess.max()))
    _check(8, f"schedules on example0: no saddle hits, contraction excess {worst:.2e}", {
        "staircase saddle 0": s_stair.total("ToStrictSaddle") == 0,
        "contraction saddle 0": s_contr.total("ToStrictSaddle") == 0,
        "contraction bound holds": worst <= np.spacing(0.1),
    })


def test_criterion_09_derivative_oracles(tmp_path, capsys):
    spec = tmp_path / "quadratic.json"
    spec.write_text(json.dumps({"A": [[2.0, 0.5], [0.5, 1.0]], "b": [1.0, -1.0]}))
    checks = {}
    for name in ("example0", "example1", "example2:a=4,b=1", f"quadratic:{spec}"):
        code = main(["validate", "--objective", name, "--n-points", "100"])
        report = json.loads(capsys.readouterr().out)
        label = name.split(":")[0]
        checks[f"{label} exit 0"] = code == 0
        checks[f"{label} passed"] = report["passed"] is True
    _check(9, "validate passes for example0/1/2 and a quadratic at 100 points", checks)


def test_criterion_10_linearization(ex0):
    lin = linearize(ex0, [0.0, 0.0], 0.1)
    rep = classify(ex0, [0.0, 0.0])
    _check(10, "example0 at the origin: Dg eigenvalues {0.9, 1.1}, StrictSaddle", {
        "Dg eigenvalues exact": lin.dg_eigenvalues.tolist() == [0.9, 1.1],
        "dim_unstable 1": lin.dim_unstable == 1,
        "StrictSaddle": rep.classification == Classification.STRICT_SADDLE,
        "Hessian eigenvalues {-1, 1}": rep.hess_eigenvalues.tolist() == [-1.0, 1.0],
    })
