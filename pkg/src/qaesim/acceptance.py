"""Self-contained verification suite with stored tolerances.

Each criterion is a function taking its tolerance mapping and a base seed
and returning a CriterionResult. The command-line `verify` subcommand and
the test suite both run these.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .adaptive import (
    FOUR_PARAM_GRID,
    AdaptiveConfig,
    TrainedBasis,
    build_b,
    estimate_phase,
    exact_basis_circuits,
    imperfect_basis_circuits,
    run_four_param,
    run_two_step_adaptive,
)
from .config import format_float, write_csv
from .experiments import COLUMNS, _comp_mlae_trial, run_adaptive
from .metrology import ccrb_theta_comp, classical_fisher, qcrb_theta, qfim_closed, qfim_numeric
from .models import biased_probs, opt_basis_probs, opt_basis_probs_dtheta
from .oracle import (
    GroverSchedule,
    NoisyStateModel,
    build_a_sin,
    prepare_pure_state,
)
from .statevector import derive_seed, make_rng
from .vqc import gradient_variance_experiment


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    message: str = ""
    seconds: float = 0.0

    def report_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        vals = ", ".join(f"{k}={format_float(v)}" for k, v in self.measured.items())
        tail = f" ({self.message})" if self.message else ""
        return f"[{status}] criterion {self.number} {self.name}: {vals}{tail}"


def _require(tol: dict, *keys):
    missing = [k for k in keys if k not in tol]
    if missing:
        raise KeyError(f"tolerance file missing key(s) {missing}")
    vals = []
    for k in keys:
        v = tol[k]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
            raise ValueError(f"tolerance {k!r} must be a positive number, got {v!r}")
        vals.append(float(v))
    return vals


def _random_points(seed: int, count: int = 200):
    rng = make_rng(seed)
    pts = []
    for _ in range(count):
        theta = rng.uniform(0.05, 1.5)
        p = rng.uniform(0.8, 0.99)
        m = int(rng.choice([1, 2, 4, 8, 16]))
        n = int(rng.choice([2, 3, 4]))
        pts.append(NoisyStateModel(theta=theta, p=p, m_k=m, n=n))
    return pts


def criterion_1(tol: dict, seed: int) -> CriterionResult:
    """Information matrix is diagonal and matches the closed form."""
    off_tol, rel_tol = _require(tol, "off_diagonal_abs", "diagonal_rel")
    worst_off = 0.0
    worst_rel = 0.0
    for model in _random_points(derive_seed(seed, 1)):
        closed = qfim_closed(model)
        numeric = qfim_numeric(model)
        worst_off = max(worst_off, abs(numeric.f_theta_p))
        worst_rel = max(
            worst_rel,
            abs(numeric.f_theta_theta - closed.f_theta_theta) / closed.f_theta_theta,
            abs(numeric.f_pp - closed.f_pp) / closed.f_pp,
        )
    return CriterionResult(
        number=1,
        name="information matrix diagonal and closed-form",
        passed=worst_off < off_tol and worst_rel < rel_tol,
        measured={"max_off_diagonal": worst_off, "max_diagonal_rel_err": worst_rel},
    )


def criterion_2(tol: dict, seed: int) -> CriterionResult:
    """Rotated-basis Fisher information attains the quantum bound at the truth."""
    (rel_tol,) = _require(tol, "rel")
    worst = 0.0
    for model in _random_points(derive_seed(seed, 2)):
        target = qfim_closed(model).f_theta_theta
        cfi = classical_fisher(
            lambda th, p: opt_basis_probs(th, p, model.m_k, model.d, model.theta),
            (model.theta, model.p),
            "theta",
            dprobs_fn=lambda th, p: opt_basis_probs_dtheta(
                th, p, model.m_k, model.d, model.theta
            ),
        )
        worst = max(worst, abs(cfi - target) / target)
    return CriterionResult(
        number=2,
        name="bound attainability at the rotated basis",
        passed=worst < rel_tol,
        measured={"max_rel_err": worst},
    )


def criterion_3(tol: dict, seed: int) -> CriterionResult:
    """Noiseless likelihood estimation reaches the shot-noise-limited bound."""
    lo, hi = _require(tol, "ratio_low", "ratio_high")
    oracle = build_a_sin(3, 0.25)
    schedule = GroverSchedule.eis(5)
    n_shot, trials = 100, 200
    base = derive_seed(seed, 3)
    errs = [
        _comp_mlae_trial(oracle, 1.0, schedule, n_shot, derive_seed(base, t))
        for t in range(trials)
    ]
    rmse = float(np.sqrt(np.mean(np.square(errs))))
    crb = 1.0 / (2.0 * math.sqrt(n_shot * sum((2 * m + 1) ** 2 for m in schedule.m_list)))
    ratio = rmse / crb
    return CriterionResult(
        number=3,
        name="noiseless estimation scaling",
        passed=lo <= ratio <= hi,
        measured={"rmse": rmse, "crb": crb, "ratio": ratio},
    )


def criterion_4(tol: dict, seed: int) -> CriterionResult:
    """Adaptive basis nearly attains the quantum bound; the computational
    basis stays at its (larger) classical bound."""
    opt_hi, comp_lo = _require(tol, "opt_ratio_max", "comp_ratio_min")
    oracle = build_a_sin(3, 0.25)
    p, n_shot, trials = 0.95, 2500, 100
    schedule = GroverSchedule.eis(5)
    base = derive_seed(seed, 4)
    comp_errs = []
    opt_errs = []
    for t in range(trials):
        comp_errs.append(
            _comp_mlae_trial(oracle, p, schedule, n_shot, derive_seed(base, 0, t))
        )
        cfg = AdaptiveConfig(
            n_shot=n_shot, m_levels=5, seed=derive_seed(base, 1, t), basis_mode="exact"
        )
        res = run_two_step_adaptive(oracle, p, cfg)
        opt_errs.append(res.theta_hat2 - oracle.theta_true)
    rmse_comp = float(np.sqrt(np.mean(np.square(comp_errs))))
    rmse_opt = float(np.sqrt(np.mean(np.square(opt_errs))))
    qcrb = math.sqrt(qcrb_theta(schedule, 3, p, n_shot))
    ccrb = math.sqrt(ccrb_theta_comp(schedule, oracle.theta_true, p, n_shot))
    opt_ratio = rmse_opt / qcrb
    comp_ratio = rmse_comp / ccrb
    return CriterionResult(
        number=4,
        name="bound sandwich of the two-step pipeline",
        passed=opt_ratio <= opt_hi and comp_ratio >= comp_lo,
        measured={
            "rmse_opt": rmse_opt,
            "qcrb": qcrb,
            "opt_ratio": opt_ratio,
            "rmse_comp": rmse_comp,
            "ccrb": ccrb,
            "comp_ratio": comp_ratio,
        },
    )


def criterion_5(tol: dict, seed: int) -> CriterionResult:
    """Local-cost gradient variance does not collapse exponentially in n."""
    (ratio_min,) = _require(tol, "consecutive_ratio_min")
    rows = gradient_variance_experiment([4, 6, 8], [6], 300, derive_seed(seed, 5))
    variances = [r["grad_variance"] for r in rows]
    ratios = [variances[i + 1] / variances[i] for i in range(len(variances) - 1)]
    return CriterionResult(
        number=5,
        name="gradient variance persistence",
        passed=all(r >= ratio_min for r in ratios),
        measured={
            "var_n4": variances[0],
            "var_n6": variances[1],
            "var_n8": variances[2],
            "min_ratio": min(ratios),
        },
    )


def criterion_6(tol: dict, seed: int) -> CriterionResult:
    """Phase-estimate MSE scales inversely with the shot count."""
    slope_tol = _require(tol, "slope_abs_dev")[0]
    oracle = build_a_sin(3, 2.0 / 3.0)
    c0, c1 = exact_basis_circuits(oracle)
    base = derive_seed(seed, 6)
    shot_counts = [100, 1000, 10_000]
    mses = []
    for j, n_phi in enumerate(shot_counts):
        errs = []
        for t in range(200):
            phi = estimate_phase(
                oracle, c0, c1, oracle.theta_true, n_phi, derive_seed(base, j, t)
            )
            errs.append((phi + math.pi) % (2.0 * math.pi) - math.pi)
        mses.append(float(np.mean(np.square(errs))))
    slope = float(np.polyfit(np.log(shot_counts), np.log(mses), 1)[0])
    return CriterionResult(
        number=6,
        name="phase-estimation shot scaling",
        passed=abs(slope + 1.0) <= slope_tol,
        measured={"slope": slope, "mse_100": mses[0], "mse_10000": mses[2]},
    )


def criterion_7(tol: dict, seed: int) -> CriterionResult:
    """Imperfect-basis probability model tracks the exact injected simulation."""
    (gap_tol,) = _require(tol, "abs_gap")
    oracle = build_a_sin(3, 0.25)
    d = oracle.dim
    p = 0.95
    worst = 0.0
    grid = itertools.product(
        [0.85, 0.92, 1.0], [0.85, 0.95, 1.0], [0.0, 0.05, 0.1], [1, 2, 4]
    )
    for pc0, pc1, phi_tilde, m in grid:
        c0, c1 = imperfect_basis_circuits(oracle, pc0, pc1, phi_err=phi_tilde)
        trained = TrainedBasis(c0=c0, c1=c1, phi_hat=0.0, theta_hat1=oracle.theta_true)
        state = prepare_pure_state(oracle, m)
        build_b(trained, 2 * m + 1)(state)
        pm = p**m
        probs = pm * state.probabilities() + (1.0 - pm) / d
        top = probs[0]
        second = probs[1 << oracle.n]
        exact = np.array([top, second, 1.0 - top - second])
        model = np.array(
            biased_probs(oracle.theta_true, p, m, d, oracle.theta_true, pc0, pc1, phi_tilde)
        )
        worst = max(worst, float(np.max(np.abs(exact - model))))
    return CriterionResult(
        number=7,
        name="bias model fidelity",
        passed=worst < gap_tol,
        measured={"max_abs_gap": worst},
    )


def _finest_cell(axis, levels: int) -> float:
    """Grid spacing after all refinement passes (window is +/- 2 cells)."""
    spacing = (axis.upper - axis.lower) / (axis.points - 1)
    for _ in range(levels):
        spacing = 4.0 * spacing / (axis.points - 1)
    return spacing


def criterion_8(tol: dict, seed: int) -> CriterionResult:
    """Joint 4-parameter estimation recovers all parameters and keeps the
    angle error near the 2-parameter quantum bound."""
    cell_mult, rmse_mult = _require(tol, "cell_multiple", "rmse_qcrb_multiple")
    oracle = build_a_sin(3, 0.25)
    schedule = GroverSchedule.eis(7)
    p_true, pc0_true, pc1_true = 0.95, 0.942, 0.880
    shots = 100_000
    base = derive_seed(seed, 8)
    truth = {
        "theta": oracle.theta_true,
        "p": p_true,
        "pc0": pc0_true,
        "pc1": pc1_true,
    }
    cells = {
        name: _finest_cell(axis, FOUR_PARAM_GRID.refinement_levels)
        for name, axis in FOUR_PARAM_GRID.axes.items()
    }
    errs = []
    recovered = True
    worst_cells = 0.0
    for t in range(50):
        res = run_four_param(
            oracle, p_true, pc0_true, pc1_true, schedule, shots, seed=derive_seed(base, t)
        )
        errs.append(res.theta_hat - oracle.theta_true)
        for name in truth:
            ratio = abs(res.params[name] - truth[name]) / cells[name]
            worst_cells = max(worst_cells, ratio)
            if ratio > cell_mult:
                recovered = False
    rmse = float(np.sqrt(np.mean(np.square(errs))))
    qcrb = math.sqrt(qcrb_theta(schedule, 3, p_true, shots))
    return CriterionResult(
        number=8,
        name="joint recovery with basis imperfections",
        passed=recovered and rmse <= rmse_mult * qcrb,
        measured={
            "max_cells_off": worst_cells,
            "theta_rmse": rmse,
            "qcrb": qcrb,
            "rmse_ratio": rmse / qcrb,
        },
    )


def criterion_9(tol: dict, seed: int, tmpdir=None) -> CriterionResult:
    """Same seed, byte-identical CSV output."""
    import tempfile
    from pathlib import Path

    _require(tol, "enabled")
    params = {
        "n": 2,
        "b_max": 0.25,
        "p": 0.95,
        "n_shot": 100,
        "m_levels": 2,
        "n_sample": 3,
        "n_phi_shot": None,
        "basis_mode": "exact",
        "ansatz_layers": 2,
        "n_max_itr": 5,
        "learning_rate": 0.1,
    }
    blobs = []
    with tempfile.TemporaryDirectory(dir=tmpdir) as td:
        for i in range(2):
            rows = run_adaptive(params, derive_seed(seed, 9), threads=1)
            path = Path(td) / f"run{i}.csv"
            write_csv(path, COLUMNS["adaptive"], rows)
            blobs.append(path.read_bytes())
    return CriterionResult(
        number=9,
        name="seeded determinism",
        passed=blobs[0] == blobs[1],
        measured={"bytes": len(blobs[0])},
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}

DEFAULT_TOLERANCES = {
    1: {"off_diagonal_abs": 1e-9, "diagonal_rel": 1e-8},
    2: {"rel": 1e-8},
    3: {"ratio_low": 0.8, "ratio_high": 1.5},
    4: {"opt_ratio_max": 1.5, "comp_ratio_min": 0.9},
    5: {"consecutive_ratio_min": 0.25},
    6: {"slope_abs_dev": 0.2},
    7: {"abs_gap": 5e-3},
    8: {"cell_multiple": 2.0, "rmse_qcrb_multiple": 2.0},
    9: {"enabled": 1},
}


def run_criterion(number: int, tolerances: dict, seed: int = 0) -> CriterionResult:
    fn = CRITERIA[number]
    tol = tolerances.get(number, tolerances.get(str(number)))
    start = time.perf_counter()
    try:
        if tol is None:
            raise KeyError(f"tolerance file has no entry for criterion {number}")
        if not isinstance(tol, dict):
            raise ValueError(f"criterion {number}: tolerances must be a mapping")
        result = fn(tol, seed)
    except (KeyError, ValueError, TypeError) as e:
        result = CriterionResult(
            number=number,
            name=fn.__doc__.strip().split("\n")[0] if fn.__doc__ else "",
            passed=False,
            message=str(e),
        )
    result.seconds = time.perf_counter() - start
    return result


def run_all(tolerances: dict | None = None, seed: int = 0, numbers=None) -> list[CriterionResult]:
    if tolerances is None:
        tolerances = DEFAULT_TOLERANCES
    if numbers is None:
        numbers = sorted(CRITERIA)
    return [run_criterion(k, tolerances, seed) for k in numbers]
