"""Seeded experiment drivers behind the command-line runner.

Each driver takes a validated parameter dict plus a base seed and returns a
list of row dicts with a fixed column order. Every row carries the derived
seed that produced it, so any single row can be regenerated in isolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .adaptive import (
    AdaptiveConfig,
    run_four_param,
    run_two_step_adaptive,
    exact_basis_circuits,
    estimate_phase,
)
from .estimator import (
    DEFAULT_P_AXIS,
    DEFAULT_THETA_AXIS,
    CountRecord,
    EstimationFailedError,
    ParamGrid,
    loglik_comp,
    mle_search,
)
from .metrology import ccrb_theta_comp, qcrb_theta, qfim_closed
from .oracle import GroverSchedule, NoisyStateModel, build_a_sin, sample_noisy_outcomes
from .statevector import derive_seed
from .vqc import (
    Ansatz,
    TrainConfig,
    ancilla_zero_count,
    fidelity_diagnostics,
    gradient_variance_experiment,
    train,
    ansatz_circuit,
)

COLUMNS = {
    "qcrb-sweep": [
        "m_k",
        "n_q",
        "f_theta_theta",
        "f_pp",
        "f_theta_p",
        "qcrb_cum",
        "ccrb_comp_cum",
        "seed",
    ],
    "mlae": ["b_max", "N_query", "rmse_comp", "ccrb_noiseless_eis", "ccrb_noisy", "seed"],
    "adaptive": [
        "b_max",
        "N_query",
        "rmse_comp",
        "rmse_opt",
        "ccrb_noiseless_m0",
        "ccrb_noiseless_eis",
        "ccrb_noisy",
        "qcrb_noisy",
        "seed",
    ],
    "four-param": [
        "trial",
        "theta_hat",
        "p_hat",
        "pc0_hat",
        "pc1_hat",
        "theta_err",
        "seed",
    ],
    "vqc-train": ["iteration", "cost", "pc0", "pc1", "seed"],
    "barren": ["n", "N_L", "grad_variance", "seed"],
    "phase-mse": ["N_phi_shot", "mse", "seed"],
}


def _parallel_map(fn, items, threads: int):
    """Order-preserving map, optionally over a thread pool."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _rmse(errors) -> float:
    return float(np.sqrt(np.mean(np.square(errors))))


def _comp_mlae_trial(oracle, p, schedule, n_shot, trial_seed, noisy_grid=True):
    """One computational-basis maximum-likelihood trial; returns theta error."""
    records = []
    for k, m in enumerate(schedule.m_list):
        counts = sample_noisy_outcomes(oracle, p, m, n_shot, derive_seed(trial_seed, k))
        h0 = ancilla_zero_count(counts, oracle.n)
        records.append(CountRecord(m_k=m, counts={"0": h0, "1": n_shot - h0}, shots=n_shot))
    if noisy_grid and p < 1.0:
        grid = ParamGrid(axes={"theta": DEFAULT_THETA_AXIS, "p": DEFAULT_P_AXIS})
        res = mle_search(lambda theta, p: loglik_comp(theta, p, records), grid)
    else:
        grid = ParamGrid(axes={"theta": DEFAULT_THETA_AXIS})
        res = mle_search(lambda theta: loglik_comp(theta, p, records), grid)
    return res.theta_hat - oracle.theta_true


def run_qcrb_sweep(params: dict, seed: int, threads: int = 1) -> list[dict]:
    oracle = build_a_sin(params["n"], params["b_max"])
    p = params["p"]
    n_shot = params["n_shot"]
    rows = []
    powers = [0] + [2**j for j in range(params["m_levels"])]
    for j, m in enumerate(powers):
        model = NoisyStateModel(theta=oracle.theta_true, p=p, m_k=m, n=oracle.n)
        q = qfim_closed(model)
        prefix = GroverSchedule(tuple(powers[: j + 1]))
        rows.append(
            {
                "m_k": m,
                "n_q": 2 * m + 1,
                "f_theta_theta": q.f_theta_theta,
                "f_pp": q.f_pp,
                "f_theta_p": q.f_theta_p,
                "qcrb_cum": math.sqrt(qcrb_theta(prefix, oracle.n, p, n_shot)),
                "ccrb_comp_cum": math.sqrt(
                    ccrb_theta_comp(prefix, oracle.theta_true, p, n_shot)
                ),
                "seed": seed,
            }
        )
    return rows


def run_mlae(params: dict, seed: int, threads: int = 1) -> list[dict]:
    oracle = build_a_sin(params["n"], params["b_max"])
    p = params["p"]
    n_shot = params["n_shot"]
    n_sample = params["n_sample"]
    rows = []
    for j in range(params["m_levels"] + 1):
        schedule = GroverSchedule.eis(j)
        row_seed = derive_seed(seed, j)

        def trial(t):
            return _comp_mlae_trial(oracle, p, schedule, n_shot, derive_seed(row_seed, t))

        errs = _parallel_map(trial, range(n_sample), threads)
        sum_sq = sum((2 * m + 1) ** 2 for m in schedule.m_list)
        rows.append(
            {
                "b_max": params["b_max"],
                "N_query": schedule.n_query(n_shot),
                "rmse_comp": _rmse(errs) if errs else float("nan"),
                "ccrb_noiseless_eis": 1.0 / (2.0 * math.sqrt(n_shot * sum_sq)),
                "ccrb_noisy": math.sqrt(ccrb_theta_comp(schedule, oracle.theta_true, p, n_shot)),
                "seed": row_seed,
            }
        )
    return rows


def run_adaptive(params: dict, seed: int, threads: int = 1) -> list[dict]:
    """Error-versus-queries curves for the two-step pipeline and its bounds.

    One row per schedule prefix of the exponential sequence, matching the
    layout of the error plots: sampled RMSE for the computational-basis
    estimator and the adaptive rotated-basis estimator, next to the four
    theoretical bound curves evaluated at the true angle.
    """
    oracle = build_a_sin(params["n"], params["b_max"])
    p = params["p"]
    n_shot = params["n_shot"]
    n_sample = params["n_sample"]
    rows = []
    for j in range(params["m_levels"] + 1):
        schedule = GroverSchedule.eis(j)
        row_seed = derive_seed(seed, j)

        def comp_trial(t):
            try:
                return _comp_mlae_trial(
                    oracle, p, schedule, n_shot, derive_seed(row_seed, 0, t)
                )
            except EstimationFailedError:
                return None

        def opt_trial(t):
            cfg = AdaptiveConfig(
                n_shot=n_shot,
                m_levels=j,
                n_phi_shot=params["n_phi_shot"],
                seed=derive_seed(row_seed, 1, t),
                basis_mode=params["basis_mode"],
                ansatz_layers=params["ansatz_layers"],
                n_max_itr=params["n_max_itr"],
                learning_rate=params["learning_rate"],
            )
            try:
                return run_two_step_adaptive(oracle, p, cfg).theta_hat2 - oracle.theta_true
            except EstimationFailedError:
                return None

        comp_errs = [e for e in _parallel_map(comp_trial, range(n_sample), threads) if e is not None]
        opt_errs = [e for e in _parallel_map(opt_trial, range(n_sample), threads) if e is not None]
        sum_sq = sum((2 * m + 1) ** 2 for m in schedule.m_list)
        n_query = schedule.n_query(n_shot)
        rows.append(
            {
                "b_max": params["b_max"],
                "N_query": n_query,
                "rmse_comp": _rmse(comp_errs) if comp_errs else float("nan"),
                "rmse_opt": _rmse(opt_errs) if opt_errs else float("nan"),
                "ccrb_noiseless_m0": 1.0 / (2.0 * math.sqrt(n_query)),
                "ccrb_noiseless_eis": 1.0 / (2.0 * math.sqrt(n_shot * sum_sq)),
                "ccrb_noisy": math.sqrt(ccrb_theta_comp(schedule, oracle.theta_true, p, n_shot)),
                "qcrb_noisy": math.sqrt(qcrb_theta(schedule, oracle.n, p, n_shot)),
                "seed": row_seed,
            }
        )
    return rows


def run_four_param_experiment(params: dict, seed: int, threads: int = 1) -> list[dict]:
    oracle = build_a_sin(params["n"], params["b_max"])
    schedule = GroverSchedule.eis(params["m_levels"])

    def trial(t):
        row_seed = derive_seed(seed, t)
        res = run_four_param(
            oracle,
            params["p"],
            params["pc0"],
            params["pc1"],
            schedule,
            params["n_shot"],
            seed=row_seed,
        )
        return {
            "trial": t,
            "theta_hat": res.theta_hat,
            "p_hat": res.p_hat,
            "pc0_hat": res.pc0_hat,
            "pc1_hat": res.pc1_hat,
            "theta_err": res.theta_hat - oracle.theta_true,
            "seed": row_seed,
        }

    return _parallel_map(trial, range(params["n_sample"]), threads)


def run_vqc_train(params: dict, seed: int, threads: int = 1) -> list[dict]:
    oracle = build_a_sin(params["n"], params["b_max"])
    schedule = GroverSchedule.eis(params["m_levels"])
    ansatz = Ansatz(n=params["n"], layers=params["ansatz_layers"], use_rz=False)
    config = TrainConfig(
        learning_rate=params["learning_rate"],
        n_max_itr=params["n_max_itr"],
        seed=seed,
    )
    result = train(oracle, schedule, ansatz, config, p=params["p"])
    c0 = ansatz_circuit(ansatz, result.params0)
    c1 = ansatz_circuit(ansatz, result.params1)
    f0, f1 = fidelity_diagnostics(c0, c1, oracle)
    return [
        {"iteration": i, "cost": c, "pc0": abs(f0), "pc1": abs(f1), "seed": seed}
        for i, c in enumerate(result.cost_trace)
    ]


def run_barren(params: dict, seed: int, threads: int = 1) -> list[dict]:
    raw = gradient_variance_experiment(
        params["n_list"],
        params["nl_list"],
        params["n_sample"],
        seed,
        b_max=params["b_max"],
    )
    return [
        {
            "n": r["n"],
            "N_L": r["n_layers"],
            "grad_variance": r["grad_variance"],
            "seed": derive_seed(seed, r["n"], r["n_layers"]),
        }
        for r in raw
    ]


def run_phase_mse(params: dict, seed: int, threads: int = 1) -> list[dict]:
    """Phase-estimate mean squared error against the shot budget.

    Exact basis circuits, so the true relative phase is zero; errors are
    wrapped to (-pi, pi] before squaring.
    """
    oracle = build_a_sin(params["n"], params["b_max"])
    c0, c1 = exact_basis_circuits(oracle)
    n_sample = params["n_sample"]
    rows = []
    for j, n_phi in enumerate(params["n_phi_list"]):
        row_seed = derive_seed(seed, j)

        def trial(t):
            phi = estimate_phase(
                oracle, c0, c1, oracle.theta_true, n_phi, derive_seed(row_seed, t)
            )
            return (phi + math.pi) % (2.0 * math.pi) - math.pi

        errs = _parallel_map(trial, range(n_sample), threads)
        rows.append(
            {
                "N_phi_shot": n_phi,
                "mse": float(np.mean(np.square(errs))) if errs else float("nan"),
                "seed": row_seed,
            }
        )
    return rows


DRIVERS = {
    "qcrb-sweep": run_qcrb_sweep,
    "mlae": run_mlae,
    "adaptive": run_adaptive,
    "four-param": run_four_param_experiment,
    "vqc-train": run_vqc_train,
    "barren": run_barren,
    "phase-mse": run_phase_mse,
}
