import math

import numpy as np
import pytest

from qaesim.adaptive import (
    AdaptiveConfig,
    PhaseUnidentifiableError,
    TrainedBasis,
    build_b,
    classify_counts,
    estimate_phase,
    exact_basis_circuits,
    imperfect_basis_circuits,
    run_first_step,
    run_four_param,
    run_second_step,
    run_two_step_adaptive,
    sample_biased_counts,
)
from qaesim.estimator import GridAxis, ParamGrid
from qaesim.metrology import ccrb_theta_comp
from qaesim.models import (
    biased_probs,
    opt_basis_probs,
    phase_probs,
    theta_p_bias,
    theta_p_bias_linearized,
    theta_phi_bias,
)
from qaesim.oracle import GroverSchedule, build_a_sin, prepare_pure_state
from qaesim.statevector import PureState, make_rng
from qaesim.vqc import apply_bprime, fidelity_diagnostics


def test_shot_split_round_half_up():
    cfg = AdaptiveConfig(n_shot=10_000)
    assert cfg.first_step_shots == 100
    assert cfg.second_step_shots == 9_900
    assert cfg.phase_shots == 100
    cfg = AdaptiveConfig(n_shot=2_500, n_phi_shot=777)
    assert cfg.first_step_shots == 50
    assert cfg.phase_shots == 777
    # 612 -> sqrt = 24.74 -> rounds to 25
    assert AdaptiveConfig(n_shot=612).first_step_shots == 25


def test_exact_basis_circuits_solve_register():
    """C_i maps the conditional branch state to |0..0>."""
    oracle = build_a_sin(3, 0.25)
    c0, c1 = exact_basis_circuits(oracle)
    f0, f1 = fidelity_diagnostics(c0, c1, oracle)
    assert abs(f0) == pytest.approx(1.0, abs=1e-12)
    assert abs(f1) == pytest.approx(1.0, abs=1e-12)


def test_imperfect_basis_circuits_hit_target_overlaps():
    oracle = build_a_sin(3, 0.25)
    c0, c1 = imperfect_basis_circuits(oracle, 0.942, 0.880, phi_err=0.1)
    f0, f1 = fidelity_diagnostics(c0, c1, oracle)
    assert abs(f0) == pytest.approx(0.942, abs=1e-12)
    assert abs(f1) == pytest.approx(0.880, abs=1e-12)
    # injected relative phase shows up on the C1 output
    assert np.angle(f1) == pytest.approx(0.1, abs=1e-12)
    # circuits stay unitary
    rng = make_rng(41)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    state = PureState(3, amps.astype(np.complex128))
    c1(state)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_first_step_consistency_limit():
    """Huge shots, p=1: the rough estimate lands within grid resolution."""
    oracle = build_a_sin(3, 0.25)
    cfg = AdaptiveConfig(n_shot=10_000_000, m_levels=3, seed=2, basis_mode="exact")
    schedule = GroverSchedule.eis(3)
    first = run_first_step(oracle, 1.0, schedule, cfg)
    assert first.theta_hat1 == pytest.approx(oracle.theta_true, abs=2e-3)


def test_first_step_rmse_near_classical_bound():
    """50 trials at the reference configuration: RMSE within 3x the classical
    bound evaluated at the first-step shot count."""
    oracle = build_a_sin(3, 0.25)
    schedule = GroverSchedule.eis(7)
    errs = []
    for t in range(50):
        cfg = AdaptiveConfig(n_shot=10_000, m_levels=7, seed=1000 + t, basis_mode="exact")
        first = run_first_step(oracle, 0.95, schedule, cfg)
        errs.append(first.theta_hat1 - oracle.theta_true)
    rmse = float(np.sqrt(np.mean(np.square(errs))))
    bound = math.sqrt(ccrb_theta_comp(schedule, oracle.theta_true, 0.95, 100))
    assert rmse <= 3.0 * bound


def test_phase_probability_special_values():
    prx0, prx1, pry0, pry1 = phase_probs(0.0, math.pi / 4)
    assert prx0 == pytest.approx(1.0)
    assert pry0 == pytest.approx(0.5)
    prx0, _, pry0, _ = phase_probs(math.pi / 2, 0.3)
    assert prx0 == pytest.approx(0.5)
    assert pry0 == pytest.approx((1.0 + math.sin(0.6)) / 2.0)


def test_estimate_phase_recovers_injected_phase():
    oracle = build_a_sin(3, 0.25)
    phi_true = 0.7
    c0, c1 = imperfect_basis_circuits(oracle, 1.0, 1.0, phi_err=phi_true)
    phi_hat = estimate_phase(oracle, c0, c1, oracle.theta_true, 100_000, seed=5)
    assert phi_hat == pytest.approx(phi_true, abs=0.02)


def test_estimate_phase_unidentifiable():
    oracle = build_a_sin(3, 0.25)
    c0, c1 = exact_basis_circuits(oracle)
    with pytest.raises(PhaseUnidentifiableError):
        estimate_phase(oracle, c0, c1, 1e-5, 100, seed=0)


def test_build_b_maps_top_eigenvector_to_zero():
    """Exact basis, theta_hat1 = theta: the m-step pure state goes to
    cos/sin amplitudes on the two designated outcomes only."""
    oracle = build_a_sin(3, 0.25)
    c0, c1 = exact_basis_circuits(oracle)
    trained = TrainedBasis(c0=c0, c1=c1, phi_hat=0.0, theta_hat1=oracle.theta_true)
    for m in [0, 2, 4]:
        nq = 2 * m + 1
        state = prepare_pure_state(oracle, m)
        build_b(trained, nq)(state)
        probs = state.probabilities()
        # everything lands on |0..0>|0> and |0..0>|1>
        assert probs[0] + probs[1 << oracle.n] == pytest.approx(1.0, abs=1e-10)
        # at theta_hat1 = theta the split is half/half
        assert probs[0] == pytest.approx(0.5, abs=1e-10)


def test_build_b_is_unitary():
    oracle = build_a_sin(2, 0.5)
    c0, c1 = exact_basis_circuits(oracle)
    trained = TrainedBasis(c0=c0, c1=c1, phi_hat=0.3, theta_hat1=0.2)
    rng = make_rng(42)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    state = PureState(3, amps.astype(np.complex128))
    build_b(trained, 5)(state)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_classify_counts():
    counts = np.zeros(16)
    counts[0] = 7
    counts[8] = 5
    counts[3] = 2
    counts[12] = 1
    out = classify_counts(counts, 3)
    assert out == {"lam0": 7, "lam1": 5, "laml": 3}


def test_second_step_outcome_frequencies():
    """Sampled rotated-basis frequencies match the model within 5 sigma."""
    oracle = build_a_sin(3, 0.25)
    c0, c1 = exact_basis_circuits(oracle)
    theta_hat1 = oracle.theta_true + 0.004
    trained = TrainedBasis(c0=c0, c1=c1, phi_hat=0.0, theta_hat1=theta_hat1)
    cfg = AdaptiveConfig(n_shot=100, m_levels=0)
    p, m, shots = 0.95, 4, 100_000
    _, records = run_second_step(
        oracle, p, GroverSchedule((m,)), trained, shots, seed=77, config=cfg
    )
    pr = opt_basis_probs(oracle.theta_true, p, m, oracle.dim, theta_hat1)
    for key, prob in zip(("lam0", "lam1", "laml"), pr):
        sigma = math.sqrt(shots * prob * (1.0 - prob))
        assert abs(records[0].counts[key] - shots * prob) < 5.0 * sigma + 1.0


def test_second_step_pure_case_two_outcomes():
    oracle = build_a_sin(3, 0.25)
    c0, c1 = exact_basis_circuits(oracle)
    trained = TrainedBasis(c0=c0, c1=c1, phi_hat=0.0, theta_hat1=oracle.theta_true)
    cfg = AdaptiveConfig(n_shot=100, m_levels=0)
    _, records = run_second_step(
        oracle, 1.0, GroverSchedule((2,)), trained, 10_000, seed=3, config=cfg
    )
    assert records[0].counts["laml"] == 0


def test_pipeline_query_accounting_and_determinism():
    oracle = build_a_sin(2, 0.5)
    cfg = AdaptiveConfig(n_shot=400, m_levels=3, seed=11, basis_mode="exact")
    res = run_two_step_adaptive(oracle, 0.95, cfg)
    assert res.n_query == 400 * GroverSchedule.eis(3).n_a
    again = run_two_step_adaptive(oracle, 0.95, cfg)
    assert res.theta_hat2 == again.theta_hat2
    assert res.p_hat2 == again.p_hat2
    assert res.theta_hat1 == again.theta_hat1
    assert res.fidelities == again.fidelities


def test_pipeline_degenerate_schedule_flags_p():
    """Schedule {0} carries no noise information; the p axis is flat."""
    oracle = build_a_sin(2, 0.5)
    cfg = AdaptiveConfig(n_shot=400, m_levels=0, seed=1, basis_mode="exact")
    res = run_two_step_adaptive(oracle, 0.95, cfg)
    assert "p" in res.flat_axes


def test_pipeline_second_step_improves():
    """Median error shrinks from the rough pass to the refined pass."""
    oracle = build_a_sin(3, 0.25)
    e1, e2 = [], []
    for t in range(30):
        cfg = AdaptiveConfig(n_shot=2_500, m_levels=5, seed=500 + t, basis_mode="exact")
        res = run_two_step_adaptive(oracle, 0.95, cfg)
        e1.append(abs(res.theta_hat1 - oracle.theta_true))
        e2.append(abs(res.theta_hat2 - oracle.theta_true))
    assert np.median(e2) < np.median(e1)


def test_pipeline_trained_basis_mode_runs():
    """Shot-frugal smoke run of the trained path, phase estimation included."""
    oracle = build_a_sin(2, 0.5)
    cfg = AdaptiveConfig(
        n_shot=400,
        m_levels=1,
        n_max_itr=3,
        seed=6,
        basis_mode="train",
        ansatz_layers=2,
    )
    res = run_two_step_adaptive(oracle, 0.95, cfg)
    assert 0.0 <= res.theta_hat2 <= math.pi / 2
    assert 0.0 <= res.phi_hat < 2.0 * math.pi
    assert len(res.fidelities) == 2


def test_phase_mode_override():
    oracle = build_a_sin(2, 0.5)
    cfg = AdaptiveConfig(n_shot=400, m_levels=1, seed=6, basis_mode="exact", phase_mode="estimate")
    res = run_two_step_adaptive(oracle, 0.95, cfg)
    assert res.phi_hat != 0.0  # sampled, not the known-zero shortcut
    with pytest.raises(ValueError):
        bad = AdaptiveConfig(n_shot=400, m_levels=1, phase_mode="sideways")
        run_two_step_adaptive(oracle, 0.95, bad)


def test_theta_p_bias_against_root_oracle():
    """tan(N(theta + theta_p)) = r tan(N theta) defines theta_p; the arctan
    closed form must solve it."""
    nq = 3
    for r, theta in [(0.934, 0.2), (1.1, 0.35), (0.8, 0.1)]:
        direct = (math.atan(r * math.tan(nq * theta)) - nq * theta) / nq
        val = float(theta_p_bias(1.0, r, theta, nq))
        assert val == pytest.approx(direct, abs=1e-12)
        lin = float(theta_p_bias_linearized(1.0, r, theta, nq))
        assert lin == pytest.approx(val, abs=0.3 * abs(val) + 1e-6)


def test_theta_p_bias_zeros():
    assert float(theta_p_bias(0.9, 0.9, 0.37, 5)) == pytest.approx(0.0, abs=1e-15)
    theta = math.pi / 2 / 3  # N_q theta = pi/2
    assert float(theta_p_bias_linearized(0.9, 0.8, theta, 3)) == pytest.approx(0.0, abs=1e-12)


def test_biased_probs_sum_to_one():
    for m in [1, 2, 4]:
        pr = biased_probs(0.3, 0.9, m, 16, 0.28, 0.9, 0.85, 0.1)
        assert sum(float(x) for x in pr) == pytest.approx(1.0, abs=1e-12)
        assert all(float(x) >= 0.0 for x in pr)


def test_biased_probs_against_injected_circuits():
    """One spot check of the quadratic model against an exact simulation."""
    oracle = build_a_sin(3, 0.25)
    p, m, pc0, pc1, phi_tilde = 0.95, 2, 0.942, 0.880, 0.1
    c0, c1 = imperfect_basis_circuits(oracle, pc0, pc1, phi_err=phi_tilde)
    trained = TrainedBasis(c0=c0, c1=c1, phi_hat=0.0, theta_hat1=oracle.theta_true)
    state = prepare_pure_state(oracle, m)
    build_b(trained, 2 * m + 1)(state)
    pm = p**m
    probs = pm * state.probabilities() + (1.0 - pm) / oracle.dim
    exact = np.array(
        [probs[0], probs[1 << oracle.n], 1.0 - probs[0] - probs[1 << oracle.n]]
    )
    model = np.array(
        biased_probs(oracle.theta_true, p, m, oracle.dim, oracle.theta_true, pc0, pc1, phi_tilde)
    )
    assert np.max(np.abs(exact - model)) < 5e-3


def test_theta_phi_bias_properties():
    assert float(theta_phi_bias(0.0, 0.3, 0.28, 0.001, 5)) == 0.0
    # cos(2 N theta_hat1) = 0 kills the bias
    theta_hat1 = math.pi / 4 / 5
    assert float(theta_phi_bias(0.2, 0.3, theta_hat1, 0.0, 5)) == pytest.approx(0.0, abs=1e-15)
    # quadratic scaling in the residual phase
    b1 = float(theta_phi_bias(0.05, 0.3, 0.29, 0.002, 5))
    b2 = float(theta_phi_bias(0.10, 0.3, 0.29, 0.002, 5))
    assert b2 == pytest.approx(4.0 * b1, rel=1e-9)
    with pytest.raises(ValueError):
        theta_phi_bias(0.1, 0.3, 0.3 - math.pi / 4 / 5, 0.0, 5)
    approx = float(theta_phi_bias(0.1, 0.3, 0.29, 0.002, 5, approximate_root=True))
    assert approx != 0.0


def test_four_param_nesting_pins_overlaps():
    """Data generated at pc = 1 pushes both overlap estimates to the top of
    their grid range."""
    oracle = build_a_sin(3, 0.25)
    schedule = GroverSchedule.eis(4)
    grid = ParamGrid(
        axes={
            "theta": GridAxis(0.0, math.pi / 2, 41),
            "p": GridAxis(0.5, 1.0, 21),
            "pc0": GridAxis(0.7, 1.0, 7),
            "pc1": GridAxis(0.7, 1.0, 7),
        },
        refinement_levels=1,
    )
    res = run_four_param(oracle, 0.95, 1.0, 1.0, schedule, 50_000, seed=13, grid=grid)
    assert res.pc0_hat == pytest.approx(1.0, abs=1e-6)
    assert res.pc1_hat == pytest.approx(1.0, abs=1e-6)
    assert res.theta_hat == pytest.approx(oracle.theta_true, abs=5e-3)


def test_sample_biased_counts_bookkeeping():
    oracle = build_a_sin(2, 0.5)
    schedule = GroverSchedule((1, 2))
    records = sample_biased_counts(oracle, 0.9, 0.9, 0.85, schedule, 0.3, 500, seed=21)
    assert [r.m_k for r in records] == [1, 2]
    assert all(r.shots == 500 for r in records)
    assert all(sum(r.counts.values()) == 500 for r in records)
