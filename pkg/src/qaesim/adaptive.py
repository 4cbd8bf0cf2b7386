"""The 2-step adaptive estimation pipeline: rough computational-basis pass,
relative-phase estimation, basis composition, and the refined second pass;
plus the imperfect-basis bias models and the 4-parameter variant."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .estimator import (
    DEFAULT_P_AXIS,
    DEFAULT_PC_AXIS,
    DEFAULT_THETA_AXIS,
    CountRecord,
    EstimationResult,
    GridAxis,
    ParamGrid,
    loglik_4param,
    loglik_comp,
    loglik_opt,
    mle_search,
)
from .models import (
    biased_probs,
    phase_probs,
    theta_p_bias,
    theta_p_bias_linearized,
    theta_phi_bias,
)
from .oracle import (
    GroverSchedule,
    SinOracle,
    conditional_substate,
    prepare_pure_state,
    sample_noisy_outcomes,
)
from .statevector import (
    PureState,
    apply_h,
    apply_ry,
    apply_rz,
    apply_sdg,
    derive_seed,
    make_rng,
    sample_counts,
)
from .vqc import (
    Ansatz,
    TrainConfig,
    ancilla_zero_count,
    apply_bprime,
    fidelity_diagnostics,
    matrix_circuit,
    train,
)


class PhaseUnidentifiableError(RuntimeError):
    """The phase circuits carry no signal when sin(2 theta) is (near) zero."""


@dataclass
class TrainedBasis:
    """Everything needed to compose the measurement-rotation circuit."""

    c0: object  # register subcircuit callables
    c1: object
    phi_hat: float
    theta_hat1: float
    alpha0_hat: np.ndarray | None = None
    alpha1_hat: np.ndarray | None = None


@dataclass(frozen=True)
class AdaptiveConfig:
    n_shot: int = 10_000
    m_levels: int = 6  # EIS up to 2**(m_levels - 1)
    n_max_itr: int = 50
    n_phi_shot: int | None = None  # default: round(sqrt(n_shot))
    seed: int = 0
    basis_mode: str = "exact"  # "exact" or "train"
    # "auto": sample-estimate the phase for trained circuits, use the known
    # zero phase for the exact reflection-built circuits (they are real);
    # "estimate" and "zero" force either behavior.
    phase_mode: str = "auto"
    ansatz_layers: int = 6
    learning_rate: float = 0.1
    theta_axis: GridAxis = DEFAULT_THETA_AXIS
    p_axis: GridAxis = DEFAULT_P_AXIS
    refinement_levels: int = 3

    @property
    def first_step_shots(self) -> int:
        # round-half-up
        return int(math.floor(math.sqrt(self.n_shot) + 0.5))

    @property
    def second_step_shots(self) -> int:
        return self.n_shot - self.first_step_shots

    @property
    def phase_shots(self) -> int:
        return self.n_phi_shot if self.n_phi_shot is not None else self.first_step_shots


def exact_basis_circuits(oracle: SinOracle):
    """Householder reflections sending each conditional register state to |0>."""
    prepared = prepare_pure_state(oracle, 0)
    circuits = []
    for value in (0, 1):
        v = conditional_substate(prepared, value).amps.real.copy()
        e0 = np.zeros_like(v)
        e0[0] = 1.0
        w = v - e0
        wn = np.dot(w, w)
        if wn < 1e-24:
            u = np.eye(v.size)
        else:
            u = np.eye(v.size) - 2.0 * np.outer(w, w) / wn
        circuits.append(matrix_circuit(u))
    return circuits[0], circuits[1]


def imperfect_basis_circuits(
    oracle: SinOracle, pc0: float, pc1: float, phi_err: float = 0.0
):
    """Exact circuits degraded to target overlaps, for controlled-bias studies.

    A rotation in the (|0..0>, |0..1>) register plane after the exact solver
    sets |<0|C|psi>| to the requested value; phi_err adds a relative phase on
    the C1 output's |0> component.
    """
    c0_exact, c1_exact = exact_basis_circuits(oracle)
    dim = 2**oracle.n

    def degraded(exact, pc, phase):
        beta = math.acos(min(max(pc, -1.0), 1.0))
        rot = np.eye(dim, dtype=np.complex128)
        rot[0, 0] = math.cos(beta)
        rot[1, 1] = math.cos(beta)
        rot[1, 0] = math.sin(beta)
        rot[0, 1] = -math.sin(beta)
        rot[0, :] *= np.exp(1j * phase)

        def circuit(state: PureState) -> None:
            exact(state)
            state.amps[:] = rot @ state.amps

        return circuit

    return degraded(c0_exact, pc0, 0.0), degraded(c1_exact, pc1, phi_err)


@dataclass
class FirstStepResult:
    theta_hat1: float
    p_hat1: float
    c0: object
    c1: object
    records: list
    cost_trace: list
    alpha0: np.ndarray | None = None
    alpha1: np.ndarray | None = None


def run_first_step(
    oracle: SinOracle,
    p_true: float,
    schedule: GroverSchedule,
    config: AdaptiveConfig,
) -> FirstStepResult:
    """Rough estimates from computational-basis tallies, optionally while
    training the basis circuits on the same measurements."""
    shots = config.first_step_shots
    if config.basis_mode == "train":
        ansatz = Ansatz(n=oracle.n, layers=config.ansatz_layers, use_rz=False)
        tc = TrainConfig(
            learning_rate=config.learning_rate,
            n_max_itr=config.n_max_itr,
            seed=derive_seed(config.seed, 0),
        )
        tr = train(
            oracle, schedule, ansatz, tc, p=p_true, shots_per_circuit=shots
        )
        records = tr.ancilla_records
        from .vqc import ansatz_circuit

        c0 = ansatz_circuit(ansatz, tr.params0)
        c1 = ansatz_circuit(ansatz, tr.params1)
        cost_trace = tr.cost_trace
        alpha0, alpha1 = tr.params0, tr.params1
    elif config.basis_mode == "exact":
        c0, c1 = exact_basis_circuits(oracle)
        records = []
        for k, m in enumerate(schedule.m_list):
            counts = sample_noisy_outcomes(
                oracle, p_true, m, shots, derive_seed(config.seed, 0, k)
            )
            h0 = ancilla_zero_count(counts, oracle.n)
            records.append(CountRecord(m_k=m, counts={"0": h0, "1": shots - h0}, shots=shots))
        cost_trace = []
        alpha0 = alpha1 = None
    else:
        raise ValueError(f"unknown basis_mode {config.basis_mode!r}")

    grid = ParamGrid(
        axes={"theta": config.theta_axis, "p": config.p_axis},
        refinement_levels=config.refinement_levels,
    )
    res = mle_search(lambda theta, p: loglik_comp(theta, p, records), grid)
    return FirstStepResult(
        theta_hat1=res.theta_hat,
        p_hat1=res.p_hat,
        c0=c0,
        c1=c1,
        records=records,
        cost_trace=cost_trace,
        alpha0=alpha0,
        alpha1=alpha1,
    )


def estimate_phase(
    oracle: SinOracle,
    c0,
    c1,
    theta_hat1: float,
    n_phi_shot: int,
    seed: int,
    points: int = 721,
    refinement_levels: int = 3,
) -> float:
    """Relative phase of the composed register circuits from X/Y ancilla data.

    Uses the plain oracle state (no Grover applications), so the outcome
    probabilities depend on sin(2 theta); theta is taken at the first-step
    estimate when maximizing.
    """
    if abs(math.sin(2.0 * theta_hat1)) < 1e-3:
        raise PhaseUnidentifiableError("sin(2 theta) too small: phase carries no signal")
    state = prepare_pure_state(oracle, 0)
    apply_bprime(state, c0, c1)
    anc = oracle.ancilla
    counts = {}
    for basis, prep in (("x", (apply_h,)), ("y", (apply_sdg, apply_h))):
        work = state.copy()
        for gate in prep:
            gate(work, anc)
        pr1 = sum(
            float(p)
            for i, p in enumerate(work.probabilities())
            if (i >> anc) & 1
        )
        pr = np.array([1.0 - pr1, pr1])
        c = sample_counts(pr, n_phi_shot, derive_seed(seed, 0 if basis == "x" else 1))
        counts[basis] = c

    def loglik(phi):
        prx0, prx1, pry0, pry1 = phase_probs(phi, theta_hat1)
        floor = 1e-300
        return (
            counts["x"][0] * np.log(np.clip(prx0, floor, None))
            + counts["x"][1] * np.log(np.clip(prx1, floor, None))
            + counts["y"][0] * np.log(np.clip(pry0, floor, None))
            + counts["y"][1] * np.log(np.clip(pry1, floor, None))
        )

    grid = ParamGrid(
        axes={"phi": GridAxis(0.0, 2.0 * math.pi, points)},
        refinement_levels=refinement_levels,
    )
    res = mle_search(lambda phi: loglik(phi), grid)
    return float(res.params["phi"]) % (2.0 * math.pi)


def build_b(trained: TrainedBasis, n_q: int):
    """Basis-rotation circuit for one Grover power.

    Controlled register circuits, then the phase correction and the
    angle-dependent rotation on the ancilla.
    """

    def circuit(state: PureState) -> None:
        anc = state.num_qubits - 1
        apply_bprime(state, trained.c0, trained.c1)
        apply_rz(state, anc, -trained.phi_hat)
        apply_ry(state, anc, -2.0 * n_q * trained.theta_hat1 - math.pi / 2.0)

    return circuit


def classify_counts(counts: np.ndarray, n: int) -> dict:
    """Computational outcomes after the rotation: |0..0> and |0..0>|1> are the
    two designated results, everything else is the orthogonal class."""
    lam1_index = 1 << n
    lam0 = int(counts[0])
    lam1 = int(counts[lam1_index])
    return {"lam0": lam0, "lam1": lam1, "laml": int(counts.sum()) - lam0 - lam1}


def run_second_step(
    oracle: SinOracle,
    p_true: float,
    schedule: GroverSchedule,
    trained: TrainedBasis,
    shots_per_circuit: int,
    seed: int,
    config: AdaptiveConfig,
) -> tuple[EstimationResult, list]:
    records = []
    for k, m in enumerate(schedule.m_list):
        circuit = build_b(trained, 2 * m + 1)
        counts = sample_noisy_outcomes(
            oracle, p_true, m, shots_per_circuit, derive_seed(seed, 2, k), basis=circuit
        )
        records.append(
            CountRecord(
                m_k=m, counts=classify_counts(counts, oracle.n), shots=shots_per_circuit
            )
        )
    grid = ParamGrid(
        axes={"theta": config.theta_axis, "p": config.p_axis},
        refinement_levels=config.refinement_levels,
    )
    res = mle_search(
        lambda theta, p: loglik_opt(theta, p, records, trained.theta_hat1, oracle.dim), grid
    )
    return res, records


@dataclass
class AdaptiveResult:
    theta_hat2: float
    p_hat2: float
    theta_hat1: float
    p_hat1: float
    phi_hat: float
    phase_fallback: bool
    n_query: int
    fidelities: tuple
    flat_axes: tuple
    log_likelihood: float


def run_two_step_adaptive(
    oracle: SinOracle, p_true: float, config: AdaptiveConfig
) -> AdaptiveResult:
    """Full pipeline: rough pass, phase estimate, basis composition, refined pass."""
    schedule = GroverSchedule.eis(config.m_levels)
    first = run_first_step(oracle, p_true, schedule, config)
    phase_fallback = False
    if config.phase_mode == "auto":
        estimate = config.basis_mode == "train"
    elif config.phase_mode in ("estimate", "zero"):
        estimate = config.phase_mode == "estimate"
    else:
        raise ValueError(f"unknown phase_mode {config.phase_mode!r}")
    if estimate:
        try:
            phi_hat = estimate_phase(
                oracle,
                first.c0,
                first.c1,
                first.theta_hat1,
                config.phase_shots,
                derive_seed(config.seed, 1),
            )
        except PhaseUnidentifiableError:
            phi_hat = 0.0
            phase_fallback = True
    else:
        phi_hat = 0.0
    trained = TrainedBasis(
        c0=first.c0,
        c1=first.c1,
        phi_hat=phi_hat,
        theta_hat1=first.theta_hat1,
        alpha0_hat=first.alpha0,
        alpha1_hat=first.alpha1,
    )
    second, _ = run_second_step(
        oracle, p_true, schedule, trained, config.second_step_shots, config.seed, config
    )
    pc0, pc1 = fidelity_diagnostics(first.c0, first.c1, oracle)
    return AdaptiveResult(
        theta_hat2=second.theta_hat,
        p_hat2=second.p_hat,
        theta_hat1=first.theta_hat1,
        p_hat1=first.p_hat1,
        phi_hat=phi_hat,
        phase_fallback=phase_fallback,
        n_query=config.n_shot * schedule.n_a,
        fidelities=(abs(pc0), abs(pc1)),
        flat_axes=second.flat_axes,
        log_likelihood=second.log_likelihood,
    )


FOUR_PARAM_GRID = ParamGrid(
    axes={
        "theta": GridAxis(0.0, math.pi / 2.0, 61),
        "p": GridAxis(0.5, 1.0, 31),
        "pc0": GridAxis(0.7, 1.0, 11),
        "pc1": GridAxis(0.7, 1.0, 11),
    },
    refinement_levels=2,
)


def sample_biased_counts(
    oracle: SinOracle,
    p_true: float,
    pc0_true: float,
    pc1_true: float,
    schedule: GroverSchedule,
    theta_hat1: float,
    shots_per_circuit: int,
    seed: int,
) -> list:
    """Synthetic three-outcome tallies from the imperfect-basis model."""
    records = []
    for k, m in enumerate(schedule.m_list):
        pr = biased_probs(
            oracle.theta_true, p_true, m, oracle.dim, theta_hat1, pc0_true, pc1_true, 0.0
        )
        counts = sample_counts(np.array(pr), shots_per_circuit, derive_seed(seed, 3, k))
        records.append(
            CountRecord(
                m_k=m,
                counts={"lam0": int(counts[0]), "lam1": int(counts[1]), "laml": int(counts[2])},
                shots=shots_per_circuit,
            )
        )
    return records


def run_four_param(
    oracle: SinOracle,
    p_true: float,
    pc0_true: float,
    pc1_true: float,
    schedule: GroverSchedule,
    shots_per_circuit: int,
    seed: int,
    theta_hat1: float | None = None,
    grid: ParamGrid = FOUR_PARAM_GRID,
) -> EstimationResult:
    """Joint estimation of the angle, the noise level, and both overlaps."""
    if theta_hat1 is None:
        theta_hat1 = oracle.theta_true
    records = sample_biased_counts(
        oracle, p_true, pc0_true, pc1_true, schedule, theta_hat1, shots_per_circuit, seed
    )
    return mle_search(
        lambda theta, p, pc0, pc1: loglik_4param(
            theta, p, pc0, pc1, records, theta_hat1, oracle.dim
        ),
        grid,
    )
