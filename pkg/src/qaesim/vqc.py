"""Trainable basis circuits: layered ansatz, local cost, parameter-shift
gradients, gradient descent, and the gradient-variance sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import CountRecord
from .oracle import SinOracle, conditional_substate, prepare_pure_state, sample_noisy_outcomes
from .statevector import (
    PureState,
    apply_controlled_unitary,
    apply_cx,
    apply_ry,
    apply_rz,
    derive_seed,
    init_zero,
    make_rng,
)


@dataclass(frozen=True)
class Ansatz:
    """Layers of per-qubit rotations followed by a chain of CX gates.

    With use_rz off (real-amplitude targets) each layer has one Ry per
    qubit; with it on, an Rz follows each Ry.
    """

    n: int
    layers: int
    use_rz: bool = False

    @property
    def num_params(self) -> int:
        per_qubit = 2 if self.use_rz else 1
        return self.layers * self.n * per_qubit


def apply_ansatz(state: PureState, ansatz: Ansatz, params: np.ndarray) -> PureState:
    if state.num_qubits != ansatz.n:
        raise ValueError("state size does not match ansatz")
    if len(params) != ansatz.num_params:
        raise ValueError("wrong parameter count")
    i = 0
    for _ in range(ansatz.layers):
        for q in range(ansatz.n):
            apply_ry(state, q, params[i])
            i += 1
            if ansatz.use_rz:
                apply_rz(state, q, params[i])
                i += 1
        for q in range(ansatz.n - 1):
            apply_cx(state, q, q + 1)
    return state


def ansatz_circuit(ansatz: Ansatz, params: np.ndarray):
    """Subcircuit callable over n-qubit states."""
    params = np.asarray(params, dtype=float).copy()

    def circuit(state: PureState) -> None:
        apply_ansatz(state, ansatz, params)

    return circuit


def matrix_circuit(u: np.ndarray):
    """Subcircuit applying an explicit unitary matrix (used for exact bases)."""
    u = np.asarray(u, dtype=np.complex128)

    def circuit(state: PureState) -> None:
        state.amps[:] = u @ state.amps

    return circuit


def apply_bprime(state: PureState, c0, c1) -> PureState:
    """Register circuits controlled on the ancilla: c0 on ancilla=0, c1 on ancilla=1."""
    apply_controlled_unitary(state, 0, c0)
    apply_controlled_unitary(state, 1, c1)
    return state


def cost_local_term(state: PureState) -> float:
    """One schedule term of the local cost: 1 - mean register-qubit Pr(|0>).

    Zero iff every non-ancilla qubit reads |0> with certainty.
    """
    n = state.num_qubits - 1
    probs = state.probabilities()
    total = 0.0
    for q in range(n):
        v = probs.reshape((2,) * state.num_qubits)
        sub = np.moveaxis(v, state.num_qubits - 1 - q, 0)[0]
        total += float(np.sum(sub))
    return 1.0 - total / n


def cost_from_counts(counts: np.ndarray, n: int) -> float:
    """Same cost estimated from full-bitstring counts over n+1 qubits."""
    shots = int(counts.sum())
    if shots == 0:
        return 0.0
    idx = np.arange(counts.size)
    total = 0.0
    for q in range(n):
        zero_mask = (idx >> q) & 1 == 0
        total += counts[zero_mask].sum() / shots
    return 1.0 - total / n


def ancilla_zero_count(counts: np.ndarray, n: int) -> int:
    idx = np.arange(counts.size)
    return int(counts[(idx >> n) & 1 == 0].sum())


def grad_parameter_shift(cost_at, params: np.ndarray, k: int, shift: float = math.pi / 2.0) -> float:
    """[cost(a_k + shift) - cost(a_k - shift)] / 2."""
    plus = params.copy()
    plus[k] += shift
    minus = params.copy()
    minus[k] -= shift
    return 0.5 * (cost_at(plus) - cost_at(minus))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    n_max_itr: int = 100
    shots_per_iteration: int | None = None  # None: exact statevector mode
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.n_max_itr < 1:
            raise ValueError("n_max_itr must be >= 1")


@dataclass
class TrainResult:
    params0: np.ndarray
    params1: np.ndarray
    cost_trace: list
    ancilla_records: list  # CountRecord per schedule entry (shot mode only)


def _exact_cost(oracle: SinOracle, m: int, p: float, ansatz: Ansatz, packed: np.ndarray) -> float:
    half = ansatz.num_params
    state = prepare_pure_state(oracle, m)
    apply_bprime(
        state, ansatz_circuit(ansatz, packed[:half]), ansatz_circuit(ansatz, packed[half:])
    )
    pure = cost_local_term(state)
    pm = p**m
    # maximally mixed branch has Pr(0) = 1/2 per register qubit
    return pm * pure + (1.0 - pm) * 0.5


def split_shots(total: int, parts: int) -> list[int]:
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def train(
    oracle: SinOracle,
    schedule,
    ansatz: Ansatz,
    config: TrainConfig,
    p: float = 1.0,
    shots_per_circuit: int | None = None,
    init0: np.ndarray | None = None,
    init1: np.ndarray | None = None,
) -> TrainResult:
    """Gradient descent on the local cost, one schedule entry at a time.

    In shot mode (shots_per_circuit given) the per-iteration measurement also
    yields the ancilla tallies reused by the first estimation step: the
    controlled register circuits leave the ancilla distribution untouched.
    Each parameter-shift evaluation draws its own shots.
    """
    rng = make_rng(config.seed)
    half = ansatz.num_params
    if init0 is None:
        init0 = rng.uniform(0.0, 2.0 * np.pi, half)
    if init1 is None:
        init1 = rng.uniform(0.0, 2.0 * np.pi, half)
    packed = np.concatenate([np.asarray(init0, float), np.asarray(init1, float)])

    cost_trace = []
    records = []
    shot_mode = shots_per_circuit is not None
    eval_counter = [0]

    for m in schedule.m_list:
        if shot_mode:
            iter_shots = split_shots(shots_per_circuit, config.n_max_itr)
            h0_total = 0

            def shot_cost(pk, shots):
                eval_counter[0] += 1
                c0 = ansatz_circuit(ansatz, pk[:half])
                c1 = ansatz_circuit(ansatz, pk[half:])
                counts = sample_noisy_outcomes(
                    oracle,
                    p,
                    m,
                    shots,
                    derive_seed(config.seed, m, eval_counter[0]),
                    basis=lambda st: apply_bprime(st, c0, c1),
                )
                return counts

            for j in range(config.n_max_itr):
                shots = iter_shots[j]
                counts = shot_cost(packed, shots)
                h0_total += ancilla_zero_count(counts, oracle.n)
                cost_trace.append(cost_from_counts(counts, oracle.n))
                grad = np.array(
                    [
                        grad_shift_counts(shot_cost, packed, k, shots, oracle.n)
                        for k in range(packed.size)
                    ]
                )
                packed = packed - config.learning_rate * grad
            records.append(
                CountRecord(
                    m_k=m,
                    counts={"0": h0_total, "1": shots_per_circuit - h0_total},
                    shots=shots_per_circuit,
                )
            )
        else:
            cost_at = lambda pk: _exact_cost(oracle, m, p, ansatz, pk)
            for _ in range(config.n_max_itr):
                cost_trace.append(cost_at(packed))
                grad = np.array(
                    [grad_parameter_shift(cost_at, packed, k) for k in range(packed.size)]
                )
                packed = packed - config.learning_rate * grad
    return TrainResult(
        params0=packed[:half], params1=packed[half:], cost_trace=cost_trace, ancilla_records=records
    )


def grad_shift_counts(sampler, packed: np.ndarray, k: int, shots: int, n: int) -> float:
    """Parameter-shift gradient estimate in shot mode; each shift draws fresh shots."""
    if shots == 0:
        return 0.0
    plus = packed.copy()
    plus[k] += math.pi / 2.0
    minus = packed.copy()
    minus[k] -= math.pi / 2.0
    cp = cost_from_counts(sampler(plus, shots), n)
    cm = cost_from_counts(sampler(minus, shots), n)
    return 0.5 * (cp - cm)


def fidelity_diagnostics(c0, c1, oracle: SinOracle) -> tuple[complex, complex]:
    """Overlaps <0|C0|psi0> and <0|C1|psi1>."""
    prepared = prepare_pure_state(oracle, 0)
    out = []
    for value, circuit in ((0, c0), (1, c1)):
        sub = conditional_substate(prepared, value)
        work = sub.copy()
        circuit(work)
        out.append(complex(work.amps[0]))
    return out[0], out[1]


def gradient_variance_experiment(
    n_list,
    nl_list,
    n_sample: int,
    seed: int,
    b_max: float = 0.25,
    m_list=(0,),
) -> list[dict]:
    """Sample variance of one designated parameter-shift gradient.

    The designated parameter is the first Ry of the middle layer on qubit 0
    of the ancilla-0 circuit; all other parameters are drawn uniformly from
    [0, 2pi) for each sample. Statevector (exact) gradients, no noise.
    """
    from .oracle import GroverSchedule, build_a_sin

    schedule = GroverSchedule(tuple(m_list))
    rows = []
    for n in n_list:
        oracle = build_a_sin(n, b_max)
        for nl in nl_list:
            ansatz = Ansatz(n=n, layers=nl, use_rz=False)
            target = (nl // 2) * n  # first Ry of the middle layer, qubit 0
            grads = np.empty(n_sample)
            for s in range(n_sample):
                rng = make_rng(derive_seed(seed, n, nl, s))
                packed = rng.uniform(0.0, 2.0 * np.pi, 2 * ansatz.num_params)

                def cost_at(pk):
                    return sum(_exact_cost(oracle, m, 1.0, ansatz, pk) for m in schedule.m_list)

                grads[s] = grad_parameter_shift(cost_at, packed, target)
            rows.append(
                {
                    "n": n,
                    "n_layers": nl,
                    "grad_variance": float(np.var(grads)) if n_sample > 1 else 0.0,
                }
            )
    return rows
