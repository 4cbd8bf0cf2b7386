"""Amplitude oracle, Grover operator, and the depolarizing-noise outcome model.

The concrete oracle prepares, on n register qubits plus one ancilla,

    (1/sqrt(2^n)) sum_x |x> ( cos(w(x+1/2)) |0> + sin(w(x+1/2)) |1> ),

with w = b_max / 2^n, so the ancilla-1 probability equals the mean of
sin^2(w(x+1/2)) over the register values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statevector import (
    DegenerateBranchError,
    PureState,
    apply_controlled_1q,
    apply_h,
    apply_ry,
    init_zero,
    make_rng,
    ry_matrix,
)


@dataclass(frozen=True)
class SinOracle:
    """Sine-amplitude oracle with known target angle (used as ground truth in trials)."""

    n: int
    b_max: float
    s_value: float
    theta_true: float

    @property
    def num_qubits(self) -> int:
        return self.n + 1

    @property
    def ancilla(self) -> int:
        return self.n

    @property
    def dim(self) -> int:
        return 2 ** (self.n + 1)


def sin_amplitude_mean(n: int, b_max: float) -> float:
    """Direct 2^n-term summation of the target ancilla-1 probability."""
    omega = b_max / 2**n
    xs = np.arange(2**n, dtype=float) + 0.5
    return float(np.mean(np.sin(omega * xs) ** 2))


def build_a_sin(n: int, b_max: float) -> SinOracle:
    if n < 1:
        raise ValueError("n must be >= 1")
    if b_max <= 0:
        raise ValueError("b_max must be > 0")
    s = sin_amplitude_mean(n, b_max)
    return SinOracle(n=n, b_max=b_max, s_value=s, theta_true=math.asin(math.sqrt(s)))


def apply_a(state: PureState, oracle: SinOracle) -> PureState:
    """Hadamards on the register, then a controlled-Ry ladder onto the ancilla."""
    if state.num_qubits != oracle.num_qubits:
        raise ValueError("state size does not match oracle")
    omega = oracle.b_max / 2**oracle.n
    anc = oracle.ancilla
    for q in range(oracle.n):
        apply_h(state, q)
    apply_ry(state, anc, omega)  # the +1/2 offset
    for q in range(oracle.n):
        apply_controlled_1q(state, q, 1, anc, ry_matrix(2.0 * omega * 2**q))
    return state


def apply_a_dagger(state: PureState, oracle: SinOracle) -> PureState:
    if state.num_qubits != oracle.num_qubits:
        raise ValueError("state size does not match oracle")
    omega = oracle.b_max / 2**oracle.n
    anc = oracle.ancilla
    for q in reversed(range(oracle.n)):
        apply_controlled_1q(state, q, 1, anc, ry_matrix(-2.0 * omega * 2**q))
    apply_ry(state, anc, -omega)
    for q in reversed(range(oracle.n)):
        apply_h(state, q)
    return state


def _reflect_about_zero(state: PureState) -> None:
    # -I + 2|0..0><0..0|
    state.amps *= -1.0
    state.amps[0] *= -1.0


def _flip_ancilla_one(state: PureState) -> None:
    # -I + 2 I_n (x) |0><0| on the ancilla: sign flip on the ancilla-1 half.
    state.amps.reshape(2, -1)[1] *= -1.0


def apply_grover(state: PureState, oracle: SinOracle, times: int) -> PureState:
    """Apply G = A S0 A^dag S_f the given number of times."""
    if times < 0:
        raise ValueError("times must be >= 0")
    for _ in range(times):
        _flip_ancilla_one(state)
        apply_a_dagger(state, oracle)
        _reflect_about_zero(state)
        apply_a(state, oracle)
    return state


def prepare_pure_state(oracle: SinOracle, m: int) -> PureState:
    """G^m A |0>."""
    state = init_zero(oracle.num_qubits)
    apply_a(state, oracle)
    apply_grover(state, oracle, m)
    return state


def conditional_substate(state: PureState, ancilla_value: int) -> PureState:
    """Normalized register state conditional on the ancilla outcome."""
    half = state.amps.reshape(2, -1)[ancilla_value]
    norm = np.sqrt(np.sum(np.abs(half) ** 2))
    if norm <= 1e-12:
        raise DegenerateBranchError(f"ancilla={ancilla_value} branch has zero probability")
    return PureState(state.num_qubits - 1, half / norm)


@dataclass(frozen=True)
class GroverSchedule:
    """Grover powers used by the likelihood, usually the exponential sequence."""

    m_list: tuple[int, ...]

    def __post_init__(self):
        if any(m < 0 for m in self.m_list):
            raise ValueError("Grover powers must be non-negative")

    @classmethod
    def eis(cls, m_levels: int) -> "GroverSchedule":
        """{0, 2^0, 2^1, ..., 2^(m_levels-1)}; m_levels + 1 circuits in total."""
        if m_levels < 0:
            raise ValueError("m_levels must be >= 0")
        return cls(tuple([0] + [2**j for j in range(m_levels)]))

    @property
    def n_a(self) -> int:
        return sum(2 * m + 1 for m in self.m_list)

    def n_query(self, shots_per_circuit: int) -> int:
        return shots_per_circuit * self.n_a


@dataclass(frozen=True)
class NoisyStateModel:
    """(theta, p, m_k, n) parametrization of the depolarized post-Grover state."""

    theta: float
    p: float
    m_k: int
    n: int

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        if self.m_k < 0:
            raise ValueError("m_k must be >= 0")

    @property
    def d(self) -> int:
        return 2 ** (self.n + 1)

    @property
    def n_q(self) -> int:
        return 2 * self.m_k + 1

    @property
    def p_eff(self) -> float:
        return self.p**self.m_k


def noisy_comp_probs(model: NoisyStateModel) -> tuple[float, float]:
    """Ancilla outcome probabilities in the computational basis."""
    from .models import comp_probs

    pr0, pr1 = comp_probs(model.theta, model.p, model.m_k)
    return float(pr0), float(pr1)


def sample_noisy_outcomes(
    oracle: SinOracle,
    p: float,
    m: int,
    shots: int,
    seed: int,
    basis=None,
) -> np.ndarray:
    """Full-bitstring counts from the depolarized state, length 2^(n+1).

    Each shot comes from the pure branch with probability p^m (after the
    optional basis-change circuit), otherwise uniformly over all outcomes;
    the maximally mixed branch is basis-invariant.
    """
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    d = oracle.dim
    state = prepare_pure_state(oracle, m)
    if basis is not None:
        basis(state)
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = make_rng(seed)
    k_pure = rng.binomial(shots, p**m) if p < 1.0 else shots
    counts = rng.multinomial(k_pure, probs)
    if shots - k_pure > 0:
        counts = counts + rng.multinomial(shots - k_pure, np.full(d, 1.0 / d))
    return counts
