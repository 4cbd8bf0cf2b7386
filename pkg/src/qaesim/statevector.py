"""Dense pure-state simulation of small qubit registers.

Convention: basis index bit k corresponds to qubit k, so qubit 0 is the
least significant bit and the highest-index qubit (the ancilla in the rest
of the package) is the most significant bit of the basis index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 16


class SimulationError(Exception):
    """Base class for simulator errors."""


class DegenerateBranchError(SimulationError):
    """Raised when conditioning on a zero-probability measurement branch."""


@dataclass
class PureState:
    """Complex amplitude vector over ``2**num_qubits`` basis states."""

    num_qubits: int
    amps: np.ndarray

    def copy(self) -> "PureState":
        return PureState(self.num_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def init_zero(num_qubits: int) -> PureState:
    """All-qubits-|0> state."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return PureState(num_qubits, amps)


def _check_qubit(state: PureState, qubit: int) -> None:
    if not 0 <= qubit < state.num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.num_qubits}-qubit state")


def _qubit_slice(state: PureState, qubit: int):
    """View of the amplitudes with the given qubit's axis moved to the front."""
    v = state.amps.reshape((2,) * state.num_qubits)
    return np.moveaxis(v, state.num_qubits - 1 - qubit, 0)


def apply_1q(state: PureState, target: int, u: np.ndarray) -> PureState:
    """Apply a 2x2 unitary to one qubit, in place."""
    _check_qubit(state, target)
    sv = _qubit_slice(state, target)
    sv[...] = np.tensordot(u, sv, axes=(1, 0))
    return state


def apply_controlled_1q(
    state: PureState, control: int, control_value: int, target: int, u: np.ndarray
) -> PureState:
    """Apply a 2x2 unitary to `target` on the subspace where `control` == control_value."""
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise IndexError("control and target must differ")
    nq = state.num_qubits
    cax = nq - 1 - control
    tax = nq - 1 - target
    v = state.amps.reshape((2,) * nq)
    sub = np.moveaxis(v, cax, 0)[control_value]
    pos = tax if tax < cax else tax - 1
    sv = np.moveaxis(sub, pos, 0)
    sv[...] = np.tensordot(u, sv, axes=(1, 0))
    return state


def ry_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(angle: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * angle), 0.0], [0.0, np.exp(0.5j * angle)]], dtype=np.complex128
    )


_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
_SDG = np.array([[1.0, 0.0], [0.0, -1.0j]], dtype=np.complex128)


def apply_ry(state: PureState, target: int, angle: float) -> PureState:
    return apply_1q(state, target, ry_matrix(angle))


def apply_rz(state: PureState, target: int, angle: float) -> PureState:
    return apply_1q(state, target, rz_matrix(angle))


def apply_x(state: PureState, target: int) -> PureState:
    return apply_1q(state, target, _X)


def apply_h(state: PureState, target: int) -> PureState:
    return apply_1q(state, target, _H)


def apply_sdg(state: PureState, target: int) -> PureState:
    return apply_1q(state, target, _SDG)


def apply_cx(state: PureState, control: int, target: int) -> PureState:
    return apply_controlled_1q(state, control, 1, target, _X)


def apply_controlled_unitary(state: PureState, control_value: int, subcircuit) -> PureState:
    """Apply an (n-qubit) subcircuit on the half-space where the top qubit equals control_value.

    The control is always the highest-index qubit (the ancilla). `subcircuit`
    is a callable mutating an (n)-qubit PureState.
    """
    if control_value not in (0, 1):
        raise ValueError("control_value must be 0 or 1")
    half = state.amps.reshape(2, -1)[control_value].copy()
    sub = PureState(state.num_qubits - 1, half)
    subcircuit(sub)
    if sub.amps.shape != (2 ** (state.num_qubits - 1),):
        raise ValueError("subcircuit changed the register size")
    state.amps.reshape(2, -1)[control_value] = sub.amps
    return state


def marginal_probability(state: PureState, qubit: int, value: int) -> float:
    """Probability of measuring `qubit` in `value`, by summing |amplitude|^2."""
    _check_qubit(state, qubit)
    if value not in (0, 1):
        raise ValueError("value must be 0 or 1")
    sub = _qubit_slice(state, qubit)[value]
    return float(np.sum(np.abs(sub) ** 2))


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator with an explicit 64-bit seed; never the process-global state."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def derive_seed(base_seed: int, *keys: int) -> int:
    """Deterministic child seed for (trial, schedule entry, ...) streams."""
    ss = np.random.SeedSequence([int(base_seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_counts(probabilities: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Multinomial outcome counts; a pure function of (distribution, shots, seed)."""
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < -1e-12):
        raise ValueError("negative probability in distribution")
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, expected 1")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    rng = make_rng(seed)
    return rng.multinomial(shots, p)


def overlap(a: PureState, b: PureState) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError("qubit-count mismatch")
    return complex(np.vdot(a.amps, b.amps))
