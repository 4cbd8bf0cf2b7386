"""Likelihood construction and grid-refined maximum-likelihood search."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import biased_probs, comp_probs, opt_basis_probs

PROB_FLOOR = 1e-300  # numerical guard before logarithms, not a model change
FLATNESS_SPREAD = 1e-9


class EstimationFailedError(RuntimeError):
    """Raised when the likelihood is non-finite on the whole grid."""


@dataclass(frozen=True)
class CountRecord:
    """Outcome tallies for one Grover power.

    Outcome keys: "0"/"1" for the ancilla measurement, "lam0"/"lam1"/"laml"
    for the rotated basis, "x0"/"x1"/"y0"/"y1" for phase estimation.
    """

    m_k: int
    counts: dict
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts must sum to shots")
        if any(v < 0 for v in self.counts.values()):
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class GridAxis:
    lower: float
    upper: float
    points: int

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("lower must be < upper")
        if self.points < 3:
            raise ValueError("points must be >= 3")


@dataclass(frozen=True)
class ParamGrid:
    """Per-parameter search ranges plus the number of refinement passes."""

    axes: dict  # name -> GridAxis
    refinement_levels: int = 3


DEFAULT_THETA_AXIS = GridAxis(0.0, np.pi / 2.0, 201)
DEFAULT_P_AXIS = GridAxis(0.5, 1.0, 51)
DEFAULT_PC_AXIS = GridAxis(0.7, 1.0, 51)


@dataclass
class EstimationResult:
    params: dict
    log_likelihood: float
    flat_axes: tuple = ()
    grid_trace: list = field(default_factory=list)

    @property
    def theta_hat(self):
        return self.params.get("theta")

    @property
    def p_hat(self):
        return self.params.get("p")

    @property
    def pc0_hat(self):
        return self.params.get("pc0")

    @property
    def pc1_hat(self):
        return self.params.get("pc1")


def _log(x):
    return np.log(np.clip(x, PROB_FLOOR, None))


def loglik_comp(theta, p, records) -> np.ndarray:
    """Log-likelihood of ancilla tallies under the noisy computational model."""
    total = 0.0
    for r in records:
        pr0, pr1 = comp_probs(theta, p, r.m_k)
        h0 = r.counts.get("0", 0)
        total = total + h0 * _log(pr0) + (r.shots - h0) * _log(pr1)
    return total


def loglik_opt(theta, p, records, theta_hat1, d) -> np.ndarray:
    """Log-likelihood of three-outcome tallies in the rotated basis."""
    total = 0.0
    for r in records:
        pr0, pr1, prl = opt_basis_probs(theta, p, r.m_k, d, theta_hat1)
        total = (
            total
            + r.counts.get("lam0", 0) * _log(pr0)
            + r.counts.get("lam1", 0) * _log(pr1)
            + r.counts.get("laml", 0) * _log(prl)
        )
    return total


def loglik_4param(theta, p, pc0, pc1, records, theta_hat1, d) -> np.ndarray:
    """Log-likelihood under the imperfect-basis model, residual phase taken as zero."""
    total = 0.0
    for r in records:
        pr0, pr1, prl = biased_probs(theta, p, r.m_k, d, theta_hat1, pc0, pc1, 0.0)
        total = (
            total
            + r.counts.get("lam0", 0) * _log(pr0)
            + r.counts.get("lam1", 0) * _log(pr1)
            + r.counts.get("laml", 0) * _log(prl)
        )
    return total


def _evaluate(loglik, axes: dict) -> np.ndarray:
    names = list(axes)
    shaped = {}
    for i, name in enumerate(names):
        shape = [1] * len(names)
        shape[i] = axes[name].size
        shaped[name] = axes[name].reshape(shape)
    out = loglik(**shaped)
    return np.broadcast_to(out, tuple(axes[n].size for n in names))


def mle_search(loglik, grid: ParamGrid) -> EstimationResult:
    """Coarse grid evaluation with windowed refinement around the argmax.

    The argmax tie-break is the lexicographically smallest parameter tuple
    (axes ascending, insertion order), which is evaluation-order free. The
    returned log-likelihood is non-decreasing across refinement levels.
    """
    names = list(grid.axes)
    axes = {
        name: np.linspace(ax.lower, ax.upper, ax.points) for name, ax in grid.axes.items()
    }
    best_params: dict = {}
    best_ll = -np.inf
    trace = []
    flat_axes: tuple = ()
    for level in range(grid.refinement_levels + 1):
        ll = _evaluate(loglik, axes)
        if not np.any(np.isfinite(ll)):
            raise EstimationFailedError("log-likelihood non-finite on the whole grid")
        idx = np.unravel_index(int(np.argmax(ll)), ll.shape)
        level_ll = float(ll[idx])
        if level_ll > best_ll:
            best_ll = level_ll
            best_params = {name: float(axes[name][i]) for name, i in zip(names, idx)}
        trace.append((level, dict(best_params), best_ll))
        # flatness: spread along each axis through the current argmax
        flat = []
        for ai, name in enumerate(names):
            sl = list(idx)
            sl[ai] = slice(None)
            line = ll[tuple(sl)]
            if float(np.max(line) - np.min(line)) < FLATNESS_SPREAD:
                flat.append(name)
        flat_axes = tuple(flat)
        if level == grid.refinement_levels:
            break
        new_axes = {}
        for ai, name in enumerate(names):
            arr = axes[name]
            i = idx[ai]
            lo = arr[max(i - 2, 0)]
            hi = arr[min(i + 2, arr.size - 1)]
            if hi <= lo:
                new_axes[name] = arr
            else:
                new_axes[name] = np.linspace(lo, hi, grid.axes[name].points)
        axes = new_axes
    return EstimationResult(
        params=best_params, log_likelihood=best_ll, flat_axes=flat_axes, grid_trace=trace
    )
