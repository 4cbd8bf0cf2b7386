"""Quantum estimation theory for the depolarized amplitude-estimation state.

Everything here works on the 2x2 block spanned by the two signal states
(register branch with ancilla 0, register branch with ancilla 1) plus a
scalar acting on the (d-2)-dimensional orthogonal complement. Dense d x d
matrices appear only in the test suite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .models import comp_probs
from .oracle import GroverSchedule, NoisyStateModel


class SingularModelError(ValueError):
    """Raised where a closed form requires p < 1 (noise present)."""


@dataclass(frozen=True)
class RhoEigensystem:
    """Spectrum of the noisy state: one large eigenvalue and a (d-1)-fold floor."""

    lambda0: float
    lambda_deg: float
    block_angle: float  # N_q * theta, orienting the top eigenvector in the block


def rho_eigensystem(model: NoisyStateModel) -> RhoEigensystem:
    pm = model.p_eff
    return RhoEigensystem(
        lambda0=pm + (1.0 - pm) / model.d,
        lambda_deg=(1.0 - pm) / model.d,
        block_angle=model.n_q * model.theta,
    )


@dataclass(frozen=True)
class SldBlock:
    """Block form of a logarithmic-derivative operator.

    Full operator = coeff * (block embedded in the 2D signal subspace)
    + diag_rest * identity on all d dimensions.
    """

    which: str
    coeff: float
    block: np.ndarray
    diag_rest: float

    def block_matrix(self) -> np.ndarray:
        """The 2x2 restriction to the signal subspace."""
        return self.coeff * self.block + self.diag_rest * np.eye(2)

    def complement_value(self) -> float:
        return self.diag_rest


def sld_theta_closed(model: NoisyStateModel) -> SldBlock:
    pm = model.p_eff
    d, nq = model.d, model.n_q
    coeff = 2.0 * d * nq * pm / (2.0 + (d - 2.0) * pm)
    a = 2.0 * nq * model.theta
    block = np.array([[-np.sin(a), np.cos(a)], [np.cos(a), np.sin(a)]])
    return SldBlock(which="theta", coeff=coeff, block=block, diag_rest=0.0)


def sld_p_closed(model: NoisyStateModel) -> SldBlock:
    if model.p >= 1.0 or model.m_k == 0:
        raise SingularModelError("noise-parameter SLD requires p < 1 and m_k >= 1")
    pm = model.p_eff
    d, m = model.d, model.m_k
    coeff = d * m * model.p ** (m - 1) / ((1.0 + (d - 1.0) * pm) * (1.0 - pm))
    a = model.n_q * model.theta
    c, s = np.cos(a), np.sin(a)
    block = np.array([[c * c, c * s], [c * s, s * s]])
    diag_rest = -m * model.p ** (m - 1) / (1.0 - pm)
    return SldBlock(which="p", coeff=coeff, block=block, diag_rest=diag_rest)


def sld_numeric(model: NoisyStateModel, which: str) -> SldBlock:
    """SLD from the spectral formula with analytic eigen-derivatives.

    The eigenvalues depend only on p and the eigenvectors only on theta, so
    both derivative families are closed-form; nothing is finite-differenced.
    """
    eig = rho_eigensystem(model)
    a = eig.block_angle
    c, s = np.cos(a), np.sin(a)
    v0 = np.array([c, s])
    v1 = np.array([s, -c])
    if which == "theta":
        # eigenvalues are theta-independent; only the cross term survives,
        # with <lambda1 | d_theta lambda0> = -N_q.
        lam0, lamd = eig.lambda0, eig.lambda_deg
        delta = 2.0 * (lam0 - lamd) / (lam0 + lamd) * model.n_q
        cross = np.outer(v1, v0) + np.outer(v0, v1)
        return SldBlock(which="theta", coeff=1.0, block=-delta * cross, diag_rest=0.0)
    if which == "p":
        if model.p >= 1.0 or model.m_k == 0:
            raise SingularModelError("noise-parameter SLD requires p < 1 and m_k >= 1")
        m = model.m_k
        dlam0 = m * model.p ** (m - 1) * (model.d - 1.0) / model.d
        dlamd = -m * model.p ** (m - 1) / model.d
        r0 = dlam0 / eig.lambda0
        rd = dlamd / eig.lambda_deg
        block = r0 * np.outer(v0, v0) + rd * np.outer(v1, v1) - rd * np.eye(2)
        return SldBlock(which="p", coeff=1.0, block=block, diag_rest=rd)
    raise ValueError(f"unknown parameter {which!r}")


@dataclass(frozen=True)
class Qfim:
    f_theta_theta: float
    f_pp: float
    f_theta_p: float
    f_pp_infinite: bool = False


def qfim_closed(model: NoisyStateModel) -> Qfim:
    pm = model.p_eff
    d, nq, m = model.d, model.n_q, model.m_k
    f_tt = 4.0 * d * nq**2 * pm**2 / (2.0 + (d - 2.0) * pm)
    if m == 0:
        f_pp, infinite = 0.0, False
    elif model.p >= 1.0:
        f_pp, infinite = np.inf, True
    else:
        f_pp = (
            m**2
            * model.p ** (2 * (m - 1))
            * (d - 1.0)
            / ((1.0 - pm) * (1.0 + (d - 1.0) * pm))
        )
        infinite = False
    return Qfim(f_theta_theta=f_tt, f_pp=f_pp, f_theta_p=0.0, f_pp_infinite=infinite)


def _rho_block(model: NoisyStateModel) -> tuple[np.ndarray, float]:
    eig = rho_eigensystem(model)
    a = eig.block_angle
    v = np.array([np.cos(a), np.sin(a)])
    block = model.p_eff * np.outer(v, v) + eig.lambda_deg * np.eye(2)
    return block, eig.lambda_deg


def _qfim_entry(model: NoisyStateModel, li: SldBlock, lj: SldBlock) -> float:
    rho, lam_rest = _rho_block(model)
    bi, bj = li.block_matrix(), lj.block_matrix()
    anti = bi @ bj + bj @ bi
    block_term = 0.5 * np.trace(rho @ anti)
    rest_term = (model.d - 2.0) * lam_rest * li.complement_value() * lj.complement_value()
    return float(block_term + rest_term)


def qfim_numeric(model: NoisyStateModel) -> Qfim:
    """Information matrix assembled from the spectral-formula SLDs.

    Used to check, rather than assume, that the off-diagonal entry vanishes.
    """
    if model.p >= 1.0:
        raise SingularModelError("numeric information matrix requires p < 1")
    lt = sld_numeric(model, "theta")
    if model.m_k == 0:
        f_tt = _qfim_entry(model, lt, lt)
        return Qfim(f_theta_theta=f_tt, f_pp=0.0, f_theta_p=0.0)
    lp = sld_numeric(model, "p")
    return Qfim(
        f_theta_theta=_qfim_entry(model, lt, lt),
        f_pp=_qfim_entry(model, lp, lp),
        f_theta_p=_qfim_entry(model, lt, lp),
    )


def qcrb_theta(
    schedule: GroverSchedule, n: int, p: float, shots_per_circuit: int
) -> float:
    """Variance lower bound for the angle over the whole schedule.

    Fisher information adds over the independent circuits, mirroring the
    classical bound's per-power summation.
    """
    if shots_per_circuit < 1:
        raise ValueError("shots_per_circuit must be >= 1")
    total = 0.0
    for m in schedule.m_list:
        model = NoisyStateModel(theta=0.0, p=p, m_k=m, n=n)
        total += qfim_closed(model).f_theta_theta
    return 1.0 / (shots_per_circuit * total)


def classical_fisher(probs_fn, at, which: str, dprobs_fn=None, step: float = 1e-6) -> float:
    """Fisher information sum_o (d Pr(o))^2 / Pr(o) at the point `at`.

    probs_fn(theta, p) returns the outcome distribution; dprobs_fn, when
    given, supplies analytic derivatives. Otherwise a centered difference
    with Richardson extrapolation is used. Outcomes with zero probability
    are dropped with a warning.
    """
    theta, p = at
    probs = np.asarray(probs_fn(theta, p), dtype=float)
    if np.any(probs < -1e-12):
        raise ValueError("model produced a negative probability")
    if dprobs_fn is not None:
        derivs = np.asarray(dprobs_fn(theta, p), dtype=float)
    else:
        if which == "theta":
            f = lambda h: np.asarray(probs_fn(theta + h, p), dtype=float)
        elif which == "p":
            f = lambda h: np.asarray(probs_fn(theta, p + h), dtype=float)
        else:
            raise ValueError(f"unknown parameter {which!r}")
        d1 = (f(step) - f(-step)) / (2.0 * step)
        d2 = (f(2.0 * step) - f(-2.0 * step)) / (4.0 * step)
        derivs = (4.0 * d1 - d2) / 3.0
    total = 0.0
    for pr, dv in zip(probs, derivs):
        if pr <= 0.0:
            warnings.warn("dropping zero-probability outcome in Fisher information")
            continue
        total += dv * dv / pr
    return float(total)


def comp_basis_fisher_theta(theta: float, p: float, m: int) -> float:
    """Per-shot Fisher information of the two-outcome computational model."""
    from .models import comp_probs_dtheta

    pr0, pr1 = comp_probs(theta, p, m)
    d0, _ = comp_probs_dtheta(theta, p, m)
    return float(d0 * d0 * (1.0 / pr0 + 1.0 / pr1))


def ccrb_theta_comp(
    schedule: GroverSchedule, theta: float, p: float, shots_per_circuit: int
) -> float:
    """Classical variance bound for computational-basis measurements."""
    total = sum(comp_basis_fisher_theta(theta, p, m) for m in schedule.m_list)
    return 1.0 / (shots_per_circuit * total)


def optimal_basis(theta_hat: float, n_q: int) -> float:
    """Rotation angle of the top measurement vector inside the signal block."""
    return n_q * theta_hat + np.pi / 4.0


def optimal_basis_probs(
    model: NoisyStateModel, theta_hat1: float
) -> tuple[float, float, float]:
    from .models import opt_basis_probs

    pr = opt_basis_probs(model.theta, model.p, model.m_k, model.d, theta_hat1)
    return tuple(float(x) for x in pr)
