"""Closed-form outcome probabilities for every measurement model.

All functions broadcast over numpy arrays of (theta, p) so the likelihood
grids in `estimator` evaluate without Python loops.
"""

from __future__ import annotations

import numpy as np


def comp_probs(theta, p, m):
    """Ancilla 0/1 probabilities for the computational-basis measurement."""
    nq = 2 * m + 1
    pm = np.power(p, m)
    pr0 = pm * np.cos(nq * theta) ** 2 + (1.0 - pm) / 2.0
    return pr0, 1.0 - pr0


def comp_probs_dtheta(theta, p, m):
    """d/dtheta of (Pr0, Pr1) for the computational-basis model."""
    nq = 2 * m + 1
    pm = np.power(p, m)
    d0 = -pm * nq * np.sin(2.0 * nq * theta)
    return d0, -d0


def comp_probs_dp(theta, p, m):
    if m == 0:
        z = np.zeros_like(np.asarray(theta, dtype=float) + np.asarray(p, dtype=float))
        return z, z
    nq = 2 * m + 1
    dpm = m * np.power(p, m - 1)
    d0 = dpm * (np.cos(nq * theta) ** 2 - 0.5)
    return d0, -d0


def opt_basis_probs(theta, p, m, d, theta_hat1):
    """Three-outcome probabilities for the rotated (near-optimal) basis."""
    nq = 2 * m + 1
    pm = np.power(p, m)
    s = np.sin(2.0 * nq * (theta - theta_hat1))
    pr_l0 = pm * (1.0 + s) / 2.0 + (1.0 - pm) / d
    pr_l1 = pm * (1.0 - s) / 2.0 + (1.0 - pm) / d
    pr_rest = (1.0 - pm) * (d - 2.0) / d
    return pr_l0, pr_l1, pr_rest


def opt_basis_probs_dtheta(theta, p, m, d, theta_hat1):
    nq = 2 * m + 1
    pm = np.power(p, m)
    ds = pm * nq * np.cos(2.0 * nq * (theta - theta_hat1))
    zero = np.zeros_like(np.asarray(ds, dtype=float))
    return ds, -ds, zero


def opt_basis_probs_dp(theta, p, m, d, theta_hat1):
    nq = 2 * m + 1
    s = np.sin(2.0 * nq * (theta - theta_hat1))
    if m == 0:
        z = np.zeros_like(np.asarray(s, dtype=float))
        return z, z, z
    dpm = m * np.power(p, m - 1)
    d_l0 = dpm * ((1.0 + s) / 2.0 - 1.0 / d)
    d_l1 = dpm * ((1.0 - s) / 2.0 - 1.0 / d)
    d_rest = -dpm * (d - 2.0) / d
    return d_l0, d_l1, d_rest


def theta_p_bias(pc0, pc1, theta, n_q):
    """Angle offset caused by unequal C0/C1 overlaps (exact arctan form)."""
    r = np.asarray(pc1, dtype=float) / np.asarray(pc0, dtype=float)
    t = np.tan(n_q * np.asarray(theta, dtype=float))
    return np.arctan((r - 1.0) * t / (1.0 + r * t**2)) / n_q


def theta_p_bias_linearized(pc0, pc1, theta, n_q):
    """First-order version of `theta_p_bias`."""
    r = np.asarray(pc1, dtype=float) / np.asarray(pc0, dtype=float)
    return np.sin(2.0 * n_q * np.asarray(theta, dtype=float)) * (r - 1.0) / (2.0 * n_q)


def combined_overlap_sq(pc0, pc1, theta, n_q):
    """|p_c|^2: the overlap deficit acting like an extra, m-independent noise factor."""
    c2 = np.cos(n_q * np.asarray(theta, dtype=float)) ** 2
    return np.asarray(pc0, dtype=float) ** 2 * c2 + np.asarray(pc1, dtype=float) ** 2 * (
        1.0 - c2
    )


def biased_probs(theta, p, m, d, theta_hat1, pc0, pc1, phi_tilde=0.0):
    """Three-outcome probabilities under imperfect basis circuits.

    Quadratic approximation in the residual phase error phi_tilde; exact in
    the overlap magnitudes pc0, pc1 through |p_c|^2 and the angle offset.
    """
    nq = 2 * m + 1
    pm = np.power(p, m)
    th_p = theta_p_bias(pc0, pc1, theta, nq)
    pc2 = combined_overlap_sq(pc0, pc1, theta, nq)
    s = np.sin(2.0 * nq * (theta - theta_hat1 + th_p))
    phase_term = (
        0.5 * phi_tilde**2 * np.sin(2.0 * nq * (theta + th_p)) * np.cos(2.0 * nq * theta_hat1)
    )
    pr_l0 = pm * pc2 * 0.5 * (1.0 + s - phase_term) + (1.0 - pm) / d
    pr_l1 = pm * pc2 * 0.5 * (1.0 - s + phase_term) + (1.0 - pm) / d
    pr_rest = (1.0 - pm) * (d - 2.0) / d + pm * (1.0 - pc2)
    return pr_l0, pr_l1, pr_rest


def theta_phi_bias(phi_tilde, theta, theta_hat1, theta_p, n_q, approximate_root=False):
    """Angle bias induced by the residual phase error phi_tilde.

    With approximate_root=True the square-root factor is replaced by 1, the
    small-misestimate limit.
    """
    gamma = (
        0.5
        * phi_tilde**2
        * np.sin(2.0 * n_q * (theta + theta_p))
        * np.cos(2.0 * n_q * theta_hat1)
    )
    if approximate_root:
        return -gamma / n_q
    root = np.sqrt(1.0 - np.sin(2.0 * n_q * (theta - theta_hat1 + theta_p)) ** 2)
    if np.any(np.asarray(root) <= 1e-6):
        raise ValueError("bias undefined: rotation angle too close to the turning point")
    return -gamma / (n_q * root)


def phase_probs(phi, theta):
    """X/Y-basis ancilla probabilities used for relative-phase estimation.

    Returns (PrX0, PrX1, PrY0, PrY1).
    """
    s2t = np.sin(2.0 * theta)
    prx0 = 0.5 + 0.5 * s2t * np.cos(phi)
    pry0 = 0.5 + 0.5 * s2t * np.sin(phi)
    return prx0, 1.0 - prx0, pry0, 1.0 - pry0
