"""Matplotlib rendering of the experiment CSV tables.

One PNG per run, written next to the CSV. Headless backend only; nothing
here affects the numerical outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _finite(xs, ys):
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    keep = np.isfinite(xs) & np.isfinite(ys) & (ys > 0)
    return xs[keep], ys[keep]


def plot_adaptive(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    q = [r["N_query"] for r in rows]
    curves = [
        ("rmse_comp", "o-", "computational basis (sampled)"),
        ("rmse_opt", "s-", "adaptive basis (sampled)"),
        ("ccrb_noiseless_m0", ":", "noiseless bound, m=0 only"),
        ("ccrb_noiseless_eis", "--", "noiseless bound, full schedule"),
        ("ccrb_noisy", "-.", "noisy classical bound"),
        ("qcrb_noisy", "-", "noisy quantum bound"),
    ]
    for col, style, label in curves:
        xs, ys = _finite(q, [r[col] for r in rows])
        if xs.size:
            ax.loglog(xs, ys, style, label=label)
    ax.set_xlabel("oracle queries")
    ax.set_ylabel("RMS error of the angle")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_mlae(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    q = [r["N_query"] for r in rows]
    for col, style, label in [
        ("rmse_comp", "o-", "sampled RMSE"),
        ("ccrb_noiseless_eis", "--", "noiseless bound"),
        ("ccrb_noisy", "-.", "noisy classical bound"),
    ]:
        xs, ys = _finite(q, [r[col] for r in rows])
        if xs.size:
            ax.loglog(xs, ys, style, label=label)
    ax.set_xlabel("oracle queries")
    ax.set_ylabel("RMS error of the angle")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_qcrb_sweep(rows: list[dict], path: Path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    m = [r["m_k"] for r in rows]
    axes[0].semilogy([x + 1 for x in m], [r["f_theta_theta"] for r in rows], "o-",
                     label="angle information")
    fpp = [r["f_pp"] for r in rows]
    xs, ys = _finite([x + 1 for x in m], fpp)
    if xs.size:
        axes[0].semilogy(xs, ys, "s-", label="noise information")
    axes[0].set_xlabel("Grover power + 1")
    axes[0].set_ylabel("per-shot information")
    axes[0].legend(fontsize=8)
    axes[1].semilogy([x + 1 for x in m], [r["qcrb_cum"] for r in rows], "-",
                     label="quantum bound (cumulative)")
    axes[1].semilogy([x + 1 for x in m], [r["ccrb_comp_cum"] for r in rows], "--",
                     label="classical bound (cumulative)")
    axes[1].set_xlabel("Grover power + 1")
    axes[1].set_ylabel("RMS error bound")
    axes[1].legend(fontsize=8)
    _save(fig, path)


def plot_four_param(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    errs = [r["theta_err"] for r in rows]
    if errs:
        ax.hist(errs, bins=max(5, len(errs) // 5))
    ax.set_xlabel("angle estimation error")
    ax.set_ylabel("trials")
    _save(fig, path)


def plot_vqc_train(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    xs, ys = _finite([r["iteration"] for r in rows], [r["cost"] for r in rows])
    if xs.size:
        ax.semilogy(xs, ys)
    ax.set_xlabel("iteration")
    ax.set_ylabel("local cost")
    _save(fig, path)


def plot_barren(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    layers = sorted({r["N_L"] for r in rows})
    for nl in layers:
        pts = [(r["n"], r["grad_variance"]) for r in rows if r["N_L"] == nl]
        pts.sort()
        xs, ys = _finite([p[0] for p in pts], [p[1] for p in pts])
        if xs.size:
            ax.semilogy(xs, ys, "o-", label=f"{nl} layers")
    ax.set_xlabel("register qubits")
    ax.set_ylabel("gradient variance")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_phase_mse(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    xs, ys = _finite([r["N_phi_shot"] for r in rows], [r["mse"] for r in rows])
    if xs.size:
        ax.loglog(xs, ys, "o-", label="sampled MSE")
        ax.loglog(xs, ys[0] * xs[0] / xs, "--", label="1/N reference")
    ax.set_xlabel("phase-estimation shots")
    ax.set_ylabel("MSE of the phase")
    ax.legend(fontsize=8)
    _save(fig, path)


PLOTTERS = {
    "qcrb-sweep": plot_qcrb_sweep,
    "mlae": plot_mlae,
    "adaptive": plot_adaptive,
    "four-param": plot_four_param,
    "vqc-train": plot_vqc_train,
    "barren": plot_barren,
    "phase-mse": plot_phase_mse,
}


def render(experiment: str, rows: list[dict], path: Path) -> None:
    PLOTTERS[experiment](rows, path)
