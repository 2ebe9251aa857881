"""Matplotlib rendering of the report figures, written next to the CSV output.

Every renderer writes a PNG with empty metadata so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectrum import InstantSpectrum, potential

_SAVE = dict(dpi=150, metadata={})


def render_spectrum(spec: InstantSpectrum, dp, path) -> None:
    """Potential with the left-well levels and scaled wavefunctions."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    lo = spec.grid[0] - 0.3
    hi = spec.geometry.delta_right_min + 0.8
    d = np.linspace(lo, hi, 1200)
    ax.plot(d, potential(d, spec.phi_r, dp), "k-", lw=1.2)
    scale = 0.35 * (spec.energies[1] - spec.energies[0]) if spec.n_left > 1 else 1.0
    for m in range(spec.n_left):
        e = spec.energies[m]
        ax.axhline(e, xmin=0, xmax=1, color="C0", lw=0.4, alpha=0.4)
        ax.plot(spec.grid, e + scale * spec.wavefunctions[:, m] /
                max(1e-12, np.abs(spec.wavefunctions[:, m]).max()), lw=0.9)
    ax.axhline(spec.geometry.U_barrier, color="r", ls="--", lw=0.8, label="barrier")
    ax.set_xlabel(r"junction phase $\delta$ (rad)")
    ax.set_ylabel("U/h (GHz)")
    ax.set_title(f"left-well levels: {spec.n_left} at phi_r = {spec.phi_r:g}")
    ax.set_ylim(spec.geometry.U_left_min - 0.3 * spec.geometry.barrier_height,
                spec.geometry.U_barrier + 2.5 * spec.geometry.barrier_height)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def render_phase(obs, path) -> None:
    """Per-state phase shifts and the 0-1 phase difference."""
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 7.0), sharex=True)
    axes[0].plot(obs.t, obs.theta_shift_0, lw=0.7)
    axes[0].set_ylabel(r"$\theta_0-\theta_{ref}$ (rad)")
    axes[1].plot(obs.t, obs.theta_shift_1, lw=0.7, color="C1")
    axes[1].set_ylabel(r"$\theta_1-\theta_{ref}$ (rad)")
    axes[2].plot(obs.t, obs.theta_diff, lw=0.7, color="C2")
    axes[2].plot(obs.t, obs.rate * obs.t, "k--", lw=0.8,
                 label=f"fit: {obs.rate:.4g} rad/ns")
    axes[2].set_ylabel(r"$\theta_0-\theta_1$ (rad)")
    axes[2].set_xlabel("t (ns)")
    axes[2].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def render_fidelity(reports, path) -> None:
    """Instantaneous fidelity traces for the evolved initial states."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for rep in reports:
        ax.plot(rep.t, rep.f_t, lw=0.7, label=f"n0={rep.n0}, F={rep.F:.6f}")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("f(t)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def render_sweep(rows, param_label: str, path) -> None:
    """Fidelities and phase difference against the swept parameter."""
    ok = [r for r in rows if r.status == "ok"]
    groups: dict[str, list] = {}
    for r in ok:
        groups.setdefault(r.swept_param, []).append(r)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    for label, rs in groups.items():
        x = [r.value for r in rs]
        ax1.plot(x, [r.F0 for r in rs], "o-", ms=3, lw=0.8, label=f"F0 {label}")
        ax1.plot(x, [r.F1 for r in rs], "s--", ms=3, lw=0.8, label=f"F1 {label}")
        ax2.plot(x, [r.theta_ta for r in rs], "d-", ms=3, lw=0.8, label=label)
    ax1.set_ylabel("averaged fidelity")
    ax1.legend(fontsize=7)
    ax2.set_ylabel(r"$\theta(t_a)$ (rad)")
    ax2.set_xlabel(param_label)
    ax2.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
