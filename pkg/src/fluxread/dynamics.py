"""Qubit amplitude evolution in the moving eigenbasis along a resonator orbit.

The state is expanded over the instantaneous left-well eigenfunctions,
psi = sum_m C_m(t) psi_m(delta, t) exp(-i W_m(t)) with W_m = 2*pi*int E_m dt'
(E in GHz, t in ns).  The couplings are evaluated through the
Hellmann-Feynman identity

    <psi_k | d/dt psi_m> = -E_J (mu/D) <psi_k|delta|psi_m> / (E_m - E_k) * dphi_r/dt,

which is exact in this basis and immune to eigenvector gauge noise.  Levels
pushed above the barrier have their amplitudes zeroed (lost population is a
measurement failure channel and is not renormalized away).
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.fft import dst
from scipy.interpolate import CubicSpline

from .circuit import DimensionlessParams
from .errors import NearDegeneracy, StepTooCoarse
from .resonator import ResonatorTrajectory
from .spectrum import (DEGENERACY_GUARD, InstantSpectrum, SpectralTable,
                       potential, tabulate_spectra)

TAIL_THRESHOLD = 1e-8  # |C_{K-1}|^2 bound defining the active level count


@dataclass
class AmplitudeTrajectory:
    """Complex amplitudes in the moving eigenbasis along one orbit."""

    n0: int
    t: np.ndarray                # (nsave,) ns
    C: np.ndarray                # (nsave, K) complex
    K: np.ndarray                # (nsave,) active level count (tail condition)
    norm: np.ndarray             # (nsave,) sum |C_m|^2
    phase_integrals: np.ndarray  # (nsave, K) accumulated 2*pi*int E_m dt (rad)
    events: list                 # (t, level) above-barrier zeroing events
    table: SpectralTable = field(repr=False, default=None)
    phi_of_t: np.ndarray = field(repr=False, default=None)


@dataclass
class FidelityReport:
    """Instantaneous and averaged fidelity for one initial level."""

    n0: int
    t: np.ndarray
    f_t: np.ndarray
    F: float
    t_a: float
    theta_at_ta: float
    truncation_events: list


def nonadiabatic_couplings(
    spec: InstantSpectrum, dp: DimensionlessParams, phi_r_dot: float
) -> np.ndarray:
    """Matrix of <psi_k | d/dt psi_m> in 1/ns at one instant.

    Off-diagonal Hellmann-Feynman values; diagonal zero in the real gauge.
    Raises NearDegeneracy when a retained gap falls below the guard.
    """
    n = spec.n_left
    if n < 2:
        raise NearDegeneracy(0, 0, spec.phi_r, 0.0)
    E = spec.energies
    guard = DEGENERACY_GUARD * (E[1] - E[0])
    gaps = np.diff(E)
    bad = np.nonzero(gaps < guard)[0]
    if bad.size:
        j = int(bad[0])
        raise NearDegeneracy(j, j + 1, spec.phi_r, float(gaps[j]))
    psi = spec.wavefunctions
    dip = (psi.T * spec.grid) @ psi * spec.grid_step
    dE = E[None, :] - E[:, None]
    np.fill_diagonal(dE, np.inf)
    return -dp.E_J * (dp.mu / dp.delta_cap) * dip / dE * phi_r_dot


def _edge_filled(table: SpectralTable) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """NaN regions replaced by edge extension (masked at runtime)."""
    E = table.energies.copy()
    D = table.dipoles.copy()
    pts = table.phi
    for m in range(table.K):
        col = E[:, m]
        nan = np.isnan(col)
        if nan.any():
            col[nan] = np.interp(pts[nan], pts[~nan], col[~nan])
        for k in range(table.K):
            c = D[:, m, k]
            nan = np.isnan(c)
            if nan.all():
                c[:] = 0.0
            elif nan.any():
                c[nan] = np.interp(pts[nan], pts[~nan], c[~nan])
    Ub = table.barrier.copy()
    nan = np.isnan(Ub)
    if nan.any():
        Ub[nan] = np.interp(pts[nan], pts[~nan], Ub[~nan])
    return E, D, Ub


def evolve_amplitudes(
    n0: int,
    dp: DimensionlessParams,
    traj: ResonatorTrajectory,
    t_end: float,
    dt: Optional[float] = None,
    table: Optional[SpectralTable] = None,
    save_dt: float = 2e-3,
    verify: bool = False,
) -> AmplitudeTrajectory:
    """Integrate the amplitude equations along a precomputed orbit.

    The step resolves the fastest retained Bohr frequency with at least 20
    points per period (40 by default).  With verify=True the run is repeated
    at half step and must agree on the final amplitudes to 1e-6.
    """
    if traj.t[-1] < t_end - 1e-9:
        raise ValueError("trajectory shorter than requested t_end")
    if table is None:
        lo = float(traj.phi_r.min())
        hi = float(traj.phi_r.max())
        pad = 0.02 * (hi - lo) + 1e-3
        table = tabulate_spectra(dp, lo - pad, hi + pad)

    amp = _evolve_once(n0, dp, traj, t_end, dt, table, save_dt)
    if verify:
        dt_used = amp.t[1] - amp.t[0] if dt is None else dt
        half = _evolve_once(n0, dp, traj, t_end,
                            (amp._dt_used) / 2.0, table, save_dt)
        delta = np.max(np.abs(amp.C[-1] - half.C[-1]))
        if delta > 1e-6:
            raise StepTooCoarse(f"final amplitudes moved by {delta:.2e} on halving")
    return amp


def _evolve_once(n0, dp, traj, t_end, dt, table, save_dt) -> AmplitudeTrajectory:
    E_fill, D_fill, Ub_fill = _edge_filled(table)
    pts = table.phi
    K = table.K
    Espl = CubicSpline(pts, E_fill)
    Dspl = CubicSpline(pts, D_fill)
    span = np.nanmax(table.energies, axis=1) - np.nanmin(table.energies, axis=1)
    f_bohr = float(np.nanmax(span))
    if dt is None:
        dt = min(1.0 / (40.0 * f_bohr), 5e-4)
    # integer number of steps landing exactly on t_end
    nst = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / nst
    save_every = max(1, int(round(save_dt / dt)))
    nsave = nst // save_every + 1 + (1 if nst % save_every else 0)

    # exit boundary per level, half a table cell early to stay clear of the
    # edge-extended region
    cell = pts[1] - pts[0]
    exit_phi = table.exit_phi - 0.5 * cell

    pref = -dp.E_J * (dp.mu / dp.delta_cap)

    C = np.zeros(K, dtype=complex)
    C[n0] = 1.0
    W = np.zeros(K)
    alive = np.ones(K, dtype=bool)
    events: list[tuple[float, int]] = []

    out_t = np.empty(nsave)
    out_C = np.empty((nsave, K), dtype=complex)
    out_K = np.empty(nsave, dtype=int)
    out_norm = np.empty(nsave)
    out_W = np.empty((nsave, K))

    def record(isave, t):
        out_t[isave] = t
        out_C[isave] = C
        mags = np.abs(C) ** 2
        big = np.nonzero(mags >= TAIL_THRESHOLD)[0]
        out_K[isave] = (big[-1] + 1) if big.size else 0
        out_norm[isave] = mags.sum()
        out_W[isave] = W

    record(0, 0.0)

    chunk = 4096
    i_global = 0
    isave = 0
    while i_global < nst:
        n_here = min(chunk, nst - i_global)
        ts = i_global * dt + np.arange(n_here + 1) * dt
        th = ts[:-1] + 0.5 * dt
        ph = np.interp(ts, traj.t, traj.phi_r)
        ph_h = np.interp(th, traj.t, traj.phi_r)
        vv = np.interp(ts, traj.t, traj.v)
        vv_h = np.interp(th, traj.t, traj.v)
        Es = Espl(ph)
        Es_h = Espl(ph_h)
        Ds = Dspl(ph)
        Ds_h = Dspl(ph_h)

        for i in range(n_here):
            # zero amplitudes of levels pushed above the barrier
            dead = alive & (ph[i] > exit_phi)
            if dead.any():
                for m in np.nonzero(dead)[0]:
                    if abs(C[m]) > 0:
                        events.append((float(ts[i]), int(m)))
                C[dead] = 0.0
                alive &= ~dead
            reborn = (~alive) & (ph[i] <= exit_phi)
            if reborn.any():
                alive |= reborn

            live = np.nonzero(alive)[0]
            mags = np.abs(C[live]) ** 2
            big = np.nonzero(mags >= TAIL_THRESHOLD)[0]
            k_tail = (big[-1] + 1) if big.size else n0 + 1
            k_act = min(max(k_tail + 1, n0 + 2), live.size)
            idx = live[:k_act]

            k1 = _rhs(C, Es[i], Ds[i], W, vv[i], idx, pref, K)
            Wh = W + 2.0 * np.pi * (0.5 * dt) * 0.5 * (Es[i] + Es_h[i])
            k2 = _rhs(C + (0.5 * dt) * k1, Es_h[i], Ds_h[i], Wh, vv_h[i], idx, pref, K)
            k3 = _rhs(C + (0.5 * dt) * k2, Es_h[i], Ds_h[i], Wh, vv_h[i], idx, pref, K)
            Wf = W + 2.0 * np.pi * dt * (Es[i] + 4.0 * Es_h[i] + Es[i + 1]) / 6.0
            k4 = _rhs(C + dt * k3, Es[i + 1], Ds[i + 1], Wf, vv[i + 1], idx, pref, K)
            C = C + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            W = Wf

            if (i_global + i + 1) % save_every == 0:
                isave += 1
                record(isave, ts[i + 1])
        i_global += n_here
    if nst % save_every:
        isave += 1
        record(isave, nst * dt)

    amp = AmplitudeTrajectory(
        n0=n0, t=out_t[: isave + 1], C=out_C[: isave + 1],
        K=out_K[: isave + 1], norm=out_norm[: isave + 1],
        phase_integrals=out_W[: isave + 1], events=events, table=table,
        phi_of_t=np.interp(out_t[: isave + 1], traj.t, traj.phi_r),
    )
    amp._dt_used = dt
    return amp


def _rhs(C, Ei, Di, Wi, v, idx, pref, K):
    """dC/dt for the active index set; other entries stay frozen."""
    Esub = Ei[idx]
    dsub = Di[np.ix_(idx, idx)]
    dE = Esub[None, :] - Esub[:, None]
    np.fill_diagonal(dE, np.inf)
    A = pref * dsub / dE * v
    phase = np.exp(1j * (Wi[idx][:, None] - Wi[idx][None, :]))
    out = np.zeros(K, dtype=complex)
    out[idx] = -(A * phase) @ C[idx]
    return out


def instantaneous_fidelity(amp: AmplitudeTrajectory, n0: Optional[int] = None) -> np.ndarray:
    """f(t) = |C_{n0}(t)|; the basis is orthonormal and the phase unimodular."""
    n = amp.n0 if n0 is None else n0
    return np.abs(amp.C[:, n])


def averaged_fidelity(t: np.ndarray, f: np.ndarray, t_a: float) -> float:
    """Trapezoidal time average of f over [0, t_a]."""
    if t[-1] < t_a * (1.0 - 1e-9) - 1e-12:
        raise ValueError(f"series ends at {t[-1]:.4g} ns, before t_a = {t_a:.4g} ns")
    mask = t <= t_a + 1e-12
    tt, ff = t[mask], f[mask]
    if tt[-1] < t_a - 1e-12:
        f_end = float(np.interp(t_a, t, f))
        tt = np.append(tt, t_a)
        ff = np.append(ff, f_end)
    return float(np.trapezoid(ff, tt) / t_a)


def fidelity_report(amp: AmplitudeTrajectory, t_a: float,
                    theta_at_ta: float = float("nan")) -> FidelityReport:
    f_t = instantaneous_fidelity(amp)
    return FidelityReport(
        n0=amp.n0, t=amp.t, f_t=f_t,
        F=averaged_fidelity(amp.t, f_t, t_a),
        t_a=t_a, theta_at_ta=theta_at_ta,
        truncation_events=list(amp.events),
    )


def reconstruct_state(amp: AmplitudeTrajectory, i_time: int) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild psi(delta) at a saved time from amplitudes and phase integrals.

    Solves the instantaneous spectrum in the table gauge; returns (grid, psi).
    """
    table = amp.table
    phi = float(amp.phi_of_t[i_time])
    spec = table.solve_in_gauge(phi)
    k = min(spec.n_left, table.K)
    coef = amp.C[i_time, :k] * np.exp(-1j * amp.phase_integrals[i_time, :k])
    psi = spec.wavefunctions[:, :k].astype(complex) @ coef
    return spec.grid, psi


# --- split-operator oracle ---------------------------------------------------

@dataclass
class OracleRun:
    """Direct unitary propagation of the qubit state on a fixed grid."""

    grid: np.ndarray
    times: np.ndarray
    psi_t: np.ndarray   # (ncheck, npts) complex snapshots
    norms: np.ndarray   # norm at each snapshot


def splitstep_oracle(
    n0: int,
    dp: DimensionlessParams,
    traj: ResonatorTrajectory,
    t_end: float = 1.0,
    dt: float = 2e-5,
    points: int = 2048,
    n_checkpoints: int = 21,
    table: Optional[SpectralTable] = None,
) -> OracleRun:
    """Propagate i hbar dpsi/dt = H_q(t) psi by Strang-split DST steps.

    The box is the union of the restricted domains visited over the window;
    sine-transform steps keep zero boundary values, so propagation is unitary
    to rounding.  Initial state: instantaneous eigenstate n0 at t = 0.
    """
    from .spectrum import solve_spectrum

    tmask = traj.t <= t_end + 1e-12
    phis_visited = traj.phi_r[tmask]
    s_lo = solve_spectrum(float(phis_visited.min()), dp)
    s_hi = solve_spectrum(float(phis_visited.max()), dp)
    d_a = min(s_lo.grid[0], s_hi.grid[0]) - 0.05
    d_b = max(s_lo.geometry.delta_barrier, s_hi.geometry.delta_barrier)
    grid = np.linspace(d_a, d_b, points + 2)[1:-1]  # interior points
    dx = grid[1] - grid[0]
    L_box = (points + 1) * dx
    k = np.pi * np.arange(1, points + 1) / L_box
    kin_phase = np.exp(-1j * 2.0 * np.pi * dp.kinetic_coeff * k**2 * dt)

    if table is not None:
        spec0 = table.solve_in_gauge(float(traj.phi_r[0]))
    else:
        spec0 = solve_spectrum(float(traj.phi_r[0]), dp)
    psi = np.interp(grid, spec0.grid, spec0.wavefunctions[:, n0],
                    left=0.0, right=0.0).astype(complex)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)

    nst = int(round(t_end / dt))
    check_idx = np.unique(np.linspace(0, nst, n_checkpoints).astype(int))
    times = check_idx * dt
    psi_t = np.empty((len(check_idx), points), dtype=complex)
    norms = np.empty(len(check_idx))
    ic = 0
    if check_idx[0] == 0:
        psi_t[0] = psi
        norms[0] = float(np.sum(np.abs(psi) ** 2) * dx)
        ic = 1

    for i in range(nst):
        t_mid = (i + 0.5) * dt
        phi_mid = float(np.interp(t_mid, traj.t, traj.phi_r))
        U = potential(grid, phi_mid, dp)
        half_v = np.exp(-1j * np.pi * U * dt)  # e^{-i 2*pi U dt/2}
        psi = half_v * psi
        psi = dst(dst(psi, type=1, norm="ortho") * kin_phase, type=1, norm="ortho")
        psi = half_v * psi
        if ic < len(check_idx) and i + 1 == check_idx[ic]:
            psi_t[ic] = psi
            norms[ic] = float(np.sum(np.abs(psi) ** 2) * dx)
            ic += 1

    return OracleRun(grid=grid, times=times, psi_t=psi_t, norms=norms)


def oracle_overlap(oracle: OracleRun, amp: AmplitudeTrajectory) -> np.ndarray:
    """|<psi_reconstructed | psi_oracle>| at each oracle checkpoint."""
    dx = oracle.grid[1] - oracle.grid[0]
    out = np.empty(len(oracle.times))
    for i, t in enumerate(oracle.times):
        j = int(np.argmin(np.abs(amp.t - t)))
        g, psi_rec = reconstruct_state(amp, j)
        rec = np.interp(oracle.grid, g, psi_rec.real, left=0.0, right=0.0) \
            + 1j * np.interp(oracle.grid, g, psi_rec.imag, left=0.0, right=0.0)
        nrm = np.sqrt(np.sum(np.abs(rec) ** 2) * dx)
        if nrm > 0:
            rec /= nrm
        out[i] = abs(np.sum(np.conj(rec) * oracle.psi_t[i]) * dx)
    return out
