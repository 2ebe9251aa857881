"""Classical resonator dynamics driven by the adiabatic qubit back-action.

The resonator sees the force  -(E_J/D)[lam*phi_r - mu*(<delta>(phi_r) - phi_p)]
where <delta>(phi_r) is the flux-dependent quantum average of the junction
phase in the initially occupied level.  The force depends on phi_r only, so
the motion conserves an effective energy; a fourth-order symplectic
integrator keeps that invariant cheap over 100 ns runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numba import njit
from scipy.interpolate import CubicSpline

from .circuit import CanonicalState, DimensionlessParams, mr_initial_state
from .errors import CurveRangeExceeded, LevelLost, StepTooCoarse
from .spectrum import SpectralTable, solve_spectrum, tabulate_spectra

# Fourth-order Yoshida composition coefficients
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = -(2.0 ** (1.0 / 3.0)) * _W1

REFERENCE = "reference"


@dataclass
class ResponseCurve:
    """Tabulated <delta>_n(phi_r) with a cubic interpolant."""

    n: int
    phi_r_samples: np.ndarray
    delta_avg_samples: np.ndarray
    interpolant: CubicSpline = field(repr=False)

    @property
    def lo(self) -> float:
        return float(self.phi_r_samples[0])

    @property
    def hi(self) -> float:
        return float(self.phi_r_samples[-1])

    def __call__(self, phi_r):
        return self.interpolant(phi_r)


@dataclass
class ResonatorTrajectory:
    """Time series of the resonator flux, momentum and unwrapped phase."""

    n: Union[int, str]     # initially occupied level, or "reference" for M = 0
    t: np.ndarray          # ns
    phi_r: np.ndarray      # dimensionless flux
    p_r: np.ndarray        # momentum (J*s)
    theta: np.ndarray      # unwrapped oscillation phase (rad)
    A: float               # max |phi_r| over the last full period
    dt_used: float
    m_r: float

    @property
    def v(self) -> np.ndarray:
        """Flux velocity d(phi_r)/dt in 1/ns."""
        return self.p_r / self.m_r * 1e-9


def build_response_curve(
    n: int,
    dp: DimensionlessParams,
    phi_r_range: tuple[float, float],
    table: Optional[SpectralTable] = None,
    npts: Optional[int] = None,
    check_midpoints: bool = False,
    midpoint_tol: float = 1e-6,
) -> ResponseCurve:
    """Tabulate the level-n phase average over a flux range.

    Uses a precomputed SpectralTable when given (it must cover the range and
    retain level n throughout), otherwise solves the spectra here with the
    continuity gauge.  Raises LevelLost with the offending flux if the level
    exits the well inside the range.
    """
    lo, hi = phi_r_range
    if table is None:
        table = tabulate_spectra(dp, lo, hi, npts=npts)
    if table.phi[0] > lo or table.phi[-1] < hi:
        raise CurveRangeExceeded(lo if table.phi[0] > lo else hi,
                                 table.phi[0], table.phi[-1])
    sel = (table.phi >= lo - 1e-12) & (table.phi <= hi + 1e-12)
    if n >= table.K:
        raise LevelLost(n, float(table.phi[sel][0]))
    col = table.dipoles[sel, n, n]
    phis = table.phi[sel]
    bad = np.nonzero(np.isnan(col))[0]
    if bad.size:
        raise LevelLost(n, float(phis[bad[0] if bad[0] > 0 else bad[-1]]))
    spline = CubicSpline(phis, col)
    curve = ResponseCurve(n=n, phi_r_samples=phis, delta_avg_samples=col,
                          interpolant=spline)
    if check_midpoints:
        idx = np.linspace(1, len(phis) - 2, 9).astype(int)
        from .spectrum import expected_delta
        for i in idx:
            pm = 0.5 * (phis[i] + phis[i + 1])
            direct = expected_delta(solve_spectrum(float(pm), dp), n)
            if abs(float(spline(pm)) - direct) > midpoint_tol:
                raise StepTooCoarse(
                    f"response interpolation error {abs(float(spline(pm)) - direct):.2e} rad"
                )
    return curve


def _force_spline(curve: ResponseCurve, dp: DimensionlessParams) -> CubicSpline:
    """Total force per unit mass, 1/ns^2, as a cubic spline of phi_r."""
    phis = curve.phi_r_samples
    f = -(dp.accel_scale_r / dp.delta_cap) * (
        dp.lam * phis - dp.mu * (curve.delta_avg_samples - dp.phi_p)
    )
    return CubicSpline(phis, f)


@njit(cache=True)
def _yoshida4_ppoly(phi0, v0, dt, nsteps, save_every, x0, inv_h, ncoef,
                    c0, c1, c2, c3, lo, hi, out_phi, out_v, w1, w0):
    """Symplectic 4th-order integration with a PPoly force; returns status."""
    phi = phi0
    v = v0
    isave = 0
    out_phi[0] = phi
    out_v[0] = v
    # initial force
    x = (phi - x0) * inv_h
    i = int(x)
    if i < 0:
        i = 0
    if i > ncoef - 1:
        i = ncoef - 1
    s = phi - (x0 + i / inv_h)
    a = ((c0[i] * s + c1[i]) * s + c2[i]) * s + c3[i]
    for step in range(nsteps):
        for sub in range(3):
            w = w1 if sub != 1 else w0
            h = w * dt
            v += 0.5 * h * a
            phi += h * v
            if phi < lo or phi > hi:
                return 1, phi, v, isave
            x = (phi - x0) * inv_h
            i = int(x)
            if i < 0:
                i = 0
            if i > ncoef - 1:
                i = ncoef - 1
            s = phi - (x0 + i / inv_h)
            a = ((c0[i] * s + c1[i]) * s + c2[i]) * s + c3[i]
            v += 0.5 * h * a
        if (step + 1) % save_every == 0:
            isave += 1
            out_phi[isave] = phi
            out_v[isave] = v
    return 0, phi, v, isave


def _run_fixed_step(curve, dp, v_init, t_end, dt, save_dt):
    spline = _force_spline(curve, dp)
    pp = spline.c
    x = spline.x
    nsteps = int(round(t_end / dt))
    save_every = max(1, int(round(save_dt / dt)))
    nsave = nsteps // save_every + 1
    out_phi = np.empty(nsave)
    out_v = np.empty(nsave)
    status, phi_f, v_f, isave = _yoshida4_ppoly(
        0.0, v_init, dt, nsteps, save_every, x[0], 1.0 / (x[1] - x[0]),
        len(x) - 1, np.ascontiguousarray(pp[0]), np.ascontiguousarray(pp[1]),
        np.ascontiguousarray(pp[2]), np.ascontiguousarray(pp[3]),
        curve.lo, curve.hi, out_phi, out_v, _W1, _W0,
    )
    if status != 0:
        raise CurveRangeExceeded(phi_f, curve.lo, curve.hi)
    t = np.arange(nsave) * (save_every * dt)
    return t, out_phi, out_v


def integrate_resonator(
    n: Union[int, str],
    dp: DimensionlessParams,
    curve: ResponseCurve,
    t_end: float,
    dt: Optional[float] = None,
    save_dt: float = 5e-4,
    state0: Optional[CanonicalState] = None,
) -> ResonatorTrajectory:
    """Integrate the one-dimensional conservative resonator motion.

    When dt is None the step is chosen automatically: starting from 1e-3 ns it
    is halved until another halving changes theta(t_end) by <= 1e-6 rad.
    """
    if state0 is None:
        state0 = mr_initial_state(dp)
    v_init = state0.p_r / dp.m_r * 1e-9
    if state0.phi_r != 0.0:
        raise ValueError("integrator assumes the standard initial flux phi_r = 0")

    def theta_end(dt_try):
        t, ph, vv = _run_fixed_step(curve, dp, v_init, t_end, dt_try, save_dt)
        th = np.unwrap(np.arctan2(dp.omega_r * ph, vv))
        return th[-1], (t, ph, vv)

    if dt is None:
        dt = 1e-3
        th_prev, run = theta_end(dt)
        while True:
            th_half, run_half = theta_end(dt / 2.0)
            if abs(th_half - th_prev) <= 1e-6:
                break
            dt /= 2.0
            th_prev, run = th_half, run_half
            if dt < 1e-6:
                raise StepTooCoarse("resonator step control failed below dt = 1e-6 ns")
        t, ph, vv = run
    else:
        t, ph, vv = _run_fixed_step(curve, dp, v_init, t_end, dt, save_dt)

    theta = extract_phase_series(ph, vv, dp.omega_r)
    A = _amplitude_last_period(t, ph, vv)
    return ResonatorTrajectory(
        n=n, t=t, phi_r=ph, p_r=vv * dp.m_r * 1e9, theta=theta,
        A=A, dt_used=dt, m_r=dp.m_r,
    )


def reference_trajectory(dp: DimensionlessParams, t_end: float,
                         save_dt: float = 5e-4) -> ResonatorTrajectory:
    """Analytic M = 0 run with the same initial conditions: phi = A sin(w t)."""
    state0 = mr_initial_state(dp)
    v0 = state0.p_r / dp.m_r * 1e-9
    w = dp.omega_r
    t = np.arange(int(round(t_end / save_dt)) + 1) * save_dt
    ph = (v0 / w) * np.sin(w * t)
    vv = v0 * np.cos(w * t)
    return ResonatorTrajectory(
        n=REFERENCE, t=t, phi_r=ph, p_r=vv * dp.m_r * 1e9,
        theta=w * t, A=v0 / w, dt_used=save_dt, m_r=dp.m_r,
    )


def _amplitude_last_period(t, ph, vv) -> float:
    up = np.nonzero((ph[:-1] < 0) & (ph[1:] >= 0) & (vv[1:] > 0))[0]
    if len(up) >= 2:
        return float(np.abs(ph[up[-2]:up[-1] + 1]).max())
    return float(np.abs(ph).max())


def extract_phase_series(phi_r: np.ndarray, v: np.ndarray, omega_ref: float) -> np.ndarray:
    """Unwrapped quadrature phase atan2(omega_ref*phi_r, d(phi_r)/dt)."""
    if np.max(np.abs(phi_r)) == 0.0 and np.max(np.abs(v)) == 0.0:
        raise ValueError("degenerate trajectory: flux and momentum are all zero")
    return np.unwrap(np.arctan2(omega_ref * phi_r, v))


def extract_phase(traj: ResonatorTrajectory, omega_ref: float) -> np.ndarray:
    """Unwrapped theta(t) for a trajectory; theta(0) = 0 for the standard start."""
    if traj.t[-1] * omega_ref < 4.0 * math.pi:
        raise ValueError("trajectory spans fewer than two oscillation periods")
    return extract_phase_series(traj.phi_r, traj.v, omega_ref)


@dataclass
class PhaseObservables:
    """Per-state phase shifts, their difference, and the accumulation rate."""

    t: np.ndarray
    theta_shift_0: np.ndarray
    theta_shift_1: np.ndarray
    theta_diff: np.ndarray
    rate: float  # rad/ns, least-squares slope of theta_diff

    def diff_at(self, t_a: float) -> float:
        """Ripple-free phase difference at t_a: the fitted line evaluated there."""
        return self.rate * t_a


def phase_observables(
    traj0: ResonatorTrajectory,
    traj1: ResonatorTrajectory,
    traj_ref: Optional[ResonatorTrajectory] = None,
    omega_ref: Optional[float] = None,
) -> PhaseObservables:
    """Phase shifts against the M = 0 reference and the 0-1 phase difference."""
    if traj0.t.shape != traj1.t.shape or np.max(np.abs(traj0.t - traj1.t)) > 1e-12:
        raise ValueError("trajectories do not share a time grid")
    if traj_ref is not None:
        if traj_ref.t.shape != traj0.t.shape or np.max(np.abs(traj_ref.t - traj0.t)) > 1e-12:
            raise ValueError("reference trajectory grid mismatch")
        theta_ref = traj_ref.theta
    else:
        if omega_ref is None:
            raise ValueError("need traj_ref or omega_ref")
        theta_ref = omega_ref * traj0.t
    diff = traj0.theta - traj1.theta
    rate = float(np.polyfit(traj0.t, diff, 1)[0]) if len(traj0.t) > 1 else 0.0
    return PhaseObservables(
        t=traj0.t,
        theta_shift_0=traj0.theta - theta_ref,
        theta_shift_1=traj1.theta - theta_ref,
        theta_diff=diff,
        rate=rate,
    )


def effective_energy(traj: ResonatorTrajectory, curve: ResponseCurve,
                     dp: DimensionlessParams) -> np.ndarray:
    """Conserved effective energy per unit mass (1/ns^2): v^2/2 + V_eff."""
    F_int = _force_spline(curve, dp).antiderivative()
    return 0.5 * traj.v**2 - F_int(traj.phi_r)


# --- fully classical two-degree-of-freedom oracle ---------------------------

@dataclass
class ClassicalTrajectory:
    """Canonical time series of the coupled classical system."""

    t: np.ndarray
    phi_r: np.ndarray
    p_r: np.ndarray   # J*s
    delta: np.ndarray
    p: np.ndarray     # J*s


@njit(cache=True)
def _yoshida4_full(phi0, vr0, d0, vq0, dt, nsteps, save_every,
                   lam_over_D, mu_over_D, lamr_over_D, phi_p,
                   ar, aq, out, w1, w0):
    phi = phi0
    vr = vr0
    d = d0
    vq = vq0
    isave = 0
    out[0, 0] = phi
    out[0, 1] = vr
    out[0, 2] = d
    out[0, 3] = vq
    a_r = -ar * (lam_over_D * phi - mu_over_D * (d - phi_p))
    a_q = -aq * (math.sin(d) + lamr_over_D * (d - phi_p) - mu_over_D * phi)
    for step in range(nsteps):
        for sub in range(3):
            w = w1 if sub != 1 else w0
            h = w * dt
            vr += 0.5 * h * a_r
            vq += 0.5 * h * a_q
            phi += h * vr
            d += h * vq
            a_r = -ar * (lam_over_D * phi - mu_over_D * (d - phi_p))
            a_q = -aq * (math.sin(d) + lamr_over_D * (d - phi_p) - mu_over_D * phi)
            vr += 0.5 * h * a_r
            vq += 0.5 * h * a_q
        if (step + 1) % save_every == 0:
            isave += 1
            out[isave, 0] = phi
            out[isave, 1] = vr
            out[isave, 2] = d
            out[isave, 3] = vq
    return isave


def integrate_full_classical(
    dp: DimensionlessParams,
    initial: CanonicalState,
    t_end: float,
    dt: float = 1e-4,
    save_dt: float = 1e-3,
) -> ClassicalTrajectory:
    """Integrate all four canonical equations of the coupled classical system.

    Serves as a conservation and decoupling oracle; not part of the readout
    pipeline.
    """
    if initial.delta is None or initial.p is None:
        raise ValueError("full classical run needs delta and p in the initial state")
    nsteps = int(round(t_end / dt))
    save_every = max(1, int(round(save_dt / dt)))
    nsave = nsteps // save_every + 1
    out = np.empty((nsave, 4))
    _yoshida4_full(
        initial.phi_r, initial.p_r / dp.m_r * 1e-9,
        initial.delta, initial.p / dp.m * 1e-9,
        dt, nsteps, save_every,
        dp.lam / dp.delta_cap, dp.mu / dp.delta_cap, dp.lam_r / dp.delta_cap,
        dp.phi_p, dp.accel_scale_r, dp.accel_scale_q, out, _W1, _W0,
    )
    t = np.arange(nsave) * (save_every * dt)
    return ClassicalTrajectory(
        t=t, phi_r=out[:, 0], p_r=out[:, 1] * dp.m_r * 1e9,
        delta=out[:, 2], p=out[:, 3] * dp.m * 1e9,
    )


def classical_hamiltonian(traj: ClassicalTrajectory, dp: DimensionlessParams) -> np.ndarray:
    """Total energy H/h in GHz along a classical trajectory."""
    from .constants import H_PLANCK

    kin_r = (traj.p_r**2 / (2.0 * dp.m_r)) / H_PLANCK / 1e9
    kin_q = (traj.p**2 / (2.0 * dp.m)) / H_PLANCK / 1e9
    d = traj.delta
    ph = traj.phi_r
    pot = dp.E_J * (
        (dp.lam / (2.0 * dp.delta_cap)) * ph**2
        + (dp.lam_r / (2.0 * dp.delta_cap)) * (d - dp.phi_p) ** 2
        - np.cos(d)
        - (dp.mu / dp.delta_cap) * ph * (d - dp.phi_p)
    )
    return kin_r + kin_q + pot
