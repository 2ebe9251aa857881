"""Parameter-sweep orchestration, relaxation budget and reproducibility targets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circuit import DimensionlessParams, PhysicalParams, to_dimensionless
from .dynamics import averaged_fidelity, evolve_amplitudes, instantaneous_fidelity
from .errors import (CurveRangeExceeded, FluxreadError, NoCrossing,
                     NotAQubit, WellVanished)
from .resonator import (PhaseObservables, build_response_curve,
                        integrate_resonator, phase_observables)
from .spectrum import SpectralTable, solve_spectrum, tabulate_spectra

#: sign of the parameter change that degrades the readout fidelity
DEGRADING_DIRECTION = {"M": +1, "L": -1, "C": +1, "I0": -1, "Lr": -1, "Cr": -1}

@dataclass
class SweepRow:
    """One parameter point of a sweep with the summary-table observables."""

    swept_param: str
    value: float
    N_min: int = 0
    N_max: int = 0
    f_min: float = float("nan")
    f_max: float = float("nan")
    F0: float = float("nan")
    F1: float = float("nan")
    theta_ta: float = float("nan")
    rate: float = float("nan")
    status: str = "ok"

    FIELDS = ("swept_param", "value", "N_min", "N_max", "f_min", "f_max",
              "F0", "F1", "theta_ta", "rate", "status")


@dataclass(frozen=True)
class UncertaintyBudget:
    """Phase-measurement error budget against the accumulated difference."""

    quantum_phase_unc: float   # (4<N>)^(-1/2), rad
    q_factor_phase_unc: float  # 2*pi*(f_r/Q)*t_m, rad
    required_accuracy: float   # theta(t_m) = rate*t_m, rad
    margin_ok: bool


@dataclass
class PointResult:
    """Everything computed for one parameter point (reused by tests/CLI)."""

    pp: PhysicalParams
    dp: DimensionlessParams
    table: SpectralTable
    curves: dict
    trajectories: dict
    observables: PhaseObservables
    amplitudes: dict
    F: dict
    N_range: tuple[int, int]
    f_range: tuple[float, float]
    t_a: float
    t_end: float


def _estimate_range(dp: DimensionlessParams) -> tuple[float, float]:
    """Flux range the orbit is expected to visit, padded by 20 percent."""
    from .circuit import mr_initial_state
    from .spectrum import expected_delta

    phi_star = 0.0
    for _ in range(3):
        s = solve_spectrum(phi_star, dp)
        if s.n_left == 0:
            raise WellVanished(phi_star, "left well holds no levels")
        phi_star = (dp.mu / dp.lam) * (expected_delta(s, 0) - dp.phi_p)
    # oscillation amplitude around phi_star: initial displacement plus the
    # kinetic-energy contribution of the n_quanta kick
    omega2 = dp.accel_scale_r * dp.lam / dp.delta_cap
    v0 = mr_initial_state(dp).p_r / dp.m_r * 1e-9
    amp = math.sqrt(phi_star**2 + v0**2 / omega2)
    lo = phi_star - 1.25 * amp
    hi = phi_star + 1.25 * amp
    # cap the upper edge below the flux where the well vanishes
    hi_cap = hi
    step = max(0.05, 0.02 * abs(lo))
    p = max(0.0, phi_star + amp)
    while p <= hi + step:
        try:
            solve_spectrum(p, dp)
        except WellVanished:
            hi_cap = p - step
            break
        p += step
    return lo, min(hi, hi_cap)


def pipeline_point(
    pp: PhysicalParams,
    t_a: float = 10.0,
    t_end: float = 100.0,
    states: Sequence[int] = (0, 1),
    need_fidelity: bool = True,
    need_extremes: bool = True,
    table_npts: Optional[int] = None,
) -> PointResult:
    """Run circuit -> spectrum -> resonator -> dynamics for one point."""
    dp = to_dimensionless(pp)
    lo, hi = _estimate_range(dp)
    curves: dict = {}
    trajs: dict = {}
    table = None
    for attempt in range(4):
        table = tabulate_spectra(dp, lo, hi, npts=table_npts)
        try:
            for n in states:
                curves[n] = build_response_curve(n, dp, (lo, hi), table=table)
                trajs[n] = integrate_resonator(n, dp, curves[n], t_end)
            break
        except CurveRangeExceeded:
            if attempt == 3:
                raise
            lo *= 1.3
            hi = min(hi + 0.1 * (hi - lo) * 0.0 + 0.2, hi * 1.0 + 0.2)
            curves.clear()
            trajs.clear()
    # 20 percent coverage margin around the realized orbit
    orb_min = min(float(trajs[n].phi_r.min()) for n in states)
    orb_max = max(float(trajs[n].phi_r.max()) for n in states)
    if orb_min < lo / 1.2 or (orb_max > 0 and hi < 1.2 * orb_max):
        lo2 = min(lo, 1.25 * orb_min)
        hi2 = max(hi, 1.25 * orb_max if orb_max > 0 else hi)
        try:
            table2 = tabulate_spectra(dp, lo2, hi2, npts=table_npts)
            table = table2
            lo, hi = lo2, hi2
        except WellVanished:
            pass  # upper cap already at the well boundary

    obs = phase_observables(trajs[0], trajs[1], omega_ref=dp.omega_r) \
        if 0 in trajs and 1 in trajs else None

    N_range = (0, 0)
    f_range = (float("nan"), float("nan"))
    if need_extremes:
        N_range, f_range = _cycle_extremes(dp, trajs[states[0]])

    amps: dict = {}
    F: dict = {}
    if need_fidelity:
        for n in states:
            amps[n] = evolve_amplitudes(n, dp, trajs[n], t_end=t_a, table=table)
            F[n] = averaged_fidelity(amps[n].t, instantaneous_fidelity(amps[n]), t_a)

    return PointResult(pp=pp, dp=dp, table=table, curves=curves,
                       trajectories=trajs, observables=obs, amplitudes=amps,
                       F=F, N_range=N_range, f_range=f_range, t_a=t_a, t_end=t_end)


def _cycle_extremes(dp: DimensionlessParams, traj, n_phases: int = 64):
    """Level-count and qubit-frequency extremes over one resonator cycle."""
    ph = traj.phi_r
    vv = traj.v
    up = np.nonzero((ph[:-1] < 0) & (ph[1:] >= 0) & (vv[1:] > 0))[0]
    i_end = up[0] + 1 if up.size else len(ph) - 1
    t_cycle = traj.t[i_end]
    samples = list(np.interp(np.linspace(0.0, t_cycle, n_phases), traj.t, ph))
    samples += [float(ph.min()), float(ph.max())]
    Ns = []
    fs = []
    for p in samples:
        try:
            s = solve_spectrum(float(p), dp)
        except WellVanished:
            Ns.append(0)
            continue
        Ns.append(s.n_left)
        if s.n_left >= 2:
            fs.append(float(s.energies[1] - s.energies[0]))
    if not fs:
        raise NotAQubit("fewer than two levels everywhere on the cycle")
    return (int(min(Ns)), int(max(Ns))), (float(min(fs)), float(max(fs)))


def row_from_result(res: PointResult, swept_param: str = "",
                    value: float = float("nan")) -> SweepRow:
    """Condense a PointResult into the table row observables."""
    row = SweepRow(swept_param=swept_param, value=value)
    row.N_min, row.N_max = res.N_range
    row.f_min, row.f_max = res.f_range
    row.F0 = res.F.get(0, float("nan"))
    row.F1 = res.F.get(1, float("nan"))
    row.rate = res.observables.rate
    row.theta_ta = res.observables.diff_at(res.t_a)
    return row


def run_point(pp: PhysicalParams, t_a: float = 10.0, t_end: float = 100.0,
              swept_param: str = "", value: float = float("nan")) -> SweepRow:
    """One full pipeline evaluation, returning a SweepRow; failures are data."""
    try:
        res = pipeline_point(pp, t_a=t_a, t_end=t_end)
    except FluxreadError as exc:
        return SweepRow(swept_param=swept_param, value=value,
                        status=f"failed: {type(exc).__name__}: {exc}")
    return row_from_result(res, swept_param, value)


def sweep(param_name: str, values: Sequence[float], base: PhysicalParams,
          M_variants: Optional[Sequence[float]] = None,
          t_a: float = 10.0, t_end: float = 100.0) -> list[SweepRow]:
    """One SweepRow per (value, M variant), in order; failures recorded inline."""
    rows = []
    m_values = list(M_variants) if M_variants else [base.M]
    for mv in m_values:
        for v in values:
            try:
                pp = base.with_(**{param_name: v, "M": mv})
            except (ValueError, FluxreadError) as exc:
                row = SweepRow(swept_param=param_name, value=v,
                               status=f"failed: {type(exc).__name__}: {exc}")
                rows.append(row)
                continue
            label = param_name if len(m_values) == 1 else f"{param_name}@M={mv:.3g}"
            rows.append(run_point(pp, t_a=t_a, t_end=t_end,
                                  swept_param=label, value=v))
    return rows


# --- relaxation budget (closed forms) ----------------------------------------

T1_DIVERGENCE_CAP_NS = 1e15


def t1_requirement(F1_required: float, t_m: float) -> float:
    """Minimum T1 (ns) for a required excited-state fidelity over t_m."""
    if not 0.0 < F1_required < 1.0:
        raise ValueError("F1_required must lie strictly inside (0, 1)")
    if t_m <= 0:
        raise ValueError("t_m must be positive")
    T1 = -t_m / (2.0 * math.log(F1_required))
    return math.inf if T1 > T1_DIVERGENCE_CAP_NS else T1


def decay_adjusted_fidelity(t_m: float, T1: float) -> float:
    """Excited-state fidelity exp(-t_m/(2 T1)); exact inverse of t1_requirement."""
    if T1 <= 0:
        raise ValueError("T1 must be positive")
    return math.exp(-t_m / (2.0 * T1))


def table2_rows(t_m: float = 100.0,
                fidelities: Sequence[float] = (0.8, 0.9, 0.95, 0.98, 0.99, 0.999, 0.9999)):
    """(F1, T1_us) pairs of the relaxation-time requirement table."""
    return [(f, t1_requirement(f, t_m) / 1e3) for f in fidelities]


def uncertainty_budget(n_quanta: float, Q: float, f_r: float, t_m: float,
                       rate: float) -> UncertaintyBudget:
    """Phase uncertainty budget: quantum and quality-factor contributions."""
    if min(n_quanta, Q, f_r, t_m) <= 0:
        raise ValueError("all budget inputs must be positive")
    quantum = (4.0 * n_quanta) ** -0.5
    qfactor = 2.0 * math.pi * (f_r / Q) * t_m
    required = rate * t_m
    return UncertaintyBudget(
        quantum_phase_unc=quantum,
        q_factor_phase_unc=qfactor,
        required_accuracy=required,
        margin_ok=required > quantum and required > qfactor,
    )


# --- reproducibility-target search --------------------------------------------

def _point_F1(pp: PhysicalParams, t_a: float = 10.0) -> float:
    """Excited-state fidelity only (cheapest single-point evaluation)."""
    res = pipeline_point(pp, t_a=t_a, t_end=t_a, states=(0, 1),
                         need_fidelity=False, need_extremes=False)
    amp = evolve_amplitudes(1, res.dp, res.trajectories[1], t_end=t_a,
                            table=res.table)
    return averaged_fidelity(amp.t, instantaneous_fidelity(amp), t_a)


def reproducibility_target(
    param_name: str,
    base: PhysicalParams,
    F1_required: float = 0.9985,
    direction: Optional[int] = None,
    t_a: float = 10.0,
    max_percent: int = 50,
) -> int:
    """Smallest percent deviation of a parameter that drops F1 below threshold.

    Bisection on an integer percent grid in the degrading direction; a point
    where the well vanishes or the pipeline fails counts as below threshold
    (the readout is lost entirely).  Returns the signed percent deviation.
    """
    if direction is None:
        direction = DEGRADING_DIRECTION[param_name]

    def f1_at(percent: int) -> float:
        value = getattr(base, param_name) * (1.0 + direction * percent / 100.0)
        try:
            pp = base.with_(**{param_name: value})
            return _point_F1(pp, t_a=t_a)
        except FluxreadError:
            return 0.0

    f1_base = f1_at(0)
    if f1_base <= F1_required + 1e-12:
        return 0
    if f1_at(max_percent) >= F1_required:
        raise NoCrossing(
            f"F1 stays above {F1_required} out to {direction * max_percent}% on {param_name}"
        )
    lo, hi = 0, max_percent  # F1(lo) good, F1(hi) bad
    while hi - lo > 1:
        mid = (hi + lo) // 2
        if f1_at(mid) < F1_required:
            hi = mid
        else:
            lo = mid
    return direction * hi


def table3_rows(base: PhysicalParams, F1_required: float = 0.9985,
                params: Sequence[str] = ("M", "L", "C", "I0", "Lr", "Cr"),
                t_a: float = 10.0) -> list[tuple[str, float, int]]:
    """Reproducibility targets (param, working value, signed percent)."""
    out = []
    for name in params:
        try:
            pct = reproducibility_target(name, base, F1_required, t_a=t_a)
        except NoCrossing:
            pct = DEGRADING_DIRECTION[name] * 999  # sentinel: no crossing found
        out.append((name, getattr(base, name), pct))
    return out


# --- delimited output ----------------------------------------------------------

def write_rows_csv(path, rows: Sequence[SweepRow]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SweepRow.FIELDS) + "\n")
        for r in rows:
            vals = []
            for name in SweepRow.FIELDS:
                v = getattr(r, name)
                vals.append(repr(v) if isinstance(v, float) else str(v))
            fh.write(",".join(vals) + "\n")


def write_table2_csv(path, t_m: float = 100.0) -> None:
    with open(path, "w") as fh:
        fh.write("F1,T1_us\n")
        for f, t1 in table2_rows(t_m):
            fh.write(f"{f!r},{t1!r}\n")


def write_table3_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("param,working_value,target_percent\n")
        for name, val, pct in rows:
            fh.write(f"{name},{val!r},{pct}\n")
