"""Instantaneous 1D eigenproblem of the qubit loop at fixed resonator flux.

The double-well potential (in units of E_J) is

    u(delta) = (lam_r/2D)(delta - phi_p)^2 - cos(delta) - (mu/D) phi_r delta,

with D = lam*lam_r - mu^2.  Only the left shallow well carries qubit levels;
the eigenproblem is solved on a restricted domain ending at the barrier top
with zero boundary values, which keeps the level identity well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .circuit import DimensionlessParams
from .errors import GridTooCoarse, NearDegeneracy, NotAQubit, WellVanished

#: factor of barrier_height above the barrier at which the left domain edge sits
LEFT_WALL_FACTOR = 10.0
#: decay lengths of padding past the outer classical turning point
TURNING_PAD = 4.0
#: retained-gap guard as a fraction of the local 0-1 splitting
DEGENERACY_GUARD = 0.05


@dataclass(frozen=True)
class WellGeometry:
    """Stationary points of the potential and the barrier height (GHz)."""

    delta_left_min: float
    delta_barrier: float
    delta_right_min: float
    U_left_min: float
    U_barrier: float
    U_right_min: float

    @property
    def barrier_height(self) -> float:
        return self.U_barrier - self.U_left_min


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid controls for the restricted-domain eigensolve."""

    points: int = 2048
    verify: bool = False          # double the grid until converged
    convergence_tol: float = 1e-4  # GHz, max shift of any retained level
    max_points: int = 131072


@dataclass
class InstantSpectrum:
    """Left-well eigenpairs at fixed resonator flux.

    Wavefunctions are real, sampled on the uniform grid, normalized so that
    sum(psi^2)*step = 1, and gauge-fixed (leftmost antinode positive, or sign
    continuity against `gauge_ref` when solved inside a sweep).
    """

    phi_r: float
    grid_start: float
    grid_step: float
    grid_count: int
    energies: np.ndarray       # (n_left,) GHz, ascending, all < U_barrier
    wavefunctions: np.ndarray  # (grid_count, n_left)
    n_left: int
    geometry: WellGeometry
    grid: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.grid is None:
            self.grid = self.grid_start + self.grid_step * np.arange(self.grid_count)


def potential(delta, phi_r: float, dp: DimensionlessParams):
    """Potential energy U/h in GHz at junction phase `delta` (vectorized)."""
    d = np.asarray(delta, dtype=float)
    u = (
        (dp.lam_r / (2.0 * dp.delta_cap)) * (d - dp.phi_p) ** 2
        - np.cos(d)
        - (dp.mu / dp.delta_cap) * phi_r * d
    )
    return dp.E_J * u


def potential_derivative(delta, phi_r: float, dp: DimensionlessParams):
    """dU/d(delta) in GHz/rad (vectorized)."""
    d = np.asarray(delta, dtype=float)
    up = np.sin(d) + (dp.lam_r / dp.delta_cap) * (d - dp.phi_p) - (dp.mu / dp.delta_cap) * phi_r
    return dp.E_J * up


def well_geometry(phi_r: float, dp: DimensionlessParams) -> WellGeometry:
    """Locate the left minimum, barrier top and right minimum.

    Stationary points are bracketed on a dense scan of U'(delta) and refined
    by root finding to |U'| below 1e-10*E_J.  Raises WellVanished when the
    left minimum / barrier pair does not exist at this flux.
    """
    lo = dp.phi_p - 2.2 * np.pi
    hi = dp.phi_p + np.pi
    xs = np.linspace(lo, hi, 4001)
    up = potential_derivative(xs, phi_r, dp)
    sign_change = np.nonzero(np.diff(np.sign(up)) != 0)[0]
    roots = []
    for i in sign_change:
        r = brentq(
            lambda d: potential_derivative(d, phi_r, dp),
            xs[i], xs[i + 1], xtol=1e-14, rtol=8.9e-16,
        )
        roots.append(r)
    curv = lambda d: np.cos(d) + dp.lam_r / dp.delta_cap
    minima = sorted(r for r in roots if curv(r) > 0)
    maxima = [r for r in roots if curv(r) < 0]
    if len(minima) < 2 or not maxima:
        raise WellVanished(phi_r)
    barriers = [b for b in maxima if minima[0] < b < minima[-1]]
    if not barriers:
        raise WellVanished(phi_r)
    d_left, d_bar, d_right = minima[0], barriers[0], minima[-1]
    return WellGeometry(
        delta_left_min=d_left,
        delta_barrier=d_bar,
        delta_right_min=d_right,
        U_left_min=float(potential(d_left, phi_r, dp)),
        U_barrier=float(potential(d_bar, phi_r, dp)),
        U_right_min=float(potential(d_right, phi_r, dp)),
    )


def _left_domain_edge(geom: WellGeometry, phi_r: float, dp: DimensionlessParams) -> float:
    """Left edge of the restricted domain.

    Primary rule: the point left of the well where U first exceeds
    U_barrier + LEFT_WALL_FACTOR*barrier_height.  Alternative rule: the outer
    classical turning point at the barrier energy padded by TURNING_PAD decay
    lengths.  The tighter (larger) of the two is used.
    """
    target = geom.U_barrier + LEFT_WALL_FACTOR * geom.barrier_height
    x = geom.delta_left_min
    while float(potential(x, phi_r, dp)) < target:
        x -= 0.05
    edge_threshold = brentq(
        lambda d: float(potential(d, phi_r, dp)) - target,
        x, geom.delta_left_min, xtol=1e-12,
    )
    # outer turning point at the barrier energy
    x = geom.delta_left_min
    while float(potential(x, phi_r, dp)) < geom.U_barrier:
        x -= 0.05
    turning = brentq(
        lambda d: float(potential(d, phi_r, dp)) - geom.U_barrier,
        x, geom.delta_left_min, xtol=1e-12,
    )
    decay_len = np.sqrt(dp.kinetic_coeff / geom.barrier_height)
    return max(edge_threshold, turning - TURNING_PAD * decay_len)


def _solve_on_grid(grid: np.ndarray, U: np.ndarray, kinetic_coeff: float,
                   e_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Second-order central-difference eigensolve with zero boundary values.

    Returns all eigenpairs with E < e_max; wavefunctions are normalized in
    the discrete inner product sum(psi_k*psi_m)*dx = delta_km.
    """
    dx = grid[1] - grid[0]
    t = kinetic_coeff / dx**2
    diag = 2.0 * t + U
    off = np.full(len(grid) - 1, -t)
    w, v = eigh_tridiagonal(diag, off, select="v",
                            select_range=(float(U.min()) - 1.0, e_max))
    return w, v / np.sqrt(dx)


def _fix_gauge(grid: np.ndarray, psi: np.ndarray,
               ref: Optional[InstantSpectrum]) -> np.ndarray:
    """Sign-fix eigenvectors: continuity vs `ref`, else leftmost antinode > 0."""
    dx = grid[1] - grid[0]
    for m in range(psi.shape[1]):
        col = psi[:, m]
        if ref is not None and m < ref.n_left:
            ref_col = np.interp(grid, ref.grid, ref.wavefunctions[:, m],
                                left=0.0, right=0.0)
            if np.sum(ref_col * col) * dx < 0:
                psi[:, m] = -col
            continue
        amax = np.abs(col).max()
        above = np.nonzero(np.abs(col) > 0.05 * amax)[0]
        i0 = above[0]
        # walk to the first local extremum of |psi|
        while i0 + 1 < len(col) and abs(col[i0 + 1]) > abs(col[i0]):
            i0 += 1
        if col[i0] < 0:
            psi[:, m] = -col
    return psi


def solve_spectrum(
    phi_r: float,
    dp: DimensionlessParams,
    grid: GridSpec = GridSpec(),
    gauge_ref: Optional[InstantSpectrum] = None,
) -> InstantSpectrum:
    """Solve the restricted-domain eigenproblem at fixed resonator flux.

    Retains every level below the barrier top; raises WellVanished when no
    left well exists and GridTooCoarse when refinement (grid.verify) fails to
    converge the retained levels.
    """
    geom = well_geometry(phi_r, dp)
    d_a = _left_domain_edge(geom, phi_r, dp)
    d_b = geom.delta_barrier
    points = grid.points

    def solve_at(n):
        g = np.linspace(d_a, d_b, n)
        U = potential(g, phi_r, dp)
        w, v = _solve_on_grid(g, U, dp.kinetic_coeff, geom.U_barrier)
        return g, w, v

    g, w, v = solve_at(points)
    if grid.verify:
        while True:
            if 2 * points > grid.max_points:
                raise GridTooCoarse(
                    f"still not converged at {points} points (phi_r={phi_r:.4g})"
                )
            g2, w2, v2 = solve_at(2 * points)
            n = min(len(w), len(w2))
            if n and np.max(np.abs(w[:n] - w2[:n])) <= grid.convergence_tol and len(w) == len(w2):
                break
            points *= 2
            g, w, v = g2, w2, v2

    v = _fix_gauge(g, v, gauge_ref)
    return InstantSpectrum(
        phi_r=phi_r,
        grid_start=g[0],
        grid_step=g[1] - g[0],
        grid_count=len(g),
        energies=w,
        wavefunctions=v,
        n_left=len(w),
        geometry=geom,
        grid=g,
    )


def qubit_frequency(spec: InstantSpectrum) -> float:
    """0-1 transition frequency (E1 - E0)/h in GHz."""
    if spec.n_left < 2:
        raise NotAQubit(f"only {spec.n_left} level(s) in the left well")
    return float(spec.energies[1] - spec.energies[0])


def expected_delta(spec: InstantSpectrum, n: int) -> float:
    """Quantum average of the junction phase in level n."""
    if not 0 <= n < spec.n_left:
        raise IndexError(f"level {n} out of range (n_left={spec.n_left})")
    psi = spec.wavefunctions[:, n]
    return float(np.sum(psi * psi * spec.grid) * spec.grid_step)


def dipole_matrix(spec: InstantSpectrum, k: int, m: int) -> float:
    """Matrix element <psi_k| delta |psi_m> (rad); symmetric in (k, m)."""
    for idx in (k, m):
        if not 0 <= idx < spec.n_left:
            raise IndexError(f"level {idx} out of range (n_left={spec.n_left})")
    pk = spec.wavefunctions[:, k]
    pm = spec.wavefunctions[:, m]
    return float(np.sum(pk * pm * spec.grid) * spec.grid_step)


def dump_csv(spec: InstantSpectrum, path) -> None:
    """Write grid, potential-free eigendata as CSV (debug/plotting dump)."""
    header = [
        f"# phi_r = {spec.phi_r!r}",
        f"# n_left = {spec.n_left}",
        f"# barrier_GHz = {spec.geometry.U_barrier!r}",
        "# energies_GHz = " + ",".join(repr(float(e)) for e in spec.energies),
        "delta," + ",".join(f"psi_{m}" for m in range(spec.n_left)),
    ]
    rows = np.column_stack([spec.grid, spec.wavefunctions])
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


# --- tabulation along a resonator-flux sweep --------------------------------

@dataclass
class SpectralTable:
    """Spectra and dipole matrices tabulated on a uniform phi_r grid.

    Levels are NaN-padded where they do not exist; `exit_phi[m]` is the last
    grid flux at which level m is still below the barrier.  Gauge continuity
    is enforced across the grid so the dipole columns interpolate smoothly;
    sparse anchor spectra are kept so the same gauge can be regenerated at
    arbitrary flux (wavefunction reconstruction, oracle comparisons).
    """

    dp: DimensionlessParams
    phi: np.ndarray        # (npts,), ascending, uniform
    energies: np.ndarray   # (npts, K) GHz
    dipoles: np.ndarray    # (npts, K, K) rad
    barrier: np.ndarray    # (npts,) GHz
    n_left: np.ndarray     # (npts,) int
    exit_phi: np.ndarray   # (K,)
    anchors: list = field(default_factory=list, repr=False)

    @property
    def K(self) -> int:
        return self.energies.shape[1]

    def level_range(self, n: int) -> tuple[float, float]:
        """Flux interval on which level n exists."""
        ok = ~np.isnan(self.energies[:, n])
        if not ok.any():
            raise LevelLostInTable(n)
        return float(self.phi[ok][0]), float(self.phi[ok][-1])

    def solve_in_gauge(self, phi_r: float, grid: GridSpec = GridSpec()) -> InstantSpectrum:
        """Direct solve at arbitrary flux, sign-aligned with the table gauge."""
        if not self.anchors:
            return solve_spectrum(phi_r, self.dp, grid)
        nearest = min(self.anchors, key=lambda s: abs(s.phi_r - phi_r))
        return solve_spectrum(phi_r, self.dp, grid, gauge_ref=nearest)


class LevelLostInTable(KeyError):
    pass


def tabulate_spectra(
    dp: DimensionlessParams,
    phi_lo: float,
    phi_hi: float,
    npts: Optional[int] = None,
    grid: GridSpec = GridSpec(),
    degeneracy_guard: bool = True,
    anchor_stride: int = 8,
) -> SpectralTable:
    """Solve the spectrum on a uniform flux grid with continuity gauge.

    Also asserts the monotone-response property: the level count changes by
    at most one between adjacent grid points.
    """
    if npts is None:
        npts = max(97, int(round((phi_hi - phi_lo) / 0.055)) + 1)
    phis = np.linspace(phi_lo, phi_hi, npts)
    specs: list[Optional[InstantSpectrum]] = []
    prev = None
    for p in phis:
        try:
            s = solve_spectrum(float(p), dp, grid, gauge_ref=prev)
        except WellVanished:
            s = None
        specs.append(s)
        if s is not None:
            prev = s
    nlev = np.array([0 if s is None else s.n_left for s in specs])
    if np.any(np.abs(np.diff(nlev[nlev > 0])) > 1):
        raise GridTooCoarse("level count changes by more than one between grid points")
    K = int(nlev.max())
    if K == 0:
        raise WellVanished(phi_lo, "no left well anywhere in the tabulated range")
    E = np.full((npts, K), np.nan)
    D = np.full((npts, K, K), np.nan)
    Ub = np.full(npts, np.nan)
    for i, s in enumerate(specs):
        if s is None:
            continue
        k = s.n_left
        E[i, :k] = s.energies
        psi = s.wavefunctions
        D[i, :k, :k] = (psi.T * s.grid) @ psi * s.grid_step
        Ub[i] = s.geometry.U_barrier
        if degeneracy_guard and k >= 2:
            gaps = np.diff(s.energies)
            guard = DEGENERACY_GUARD * (s.energies[1] - s.energies[0])
            bad = np.nonzero(gaps < guard)[0]
            if bad.size:
                j = int(bad[0])
                raise NearDegeneracy(j, j + 1, float(phis[i]), float(gaps[j]))
    exit_phi = np.empty(K)
    for m in range(K):
        ok = np.nonzero(~np.isnan(E[:, m]))[0]
        exit_phi[m] = phis[ok[-1]] if ok.size else phis[0] - 1.0
    anchors = [s for i, s in enumerate(specs)
               if s is not None and i % anchor_stride == 0]
    return SpectralTable(dp=dp, phi=phis, energies=E, dipoles=D,
                         barrier=Ub, n_left=nlev, exit_phi=exit_phi,
                         anchors=anchors)


def validate_table(table: SpectralTable, n_points: int = 7,
                   energy_rtol: float = 1e-6, dipole_rtol: float = 1e-4) -> float:
    """Check cubic interpolation of the table against direct solves.

    Compares energies (relative) and dipole elements (relative with an
    absolute floor) at held-out midpoints; returns the worst energy error.
    """
    from scipy.interpolate import CubicSpline

    ok_all = np.nonzero(table.n_left >= 2)[0]
    idx = ok_all[np.linspace(1, len(ok_all) - 2, n_points).astype(int)]
    worst = 0.0
    for i in idx:
        pmid = 0.5 * (table.phi[i] + table.phi[i + 1])
        if table.n_left[i + 1] < 2:
            continue
        s = solve_spectrum(float(pmid), table.dp)
        kk = min(int(min(table.n_left[i], table.n_left[i + 1])), s.n_left)
        sl = slice(max(0, i - 3), min(len(table.phi), i + 4))
        good = ~np.isnan(table.energies[sl, :kk]).any(axis=1)
        esp = CubicSpline(table.phi[sl][good], table.energies[sl, :kk][good])
        err = np.max(np.abs(esp(pmid) - s.energies[:kk]) / np.abs(s.energies[:kk]))
        worst = max(worst, float(err))
        if err > energy_rtol:
            raise GridTooCoarse(f"energy interpolation error {err:.2e} at phi_r={pmid:.4g}")
        dsp = CubicSpline(table.phi[sl][good], table.dipoles[sl, :kk, :kk][good])
        dref = np.array([[dipole_matrix(s, a, b) for b in range(kk)] for a in range(kk)])
        derr = np.max(np.abs(dsp(pmid) - dref) / np.maximum(np.abs(dref), 1e-3))
        if derr > dipole_rtol:
            raise GridTooCoarse(f"dipole interpolation error {derr:.2e} at phi_r={pmid:.4g}")
    return worst
