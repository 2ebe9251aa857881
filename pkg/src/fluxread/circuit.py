"""Circuit parameters and canonical variables of the qubit-loop / resonator pair.

Internal unit system: time in ns, energies as E/h in GHz, junction phase and
resonator flux dimensionless (fluxes measured in units of phi0 = hbar/2e).
Masses m = phi0^2*C and m_r = phi0^2*Cr stay in SI (J*s^2), as do the
canonical momenta (J*s); helper properties convert to the ns/GHz system.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .constants import H_PLANCK, HBAR, PHI0
from .errors import DegenerateCouplingError

# working values of the circuit elements (qubit loop from a flux-biased
# phase-qubit experiment, resonator/mutual chosen to match a 500 MHz readout)
WORKING_VALUES = dict(
    C=700e-15,      # junction capacitance (F)
    L=720e-12,      # qubit loop inductance (H)
    I0=1.7e-6,      # junction critical current (A)
    Cr=4.4e-12,     # resonator capacitance (F)
    Lr=23e-9,       # resonator inductance (H)
    M=1e-9,         # mutual inductance (H)
    phi_p=4.992,    # permanent flux bias (units of phi0)
    n_quanta=10.0,  # mean initial resonator quanta
)


@dataclass(frozen=True)
class PhysicalParams:
    """Circuit element values in SI units; defaults are the working values."""

    C: float = WORKING_VALUES["C"]
    L: float = WORKING_VALUES["L"]
    I0: float = WORKING_VALUES["I0"]
    Cr: float = WORKING_VALUES["Cr"]
    Lr: float = WORKING_VALUES["Lr"]
    M: float = WORKING_VALUES["M"]
    phi_p: float = WORKING_VALUES["phi_p"]
    n_quanta: float = WORKING_VALUES["n_quanta"]

    def validate(self) -> "PhysicalParams":
        for name in ("C", "L", "I0", "Cr", "Lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.M < 0:
            raise ValueError("M must be non-negative")
        if self.M**2 >= self.L * self.Lr:
            raise DegenerateCouplingError(
                f"M^2 = {self.M**2:.4g} >= L*Lr = {self.L * self.Lr:.4g}"
            )
        if self.n_quanta < 0:
            raise ValueError("n_quanta must be non-negative")
        return self

    def with_(self, **kwargs) -> "PhysicalParams":
        return replace(self, **kwargs).validate()


@dataclass(frozen=True)
class DimensionlessParams:
    """Reduced circuit parameters.

    lam, lam_r, mu are inductances in units of L0 = phi0/I0; delta_cap is the
    reduced determinant lam*lam_r - mu^2 of the inductance matrix.  E_J is
    stored as E_J/h in GHz.
    """

    m: float          # qubit angular mass phi0^2*C (J*s^2)
    m_r: float        # resonator angular mass phi0^2*Cr (J*s^2)
    lam: float        # L/L0
    lam_r: float      # Lr/L0
    mu: float         # M/L0
    delta_cap: float  # lam*lam_r - mu^2
    E_J: float        # Josephson energy / h (GHz)
    L0: float         # phi0/I0 (H)
    phi_p: float      # flux bias carried through (dimensionless)
    f_r: float        # bare resonator frequency (GHz)
    n_quanta: float   # mean initial resonator quanta

    @property
    def kinetic_coeff(self) -> float:
        """hbar^2/(2 m h) in GHz: coefficient of -d^2/d(delta)^2 in H_q/h."""
        return HBAR**2 / (2.0 * self.m * H_PLANCK) / 1e9

    @property
    def accel_scale_r(self) -> float:
        """E_J/m_r in 1/ns^2 (resonator force prefactor before 1/delta_cap)."""
        return self.E_J * H_PLANCK * 1e9 / self.m_r * 1e-18

    @property
    def accel_scale_q(self) -> float:
        """E_J/m in 1/ns^2 (classical qubit force prefactor)."""
        return self.E_J * H_PLANCK * 1e9 / self.m * 1e-18

    @property
    def omega_r(self) -> float:
        """Bare resonator angular frequency (rad/ns)."""
        return 2.0 * math.pi * self.f_r


@dataclass(frozen=True)
class CanonicalState:
    """Canonical variables: Q_r = -p_r/phi0, flux_r = phi0*phi_r, etc."""

    phi_r: float                  # resonator flux (dimensionless)
    p_r: float                    # resonator momentum (J*s)
    delta: Optional[float] = None  # junction phase (rad); unset for quantum runs
    p: Optional[float] = None      # qubit momentum (J*s); unset for quantum runs


def to_dimensionless(pp: PhysicalParams) -> DimensionlessParams:
    """Convert physical element values to the reduced parameter set."""
    pp.validate()
    L0 = PHI0 / pp.I0
    lam = pp.L / L0
    lam_r = pp.Lr / L0
    mu = pp.M / L0
    delta_cap = lam * lam_r - mu**2
    if delta_cap <= 0:
        raise DegenerateCouplingError("lam*lam_r - mu^2 <= 0")
    return DimensionlessParams(
        m=PHI0**2 * pp.C,
        m_r=PHI0**2 * pp.Cr,
        lam=lam,
        lam_r=lam_r,
        mu=mu,
        delta_cap=delta_cap,
        E_J=PHI0 * pp.I0 / H_PLANCK / 1e9,
        L0=L0,
        phi_p=pp.phi_p,
        f_r=1.0 / (2.0 * math.pi * math.sqrt(pp.Lr * pp.Cr)) / 1e9,
        n_quanta=pp.n_quanta,
    )


def currents_from_fluxes(
    phi: float, phi_r: float, dp: DimensionlessParams
) -> tuple[float, float]:
    """Supercurrents (I, I_r) in amperes from the dimensionless total fluxes."""
    denom = dp.L0 * dp.delta_cap
    I = PHI0 * (dp.lam_r * (phi - dp.phi_p) - dp.mu * phi_r) / denom
    I_r = PHI0 * (dp.lam * phi_r - dp.mu * (phi - dp.phi_p)) / denom
    return I, I_r


def fluxes_from_currents(
    I: float, I_r: float, dp: DimensionlessParams
) -> tuple[float, float]:
    """Inverse relation: dimensionless total fluxes (phi, phi_r) from currents.

    This is the inversion of the current formulas (the standard coupled-
    inductor flux matrix [[L, M], [M, Lr]]); composing the two maps is the
    identity on (phi, phi_r).
    """
    phi_r = (dp.mu * dp.L0 * I + dp.lam_r * dp.L0 * I_r) / PHI0
    phi = dp.phi_p + (dp.lam * dp.L0 * I + dp.mu * dp.L0 * I_r) / PHI0
    return phi, phi_r


def mr_initial_state(dp: DimensionlessParams, n_quanta: Optional[float] = None) -> CanonicalState:
    """Resonator start: phi_r = 0 with kinetic energy n_quanta*h*f_r.

    The momentum sign is fixed positive so the oscillation phase starts at
    zero and increases.
    """
    nq = dp.n_quanta if n_quanta is None else n_quanta
    if nq < 0:
        raise ValueError("n_quanta must be non-negative")
    p_r = math.sqrt(2.0 * dp.m_r * nq * H_PLANCK * dp.f_r * 1e9)
    return CanonicalState(phi_r=0.0, p_r=p_r)


# --- plain-text key-value configuration ------------------------------------

_CONFIG_KEYS = {
    "C_fF": ("C", 1e-15),
    "L_pH": ("L", 1e-12),
    "I0_uA": ("I0", 1e-6),
    "Cr_pF": ("Cr", 1e-12),
    "Lr_nH": ("Lr", 1e-9),
    "M_nH": ("M", 1e-9),
    "phi_p": ("phi_p", 1.0),
    "n_quanta": ("n_quanta", 1.0),
}


def load_config(path) -> PhysicalParams:
    """Read a flat key-value config document; unknown keys are rejected.

    Format: one `key = value` per line, `#` comments allowed.  Missing keys
    fall back to the working values.
    """
    text = Path(path).read_text()
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^(\w+)\s*[=:]?\s*([^\s]+)$", line)
        if not m:
            raise ValueError(f"config line {lineno}: cannot parse {raw!r}")
        key, value = m.group(1), m.group(2)
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        field, scale = _CONFIG_KEYS[key]
        overrides[field] = float(value) * scale
    return PhysicalParams(**overrides).validate()
