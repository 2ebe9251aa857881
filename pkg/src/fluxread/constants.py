"""Physical constants (CODATA 2018 / SI 2019 exact values).

All circuit energies downstream are stored as E/h in GHz and times in ns,
so GHz*ns products are dimensionless phases (up to 2*pi).
"""

# Planck constant (J*s), exact by SI definition
H_PLANCK = 6.62607015e-34

# Reduced Planck constant (J*s)
HBAR = 1.054571817e-34

# Elementary charge (C), exact by SI definition
E_CHARGE = 1.602176634e-19

# Reduced flux quantum hbar/2e (Wb); the flux scale that turns fluxes into
# junction phases.  Value: 3.29105976e-16 Wb.
PHI0 = HBAR / (2.0 * E_CHARGE)
