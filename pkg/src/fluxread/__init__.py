"""Adiabatic non-demolition readout of a flux-biased phase qubit.

A quantum Josephson loop is coupled through a mutual inductance to a
quasi-classical LC resonator; the resonator's oscillation phase picks up a
qubit-state-dependent shift, which is the readout signal.  The package
solves the instantaneous left-well spectra, drives the classical resonator
with the adiabatic back-action, evolves the qubit amplitudes in the moving
eigenbasis, and reproduces the summary tables and reproducibility targets.
"""

__version__ = "0.1.0"

from .circuit import (CanonicalState, DimensionlessParams, PhysicalParams,
                      currents_from_fluxes, fluxes_from_currents, load_config,
                      mr_initial_state, to_dimensionless)
from .errors import (CurveRangeExceeded, DegenerateCouplingError,
                     FluxreadError, GridTooCoarse, LevelLost, NearDegeneracy,
                     NoCrossing, NotAQubit, StepTooCoarse, WellVanished)
from .spectrum import (GridSpec, InstantSpectrum, SpectralTable, WellGeometry,
                       dipole_matrix, expected_delta, potential,
                       qubit_frequency, solve_spectrum, tabulate_spectra,
                       well_geometry)
from .resonator import (PhaseObservables, ResonatorTrajectory, ResponseCurve,
                        build_response_curve, classical_hamiltonian,
                        effective_energy, extract_phase,
                        integrate_full_classical, integrate_resonator,
                        phase_observables, reference_trajectory)
from .dynamics import (AmplitudeTrajectory, FidelityReport, averaged_fidelity,
                       evolve_amplitudes, fidelity_report,
                       instantaneous_fidelity, nonadiabatic_couplings,
                       oracle_overlap, reconstruct_state, splitstep_oracle)
from .analysis import (SweepRow, UncertaintyBudget, decay_adjusted_fidelity,
                       pipeline_point, reproducibility_target, run_point,
                       sweep, t1_requirement, table2_rows, table3_rows,
                       uncertainty_budget)
