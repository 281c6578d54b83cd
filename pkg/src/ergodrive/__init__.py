"""Work extraction from quantum states under Hamiltonian quenches.

Passive states, non-cyclic ergotropy and its decomposition, thermal
references and bounds, optimal correction drives with their energetic cost,
counterdiabatic comparisons for driven two-level systems, and a CLI for
reports and figure sweeps.
"""

from .drives import (DriveSynthesis, PhaseOptResult, PropagatorTrace, Schedule,
                     converged_final_unitary, counterdiabatic_cost, final_unitary,
                     optimize_phases, propagate_u0, smoothstep, smoothstep_dot,
                     synthesize_drive, target_unitary, verify_drive)
from .ergotropy import (Counterexample, Decomposition, DeltaResult, ErgotropyReport,
                        UpperBoundResult, coherent_entropy_identity_residual,
                        counterexample_populations, decompose, delta_noncyclic,
                        full_report, gain_g, noncyclic_ergotropy, upper_bound_delta)
from .errors import (BranchAmbiguity, ConvergenceError, ErgodriveError,
                     ValidationError, VerificationFailed)
from .linalg import (HermEig, UnitaryPhases, dagger, herm_expi, herm_expi_batch,
                     hermitian_eig, principal_log_unitary, reunitarize,
                     trace_distance)
from .states import (DensityMatrix, HamiltonianOp, ThermalSolveResult,
                     coherence_rel_entropy, dephase, energy_populations,
                     majorizes, matrix_from_json, matrix_to_json, passive_energy,
                     passive_state, relative_entropy, solve_beta_for_energy,
                     solve_beta_for_entropy, thermal_populations, thermal_state,
                     von_neumann_entropy)
from .tls import (MuDynParams, ThetaSplit, TlsState, alpha_beta_phase,
                  constmu_final_density, constmu_final_state, counterdiabatic_rate,
                  delta_e_sta, eigs_r, example1_delta, example1_phase_average,
                  example1_thetas, example1_wmin, example2_theta_split,
                  example2_wmin, final_basis, overlap_w, theta1_min, theta2_min)
from .tolerances import DEFAULT_TOLS, Tolerances

__all__ = [name for name in dir() if not name.startswith("_")]
