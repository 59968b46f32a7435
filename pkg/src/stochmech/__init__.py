"""Trajectory-level simulation of quantum dynamics via conservative diffusions.

The package builds the two drift fields of a wavefunction (current velocity v
and osmotic velocity u), integrates the matching forward and backward
diffusions, and provides estimators that recover dynamics, spectra and energies
from the sampled paths alone.
"""

__version__ = "1.0.0"

from .analysis import (AutocorrelationResult, FirstPassageResult, Histogram,
                       SpectrumEstimate, TwoPointCorrelation, autocorrelation,
                       empirical_density, first_passage_times,
                       fit_corner_frequency, ks_distance,
                       power_spectral_density)
from .coherent import (CoherentStateSpec, classical_trajectory,
                       coherent_velocity_fields, coherent_wavefield,
                       coherent_wavefunction)
from .config import (ScenarioConfig, bundled_scenario_text, parse_config,
                     render_config)
from .errors import (BoundaryLeakageError, ConfigError, FieldCoverageError,
                     GridTruncationError, NoBracketError, NodeEncounteredError,
                     StabilityGuardError, StochmechError)
from .grid import GridSpec, PhysicalParams, build_grid
from .kinematics import (MeanDerivativeResult, NewtonResidualResult, SdeConfig,
                         TrajectoryEnsemble, interpolate_table,
                         interpolate_velocity,
                         mean_derivative, nelson_newton_residual,
                         sample_backward, sample_forward,
                         sample_initial_positions)
from .madelung import (MadelungFields, madelung_decompose, madelung_residuals,
                       make_stationary_fields)
from .potentials import (BarrierPotential, DoubleWellPotential, FreePotential,
                         HarmonicPotential, check_force_consistency,
                         make_potential)
from .runner import RunResult, replay, run_scenario
from .schrodinger import gaussian_packet, propagate_crank_nicolson
from .stationary import (StationarySolution, density_from_osmotic,
                         diagonalize_ground, solve_stationary_ground,
                         verify_stationary_by_sampling)
from .variational import (ActionEstimate, ActionFunctionalSpec, EnergySeries,
                          Perturbation, ProbeResult, estimate_action_functionals,
                          estimate_mean_energy, saddle_point_probe)
from .wavefield import WaveField

__all__ = [
    "__version__",
    "ActionEstimate", "ActionFunctionalSpec", "AutocorrelationResult",
    "BarrierPotential", "BoundaryLeakageError", "CoherentStateSpec",
    "ConfigError", "DoubleWellPotential", "EnergySeries", "FieldCoverageError",
    "FirstPassageResult", "FreePotential", "GridSpec", "GridTruncationError",
    "HarmonicPotential", "Histogram", "MadelungFields", "MeanDerivativeResult",
    "NewtonResidualResult", "NoBracketError", "NodeEncounteredError",
    "Perturbation", "PhysicalParams", "ProbeResult", "RunResult",
    "ScenarioConfig", "SdeConfig", "SpectrumEstimate", "StabilityGuardError",
    "StationarySolution", "StochmechError", "TrajectoryEnsemble",
    "TwoPointCorrelation", "WaveField",
    "autocorrelation", "build_grid", "bundled_scenario_text",
    "check_force_consistency", "classical_trajectory",
    "coherent_velocity_fields", "coherent_wavefield", "coherent_wavefunction",
    "density_from_osmotic", "diagonalize_ground", "empirical_density",
    "estimate_action_functionals", "estimate_mean_energy",
    "first_passage_times", "fit_corner_frequency", "gaussian_packet",
    "interpolate_table", "interpolate_velocity", "ks_distance", "madelung_decompose",
    "madelung_residuals", "make_potential", "make_stationary_fields",
    "mean_derivative", "nelson_newton_residual", "parse_config",
    "power_spectral_density", "propagate_crank_nicolson", "render_config",
    "replay", "run_scenario", "sample_backward", "sample_forward",
    "sample_initial_positions", "saddle_point_probe",
    "solve_stationary_ground", "verify_stationary_by_sampling",
]
