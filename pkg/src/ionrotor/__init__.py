"""Simulator of a planar three-ion crystal acting as a quantum rotor.

The pipeline: equilibrium structures in an anisotropic harmonic trap
(:mod:`.crystal`), normal modes and structural critical points
(:mod:`.modes`), the effective periodic orientation potential
(:mod:`.rotor`), flux-dependent tunnelling spectra and dynamics
(:mod:`.quantum`), occupation thermometry and adiabatic cooling
(:mod:`.thermo`), field and flux bookkeeping (:mod:`.abfield`), and
Monte Carlo synthesis plus fitting of the measurement records
(:mod:`.expsim`).
"""

from .abfield import FieldSetup, LorentzEstimates, flux, lorentz_estimates
from .crystal import (
    IonCrystal,
    TrapConfig,
    enumerate_minima,
    find_equilibrium,
    potential_energy,
    potential_gradient,
    tunnelling_trap,
)
from .errors import ConvergenceError, SingularConfigurationError
from .expsim import (
    FitResult,
    ShotSeries,
    fit_flux_scan,
    fit_time_scan,
    simulate_flux_scan,
    simulate_time_scan,
    weighted_nlls,
)
from .modes import ModeSpectrum, classify_modes, hessian, normal_modes, sweep_confinement
from .quantum import (
    DynamicsModel,
    TunnellingSolution,
    band_levels,
    coherence_from_confinement_noise,
    rate_vs_confinement,
    transition_probability,
    tunnelling_rate_vs_flux,
)
from .rotor import RotorPotential, moment_of_inertia, rotor_potential
from .thermo import (
    ThermalState,
    adiabatic_ramp,
    ground_state_threshold,
    nbar_from_sidebands,
    nbar_from_temperature,
    temperature_from_nbar,
)

__version__ = "0.1.0"
