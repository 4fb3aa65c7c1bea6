"""Dressed-state susceptibility, pulse transport and Raman memory for the Cs D1 line.

Frequencies are in units of the natural linewidth gamma, times in 1/gamma.
"""
from .atomic import (
    CESIUM_D1,
    AtomModel,
    CouplingSet,
    build_couplings,
    clebsch_gordan,
    dipole_factor,
    wigner3j,
    wigner6j,
)
from .memory import (
    AtomicState,
    Grid,
    MaxwellBloch,
    MemoryReport,
    ProtocolConfig,
    ResidualCoherenceWarning,
    SolverError,
    evolve,
    retrieve,
    run_protocol,
    store,
)
from .susceptibility import (
    FROZEN,
    ControlField,
    MomentumDistribution,
    PoleProximityError,
    SusceptibilitySpectrum,
    dispersion_swing,
    eit_diagnostics,
    find_at_resonances,
    greens_matrix,
    kramers_kronig_real,
    optical_depth,
    quasi_energies,
    scan_spectrum,
    susceptibility,
    susceptibility_derivative,
)
from .transport import (
    FieldRecord,
    MediumSpec,
    PulseSpec,
    SpectralLeakageWarning,
    group_delay_oracle,
    propagate_pulse,
    pulse_metrics,
    transfer_function,
)

__all__ = [
    "CESIUM_D1",
    "AtomModel",
    "CouplingSet",
    "build_couplings",
    "clebsch_gordan",
    "dipole_factor",
    "wigner3j",
    "wigner6j",
    "AtomicState",
    "Grid",
    "MaxwellBloch",
    "MemoryReport",
    "ProtocolConfig",
    "ResidualCoherenceWarning",
    "SolverError",
    "evolve",
    "retrieve",
    "run_protocol",
    "store",
    "FROZEN",
    "ControlField",
    "MomentumDistribution",
    "PoleProximityError",
    "SusceptibilitySpectrum",
    "dispersion_swing",
    "eit_diagnostics",
    "find_at_resonances",
    "greens_matrix",
    "kramers_kronig_real",
    "optical_depth",
    "quasi_energies",
    "scan_spectrum",
    "susceptibility",
    "susceptibility_derivative",
    "FieldRecord",
    "MediumSpec",
    "PulseSpec",
    "SpectralLeakageWarning",
    "group_delay_oracle",
    "propagate_pulse",
    "pulse_metrics",
    "transfer_function",
]

__version__ = "0.1.0"
