"""Desk-scale laboratory for the hyperbolized compressible Navier-Stokes system.

Heat conduction follows Cattaneo's law (relaxed heat flux q), the bulk part of
the stress follows a relaxed Maxwell law (scalar field S2). The package builds
the constitutive layer, the directional flux Jacobian and its quartic wave
structure, entropy functionals with discrete audits, a finite-volume solver
with stiff-relaxation splitting, blow-up functional diagnostics, and scenario
drivers, all behind a JSON-config CLI.
"""

from .thermo import (
    AdmissibleBox,
    ConservedState,
    DomainError,
    ModelParams,
    PrimitiveState,
    UnphysicalStateError,
    conserved_to_primitive,
    internal_energy,
    pressure,
    pressure_partials,
    primitive_to_conserved,
)

__all__ = [
    "AdmissibleBox",
    "ConservedState",
    "DomainError",
    "ModelParams",
    "PrimitiveState",
    "UnphysicalStateError",
    "conserved_to_primitive",
    "internal_energy",
    "pressure",
    "pressure_partials",
    "primitive_to_conserved",
]

__version__ = "0.1.0"
