"""2D spectral solver for the self-consistent average-field gauge functional,
with closed-form smeared Coulomb kernels and a desk-scale many-body harness."""

__version__ = "0.1.0"

from .fields import (
    ComplexField,
    Grid2D,
    RealField,
    VectorField2,
    covariant_derivative,
    inner_product,
    load_field,
    norm,
    normalize,
    save_field,
    spectral_gradient,
)
from .meanfield import (
    MinimizeResult,
    ModelParams,
    SolverConfig,
    current_density,
    energy_af,
    gradient_af,
    minimize_af,
)
from .potentials import (
    GaugeSpec,
    TrapSpec,
    build_gauge,
    build_trap,
    disc_form_factor,
    induced_gauge_field,
    smeared_log_gradient,
    smeared_log_potential,
)

__all__ = [
    "ComplexField",
    "Grid2D",
    "RealField",
    "VectorField2",
    "GaugeSpec",
    "TrapSpec",
    "ModelParams",
    "SolverConfig",
    "MinimizeResult",
    "inner_product",
    "norm",
    "normalize",
    "spectral_gradient",
    "covariant_derivative",
    "save_field",
    "load_field",
    "smeared_log_potential",
    "smeared_log_gradient",
    "disc_form_factor",
    "induced_gauge_field",
    "build_trap",
    "build_gauge",
    "energy_af",
    "gradient_af",
    "minimize_af",
    "current_density",
    "__version__",
]
