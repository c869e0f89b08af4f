"""Numerical laboratory for the 2D attractive condensate with Newtonian
self-gravity: the constrained energy, its ground states on a periodic
grid, the critical contact strength, and the collapse scaling laws as
the interaction approaches criticality.
"""
from .asymptotics import (
    GravityClassification,
    Prediction,
    SweepOptions,
    SweepResult,
    SweepRow,
    choose_box,
    predict,
    reduced_energy,
    regime_for_g,
    rescaled_profile_error,
    sweep,
    trial_upper_bound,
)
from .cli import load_config, load_field, main, save_field
from .energy import (
    ELResult,
    EnergyBreakdown,
    ModelParams,
    el_residual,
    evaluate,
    gradient,
    hamiltonian_apply,
)
from .gravity import (
    GravityKernel,
    build_kernel,
    gravity_energy,
    gravity_potential,
    origin_cell_average,
    potential_of_density,
)
from .grid import (
    Field,
    Grid2D,
    coords,
    dilate,
    evaluate_trig,
    get_fft_workers,
    kinetic_energy,
    make_field,
    make_grid,
    mass,
    mesh,
    normalize,
    set_fft_workers,
)
from .groundstate import (
    A_STAR_REFERENCE,
    Q0Constants,
    RadialProfile,
    a_star,
    a_star_grid,
    ode_residual,
    profile_kinetic,
    profile_mass,
    profile_quartic,
    q0_constants,
    q0_on_grid,
    radial_moment,
    solve_Q,
)
from .minimizer import (
    GaussianSeed,
    MinimizeOptions,
    MinimizerResult,
    Q0Seed,
    init_field,
    minimize,
)
from .potentials import (
    Periodic,
    SingularSet,
    SingularSum,
    SingularTerm,
    Trap,
    Zero,
    cell_average_power,
    potential_energy,
    sample_potential,
    singular_set,
)

__version__ = "0.1.0"

__all__ = [
    "A_STAR_REFERENCE",
    "ELResult",
    "EnergyBreakdown",
    "Field",
    "GaussianSeed",
    "GravityClassification",
    "GravityKernel",
    "Grid2D",
    "MinimizeOptions",
    "MinimizerResult",
    "ModelParams",
    "Periodic",
    "Prediction",
    "Q0Constants",
    "Q0Seed",
    "RadialProfile",
    "SingularSet",
    "SingularSum",
    "SingularTerm",
    "SweepOptions",
    "SweepResult",
    "SweepRow",
    "Trap",
    "Zero",
    "a_star",
    "a_star_grid",
    "build_kernel",
    "cell_average_power",
    "choose_box",
    "coords",
    "dilate",
    "el_residual",
    "evaluate",
    "evaluate_trig",
    "get_fft_workers",
    "gradient",
    "gravity_energy",
    "gravity_potential",
    "hamiltonian_apply",
    "init_field",
    "kinetic_energy",
    "load_config",
    "load_field",
    "main",
    "make_field",
    "make_grid",
    "mass",
    "mesh",
    "minimize",
    "normalize",
    "ode_residual",
    "origin_cell_average",
    "potential_energy",
    "potential_of_density",
    "predict",
    "reduced_energy",
    "profile_kinetic",
    "profile_mass",
    "profile_quartic",
    "q0_constants",
    "q0_on_grid",
    "radial_moment",
    "regime_for_g",
    "rescaled_profile_error",
    "sample_potential",
    "save_field",
    "set_fft_workers",
    "singular_set",
    "solve_Q",
    "sweep",
    "trial_upper_bound",
    "__version__",
]
