"""Nonoverlapping space-time domain decomposition for parabolic equations.

Spectral-in-time / linear-in-space tensor finite elements over the whole
time axis, with three linearly convergent interface iterations (two modified
Dirichlet-Neumann variants and Robin-Robin) plus a monolithic reference
solver and a benchmark CLI.
"""

from .benchmark import (
    bump_source,
    error_ee,
    manufactured_problem,
    relative_field_distance,
    run_methods,
    run_sweep,
)
from .config import ExperimentConfig, MethodSpec, load_config, parse_config
from .errors import (
    AssumptionViolatedError,
    ConfigError,
    InnerDivergenceError,
    InterfaceNotOnGridError,
    InvalidParameterError,
    LinearSolveError,
    NotLinearError,
    SpacetimeDDError,
    WindowTooSmallError,
)
from .mesh import (
    OMEGA1,
    OMEGA2,
    WHOLE,
    IntervalMesh,
    assemble_spatial,
    build_mesh,
)
from .nonlinearity import (
    Nonlinearity,
    SourceTerm,
    builtin_adr,
    builtin_heat,
    builtin_quasilinear,
    check_assumptions,
    poincare_constant,
)
from .operators import (
    QuadratureSpec,
    assemble_linear,
    hphi,
    hphi_adjoint_apply,
    interface_riesz,
    load_vector,
    nonlinear_residual,
    p1_matrix,
    p2_matrix,
)
from .solvers import (
    DDResult,
    DiscreteProblem,
    InnerConfig,
    IterationTrace,
    SolverConfig,
    mdn_run,
    rr_run,
    run_method,
)
from .temporal import (
    TemporalBasis,
    TemporalGram,
    basis_values,
    fourier_eval,
    gram,
    hilbert_matrix,
    new_basis,
    time_eval,
)

__version__ = "0.1.0"
