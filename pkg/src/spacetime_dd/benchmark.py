"""Benchmark problems, the relative error functional, and experiment drivers.

The reference experiment is the manufactured heat problem on (0,1) split at
x = 1/2: source and exact solution vanish for t <= 0 and the error

    e_e = sum_i ||u - u_i^h||_{L2(0,1) (x) H1(Omega_i)}
        / sum_i ||u||_{L2(0,1) (x) H1(Omega_i)}

is evaluated by Gauss quadrature in time and broken element quadrature in
space.  Problems without a closed-form solution report instead the relative
discrete L2 (x) H1 distance of the iterates to the monolithic solution.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import mesh as msh
from . import operators as ops
from . import solvers as slv
from . import temporal as tmp
from .config import ExperimentConfig, MethodSpec
from .errors import SpacetimeDDError
from .nonlinearity import (
    Nonlinearity,
    SourceTerm,
    builtin_adr,
    builtin_heat,
    builtin_quasilinear,
)


def manufactured_problem():
    """The benchmark heat problem: source, exact solution, exact x-derivative.

    Both vanish for t <= 0;  u(t, x) = (exp(-t/2) - exp(-t)) (x^2 - x^3)
    solves u_t - u_xx = f with homogeneous Dirichlet data on (0, 1).
    """

    def f(t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        tp = np.maximum(t, 0.0)
        val = (np.exp(-tp) - 0.5 * np.exp(-tp / 2.0)) * (x**2 - x**3) \
            + (np.exp(-tp) - np.exp(-tp / 2.0)) * (2.0 - 6.0 * x)
        return np.where(t > 0.0, val, 0.0)

    def u(t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        tp = np.maximum(t, 0.0)
        return np.where(t > 0.0, (np.exp(-tp / 2.0) - np.exp(-tp)) * (x**2 - x**3), 0.0)

    def u_dx(t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        tp = np.maximum(t, 0.0)
        return np.where(t > 0.0, (np.exp(-tp / 2.0) - np.exp(-tp)) * (2.0 * x - 3.0 * x**2), 0.0)

    source = SourceTerm(f, zero_for_nonpositive_t=True,
                        tail_sup=lambda T: 8.4 * math.exp(-T / 2.0))
    return source, u, u_dx


def bump_source(t_end: float = 4.0, amplitude: float = 1.0) -> SourceTerm:
    """Smooth source compactly supported in time on (0, t_end)."""

    def f(t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        s = t / t_end
        inside = (s > 0.0) & (s < 1.0)
        ss = np.where(inside, s, 0.5)
        prof = np.exp(4.0 - 1.0 / (ss * (1.0 - ss)))
        return np.where(inside, amplitude * prof * np.sin(np.pi * x), 0.0)

    return SourceTerm(f, zero_for_nonpositive_t=True, tail_sup=lambda T: 0.0)


def error_ee(u_exact: Callable, u_exact_dx: Callable, fields,
             basis: tmp.TemporalBasis, mesh: msh.IntervalMesh,
             time_subintervals: int = 16, time_points: int = 4,
             spatial_points: int = 4) -> float:
    """Relative error of a subdomain field pair against an exact solution.

    Numerator and denominator sum the two subdomain L2-in-time (0,1) tensor
    H1-in-space norms, the paper's benchmark functional.
    """
    tq, tw = ops.composite_gauss(0.0, 1.0, 1.0 / time_subintervals, time_points)
    psi = tmp.basis_values(basis, tq)
    num_sum = 0.0
    den_sum = 0.0
    for region, U in zip((msh.OMEGA1, msh.OMEGA2), fields):
        q = msh.region_quadrature(mesh, region, spatial_points)
        coeff = psi.T @ U
        uh = coeff @ q.phi.T
        uhx = coeff @ q.dphi.T
        ue = np.asarray(u_exact(tq[:, None], q.x[None, :]), dtype=float)
        uex = np.asarray(u_exact_dx(tq[:, None], q.x[None, :]), dtype=float)
        num = tw @ (((ue - uh) ** 2 + (uex - uhx) ** 2) @ q.w)
        den = tw @ ((ue**2 + uex**2) @ q.w)
        num_sum += math.sqrt(max(num, 0.0))
        den_sum += math.sqrt(max(den, 0.0))
    return num_sum / den_sum


def relative_field_distance(problem: slv.DiscreteProblem, fields, ref_fields) -> float:
    """Relative discrete L2 (x) H1 distance between subdomain field pairs."""
    num = 0.0
    den = 0.0
    for region, U, R in zip((msh.OMEGA1, msh.OMEGA2), fields, ref_fields):
        num += problem.field_norm(region, U - R) ** 2
        den += problem.field_norm(region, R) ** 2
    return math.sqrt(num) / math.sqrt(max(den, 1e-300))


def build_nonlinearity(config: ExperimentConfig) -> Nonlinearity:
    if config.problem == "heat_manufactured":
        return builtin_heat()
    if config.problem == "adr":
        a, b, c = config.adr_coefficients
        return builtin_adr(a, b, c, config.interface_pos)
    return builtin_quasilinear(config.gamma, config.interface_pos)


def build_problem(config: ExperimentConfig):
    """Assemble the DiscreteProblem and the per-iteration error functional."""
    basis = tmp.TemporalBasis(config.spectral_bands, config.tau)
    mesh = msh.build_mesh(config.num_elements, config.interface_pos)
    nl = build_nonlinearity(config)
    if config.problem == "heat_manufactured":
        source, u, u_dx = manufactured_problem()
    else:
        source, u, u_dx = bump_source(), None, None
    problem = slv.DiscreteProblem(basis, mesh, nl, source, config.quadrature())
    if u is not None:
        def error_fn(u1, u2):
            return error_ee(u, u_dx, (u1, u2), basis, mesh)
    else:
        error_fn = None
    return problem, error_fn


def initial_guess(config: ExperimentConfig, dim: int, seed: Optional[int]) -> np.ndarray:
    if config.initial_guess == "zero":
        return np.zeros(dim)
    rng = np.random.default_rng(config.seed if seed is None else seed)
    return 0.1 * rng.standard_normal(dim)


def plateau_index(errors, rel_change: float = 1e-3) -> Optional[int]:
    """First 1-based iteration where the error curve flattens."""
    if errors is None:
        return None
    for n in range(len(errors) - 1):
        if errors[n] > 0 and abs(errors[n] - errors[n + 1]) / errors[n] < rel_change:
            return n + 1
    return None


@dataclass
class MethodOutcome:
    spec: MethodSpec
    result: slv.DDResult
    plateau_ee: Optional[float]
    plateau_iteration: Optional[int]
    fitted_rate: Optional[float]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    outcomes: list
    monolithic_field: np.ndarray
    monolithic_ee: Optional[float]

    @property
    def any_diverged(self) -> bool:
        return any(o.result.trace.diverged for o in self.outcomes)


def run_methods(config: ExperimentConfig, seed: Optional[int] = None) -> ExperimentResult:
    """Run every configured interface method plus the monolithic reference."""
    problem, error_fn = build_problem(config)
    cfg0 = config.solver_config(config.methods[0])
    mono = problem.monolithic_solve(cfg0)
    mono_fields = (problem.restrict_to_region(mono, msh.OMEGA1),
                   problem.restrict_to_region(mono, msh.OMEGA2))
    if error_fn is None:
        def error_fn(u1, u2):
            return relative_field_distance(problem, (u1, u2), mono_fields)
        mono_ee = None
    else:
        mono_ee = error_fn(*mono_fields)

    eta0 = initial_guess(config, problem.basis.dim, seed)
    outcomes = []
    for spec in config.methods:
        cfg = config.solver_config(spec)
        progress = []

        def counting_error_fn(u1, u2, _p=progress):
            val = error_fn(u1, u2)
            _p.append(val)
            return val

        try:
            result = slv.run_method(problem, cfg, eta0, counting_error_fn)
        except SpacetimeDDError as exc:
            raise SpacetimeDDError(
                f"method {spec.name} failed at iteration {len(progress) + 1}: {exc}"
            ) from exc
        errors = result.trace.errors
        outcomes.append(MethodOutcome(
            spec=spec,
            result=result,
            plateau_ee=errors[-1] if errors else None,
            plateau_iteration=plateau_index(errors),
            fitted_rate=result.trace.fitted_rate(),
        ))
    return ExperimentResult(config, outcomes, mono, mono_ee)


@dataclass
class SweepRow:
    method: str
    phi: Optional[float]
    s: float
    converged: bool
    iterations: Optional[int]
    fitted_rate: Optional[float]


def run_sweep(config: ExperimentConfig, threads: int = 1,
              seed: Optional[int] = None) -> list:
    """Evaluate a (phi, s) parameter grid; one row per grid point.

    Grid points are independent; with threads > 1 they run on a thread pool
    but rows are always emitted in deterministic grid order.
    """
    sweep = config.sweep
    grid = []
    if sweep.method in ("mdn1", "mdn2"):
        for phi in sweep.phi_values:
            for s in sweep.s_values:
                grid.append((phi, s))
    else:
        grid = [(None, s) for s in sweep.s_values]

    def evaluate(point):
        phi, s = point
        problem, _ = build_problem(config)
        spec = MethodSpec(sweep.method, phi, s)
        cfg = config.solver_config(spec)
        eta0 = initial_guess(config, problem.basis.dim, seed)
        result = slv.run_method(problem, cfg, eta0, None)
        trace = result.trace
        return SweepRow(
            method=sweep.method,
            phi=phi,
            s=s,
            converged=trace.converged,
            iterations=trace.iterations if trace.converged else None,
            fitted_rate=trace.fitted_rate(),
        )

    if threads <= 1:
        return [evaluate(pt) for pt in grid]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(evaluate, grid))
