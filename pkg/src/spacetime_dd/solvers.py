"""Subdomain solves, Steklov-Poincare applications, and the outer iterations.

A DiscreteProblem bundles one discretization (temporal basis, mesh,
coefficient pair, source, quadrature) and caches assembled matrices and
factorizations so that repeated subdomain solves inside the outer iterations
are triangular-solve cheap.  Affine coefficient pairs take sparse direct
paths; genuinely nonlinear pairs are solved by the damped rotated inner
iteration

    u <- u + s_inner * G^{-1} (H_phi)^* (rhs - residual(u)),

with the SPD energy matrix G = D_pp (x) M + T (x) K of the region, which
converges geometrically for Lipschitz, uniformly monotone pairs.

All outer methods solve the interface equation S_1 eta + S_2 eta = 0:

    MDN:  eta <- eta + s P^{-1} (H_phi)^* (0 - S eta),   P in {P1, P2}
    RR:   eta <- (sJ + S_2)^{-1} (sJ - S_1)(sJ + S_1)^{-1} (sJ - S_2) eta.

Shared problem state is read-only during an outer step, so independent
subdomain applications may run concurrently.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.linalg import splu

from . import mesh as msh
from . import operators as ops
from . import temporal as tmp
from .errors import (
    InnerDivergenceError,
    InvalidParameterError,
    LinearSolveError,
)
from .nonlinearity import Nonlinearity, SourceTerm

METHODS = ("mdn1", "mdn2", "rr", "monolithic")


@dataclass(frozen=True)
class InnerConfig:
    """Parameters of the rotated inner iteration for quasilinear subdomain solves."""

    tol: float = 1e-8
    max_iter: int = 2000
    s: float = 0.5
    phi: float = math.pi / 4


@dataclass(frozen=True)
class SolverConfig:
    method: str = "mdn1"
    phi: float = 0.02 * math.pi
    s: float = 0.55
    tol: float = 1e-10
    max_outer: int = 60
    inner: InnerConfig = field(default_factory=InnerConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"unknown method {self.method!r}")
        if self.method in ("mdn1", "mdn2") and not 0.0 < self.phi < math.pi / 2:
            raise InvalidParameterError(f"MDN needs phi in (0, pi/2), got {self.phi}")
        if self.method != "monolithic" and not self.s > 0.0:
            raise InvalidParameterError(f"need s > 0, got {self.s}")


@dataclass
class IterationTrace:
    """Per-iteration interface increment/residual norms and optional errors."""

    increments: list
    residual_norms: list
    errors: Optional[list] = None
    converged: bool = False
    diverged: bool = False
    stagnated: bool = False

    @property
    def iterations(self) -> int:
        return len(self.increments)

    def fitted_rate(self) -> Optional[float]:
        """Least-squares contraction factor from log increments, skipping the
        transient first step; needs at least 4 recorded iterations."""
        if len(self.increments) < 4:
            return None
        inc = np.asarray(self.increments[1:], dtype=float)
        n = np.arange(2, len(self.increments) + 1, dtype=float)
        keep = inc > 0.0
        if keep.sum() < 3:
            return None
        slope = np.polyfit(n[keep], np.log(inc[keep]), 1)[0]
        return float(np.exp(slope))


@dataclass
class DDResult:
    eta: np.ndarray
    fields: tuple
    trace: IterationTrace


class _RegionBlock:
    """Per-region assembled matrices and factorization caches."""

    def __init__(self, problem, region):
        p = problem
        self.region = region
        self.nodes = p.mesh.region_nodes(region)
        self.ndof = len(self.nodes)
        self.iface = p.mesh.interface_local(region)
        self.interior = p.mesh.interior_local(region)
        mats = msh.assemble_spatial(p.mesh, region)
        self.mass, self.stiffness = mats.mass, mats.stiffness
        self.cache = ops.build_residual_cache(region, p.nl, p.basis, p.mesh, p.quad)
        self.load = (ops.load_vector(region, p.source, p.basis, p.mesh, p.quad)
                     if p.source is not None else np.zeros((p.basis.dim, self.ndof)))
        self._problem = p
        self._a_ii_lu = None
        self._robin_lu = {}
        self._g = {}
        self._g_lu = {}
        self._g_robin = {}

    def _sub(self, mat, rows, cols):
        return mat[rows, :][:, cols]

    def _kron_pair(self, t_a, s_a, t_b, s_b, cols):
        return (sp.kron(t_a, self._sub(s_a, cols, cols))
                + sp.kron(t_b, self._sub(s_b, cols, cols))).tocsc()

    def a_interior_lu(self):
        if self._a_ii_lu is None:
            p = self._problem
            a_ii = self._kron_pair(p.d_pm.T, self.mass, p.t_mass,
                                   self.cache.s_aff, self.interior)
            try:
                self._a_ii_lu = splu(a_ii)
            except RuntimeError as exc:
                raise LinearSolveError(
                    f"region {self.region} interior factorization failed: {exc}") from exc
        return self._a_ii_lu

    def robin_lu(self, s):
        if s not in self._robin_lu:
            p = self._problem
            all_cols = np.arange(self.ndof)
            a = self._kron_pair(p.d_pm.T, self.mass, p.t_mass, self.cache.s_aff, all_cols)
            a = (a + s * sp.kron(p.t_mass, self._interface_unit())).tocsc()
            try:
                self._robin_lu[s] = splu(a)
            except RuntimeError as exc:
                raise LinearSolveError(
                    f"region {self.region} Robin factorization failed: {exc}") from exc
        return self._robin_lu[s]

    def _interface_unit(self):
        e = sp.lil_matrix((self.ndof, self.ndof))
        e[self.iface, self.iface] = 1.0
        return e.tocsr()

    def g_pieces(self, cols_key):
        """SPD inner-solver matrix G = D_pp (x) M + T (x) K on a column subset."""
        if cols_key not in self._g:
            p = self._problem
            cols = self.interior if cols_key == "interior" else np.arange(self.ndof)
            g = self._kron_pair(p.d_pp, self.mass, p.t_mass, self.stiffness, cols)
            self._g[cols_key] = g.tocsr()
            try:
                self._g_lu[cols_key] = splu(g)
            except RuntimeError as exc:
                raise LinearSolveError(
                    f"region {self.region} G factorization failed: {exc}") from exc
        return self._g[cols_key], self._g_lu[cols_key]

    def g_robin_pieces(self, s):
        if s not in self._g_robin:
            p = self._problem
            all_cols = np.arange(self.ndof)
            g = self._kron_pair(p.d_pp, self.mass, p.t_mass, self.stiffness, all_cols)
            g = (g + s * sp.kron(p.t_mass, self._interface_unit())).tocsr()
            try:
                lu = splu(g.tocsc())
            except RuntimeError as exc:
                raise LinearSolveError(
                    f"region {self.region} Robin G factorization failed: {exc}") from exc
            self._g_robin[s] = (g, lu)
        return self._g_robin[s]


class DiscreteProblem:
    """One discretized problem instance with shared assembly caches."""

    def __init__(self, basis: tmp.TemporalBasis, mesh: msh.IntervalMesh,
                 nl: Nonlinearity, source: Optional[SourceTerm] = None,
                 quad: Optional[ops.QuadratureSpec] = None):
        self.basis = basis
        self.mesh = mesh
        self.nl = nl
        self.source = source
        self.quad = quad or ops.QuadratureSpec()
        self.d_pm = tmp.gram(basis, "half_plus_minus").matrix
        self.d_pp = tmp.gram(basis, "half_plus_plus").matrix
        self.t_mass = tmp.gram(basis, "mass").matrix
        self.j_matrix = self.t_mass.toarray()
        self._j_cho = cho_factor(self.j_matrix)
        self._blocks = {}
        self._p_mats = {}
        self._p_chos = {}

    # -- assembly access -------------------------------------------------

    def block(self, region: int) -> _RegionBlock:
        if region not in self._blocks:
            self._blocks[region] = _RegionBlock(self, region)
        return self._blocks[region]

    def load(self, region: int) -> np.ndarray:
        return self.block(region).load

    def p_matrix(self, which: str) -> np.ndarray:
        if which not in self._p_mats:
            if which == "p1":
                self._p_mats[which] = ops.p1_matrix(self.basis, self.mesh)
            elif which == "p2":
                self._p_mats[which] = ops.p2_matrix(self.basis, self.mesh)
            else:
                raise InvalidParameterError(f"unknown preconditioner {which!r}")
        return self._p_mats[which]

    def p_cholesky(self, which: str):
        if which not in self._p_chos:
            try:
                self._p_chos[which] = cho_factor(self.p_matrix(which))
            except np.linalg.LinAlgError as exc:
                raise LinearSolveError(f"{which} is not SPD: {exc}") from exc
        return self._p_chos[which]

    # -- residuals and norms ----------------------------------------------

    def residual(self, region: int, U: np.ndarray) -> np.ndarray:
        """Dual array of the region form applied to U (load not subtracted)."""
        blk = self.block(region)
        if self.nl.is_affine:
            return ops.apply_affine(U, self.d_pm, self.t_mass, blk.mass, blk.cache.s_aff)
        return ops.nonlinear_residual(region, self.nl, self.basis, self.mesh, U,
                                      self.quad, cache=blk.cache)

    def j_norm(self, eta: np.ndarray) -> float:
        return float(np.sqrt(max(eta @ (self.j_matrix @ eta), 0.0)))

    def jinv_norm(self, r: np.ndarray) -> float:
        return float(np.sqrt(max(r @ cho_solve(self._j_cho, r), 0.0)))

    def p_norm(self, which: str, eta: np.ndarray) -> float:
        return float(np.sqrt(max(eta @ (self.p_matrix(which) @ eta), 0.0)))

    def field_norm(self, region: int, U: np.ndarray) -> float:
        """Discrete L2(R) (x) H1 norm of a region field."""
        blk = self.block(region)
        tu = self.t_mass @ U
        sx = (blk.mass + blk.stiffness) @ U.T
        return float(np.sqrt(max(np.sum(tu * sx.T), 0.0)))

    def restrict_to_region(self, U_whole: np.ndarray, region: int) -> np.ndarray:
        cols = np.searchsorted(self.mesh.region_nodes(msh.WHOLE),
                               self.mesh.region_nodes(region))
        return U_whole[:, cols]

    def interface_trace(self, U_whole: np.ndarray) -> np.ndarray:
        return U_whole[:, self.mesh.interface_local(msh.WHOLE)].copy()

    # -- subdomain solves --------------------------------------------------

    def dirichlet_solve(self, region: int, eta: np.ndarray,
                        cfg: Optional[SolverConfig] = None,
                        initial: Optional[np.ndarray] = None) -> np.ndarray:
        """Region field with interface trace eta and interior Galerkin rows zero."""
        cfg = cfg or SolverConfig()
        blk = self.block(region)
        U = np.zeros((self.basis.dim, blk.ndof))
        U[:, blk.iface] = eta
        if len(blk.interior) == 0:
            return U
        if self.nl.is_affine:
            coupled = self.residual(region, U)
            rhs = (blk.load - coupled)[:, blk.interior]
            sol = blk.a_interior_lu().solve(rhs.ravel())
            U[:, blk.interior] = sol.reshape(self.basis.dim, len(blk.interior))
            return U
        if initial is not None:
            U[:, blk.interior] = initial[:, blk.interior]
        g_csr, g_lu = blk.g_pieces("interior")
        return self._inner_iterate(region, U, blk.interior, blk.load, g_csr, g_lu,
                                   cfg.inner, extra=None,
                                   label=f"dirichlet region {region}")

    def apply_steklov(self, region: int, eta: np.ndarray,
                      cfg: Optional[SolverConfig] = None,
                      initial: Optional[np.ndarray] = None):
        """Interface dual vector <S_region eta, .> together with the field."""
        U = self.dirichlet_solve(region, eta, cfg, initial)
        blk = self.block(region)
        r = self.residual(region, U) - blk.load
        return r[:, blk.iface].copy(), U

    def steklov_sum(self, eta: np.ndarray, cfg: Optional[SolverConfig] = None,
                    warm=(None, None)):
        r1, u1 = self.apply_steklov(msh.OMEGA1, eta, cfg, warm[0])
        r2, u2 = self.apply_steklov(msh.OMEGA2, eta, cfg, warm[1])
        return r1 + r2, u1, u2

    def robin_solve(self, region: int, lam: np.ndarray, s: float,
                    cfg: Optional[SolverConfig] = None,
                    initial: Optional[np.ndarray] = None):
        """Solve the Robin subdomain problem (sJ + S_region) eta = lam.

        Returns (eta, field); the field solves the region form with the Robin
        term s (trace, trace-test) added on the interface.
        """
        if not s > 0.0:
            raise InvalidParameterError(f"need s > 0, got {s}")
        cfg = cfg or SolverConfig()
        blk = self.block(region)
        rhs = blk.load.copy()
        rhs[:, blk.iface] += lam
        if self.nl.is_affine:
            sol = blk.robin_lu(s).solve(rhs.ravel())
            U = sol.reshape(self.basis.dim, blk.ndof)
            return U[:, blk.iface].copy(), U
        U = np.zeros((self.basis.dim, blk.ndof)) if initial is None else initial.copy()
        g_csr, g_lu = blk.g_robin_pieces(s)
        free = np.arange(blk.ndof)
        U = self._inner_iterate(region, U, free, rhs, g_csr, g_lu, cfg.inner,
                                extra=("robin", s), label=f"robin region {region}")
        return U[:, blk.iface].copy(), U

    def monolithic_solve(self, cfg: Optional[SolverConfig] = None,
                         initial: Optional[np.ndarray] = None) -> np.ndarray:
        """Undecomposed solve over all free dofs of the whole domain."""
        cfg = cfg or SolverConfig()
        blk = self.block(msh.WHOLE)
        if self.nl.is_affine:
            all_cols = np.arange(blk.ndof)
            a = blk._kron_pair(self.d_pm.T, blk.mass, self.t_mass,
                               blk.cache.s_aff, all_cols)
            try:
                lu = splu(a)
            except RuntimeError as exc:
                raise LinearSolveError(f"monolithic factorization failed: {exc}") from exc
            return lu.solve(blk.load.ravel()).reshape(self.basis.dim, blk.ndof)
        U = np.zeros((self.basis.dim, blk.ndof)) if initial is None else initial.copy()
        g_csr, g_lu = blk.g_pieces("all")
        free = np.arange(blk.ndof)
        return self._inner_iterate(msh.WHOLE, U, free, blk.load, g_csr, g_lu,
                                   cfg.inner, extra=None, label="monolithic")

    # -- rotated inner iteration -------------------------------------------

    def _inner_iterate(self, region, U, free, rhs, g_csr, g_lu, inner: InnerConfig,
                       extra, label: str) -> np.ndarray:
        blk = self.block(region)
        hphi_t = ops.hphi(self.basis, inner.phi).T
        prev_inc = np.inf
        growth = 0
        for it in range(1, inner.max_iter + 1):
            r = self.residual(region, U) - rhs
            if extra is not None and extra[0] == "robin":
                r[:, blk.iface] += extra[1] * (self.j_matrix @ U[:, blk.iface])
            rot = (hphi_t @ r)[:, free].ravel()
            d = g_lu.solve(rot)
            inc = inner.s * float(np.sqrt(max(d @ rot, 0.0)))
            U[:, free] -= inner.s * d.reshape(self.basis.dim, len(free))
            w = U[:, free].ravel()
            unorm = float(np.sqrt(max(w @ (g_csr @ w), 0.0)))
            if inc <= inner.tol * max(unorm, 1e-14):
                return U
            if inc > _GROWTH_FACTOR * prev_inc:
                growth += 1
                if growth >= 5:
                    raise InnerDivergenceError(
                        f"{label}: inner increment grew 5 consecutive times "
                        f"(iteration {it}, increment {inc:.3e})")
            else:
                growth = 0
            prev_inc = inc
        raise InnerDivergenceError(
            f"{label}: inner iteration missed tol {inner.tol:.1e} within "
            f"{inner.max_iter} iterations (last increment {prev_inc:.3e})")


# -- outer iterations -------------------------------------------------------


def _finish_trace(trace: IterationTrace):
    if not trace.converged and not trace.diverged and len(trace.increments) >= 11:
        if min(trace.increments[-10:]) >= min(trace.increments[:-10]):
            trace.stagnated = True
    return trace


# an "increase" must exceed the noise floor of the inner solves, else a run
# hovering at its attainable accuracy would be misread as divergent
_GROWTH_FACTOR = 1.05


def _update_growth(increments, growth: int) -> int:
    if len(increments) >= 2 and increments[-1] > _GROWTH_FACTOR * increments[-2]:
        return growth + 1
    return 0


def mdn_run(problem: DiscreteProblem, cfg: SolverConfig,
            eta0: Optional[np.ndarray] = None,
            error_fn: Optional[Callable] = None) -> DDResult:
    """Preconditioned rotated Richardson iteration on the interface equation.

    mdn1 preconditions with the parabolic-energy Schur complement P1, mdn2
    with the quarter-derivative/elliptic operator P2; both rotate the
    residual with the adjoint of H_phi before preconditioning.
    """
    if cfg.method not in ("mdn1", "mdn2"):
        raise InvalidParameterError(f"mdn_run got method {cfg.method!r}")
    which = "p1" if cfg.method == "mdn1" else "p2"
    p_cho = problem.p_cholesky(which)
    hphi_t = ops.hphi(problem.basis, cfg.phi).T
    eta = np.zeros(problem.basis.dim) if eta0 is None else np.asarray(eta0, dtype=float).copy()
    r, u1, u2 = problem.steklov_sum(eta, cfg)
    trace = IterationTrace([], [], [] if error_fn is not None else None)
    growth = 0
    for _ in range(cfg.max_outer):
        step = -cfg.s * cho_solve(p_cho, hphi_t @ r)
        eta = eta + step
        r, u1, u2 = problem.steklov_sum(eta, cfg, warm=(u1, u2))
        inc = problem.p_norm(which, step)
        trace.increments.append(inc)
        trace.residual_norms.append(problem.jinv_norm(r))
        if error_fn is not None:
            trace.errors.append(error_fn(u1, u2))
        if inc <= cfg.tol * max(problem.p_norm(which, eta), 1e-14):
            trace.converged = True
            break
        growth = _update_growth(trace.increments, growth)
        if growth >= 5:
            trace.diverged = True
            break
    return DDResult(eta, (u1, u2), _finish_trace(trace))


def rr_run(problem: DiscreteProblem, cfg: SolverConfig,
           eta0: Optional[np.ndarray] = None,
           error_fn: Optional[Callable] = None) -> DDResult:
    """Alternating Robin-Robin iteration on the interface equation."""
    if cfg.method != "rr":
        raise InvalidParameterError(f"rr_run got method {cfg.method!r}")
    s = cfg.s
    j = problem.j_matrix
    eta = np.zeros(problem.basis.dim) if eta0 is None else np.asarray(eta0, dtype=float).copy()
    r2, u2 = problem.apply_steklov(msh.OMEGA2, eta, cfg)
    u1 = None
    trace = IterationTrace([], [], [] if error_fn is not None else None)
    growth = 0
    for _ in range(cfg.max_outer):
        lam1 = s * (j @ eta) - r2
        eta_half, _ = problem.robin_solve(msh.OMEGA1, lam1, s, cfg, initial=u1)
        r1h, u1 = problem.apply_steklov(msh.OMEGA1, eta_half, cfg, initial=u1)
        lam2 = s * (j @ eta_half) - r1h
        eta_new, _ = problem.robin_solve(msh.OMEGA2, lam2, s, cfg, initial=u2)
        r2, u2 = problem.apply_steklov(msh.OMEGA2, eta_new, cfg, initial=u2)
        r1, u1 = problem.apply_steklov(msh.OMEGA1, eta_new, cfg, initial=u1)
        inc = problem.j_norm(eta_new - eta)
        eta = eta_new
        trace.increments.append(inc)
        trace.residual_norms.append(problem.jinv_norm(r1 + r2))
        if error_fn is not None:
            trace.errors.append(error_fn(u1, u2))
        if inc <= cfg.tol * max(problem.j_norm(eta), 1e-14):
            trace.converged = True
            break
        growth = _update_growth(trace.increments, growth)
        if growth >= 5:
            trace.diverged = True
            break
    return DDResult(eta, (u1, u2), _finish_trace(trace))


def run_method(problem: DiscreteProblem, cfg: SolverConfig,
               eta0: Optional[np.ndarray] = None,
               error_fn: Optional[Callable] = None) -> DDResult:
    """Dispatch a configured interface method (monolithic included)."""
    if cfg.method in ("mdn1", "mdn2"):
        return mdn_run(problem, cfg, eta0, error_fn)
    if cfg.method == "rr":
        return rr_run(problem, cfg, eta0, error_fn)
    u = problem.monolithic_solve(cfg)
    eta = problem.interface_trace(u)
    fields = (problem.restrict_to_region(u, msh.OMEGA1),
              problem.restrict_to_region(u, msh.OMEGA2))
    trace = IterationTrace([0.0], [0.0], None, converged=True)
    if error_fn is not None:
        trace.errors = [error_fn(*fields)]
    return DDResult(eta, fields, trace)
