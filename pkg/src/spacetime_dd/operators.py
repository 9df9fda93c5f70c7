"""Discrete space-time operators, interface preconditioners, and quadrature.

Coefficient arrays ("fields") have shape (temporal dim, spatial dofs of the
region); flattening is C-order, so Kronecker-assembled matrices are
``kron(temporal, spatial)``.  Dual (residual) arrays share the shape but live
in the test-function index; Riesz maps between the two are always explicit.

The residual of the weak form against all test functions of a region is

    R = D.T @ U @ M  +  [alpha/beta terms],

where D is the skew half-derivative Gram (first-argument row convention, so
its transpose is the test-row operator) and M the spatial mass.  For affine
coefficient pairs the second term is T @ U @ S.T with S the spatial affine
operator; otherwise it is evaluated by tensor quadrature over a truncated
time window plus an exact tail correction built from the declared affine
part (the sin-family band-0 element decays like 1/t, so plain truncation
converges only O(1/window) and the correction is what makes the affine path
agree with the assembled matrices to roundoff).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss
from scipy.sparse.linalg import splu

from . import mesh as msh
from . import temporal as tmp
from .errors import InvalidParameterError, LinearSolveError, NotLinearError, WindowTooSmallError
from .nonlinearity import Nonlinearity, SourceTerm


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor quadrature parameters for space-time integrals.

    Time integrals use composite Gauss-Legendre with ``points_per_subinterval``
    nodes on subintervals of length tau/``subdivisions_per_tau``; residual
    integrals run over [-field_window, field_window], source integrals over
    [0, source_window] (symmetric when the source does not vanish for
    t <= 0).  ``tail_tol`` is the budget against which declared truncation
    tails are checked.
    """

    field_window: float = 50.0
    source_window: float = 50.0
    points_per_subinterval: int = 4
    subdivisions_per_tau: int = 4
    spatial_points: int = 3
    tail_tol: float = 1e-2


def composite_gauss(lo: float, hi: float, sub_len: float, npts: int):
    """Composite Gauss-Legendre points/weights on [lo, hi]."""
    xg, wg = leggauss(npts)
    nsub = max(1, int(np.ceil((hi - lo) / sub_len)))
    edges = np.linspace(lo, hi, nsub + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * xg).ravel(), (half[:, None] * np.broadcast_to(wg, (nsub, npts))).ravel()


@dataclass(frozen=True)
class TimeGrid:
    pts: np.ndarray
    wts: np.ndarray
    psi: np.ndarray       # (dim, npts) basis values
    psi_w: np.ndarray     # psi * wts


def time_grid(basis: tmp.TemporalBasis, lo: float, hi: float, quad: QuadratureSpec) -> TimeGrid:
    pts, wts = composite_gauss(lo, hi, basis.tau / quad.subdivisions_per_tau,
                               quad.points_per_subinterval)
    psi = tmp.basis_values(basis, pts)
    return TimeGrid(pts, wts, psi, psi * wts)


def slow_pair_tail(basis: tmp.TemporalBasis, window: float) -> float:
    """Truncation tail of basis-pair time integrals beyond |t| = window.

    Dominated by the square of the sin-family band-0 element (~1/(pi t));
    all other pairs decay at least like t^-3.
    """
    tau = basis.tau
    return 2.0 / (np.pi**2 * window) + 32.0 / (3.0 * np.pi**2 * tau**2 * window**3)


def spatial_affine_matrix(mesh: msh.IntervalMesh, region: int, affine,
                          npts: int = 3) -> sp.csr_matrix:
    """Test-row spatial operator S[n, m] = int a phi_m' phi_n' + (b phi_m' + c phi_m) phi_n."""
    q = msh.region_quadrature(mesh, region, npts)
    a, b, c = (np.asarray(f(q.x), dtype=float) for f in (affine.a, affine.b, affine.c))
    s = (q.dphi.T * (q.w * a)) @ q.dphi
    s += (q.phi.T * (q.w * b)) @ q.dphi
    s += (q.phi.T * (q.w * c)) @ q.phi
    return sp.csr_matrix(s)


def assemble_linear(region: int, nl: Nonlinearity, basis: tmp.TemporalBasis,
                    mesh: msh.IntervalMesh, quad: Optional[QuadratureSpec] = None) -> sp.csr_matrix:
    """Kronecker-assembled space-time operator of an affine coefficient pair.

    For the heat pair this is D.T (x) M + T (x) K with M, K the spatial mass
    and stiffness; advection/reaction contribute through the spatial affine
    operator.
    """
    if not nl.is_affine:
        raise NotLinearError(f"{nl.name} is not affine; use the residual evaluator")
    quad = quad or QuadratureSpec()
    mats = msh.assemble_spatial(mesh, region)
    s_aff = spatial_affine_matrix(mesh, region, nl.affine, quad.spatial_points)
    d_pm = tmp.gram(basis, "half_plus_minus").matrix
    t_mass = tmp.gram(basis, "mass").matrix
    return (sp.kron(d_pm.T, mats.mass) + sp.kron(t_mass, s_aff)).tocsr()


def apply_affine(U: np.ndarray, d_pm: sp.spmatrix, t_mass: sp.spmatrix,
                 mass: sp.spmatrix, s_aff: sp.spmatrix) -> np.ndarray:
    """Residual D.T @ U @ M + T @ U @ S.T without forming Kronecker products."""
    r = (mass @ (d_pm.T @ U).T).T
    r += (s_aff @ (t_mass @ U).T).T
    return r


@dataclass
class ResidualCache:
    """Precomputed grids and matrices for repeated residual evaluation."""

    grid: TimeGrid
    squad: msh.SpatialQuadrature
    mass: sp.csr_matrix
    d_pm: sp.csr_matrix
    t_mass: sp.csr_matrix
    s_aff: Optional[sp.csr_matrix]
    delta_t: Optional[np.ndarray]   # exact temporal mass minus its window part
    tail_bound: float


def build_residual_cache(region: int, nl: Nonlinearity, basis: tmp.TemporalBasis,
                         mesh: msh.IntervalMesh, quad: QuadratureSpec) -> ResidualCache:
    grid = time_grid(basis, -quad.field_window, quad.field_window, quad)
    squad = msh.region_quadrature(mesh, region, quad.spatial_points)
    mats = msh.assemble_spatial(mesh, region)
    d_pm = tmp.gram(basis, "half_plus_minus").matrix
    t_mass = tmp.gram(basis, "mass").matrix
    s_aff = delta_t = None
    if nl.affine is not None:
        s_aff = spatial_affine_matrix(mesh, region, nl.affine, quad.spatial_points)
        window_mass = grid.psi_w @ grid.psi.T
        delta_t = t_mass.toarray() - window_mass
    scale = nl.remainder_lipschitz if nl.affine is not None else nl.lipschitz
    tail_bound = scale * slow_pair_tail(basis, quad.field_window)
    return ResidualCache(grid, squad, mats.mass, d_pm, t_mass, s_aff, delta_t, tail_bound)


def nonlinear_residual(region: int, nl: Nonlinearity, basis: tmp.TemporalBasis,
                       mesh: msh.IntervalMesh, U: np.ndarray, quad: Optional[QuadratureSpec] = None,
                       source: Optional[SourceTerm] = None,
                       cache: Optional[ResidualCache] = None) -> np.ndarray:
    """Dual array R[k, n] = a_region(u, b_k phi_n) (minus the load if a source is given).

    The half-derivative pairing is evaluated exactly through the Gram matrix;
    the alpha/beta terms use tensor quadrature over the field window with the
    affine tail handled exactly when the coefficient pair declares one.
    """
    quad = quad or QuadratureSpec()
    if cache is None:
        cache = build_residual_cache(region, nl, basis, mesh, quad)
    if cache.tail_bound > quad.tail_tol:
        raise WindowTooSmallError(
            f"declared residual tail {cache.tail_bound:.3e} exceeds budget "
            f"{quad.tail_tol:.3e}; enlarge field_window"
        )
    g, q = cache.grid, cache.squad
    vals = g.psi.T @ U @ q.phi.T          # u(t_q, x_g)
    grads = g.psi.T @ U @ q.dphi.T        # u_x(t_q, x_g)
    x_row = q.x[None, :]
    a_vals = np.asarray(nl.alpha(x_row, vals, grads), dtype=float)
    b_vals = np.asarray(nl.beta(x_row, vals, grads), dtype=float)
    r = g.psi_w @ ((a_vals * q.w) @ q.dphi + (b_vals * q.w) @ q.phi)
    r += (cache.mass @ (cache.d_pm.T @ U).T).T
    if cache.delta_t is not None:
        r += (cache.s_aff @ (cache.delta_t @ U).T).T
    if source is not None:
        r -= load_vector(region, source, basis, mesh, quad)
    return r


def load_vector(region: int, source: SourceTerm, basis: tmp.TemporalBasis,
                mesh: msh.IntervalMesh, quad: Optional[QuadratureSpec] = None) -> np.ndarray:
    """Dual array L[k, n] = (f, b_k phi_n) over the region's space-time cylinder."""
    quad = quad or QuadratureSpec()
    if source.tail_sup is not None:
        envelope = 2.0 / (np.pi * quad.source_window) \
            + 4.0 / (np.pi * basis.tau * quad.source_window**2)
        tail = float(source.tail_sup(quad.source_window)) * envelope
        if tail > quad.tail_tol:
            raise WindowTooSmallError(
                f"declared source tail {tail:.3e} exceeds budget {quad.tail_tol:.3e}; "
                f"enlarge source_window"
            )
    lo = 0.0 if source.zero_for_nonpositive_t else -quad.source_window
    grid = time_grid(basis, lo, quad.source_window, quad)
    q = msh.region_quadrature(mesh, region, quad.spatial_points)
    f_vals = np.asarray(source.f(grid.pts[:, None], q.x[None, :]), dtype=float)
    return grid.psi_w @ ((f_vals * q.w) @ q.phi)


def _kron_blocks(t_a, s_a, t_b, s_b, interior, interface):
    """Split kron(t_a, s_a) + kron(t_b, s_b) into interface/interior blocks.

    The split is purely spatial: interface rows/cols are (all temporal) x
    (interface dof).  Returns (full_ii csc, coupling_ig dense, gg dense).
    """
    def sub(mat, rows, cols):
        return mat.tocsr()[rows, :][:, cols]

    ig = np.array([interface])
    gg = (t_a * float(sub(s_a, ig, ig).toarray()[0, 0])
          + t_b * float(sub(s_b, ig, ig).toarray()[0, 0]))
    if len(interior) == 0:
        return None, None, np.asarray(gg.toarray() if sp.issparse(gg) else gg)
    ii = (sp.kron(t_a, sub(s_a, interior, interior))
          + sp.kron(t_b, sub(s_b, interior, interior))).tocsc()
    coupling = (sp.kron(t_a, sub(s_a, interior, ig))
                + sp.kron(t_b, sub(s_b, interior, ig))).toarray()
    return ii, coupling, np.asarray(gg.toarray() if sp.issparse(gg) else gg)


def _schur_onto_interface(t_a, s_a, t_b, s_b, interior, interface, chunk: int = 64):
    ii, coupling, gg = _kron_blocks(t_a, s_a, t_b, s_b, interior, interface)
    if ii is None:
        return gg
    try:
        lu = splu(ii)
    except RuntimeError as exc:  # pragma: no cover - signals an assembly bug
        raise LinearSolveError(f"interior block factorization failed: {exc}") from exc
    dim = gg.shape[0]
    schur = np.array(gg)
    for start in range(0, dim, chunk):
        cols = coupling[:, start:start + chunk]
        schur[:, start:start + chunk] -= coupling.T @ lu.solve(cols)
    return 0.5 * (schur + schur.T)


def p1_matrix(basis: tmp.TemporalBasis, mesh: msh.IntervalMesh) -> np.ndarray:
    """Interface preconditioner from the subdomain-2 parabolic energy.

    Schur complement onto the interface temporal block of the SPD operator
    D_pp (x) M_2 + T (x) K_2, i.e. the energy of the discrete extension that
    minimizes it; the resulting operator is extension-invariant.
    """
    mats = msh.assemble_spatial(mesh, msh.OMEGA2)
    d_pp = tmp.gram(basis, "half_plus_plus").matrix
    t_mass = tmp.gram(basis, "mass").matrix
    return _schur_onto_interface(d_pp, mats.mass, t_mass, mats.stiffness,
                                 mesh.interior_local(msh.OMEGA2),
                                 mesh.interface_local(msh.OMEGA2))


def p2_matrix(basis: tmp.TemporalBasis, mesh: msh.IntervalMesh) -> np.ndarray:
    """Interface preconditioner: quarter-derivative energy plus elliptic energy.

    The elliptic part is the Schur complement of the subdomain-2 stiffness
    onto the interface (the energy of the discrete harmonic extension),
    which in 1D is the scalar 1/|Omega_2|; it multiplies the temporal mass.
    """
    mats = msh.assemble_spatial(mesh, msh.OMEGA2)
    interior = mesh.interior_local(msh.OMEGA2)
    ig = mesh.interface_local(msh.OMEGA2)
    k = mats.stiffness.toarray()
    if len(interior) == 0:
        s_ell = k[ig, ig]
    else:
        kii = k[np.ix_(interior, interior)]
        kig = k[interior, ig]
        s_ell = k[ig, ig] - kig @ np.linalg.solve(kii, kig)
    qq = tmp.gram(basis, "quarter_quarter").matrix.toarray()
    t_mass = tmp.gram(basis, "mass").matrix.toarray()
    return qq + s_ell * t_mass


def hphi(basis: tmp.TemporalBasis, phi: float) -> np.ndarray:
    """Rotated identity cos(phi) I - sin(phi) H on the temporal coefficients."""
    if not 0.0 <= phi <= np.pi / 2:
        raise InvalidParameterError(f"phi must lie in [0, pi/2], got {phi}")
    return np.cos(phi) * np.eye(basis.dim) - np.sin(phi) * tmp.hilbert_matrix(basis)


def hphi_adjoint_apply(hphi_matrix: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Adjoint action on dual coefficients: multiplication by the transpose.

    ``r`` may be a single dual vector or a dual array with the temporal
    index first.
    """
    return hphi_matrix.T @ r


def interface_riesz(basis: tmp.TemporalBasis) -> np.ndarray:
    """Riesz map of L2 on the interface cylinder; the interface is one node,
    so this is the temporal mass matrix."""
    return tmp.gram(basis, "mass").matrix.toarray()
