"""Uniform 1D interval mesh with a two-subdomain split at an interface node.

The domain is (0, 1) with homogeneous Dirichlet conditions at both ends, so
the free degrees of freedom are the interior nodes 1..n-1.  The interface is
a single mesh node; the two subdomains each own their interior nodes and
share the interface dof.  Subdomain matrices are assembled one-sided, i.e.
only over the elements of that subdomain, so the diagonal entry at the
interface carries just the contribution from the adjacent element.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .errors import InterfaceNotOnGridError, InvalidParameterError

WHOLE, OMEGA1, OMEGA2 = 0, 1, 2
REGIONS = (WHOLE, OMEGA1, OMEGA2)


@dataclass(frozen=True)
class IntervalMesh:
    num_elements: int
    interface_pos: float
    nodes: np.ndarray = field(repr=False)
    interface_node: int

    @property
    def h(self) -> float:
        return 1.0 / self.num_elements

    def region_nodes(self, region: int) -> np.ndarray:
        """Global node indices of the free dofs of a region, ascending."""
        g, n = self.interface_node, self.num_elements
        if region == WHOLE:
            return np.arange(1, n)
        if region == OMEGA1:
            return np.arange(1, g + 1)
        if region == OMEGA2:
            return np.arange(g, n)
        raise InvalidParameterError(f"unknown region {region}")

    def region_elements(self, region: int) -> np.ndarray:
        """Element indices (element e spans [x_e, x_{e+1}]) of a region."""
        g, n = self.interface_node, self.num_elements
        if region == WHOLE:
            return np.arange(0, n)
        if region == OMEGA1:
            return np.arange(0, g)
        if region == OMEGA2:
            return np.arange(g, n)
        raise InvalidParameterError(f"unknown region {region}")

    def interface_local(self, region: int) -> int:
        """Local column index of the interface dof within a region."""
        return int(np.searchsorted(self.region_nodes(region), self.interface_node))

    def interior_local(self, region: int) -> np.ndarray:
        nodes = self.region_nodes(region)
        return np.flatnonzero(nodes != self.interface_node)


@dataclass(frozen=True)
class SpatialMatrices:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix


def build_mesh(num_elements: int, interface_pos: float = 0.5) -> IntervalMesh:
    """Uniform mesh of (0, 1) with the interface classified at a node.

    Raises InterfaceNotOnGridError unless interface_pos coincides (to within
    roundoff) with an interior node of the partition.
    """
    if num_elements < 2 or num_elements % 2 != 0:
        raise InvalidParameterError(f"num_elements must be even and >= 2, got {num_elements}")
    if not 0.0 < interface_pos < 1.0:
        raise InterfaceNotOnGridError(f"interface_pos {interface_pos} outside (0, 1)")
    ratio = interface_pos * num_elements
    g = int(round(ratio))
    if abs(ratio - g) > 1e-9 * num_elements or not 0 < g < num_elements:
        raise InterfaceNotOnGridError(
            f"interface_pos {interface_pos} is not an interior node of the "
            f"uniform {num_elements}-element partition"
        )
    nodes = np.linspace(0.0, 1.0, num_elements + 1)
    return IntervalMesh(num_elements, interface_pos, nodes, g)


def _element_matrices(h: float):
    k_loc = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    m_loc = np.array([[2.0, 1.0], [1.0, 2.0]]) * (h / 6.0)
    return k_loc, m_loc


def assemble_spatial(mesh: IntervalMesh, region: int = WHOLE) -> SpatialMatrices:
    """Stiffness and mass over the free dofs of a region.

    Element loop over the region's own elements only; Dirichlet rows/columns
    (nodes 0 and n) are dropped.
    """
    nodes = mesh.region_nodes(region)
    pos = {node: i for i, node in enumerate(nodes)}
    ndof = len(nodes)
    k_loc, m_loc = _element_matrices(mesh.h)
    K = sp.lil_matrix((ndof, ndof))
    M = sp.lil_matrix((ndof, ndof))
    for e in mesh.region_elements(region):
        for a, na in enumerate((e, e + 1)):
            if na not in pos:
                continue
            for b, nb in enumerate((e, e + 1)):
                if nb not in pos:
                    continue
                K[pos[na], pos[nb]] += k_loc[a, b]
                M[pos[na], pos[nb]] += m_loc[a, b]
    return SpatialMatrices(K.tocsr(), M.tocsr())


@dataclass(frozen=True)
class SpatialQuadrature:
    """Gauss points over a region's elements plus P1 basis collocation data.

    ``phi`` and ``dphi`` have shape (npoints, ndofs); columns follow the
    region's free-dof ordering, so fields with homogeneous boundary values
    evaluate as ``values = coeffs @ phi.T``.
    """

    x: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray


def region_quadrature(mesh: IntervalMesh, region: int, npts: int = 3) -> SpatialQuadrature:
    nodes = mesh.region_nodes(region)
    pos = {node: i for i, node in enumerate(nodes)}
    elements = mesh.region_elements(region)
    xg, wg = leggauss(npts)
    h = mesh.h
    npoints = len(elements) * npts
    x = np.empty(npoints)
    w = np.empty(npoints)
    phi = np.zeros((npoints, len(nodes)))
    dphi = np.zeros((npoints, len(nodes)))
    for i, e in enumerate(elements):
        sl = slice(i * npts, (i + 1) * npts)
        x0 = mesh.nodes[e]
        xs = x0 + 0.5 * h * (xg + 1.0)
        x[sl] = xs
        w[sl] = 0.5 * h * wg
        lam = (xs - x0) / h  # local coordinate in [0, 1]
        for a, na in enumerate((e, e + 1)):
            if na not in pos:
                continue
            col = pos[na]
            phi[sl, col] = lam if a == 1 else 1.0 - lam
            dphi[sl, col] = (1.0 if a == 1 else -1.0) / h
    return SpatialQuadrature(x, w, phi, dphi)
