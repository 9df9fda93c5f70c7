import numpy as np
import pytest
from scipy.linalg import cholesky

from spacetime_dd.errors import InterfaceNotOnGridError, InvalidParameterError
from spacetime_dd.mesh import (
    OMEGA1,
    OMEGA2,
    WHOLE,
    assemble_spatial,
    build_mesh,
    region_quadrature,
)


class TestBuildMesh:
    def test_paper_mesh(self):
        mesh = build_mesh(512, 0.5)
        assert mesh.h == pytest.approx(1 / 512)
        assert mesh.interface_node == 256
        assert len(mesh.region_nodes(WHOLE)) == 511

    def test_smallest_mesh_has_single_interface_dof(self):
        mesh = build_mesh(2, 0.5)
        assert list(mesh.region_nodes(WHOLE)) == [1]
        assert list(mesh.region_nodes(OMEGA1)) == [1]
        assert list(mesh.region_nodes(OMEGA2)) == [1]
        assert len(mesh.interior_local(OMEGA1)) == 0
        assert len(mesh.interior_local(OMEGA2)) == 0

    def test_interface_off_grid_rejected(self):
        with pytest.raises(InterfaceNotOnGridError):
            build_mesh(4, 0.3)

    def test_odd_element_count_rejected(self):
        with pytest.raises(InvalidParameterError):
            build_mesh(5, 0.5)

    def test_dof_partition_is_disjoint_and_exhaustive(self):
        mesh = build_mesh(16, 0.25)
        i1 = set(mesh.region_nodes(OMEGA1)[mesh.interior_local(OMEGA1)])
        i2 = set(mesh.region_nodes(OMEGA2)[mesh.interior_local(OMEGA2)])
        assert not i1 & i2
        assert i1 | i2 | {mesh.interface_node} == set(mesh.region_nodes(WHOLE))


class TestAssembleSpatial:
    def test_whole_domain_interior_entries(self):
        mesh = build_mesh(8, 0.5)
        h = mesh.h
        mats = assemble_spatial(mesh, WHOLE)
        K = mats.stiffness.toarray()
        M = mats.mass.toarray()
        assert K[3, 3] == pytest.approx(2 / h)
        assert K[3, 4] == pytest.approx(-1 / h)
        assert M[3, 3] == pytest.approx(4 * h / 6)
        assert M[3, 4] == pytest.approx(h / 6)

    def test_subdomain_one_sided_interface_row(self):
        # one-sided element assembly over Omega_1 only: the interface
        # diagonal sees a single adjacent element
        mesh = build_mesh(4, 0.5)
        h = mesh.h
        K = assemble_spatial(mesh, OMEGA1).stiffness.toarray()
        assert K.shape == (2, 2)
        expected = np.array([[2 / h, -1 / h], [-1 / h, 1 / h]])
        assert np.allclose(K, expected)

    def test_subdomain_matrices_glue_to_whole(self):
        mesh = build_mesh(16, 0.5)
        whole = assemble_spatial(mesh, WHOLE)
        parts = {r: assemble_spatial(mesh, r) for r in (OMEGA1, OMEGA2)}
        glued_k = np.zeros_like(whole.stiffness.toarray())
        glued_m = np.zeros_like(glued_k)
        all_nodes = mesh.region_nodes(WHOLE)
        for r, mats in parts.items():
            idx = np.searchsorted(all_nodes, mesh.region_nodes(r))
            glued_k[np.ix_(idx, idx)] += mats.stiffness.toarray()
            glued_m[np.ix_(idx, idx)] += mats.mass.toarray()
        assert np.allclose(glued_k, whole.stiffness.toarray())
        assert np.allclose(glued_m, whole.mass.toarray())

    def test_interior_stiffness_rows_sum_to_zero(self):
        # partition of unity: rows not touching a Dirichlet end have zero sum
        mesh = build_mesh(16, 0.5)
        K = assemble_spatial(mesh, WHOLE).stiffness.toarray()
        sums = K.sum(axis=1)
        assert np.abs(sums[1:-1]).max() < 1e-12

    def test_mass_strictly_diagonally_dominant(self):
        mesh = build_mesh(32, 0.5)
        M = np.abs(assemble_spatial(mesh, WHOLE).mass.toarray())
        off = M.sum(axis=1) - np.diag(M)
        assert np.all(np.diag(M) > off)

    @pytest.mark.parametrize("region", [WHOLE, OMEGA1, OMEGA2])
    def test_stiffness_cholesky_succeeds(self, region):
        mesh = build_mesh(32, 0.25)
        K = assemble_spatial(mesh, region).stiffness.toarray()
        cholesky(K)  # raises LinAlgError if not SPD


class TestRegionQuadrature:
    def test_integrates_hat_functions_exactly(self):
        mesh = build_mesh(8, 0.5)
        q = region_quadrature(mesh, WHOLE, 3)
        # int phi_k dx = h for interior hats
        integrals = q.w @ q.phi
        assert np.allclose(integrals, mesh.h)

    def test_extension_restriction_roundtrip(self):
        mesh = build_mesh(8, 0.25)
        rng = np.random.default_rng(0)
        eta = rng.standard_normal()
        for region in (OMEGA1, OMEGA2):
            vec = np.zeros(len(mesh.region_nodes(region)))
            vec[mesh.interface_local(region)] = eta
            assert vec[mesh.interface_local(region)] == eta
            assert np.count_nonzero(vec) == 1
