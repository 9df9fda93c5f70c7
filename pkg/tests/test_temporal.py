import numpy as np
import pytest
import scipy.sparse as sp

from oracles import composite_gl, inverse_fourier_value, time_domain_mass
from spacetime_dd.errors import InvalidParameterError
from spacetime_dd.temporal import (
    TemporalBasis,
    basis_values,
    fourier_eval,
    gram,
    hilbert_matrix,
    new_basis,
    time_eval,
)

TAU = 0.5


@pytest.fixture(scope="module")
def basis():
    return TemporalBasis(8, TAU)


class TestBasisDescriptor:
    def test_paper_dimensions(self):
        assert new_basis(256, 0.5).dim == 514

    def test_smallest_basis(self):
        assert new_basis(1, 1.0).dim == 4

    def test_rejects_zero_bands(self):
        with pytest.raises(InvalidParameterError):
            new_basis(0, 0.5)

    def test_rejects_nonpositive_tau(self):
        with pytest.raises(InvalidParameterError):
            new_basis(4, 0.0)


class TestFourierEval:
    def test_unit_at_own_grid_point(self, basis):
        assert fourier_eval(basis, 3, 3 * TAU) == 1.0
        assert fourier_eval(basis, 3, -3 * TAU) == 1.0

    def test_zero_away_from_support(self, basis):
        assert fourier_eval(basis, 3, 5 * TAU) == 0.0

    def test_sin_family_is_hilbert_multiplier(self, basis):
        assert fourier_eval(basis, basis.sin_index(3), 3 * TAU) == -1j
        assert fourier_eval(basis, basis.sin_index(3), -3 * TAU) == 1j

    def test_out_of_range_index(self, basis):
        with pytest.raises(InvalidParameterError):
            fourier_eval(basis, basis.dim, 0.0)


class TestTimeEval:
    def test_cos0_at_origin(self, basis):
        # analytic limit tau/(2 pi); cross-checked just off the singularity
        assert time_eval(basis, 0, 0.0) == pytest.approx(TAU / (2 * np.pi), abs=1e-14)
        assert time_eval(basis, 0, 1e-6) == pytest.approx(TAU / (2 * np.pi), rel=1e-8)

    def test_sin0_at_origin(self, basis):
        assert time_eval(basis, basis.sin_index(0), 0.0) == 0.0
        assert abs(time_eval(basis, basis.sin_index(0), 1e-6)) < 1e-7

    def test_cos1_at_pi_over_tau(self, basis):
        expected = -4 * TAU / np.pi**3
        assert time_eval(basis, 1, np.pi / TAU) == pytest.approx(expected, rel=1e-13)

    def test_against_inverse_fourier_quadrature(self, basis):
        for idx in (1, basis.sin_index(2)):
            for t in (np.pi / TAU, 0.37, 2.0):
                oracle = inverse_fourier_value(basis, idx, t)
                assert time_eval(basis, idx, t) == pytest.approx(oracle, abs=2e-9)

    def test_taylor_branch_matches_direct_formula(self, basis):
        # just inside the switch-over the Taylor branch must agree with the
        # raw formulas to the accuracy the cancellation allows (~1e-8)
        t = 0.99e-4 / TAU
        theta = TAU * t
        direct = np.empty(basis.dim)
        g = (1 - np.cos(theta)) / theta**2
        g2 = (theta - np.sin(theta)) / theta**2
        direct[0] = TAU / np.pi * g
        direct[basis.sin_index(0)] = TAU / np.pi * g2
        for j in range(1, basis.num_bands + 1):
            direct[j] = 2 * TAU / np.pi * g * np.cos(j * theta)
            direct[basis.sin_index(j)] = 2 * TAU / np.pi * g * np.sin(j * theta)
        vals = basis_values(basis, t)[:, 0]
        assert np.allclose(vals, direct, atol=1e-8)


class TestGram:
    def test_mass_head_entry(self, basis):
        expected = TAU / (3 * np.pi)  # (1/2pi) int (1-|xi|/tau)^2 dxi
        mass = gram(basis, "mass").matrix
        assert mass[0, 0] == pytest.approx(expected, rel=1e-14)
        assert mass[0, 0] == pytest.approx(0.0530516, abs=1e-7)

    def test_quarter_head_entry(self, basis):
        expected = 16 * TAU**1.5 / (105 * np.pi)
        qq = gram(basis, "quarter_quarter").matrix
        assert qq[0, 0] == pytest.approx(expected, rel=1e-13)

    def test_quarter_entry_against_quadrature(self, basis):
        # same weighted frequency integral by composite Gauss on [0, tau];
        # the sqrt endpoint singularity limits the rule to ~h^1.5 accuracy
        pts, wts = composite_gl(0.0, TAU, TAU / 4096, 8)
        oracle = 2.0 * np.sum(wts * np.sqrt(pts) * (1 - pts / TAU) ** 2) / (2 * np.pi)
        assert gram(basis, "quarter_quarter").matrix[0, 0] == pytest.approx(oracle, rel=2e-8)

    def test_skew_pairing_annihilates_diagonal(self, basis):
        d = gram(basis, "half_plus_minus").matrix.toarray()
        rng = np.random.default_rng(7)
        for _ in range(20):
            v = rng.standard_normal(basis.dim)
            assert abs(v @ d @ v) < 1e-12 * (v @ v)

    def test_band_sparsity(self, basis):
        n = basis.num_bands + 1
        for kind in ("mass", "half_plus_plus", "quarter_quarter"):
            block = gram(basis, kind).matrix.toarray()[:n, :n]
            far = np.triu(np.abs(block), k=2)
            assert far.max() == 0.0

    def test_unknown_kind_rejected(self, basis):
        with pytest.raises(InvalidParameterError):
            gram(basis, "half")


class TestHilbert:
    def test_maps_cos_to_sin(self, basis):
        h = hilbert_matrix(basis)
        e = np.zeros(basis.dim)
        e[2] = 1.0
        out = h @ e
        expected = np.zeros(basis.dim)
        expected[basis.sin_index(2)] = 1.0
        assert np.array_equal(out, expected)

    def test_square_is_minus_identity(self, basis):
        h = hilbert_matrix(basis)
        assert np.array_equal(h @ h, -np.eye(basis.dim))

    def test_maps_sin_to_minus_cos(self, basis):
        h = hilbert_matrix(basis)
        e = np.zeros(basis.dim)
        e[basis.sin_index(5)] = 1.0
        expected = np.zeros(basis.dim)
        expected[5] = -1.0
        assert np.array_equal(h @ e, expected)


class TestExactIdentities:
    def test_half_plus_minus_is_skew(self, basis):
        d = gram(basis, "half_plus_minus").matrix.toarray()
        assert np.abs(d + d.T).max() < 1e-15

    def test_plus_plus_from_hilbert_identity(self, basis):
        d = gram(basis, "half_plus_minus").matrix.toarray()
        pp = gram(basis, "half_plus_plus").matrix.toarray()
        h = hilbert_matrix(basis)
        assert np.abs(pp + d @ h).max() < 1e-14

    def test_quarter_gram_commutes_with_hilbert(self, basis):
        qq = gram(basis, "quarter_quarter").matrix.toarray()
        h = hilbert_matrix(basis)
        assert np.abs(qq @ h - h @ qq).max() < 1e-14


@pytest.mark.parametrize("n_bands", [2, 8, 16])
def test_symmetric_kinds_are_spd(n_bands):
    basis = TemporalBasis(n_bands, TAU)
    for kind in ("mass", "half_plus_plus", "quarter_quarter"):
        dense = gram(basis, kind).matrix.toarray()
        assert np.abs(dense - dense.T).max() == 0.0
        assert np.linalg.eigvalsh(dense).min() > 0.0


def test_mass_matches_time_domain_quadrature():
    basis = TemporalBasis(8, TAU)
    oracle = time_domain_mass(basis)
    exact = gram(basis, "mass").matrix.toarray()
    assert np.abs(oracle - exact).max() < 1e-6


def test_gram_matrices_are_sparse(basis):
    g = gram(basis, "mass").matrix
    assert sp.issparse(g)
    assert g.nnz < basis.dim**2 / 2
