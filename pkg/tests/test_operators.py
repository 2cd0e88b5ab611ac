import math

import numpy as np
import pytest
import scipy.sparse

from surjunctive.algebra import (
    coefficient_vector,
    convolve,
    delta,
)
from surjunctive.errors import GroupMismatchError, HypothesisError, ParameterError, SolverError
from surjunctive.expressions import parse_expression
from surjunctive.groups import ball, parse_element, parse_group
from surjunctive.operators import (
    Provenance,
    TruncatedOperator,
    assemble,
    compose,
    exact_image_operator,
    from_binary,
    from_coordinate_text,
    injectivity_modulus_est,
    intertwine_check,
    opnorm_est,
    to_binary,
    to_coordinate_text,
)
from surjunctive.spectral import largest_eigenvalue

from .test_algebra import random_element


@pytest.fixture
def z():
    return parse_group("Z")


@pytest.fixture
def f2():
    return parse_group("F2")


def matrix_operator(M) -> TruncatedOperator:
    """Wrap an explicit square matrix on a ball of matching size (Z, radius r)."""
    n = M.shape[0]
    b = ball(parse_group("Z"), (n - 1) // 2)
    assert len(b) == n
    matrix = scipy.sparse.csr_matrix(M, dtype=np.complex128)
    return TruncatedOperator(b, b, matrix, Provenance.COMPOSITE)


def sorted_dense(T, b):
    """Dense matrix with rows and columns ordered by the Z coordinate."""
    order = np.argsort([g.form[0] for g in b.elements])
    return T.dense()[np.ix_(order, order)]


class TestAssemble:
    """Test the entry formulas of the truncated operators."""

    def test_integer_walk_is_tridiagonal(self, z):
        """Test a = δ₁ + δ₋₁ on B_2 of Z."""
        b = ball(z, 2)
        T = assemble(parse_expression(z, "d1 + d-1"), b, "left")

        expected = np.diag(np.ones(4), 1) + np.diag(np.ones(4), -1)

        assert np.array_equal(sorted_dense(T, b), expected)

    def test_flip_reverses(self, z):
        """Test that the flip on B_2 of Z reverses {-2..2}."""
        b = ball(z, 2)
        T = assemble(None, b, Provenance.FLIP)

        assert np.array_equal(sorted_dense(T, b), np.fliplr(np.eye(5)))

    def test_point_mass_is_partial_permutation(self, f2):
        """Test entry[h, h'] = 1 iff h = g h'."""
        b = ball(f2, 2)
        g = parse_element(f2, "a")
        T = assemble(delta(f2, g), b, Provenance.LEFT).dense()

        for j, h in enumerate(b.elements):
            target = g * h
            column = T[:, j]
            if target in b:
                assert column[b.position(target)] == 1
                assert np.count_nonzero(column) == 1
            else:
                assert not np.any(column)

    @pytest.mark.parametrize("key", ["Z^2", "F2", "H3"])
    def test_columns_match_convolution(self, key):
        """Test L_a e_{h'} = coefficients of a * δ_{h'} restricted to the ball."""
        desc = parse_group(key)
        rng = np.random.default_rng(11)
        b = ball(desc, 3)
        a = random_element(desc, 2, rng)
        T = assemble(a, b, Provenance.LEFT).dense()

        for j in rng.choice(len(b), size=10, replace=False):
            expected = coefficient_vector(convolve(a, delta(desc, b.elements[j])), b)
            assert np.allclose(T[:, j], expected, atol=0)

    def test_right_entries(self, f2):
        """Test entry[h, h'] = a(h⁻¹h') for the right operator."""
        rng = np.random.default_rng(12)
        b = ball(f2, 2)
        a = random_element(f2, 2, rng)
        T = assemble(a, b, Provenance.RIGHT).dense()

        for i, h in enumerate(b.elements):
            for j, k in enumerate(b.elements):
                assert T[i, j] == a[(~h) * k]

    def test_column_sparsity(self, f2):
        """Test at most |support(a)| nonzeros per column."""
        a = random_element(f2, 2, np.random.default_rng(13), terms=5)
        T = assemble(a, ball(f2, 3), Provenance.LEFT)

        assert np.diff(T.matrix.tocsc().indptr).max() <= len(a)

    def test_group_mismatch(self, z, f2):
        """Test that element and ball groups must agree."""
        with pytest.raises(GroupMismatchError):
            assemble(delta(z), ball(f2, 1), Provenance.LEFT)

    def test_exact_image_keeps_every_row(self, f2):
        """Test that rows on B_{r+s} capture the whole image."""
        a = parse_expression(f2, "de + da + dbA")
        T = exact_image_operator(a, 2)

        assert T.row_ball.radius == 4
        column_sums = np.asarray(abs(T.matrix).sum(axis=0)).ravel()
        assert np.allclose(column_sums, 3.0)

    def test_compose(self, z):
        """Test composition of compatible operators."""
        b = ball(z, 3)
        shift = assemble(delta(z, "1"), b, Provenance.LEFT)
        back = assemble(delta(z, "-1"), b, Provenance.LEFT)

        product = compose(back, shift)

        assert product.provenance is Provenance.COMPOSITE
        assert np.count_nonzero(product.dense() - np.eye(len(b))) == 1

    def test_compose_incompatible(self, z):
        """Test that mismatched balls cannot compose."""
        with pytest.raises(HypothesisError):
            compose(assemble(delta(z), ball(z, 1)), assemble(delta(z), ball(z, 2)))


class TestIntertwining:
    """Test t ρ_a = L_a t on inverse-closed balls."""

    @pytest.mark.parametrize("key", ["Z^2", "F2", "H3"])
    def test_exact_mode_is_zero(self, key):
        """Test bit-exact intertwining with rational coefficients."""
        desc = parse_group(key)
        rng = np.random.default_rng(21)
        for radius in (1, 2, 3):
            a = random_element(desc, 2, rng, exact=True)
            assert intertwine_check(a, ball(desc, radius)) == 0.0

    def test_float_mode_free_group(self, f2):
        """Test float intertwining on F2, r = 3."""
        a = random_element(f2, 3, np.random.default_rng(22), terms=8)
        assert intertwine_check(a, ball(f2, 3)) <= 1e-12

    def test_identity(self, f2):
        """Test a = δ_e."""
        assert intertwine_check(delta(f2), ball(f2, 2)) == 0.0

    @pytest.mark.acceptance
    @pytest.mark.slow
    def test_random_sweep(self):
        """Test 200 random elements over Z^2, F2 and H3 with r ≤ 4."""
        rng = np.random.default_rng(23)
        for trial in range(200):
            desc = parse_group(["Z^2", "F2", "H3"][trial % 3])
            radius = int(rng.integers(0, 5))
            a = random_element(desc, 2, rng, exact=trial % 2 == 0)
            discrepancy = intertwine_check(a, ball(desc, radius))
            if a.exact:
                assert discrepancy == 0.0
            else:
                assert discrepancy <= 1e-12


class TestOperatorNorms:
    """Test the ℓᵖ operator-norm brackets."""

    @pytest.mark.parametrize("p", [1, 1.5, 2, 3, math.inf])
    def test_identity(self, p):
        """Test ‖I‖_p = 1."""
        est = opnorm_est(matrix_operator(np.eye(5)), p)
        assert est.lower == pytest.approx(1.0)
        assert est.upper == pytest.approx(1.0)

    def test_integer_walk_column_sums(self, z):
        """Test ‖L_{δ₁+δ₋₁}‖₁ = 2 on B_3."""
        T = assemble(parse_expression(z, "d1+d-1"), ball(z, 3))
        est = opnorm_est(T, 1)

        assert est.lower == est.upper == 2.0

    def test_p_below_one(self):
        """Test that p < 1 is rejected."""
        with pytest.raises(ParameterError):
            opnorm_est(matrix_operator(np.eye(3)), 0.5)

    def test_interpolation_dominates_spectral_norm(self):
        """Test √(‖T‖₁‖T‖_∞) ≥ σ_max on random matrices."""
        rng = np.random.default_rng(31)
        for _ in range(20):
            M = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
            T = matrix_operator(M)
            assert opnorm_est(T, 2).upper >= np.linalg.norm(M, 2) * (1 - 1e-12)
            assert opnorm_est(T, 2).lower == pytest.approx(np.linalg.norm(M, 2), rel=1e-9)

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_power_iteration_nonnegative(self, p):
        """Test bracket order and monotone history for a nonnegative matrix."""
        rng = np.random.default_rng(32)
        T = matrix_operator(rng.random((9, 9)))

        est = opnorm_est(T, p)

        assert est.lower <= est.upper
        assert all(b >= a - 1e-12 for a, b in zip(est.history, est.history[1:]))

    def test_left_right_agree(self, f2):
        """Test that L_a and ρ_a have the same norms for p ∈ {1, 2, ∞}."""
        a = random_element(f2, 2, np.random.default_rng(33), terms=5)
        b = ball(f2, 3)
        left, right = assemble(a, b, "left"), assemble(a, b, "right")
        for p in (1, 2, math.inf):
            assert opnorm_est(left, p).lower == pytest.approx(opnorm_est(right, p).lower, rel=1e-9)

    @pytest.mark.acceptance
    def test_free_group_adjacency(self, f2):
        """Test the spectral norm of the F2 adjacency at r = 8 against the Kesten bound."""
        a = parse_expression(f2, "da + dA + db + dB")
        est = opnorm_est(assemble(a, ball(f2, 8)), 2)

        assert 3.25 <= est.lower <= 2 * math.sqrt(3) + 1e-6

    @pytest.mark.acceptance
    @pytest.mark.slow
    def test_kesten_monotone(self, f2):
        """Test λ_max strictly increasing for r = 2..8 and below 2√3."""
        a = parse_expression(f2, "da + dA + db + dB")
        values = [largest_eigenvalue(assemble(a, ball(f2, r)).matrix) for r in range(2, 9)]

        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] <= 2 * math.sqrt(3) + 1e-6


class TestInjectivityModulus:
    """Test the modulus estimates."""

    def test_diagonal(self):
        """Test diag(3, 1, ...) has modulus 1 at p = 2."""
        M = np.diag([3.0, 1.0, 2.0])
        assert injectivity_modulus_est(matrix_operator(M), 2).value == pytest.approx(1.0)

    def test_integer_walk_shrinks(self, z):
        """Test σ_min of the Z walk against 2|cos(kπ/(2r+2))|."""
        a = parse_expression(z, "d1+d-1")
        values = []
        for r in (2, 5, 10, 20):
            est = injectivity_modulus_est(assemble(a, ball(z, r)), 2).value
            k = np.arange(1, 2 * r + 2)
            oracle = np.min(np.abs(2 * np.cos(k * np.pi / (2 * r + 2))))
            assert est == pytest.approx(oracle, abs=1e-10)
            values.append(est)
        assert values[-1] < 1e-10

    def test_descent_is_upper_bound(self):
        """Test that p ≠ 2 estimates never undercut the exact p = 1 modulus of a diagonal."""
        M = np.diag([4.0, 2.0, 3.0, 5.0])
        est = injectivity_modulus_est(matrix_operator(M[:3, :3]), 1.5, restarts=3, seed=0)

        assert est.value >= 2.0 - 1e-12
        assert est.value == pytest.approx(2.0, rel=1e-6)

    def test_deterministic(self, f2):
        """Test that a fixed seed gives a fixed estimate."""
        a = parse_expression(f2, "de + w*da + w2*db")
        T = exact_image_operator(a, 2)

        first = injectivity_modulus_est(T, 1, restarts=3, seed=7).value
        second = injectivity_modulus_est(T, 1, restarts=3, seed=7).value

        assert first == second

    def test_restarts_validated(self):
        """Test restarts ≥ 1."""
        with pytest.raises(ParameterError):
            injectivity_modulus_est(matrix_operator(np.eye(3)), 1, restarts=0)


class TestExchangeFormats:
    """Test the coordinate text and binary matrix formats."""

    def test_coordinate_text(self, f2):
        """Test the text format header and contents."""
        a = parse_expression(f2, "de + 0.5i*da")
        T = assemble(a, ball(f2, 2))

        text = to_coordinate_text(T)
        back = from_coordinate_text(text)

        assert text.splitlines()[1] == f"% 17 17 {T.matrix.nnz} left"
        assert (back != T.matrix).nnz == 0

    def test_binary_layout(self, z):
        """Test the binary header and record sizes."""
        T = assemble(parse_expression(z, "d1 - 2*d-1"), ball(z, 2))

        blob = to_binary(T)
        matrix, provenance = from_binary(blob)

        assert blob[:4] == b"SJOP"
        assert len(blob) == 20 + 24 * T.matrix.nnz
        assert provenance is Provenance.LEFT
        assert (matrix != T.matrix).nnz == 0

    def test_bad_magic(self):
        """Test that foreign blobs are rejected."""
        with pytest.raises(SolverError):
            from_binary(b"XXXX" + bytes(16))
