import numpy as np
import pytest
import scipy.sparse

from surjunctive.algebra import coefficient_vector, delta
from surjunctive.errors import HypothesisError
from surjunctive.expressions import parse_expression
from surjunctive.groups import ball, parse_group
from surjunctive.operators import Provenance, TruncatedOperator, exact_image_operator
from surjunctive.range_lp import range_distance_l1


@pytest.fixture
def f2():
    return parse_group("F2")


def delta_target(T):
    return coefficient_vector(delta(T.ball.group), T.row_ball)


class TestRangeDistance:
    """Test the complex ℓ¹ range-distance LP."""

    def test_zero_operator(self):
        """Test T = 0 with target δ_e has distance 1."""
        b = ball(parse_group("Z"), 2)
        T = TruncatedOperator(
            b, b, scipy.sparse.csr_matrix((len(b), len(b)), dtype=np.complex128),
            Provenance.COMPOSITE,
        )

        result = range_distance_l1(T, delta_target(T))

        assert result.distance == pytest.approx(1.0, abs=1e-9)
        assert result.lower == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_diagonally_dominant_control(self, f2, r):
        """Test 3δ_e + δ_a: distance ≤ 2·3^{-(r+1)} and a Neumann-sized minimizer."""
        T = exact_image_operator(parse_expression(f2, "3*de + da"), r)

        result = range_distance_l1(T, delta_target(T))

        assert result.distance <= 2 * (1 / 3) ** (r + 1)
        assert result.lower <= result.distance
        assert result.argmin_norm <= 0.5 * (1 + result.distance) + 1e-9

    def test_duality_gap_reported(self, f2):
        """Test that every solve reports a small duality gap."""
        T = exact_image_operator(parse_expression(f2, "de + w*da + w2*db"), 2)

        result = range_distance_l1(T, delta_target(T))

        assert 0.0 <= result.duality_gap <= 1e-9 * max(1.0, result.lower)
        assert result.directions >= 8

    def test_bracket_refined(self, f2):
        """Test that refinement ends with a 1% bracket or the direction cap."""
        T = exact_image_operator(parse_expression(f2, "de + w*da + w2*db"), 2)

        result = range_distance_l1(T, delta_target(T))

        assert (
            result.distance - result.lower <= 0.01 * result.distance
            or result.directions == 64
        )

    def test_real_scaling(self, f2):
        """Test distance(c·T, c·b) = |c|·distance(T, b) for real c."""
        T = exact_image_operator(parse_expression(f2, "de + da + db"), 2)
        b = delta_target(T)
        scaled = TruncatedOperator(T.ball, T.row_ball, 2.5 * T.matrix, T.provenance)

        base = range_distance_l1(T, b).distance
        other = range_distance_l1(scaled, 2.5 * b).distance

        assert other == pytest.approx(2.5 * base, rel=1e-6)

    def test_incumbent_kept(self, f2):
        """Test that a better feasible vector replaces the LP minimizer."""
        T = exact_image_operator(parse_expression(f2, "3*de + da"), 1)
        b = delta_target(T)
        first = range_distance_l1(T, b)

        again = range_distance_l1(T, b, incumbent=first.argmin)

        assert again.distance <= first.distance

    def test_target_length_checked(self, f2):
        """Test that the target must be indexed by the operator rows."""
        T = exact_image_operator(parse_expression(f2, "de + da"), 1)
        with pytest.raises(HypothesisError):
            range_distance_l1(T, np.zeros(len(T.ball)))
