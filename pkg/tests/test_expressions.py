import cmath
import math
from fractions import Fraction

import pytest

from surjunctive.algebra import GaussianRational, delta, from_terms
from surjunctive.errors import ExpressionError
from surjunctive.expressions import OMEGA, parse_expression, parse_scalar
from surjunctive.groups import parse_group


@pytest.fixture
def f2():
    return parse_group("F2")


class TestParseExpression:
    """Test the one-line element grammar."""

    def test_willis_element(self, f2):
        """Test 1*e + w*a + w2*b."""
        x = parse_expression(f2, "1*e + w*a + w2*b")

        assert x == from_terms(f2, [("e", 1), ("a", OMEGA), ("b", OMEGA * OMEGA)])

    def test_integer_walk(self):
        """Test (d1+d-1)/2 on Z."""
        z = parse_group("Z")

        a = parse_expression(z, "(d1+d-1)/2")

        assert a == from_terms(z, [("1", 0.5), ("-1", 0.5)])

    def test_delta_words(self):
        """Test de+dg2 on C4."""
        c4 = parse_group("C4")

        a = parse_expression(c4, "de+dg2")

        assert a == delta(c4) + delta(c4, "[2]")

    def test_control_element(self, f2):
        """Test 3*de+da."""
        assert parse_expression(f2, "3*de+da") == delta(f2, coef=3) + delta(f2, "a")

    def test_exponent_inside_delta(self, f2):
        """Test that da-1 is δ at a⁻¹ while da - 1 is a difference."""
        assert parse_expression(f2, "da-1") == delta(f2, "A")
        assert parse_expression(f2, "da - 1") == delta(f2, "a") - delta(f2)

    def test_products_are_convolutions(self, f2):
        """Test that juxtaposed elements multiply in the group algebra."""
        assert parse_expression(f2, "da*db") == delta(f2, "ab")
        assert parse_expression(f2, "(da+db)^2") == parse_expression(
            f2, "daa + dab + dba + dbb"
        )

    def test_imaginary_literals(self, f2):
        """Test i and numeric i-literals."""
        assert parse_expression(f2, "3i*da") == delta(f2, "a", 3j)
        assert parse_expression(f2, "i*da") == delta(f2, "a", 1j)

    def test_exact_mode(self, f2):
        """Test rational coefficients."""
        x = parse_expression(f2, "de/3 + 2i*da", exact=True)

        assert x.exact
        assert x[f2.identity()] == GaussianRational(Fraction(1, 3))

    def test_exact_mode_rejects_cube_roots(self, f2):
        """Test that w has no exact representation."""
        with pytest.raises(ExpressionError):
            parse_expression(f2, "w*da", exact=True)

    @pytest.mark.parametrize("text", ["da +", "d[1,", "(da", "da / db", "da ^ 0.5", "dq", "2 $ da"])
    def test_malformed(self, f2, text):
        """Test that malformed expressions raise ExpressionError."""
        with pytest.raises(ExpressionError):
            parse_expression(f2, text)

    def test_division_by_zero(self, f2):
        """Test division by a zero scalar."""
        with pytest.raises(ExpressionError):
            parse_expression(f2, "da/0")


class TestParseScalar:
    """Test scalar expressions used for t_a and t_b."""

    def test_cube_roots(self):
        """Test w and w2."""
        assert parse_scalar("w") == pytest.approx(cmath.exp(2j * math.pi / 3))
        assert parse_scalar("w2") == pytest.approx(cmath.exp(-2j * math.pi / 3))
        assert abs(1 + parse_scalar("w") + parse_scalar("w2")) < 1e-15

    def test_complex_literal(self):
        """Test 0.6+0.8i."""
        assert parse_scalar("0.6+0.8i") == pytest.approx(0.6 + 0.8j)
        assert parse_scalar("-1") == -1

    def test_group_words_rejected(self):
        """Test that group elements are not scalars."""
        with pytest.raises(ExpressionError):
            parse_scalar("da")
