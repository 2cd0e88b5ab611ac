"""The group algebra CΓ: finitely supported functions under convolution.

Coefficients are complex doubles by default. Elements built with
``exact=True`` carry :class:`GaussianRational` coefficients instead, so that
identities such as the flip intertwining can be checked bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Tuple, Union

import numpy as np

from .config import config
from .errors import GroupMismatchError, ParameterError
from .groups import BallIndex, GroupDescriptor, GroupElement, inv, mul, parse_element, parse_group

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def coerce(cls, value: "Scalar") -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        return cls(Fraction(value))

    def __add__(self, other: "Scalar") -> "GaussianRational":
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other: "Scalar") -> "GaussianRational":
        return self + (-GaussianRational.coerce(other))

    def __rsub__(self, other: "Scalar") -> "GaussianRational":
        return GaussianRational.coerce(other) - self

    def __mul__(self, other: "Scalar") -> "GaussianRational":
        o = GaussianRational.coerce(other)
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other: "Scalar") -> "GaussianRational":
        o = GaussianRational.coerce(other)
        norm = o.re * o.re + o.im * o.im
        if norm == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * GaussianRational(o.re / norm, -o.im / norm)

    def __rtruediv__(self, other: "Scalar") -> "GaussianRational":
        return GaussianRational.coerce(other) / self

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __abs__(self) -> float:
        return math.hypot(float(self.re), float(self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __str__(self) -> str:
        return f"{self.re}+{self.im}i" if self.im >= 0 else f"{self.re}{self.im}i"


Scalar = Union[int, float, complex, Fraction, GaussianRational]


def _is_zero(c: Any) -> bool:
    if isinstance(c, GaussianRational):
        return not c
    return abs(c) < config.numerics.canonical_threshold


class GroupAlgebraElement:
    """Finitely supported map GroupElement -> scalar with no stored zeros."""

    __slots__ = ("group", "exact", "_coeffs")

    def __init__(
        self,
        group: GroupDescriptor,
        coeffs: Mapping[GroupElement, Scalar] | None = None,
        exact: bool = False,
    ):
        self.group = group
        self.exact = exact
        clean: Dict[GroupElement, Any] = {}
        for g, c in (coeffs or {}).items():
            if g.key != group.key:
                raise GroupMismatchError(f"{g} is not an element of {group.key}")
            c = GaussianRational.coerce(c) if exact else complex(c)
            if not _is_zero(c):
                clean[g] = c
        self._coeffs = MappingProxyType(clean)

    @property
    def coeffs(self) -> Mapping[GroupElement, Any]:
        return self._coeffs

    def support(self) -> List[GroupElement]:
        return sorted(self._coeffs, key=lambda g: self.group.law.sort_key(g.form))

    def __getitem__(self, g: GroupElement) -> Any:
        return self._coeffs.get(g, GaussianRational() if self.exact else 0j)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupAlgebraElement):
            return NotImplemented
        return self.group.key == other.group.key and dict(self._coeffs) == dict(
            other._coeffs
        )

    def __hash__(self) -> int:
        return hash((self.group.key, frozenset(self._coeffs.items())))

    def __repr__(self) -> str:
        terms = " + ".join(f"({c})*d{g}" for g, c in self.items())
        return f"GroupAlgebraElement({self.group.key}: {terms or '0'})"

    def items(self) -> List[Tuple[GroupElement, Any]]:
        return [(g, self._coeffs[g]) for g in self.support()]

    def _same(self, other: "GroupAlgebraElement") -> None:
        if self.group.key != other.group.key:
            raise GroupMismatchError(
                f"Cannot combine elements of {self.group.key} and {other.group.key}"
            )

    def _new(self, coeffs: Mapping[GroupElement, Any], exact: bool | None = None):
        return GroupAlgebraElement(
            self.group, coeffs, self.exact if exact is None else exact
        )

    def __add__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        self._same(other)
        exact = self.exact and other.exact
        out: Dict[GroupElement, Any] = {}
        for src in (self, other):
            for g, c in src._coeffs.items():
                c = c if exact else complex(c)
                out[g] = out[g] + c if g in out else c
        return self._new(out, exact)

    def __neg__(self) -> "GroupAlgebraElement":
        return self.scale(-1)

    def __sub__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        return self + (-other)

    def scale(self, c: Scalar) -> "GroupAlgebraElement":
        if self.exact:
            c = GaussianRational.coerce(c)
            return self._new({g: c * v for g, v in self._coeffs.items()})
        c = complex(c)
        return self._new({g: c * v for g, v in self._coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, GroupAlgebraElement):
            return convolve(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def to_json(self) -> List[Dict[str, Any]]:
        """JSON form: list of {element, re, im}; exact values as fraction strings."""
        out = []
        for g, c in self.items():
            if self.exact:
                out.append({"element": str(g), "re": str(c.re), "im": str(c.im)})
            else:
                out.append({"element": str(g), "re": c.real, "im": c.imag})
        return out

    @classmethod
    def from_json(
        cls, group: GroupDescriptor | str, data: Iterable[Mapping[str, Any]]
    ) -> "GroupAlgebraElement":
        desc = parse_group(group) if isinstance(group, str) else group
        terms = list(data)
        exact = any(isinstance(t["re"], str) for t in terms)
        coeffs: Dict[GroupElement, Any] = {}
        for t in terms:
            g = parse_element(desc, t["element"])
            if exact:
                c = GaussianRational(Fraction(t["re"]), Fraction(t["im"]))
            else:
                c = complex(float(t["re"]), float(t["im"]))
            coeffs[g] = coeffs[g] + c if g in coeffs else c
        return cls(desc, coeffs, exact)


def zero(group: GroupDescriptor, exact: bool = False) -> GroupAlgebraElement:
    return GroupAlgebraElement(group, {}, exact)


def delta(
    group: GroupDescriptor, g: GroupElement | str | None = None, coef: Scalar = 1,
    exact: bool = False,
) -> GroupAlgebraElement:
    """The point mass coef * δ_g (δ_e when g is omitted)."""
    if g is None:
        g = group.identity()
    elif isinstance(g, str):
        g = parse_element(group, g)
    return GroupAlgebraElement(group, {g: coef}, exact)


def from_terms(
    group: GroupDescriptor, terms: Iterable[Tuple[GroupElement | str, Scalar]],
    exact: bool = False,
) -> GroupAlgebraElement:
    out = zero(group, exact)
    for g, c in terms:
        out = out + delta(group, g, c, exact)
    return out


def convolve(a: GroupAlgebraElement, b: GroupAlgebraElement) -> GroupAlgebraElement:
    """(a*b)(h) = Σ_g a(g) b(g⁻¹h)."""
    a._same(b)
    exact = a.exact and b.exact
    out: Dict[GroupElement, Any] = {}
    for g, x in a._coeffs.items():
        for k, y in b._coeffs.items():
            h = mul(g, k)
            v = x * y if exact else complex(x) * complex(y)
            out[h] = out[h] + v if h in out else v
    return GroupAlgebraElement(a.group, out, exact)


def star(a: GroupAlgebraElement) -> GroupAlgebraElement:
    """a*(g) = conj(a(g⁻¹))."""
    return a._new({inv(g): c.conjugate() for g, c in a._coeffs.items()})


def flip(a: GroupAlgebraElement) -> GroupAlgebraElement:
    """(flip a)(h) = a(h⁻¹)."""
    return a._new({inv(g): c for g, c in a._coeffs.items()})


def conjugate(a: GroupAlgebraElement) -> GroupAlgebraElement:
    """Coefficient-wise complex conjugation; equals flip ∘ star."""
    return a._new({g: c.conjugate() for g, c in a._coeffs.items()})


def convolution_power(a: GroupAlgebraElement, n: int) -> GroupAlgebraElement:
    if n < 0:
        raise ParameterError("Convolution powers need n >= 0")
    result = delta(a.group, exact=a.exact)
    for _ in range(n):
        result = convolve(result, a)
    return result


def lp_coeff_norm(a: GroupAlgebraElement, p: float) -> float:
    """ℓᵖ norm of the coefficient multiset; p = inf gives the max modulus."""
    if not p >= 1:
        raise ParameterError(f"Exponent p must be in [1, inf], got {p}")
    moduli = [abs(c) for c in a.coeffs.values()]
    if not moduli:
        return 0.0
    if math.isinf(p):
        return max(moduli)
    top = max(moduli)
    return top * math.fsum((m / top) ** p for m in moduli) ** (1.0 / p)


def coefficient_vector(a: GroupAlgebraElement, index: BallIndex) -> np.ndarray:
    """Coefficients of ``a`` on a BallIndex, dropping mass outside the ball."""
    vec = np.zeros(len(index), dtype=np.complex128)
    for g, c in a.coeffs.items():
        if g in index:
            vec[index.position(g)] = complex(c)
    return vec
