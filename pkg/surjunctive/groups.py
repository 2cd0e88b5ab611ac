"""Exact arithmetic and word-metric balls for the supported group families.

Families and their normal forms:

* ``Z^d``  integer d-tuples, written ``[a,b,...]``.
* ``Fk``   reduced words, stored as tuples of signed generator numbers
  (``+i`` for the i-th generator, ``-i`` for its inverse) and written with
  generator letters, upper case for inverses (``aB``); ``e`` is the identity.
* ``H3``   integer triples ``(a, b, c)`` standing for the unipotent matrix
  ``[[1, a, c], [0, 1, b], [0, 0, 1]]``.
* ``Cn``   residues mod n, written ``[k]``.
* ``Sn``   permutations of ``0..n-1``, stored as the index of the permutation
  in lexicographic order and written in one-line notation ``[2,0,1]``.

Balls are enumerated breadth-first; inside a layer elements are sorted by
their stored form (tuple order for Z^d, H3 and Fk, index order for the finite
families), so indices are reproducible across runs.
"""

from __future__ import annotations

import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .config import config
from .errors import (
    BallSizeLimitError,
    ExpressionError,
    GroupMismatchError,
    GroupOverflowError,
    ParameterError,
)

logger = logging.getLogger(__name__)

Form = Tuple[int, ...]

# Generator letters; d, e, i and w are reserved by the expression grammar.
LETTERS = "abcfghjklmnopqrstuvxyz"


class GroupLaw:
    """Multiplication, inversion and notation for one group."""

    key: str
    amenable: bool = True
    finite: bool = False

    def identity(self) -> Form:
        raise NotImplementedError

    def mul(self, g: Form, h: Form) -> Form:
        raise NotImplementedError

    def inv(self, g: Form) -> Form:
        raise NotImplementedError

    def validate(self, form: Form) -> Form:
        return tuple(int(x) for x in form)

    def letters(self) -> Dict[str, Form]:
        raise NotImplementedError

    def format(self, form: Form) -> str:
        return "[" + ",".join(str(x) for x in form) + "]"

    def parse_literal(self, body: Sequence[int]) -> Form:
        return self.validate(tuple(body))

    def sort_key(self, form: Form) -> Form:
        return form

    def _check(self, form: Form) -> Form:
        limit = config.numerics.coordinate_limit
        for x in form:
            if abs(x) > limit:
                raise GroupOverflowError(
                    f"Coordinate {x} exceeds the exact range +/-{limit} in {self.key}"
                )
        return form


class AbelianLaw(GroupLaw):
    def __init__(self, d: int):
        if d < 1:
            raise ExpressionError(f"Z^d needs d >= 1, got {d}")
        self.d = d
        self.key = "Z" if d == 1 else f"Z^{d}"

    def identity(self) -> Form:
        return (0,) * self.d

    def mul(self, g: Form, h: Form) -> Form:
        return self._check(tuple(a + b for a, b in zip(g, h)))

    def inv(self, g: Form) -> Form:
        return tuple(-a for a in g)

    def validate(self, form: Form) -> Form:
        if len(form) != self.d:
            raise ExpressionError(f"{self.key} elements have {self.d} coordinates")
        return self._check(tuple(int(x) for x in form))

    def letters(self) -> Dict[str, Form]:
        if self.d > len(LETTERS):
            return {}
        return {
            LETTERS[i]: tuple(1 if j == i else 0 for j in range(self.d))
            for i in range(self.d)
        }


class FreeLaw(GroupLaw):
    def __init__(self, k: int):
        if not 1 <= k <= len(LETTERS):
            raise ExpressionError(f"F_k needs 1 <= k <= {len(LETTERS)}, got {k}")
        self.k = k
        self.key = f"F{k}"
        self.amenable = k < 2

    def identity(self) -> Form:
        return ()

    def mul(self, g: Form, h: Form) -> Form:
        word = list(g)
        for s in h:
            if word and word[-1] == -s:
                word.pop()
            else:
                word.append(s)
        return tuple(word)

    def inv(self, g: Form) -> Form:
        return tuple(-s for s in reversed(g))

    def validate(self, form: Form) -> Form:
        word: List[int] = []
        for s in form:
            s = int(s)
            if s == 0 or abs(s) > self.k:
                raise ExpressionError(f"Invalid generator number {s} for {self.key}")
            if word and word[-1] == -s:
                word.pop()
            else:
                word.append(s)
        return tuple(word)

    def letters(self) -> Dict[str, Form]:
        return {LETTERS[i]: (i + 1,) for i in range(self.k)}

    def format(self, form: Form) -> str:
        if not form:
            return "e"
        return "".join(
            LETTERS[s - 1] if s > 0 else LETTERS[-s - 1].upper() for s in form
        )


class HeisenbergLaw(GroupLaw):
    key = "H3"

    def identity(self) -> Form:
        return (0, 0, 0)

    def mul(self, g: Form, h: Form) -> Form:
        a, b, c = g
        x, y, z = h
        return self._check((a + x, b + y, c + z + a * y))

    def inv(self, g: Form) -> Form:
        a, b, c = g
        return self._check((-a, -b, a * b - c))

    def validate(self, form: Form) -> Form:
        if len(form) != 3:
            raise ExpressionError("H3 elements are integer triples")
        return self._check(tuple(int(x) for x in form))

    def letters(self) -> Dict[str, Form]:
        return {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}


class FiniteLaw(GroupLaw):
    """Finite group given by precomputed multiplication and inverse tables."""

    finite = True

    def __init__(self, key: str, labels: Sequence[Form], product):
        order = len(labels)
        if order > config.numerics.finite_order_cap:
            raise BallSizeLimitError(
                f"{key} has order {order}, above the cap "
                f"{config.numerics.finite_order_cap}"
            )
        self.key = key
        self.order = order
        self.labels = tuple(labels)
        lookup = {label: i for i, label in enumerate(self.labels)}
        self.table = tuple(
            tuple(lookup[product(g, h)] for h in self.labels) for g in self.labels
        )
        self._identity = next(
            i for i in range(order) if all(self.table[i][j] == j for j in range(order))
        )
        self.inverse = tuple(self.table[i].index(self._identity) for i in range(order))
        self._lookup = lookup

    def identity(self) -> Form:
        return (self._identity,)

    def mul(self, g: Form, h: Form) -> Form:
        return (self.table[g[0]][h[0]],)

    def inv(self, g: Form) -> Form:
        return (self.inverse[g[0]],)

    def validate(self, form: Form) -> Form:
        if len(form) != 1 or not 0 <= int(form[0]) < self.order:
            raise ExpressionError(f"Invalid element index {form} for {self.key}")
        return (int(form[0]),)

    def format(self, form: Form) -> str:
        return "[" + ",".join(str(x) for x in self.labels[form[0]]) + "]"

    def parse_literal(self, body: Sequence[int]) -> Form:
        label = tuple(int(x) for x in body)
        if label not in self._lookup:
            raise ExpressionError(f"{list(label)} is not an element of {self.key}")
        return (self._lookup[label],)


class CyclicLaw(FiniteLaw):
    def __init__(self, n: int):
        if n < 1:
            raise ExpressionError(f"C_n needs n >= 1, got {n}")
        self.n = n
        super().__init__(
            f"C{n}", [(k,) for k in range(n)], lambda g, h: ((g[0] + h[0]) % n,)
        )

    def letters(self) -> Dict[str, Form]:
        return {"g": self.parse_literal([1 % self.n])}

    def parse_literal(self, body: Sequence[int]) -> Form:
        if len(body) != 1:
            raise ExpressionError(f"{self.key} literals are single residues")
        return (int(body[0]) % self.n,)


class SymmetricLaw(FiniteLaw):
    def __init__(self, n: int):
        if n < 1:
            raise ExpressionError(f"S_n needs n >= 1, got {n}")
        if math.factorial(n) > config.numerics.finite_order_cap:
            raise BallSizeLimitError(
                f"S{n} has order {math.factorial(n)}, above the cap "
                f"{config.numerics.finite_order_cap}"
            )
        self.n = n
        perms = list(itertools.permutations(range(n)))
        # (gh)(i) = g(h(i)): composition, h applied first.
        super().__init__(f"S{n}", perms, lambda g, h: tuple(g[i] for i in h))

    def letters(self) -> Dict[str, Form]:
        out = {}
        for i in range(min(self.n - 1, len(LETTERS))):
            swap = list(range(self.n))
            swap[i], swap[i + 1] = swap[i + 1], swap[i]
            out[LETTERS[i]] = self.parse_literal(swap)
        return out


_GROUP_PATTERNS = (
    (re.compile(r"^Z(?:\^(\d+))?$"), lambda m: AbelianLaw(int(m.group(1) or 1))),
    (re.compile(r"^F(\d+)$"), lambda m: FreeLaw(int(m.group(1)))),
    (re.compile(r"^H3$"), lambda m: HeisenbergLaw()),
    (re.compile(r"^C(\d+)$"), lambda m: CyclicLaw(int(m.group(1)))),
    (re.compile(r"^S(\d+)$"), lambda m: SymmetricLaw(int(m.group(1)))),
)


@lru_cache(maxsize=None)
def law_for(key: str) -> GroupLaw:
    """Return the (cached) group law for a compact group name."""
    text = key.strip().replace(" ", "")
    for pattern, build in _GROUP_PATTERNS:
        match = pattern.match(text)
        if match:
            return build(match)
    raise ExpressionError(
        f"Unknown group '{key}' (expected Z, Z^d, Fk, H3, Cn or Sn)"
    )


@dataclass(frozen=True)
class GroupElement:
    """Element of the group named by ``key``, in normal form."""

    key: str
    form: Form

    def __str__(self) -> str:
        return law_for(self.key).format(self.form)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def __invert__(self) -> "GroupElement":
        return inv(self)


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    """Normal form of the product gh."""
    if g.key != h.key:
        raise GroupMismatchError(f"Cannot multiply elements of {g.key} and {h.key}")
    return GroupElement(g.key, law_for(g.key).mul(g.form, h.form))


def inv(g: GroupElement) -> GroupElement:
    return GroupElement(g.key, law_for(g.key).inv(g.form))


@dataclass(frozen=True)
class GroupDescriptor:
    """A group together with a symmetric generating set."""

    key: str
    generators: Tuple[GroupElement, ...] = ()
    experimental: bool = False

    def __post_init__(self):
        law = law_for(self.key)
        object.__setattr__(self, "key", law.key)
        if not self.generators:
            object.__setattr__(self, "generators", _standard_generators(law))
        gens = set(self.generators)
        for g in self.generators:
            if g.key != law.key:
                raise GroupMismatchError(f"Generator {g} does not belong to {law.key}")
            if inv(g) not in gens:
                raise ExpressionError(
                    f"Generating set of {law.key} is not closed under inversion: "
                    f"missing inverse of {g}"
                )

    @property
    def law(self) -> GroupLaw:
        return law_for(self.key)

    @property
    def amenable(self) -> bool:
        return self.law.amenable

    @property
    def finite(self) -> bool:
        return self.law.finite

    def identity(self) -> GroupElement:
        return GroupElement(self.key, self.law.identity())

    def element(self, form: Iterable[int]) -> GroupElement:
        return GroupElement(self.key, self.law.validate(tuple(form)))

    def with_generators(self, generators: Sequence[GroupElement]) -> "GroupDescriptor":
        """Same group, custom generating set (experimental)."""
        logger.warning(
            f"Custom generating set for {self.key} is experimental: "
            f"{[str(g) for g in generators]}"
        )
        return GroupDescriptor(self.key, tuple(generators), experimental=True)

    def __str__(self) -> str:
        return self.key


def _standard_generators(law: GroupLaw) -> Tuple[GroupElement, ...]:
    out: List[GroupElement] = []
    for form in law.letters().values():
        if law.key == "H3" and form == (0, 0, 1):
            continue
        for f in (form, law.inv(form)):
            g = GroupElement(law.key, f)
            if g not in out and f != law.identity():
                out.append(g)
    return tuple(out)


def parse_group(text: str) -> GroupDescriptor:
    """Parse the compact group form: ``Z``, ``Z^2``, ``F2``, ``H3``, ``C12``, ``S4``."""
    return GroupDescriptor(law_for(text).key)


_LITERAL_RE = re.compile(r"^\[\s*(-?\d+(?:\s*,\s*-?\d+)*)?\s*\]$")
_INT_RE = re.compile(r"^-?\d+$")
_WORD_RE = re.compile(r"([A-Za-z])(-?\d+)?")


def parse_element(desc: GroupDescriptor, text: str) -> GroupElement:
    """Parse a normal-form string, an integer literal or a generator word."""
    law = desc.law
    s = text.strip()
    if s in ("", "e"):
        return desc.identity()
    literal = _LITERAL_RE.match(s)
    if literal:
        body = literal.group(1)
        values = [int(v) for v in body.split(",")] if body else []
        if law.key.startswith("F"):
            return desc.element(values)
        return GroupElement(desc.key, law.parse_literal(values))
    if _INT_RE.match(s):
        if isinstance(law, AbelianLaw) and law.d == 1 or isinstance(law, CyclicLaw):
            return GroupElement(desc.key, law.parse_literal([int(s)]))
        raise ExpressionError(f"Integer literal '{s}' needs a one-coordinate group")
    letters = law.letters()
    pos = 0
    result = desc.identity()
    for match in _WORD_RE.finditer(s):
        if match.start() != pos:
            break
        pos = match.end()
        letter, exponent = match.group(1), int(match.group(2) or 1)
        if letter == "e":
            continue
        base = letters.get(letter.lower())
        if base is None:
            raise ExpressionError(f"Unknown generator '{letter}' for {desc.key}")
        g = GroupElement(desc.key, base)
        if letter.isupper():
            g = inv(g)
        result = mul(result, power(g, exponent))
    if pos != len(s):
        raise ExpressionError(f"Cannot parse '{text}' as an element of {desc.key}")
    return result


def format_element(g: GroupElement) -> str:
    return str(g)


def power(g: GroupElement, n: int) -> GroupElement:
    if n < 0:
        return power(inv(g), -n)
    result = GroupElement(g.key, law_for(g.key).identity())
    base = g
    while n:
        if n & 1:
            result = mul(result, base)
        base = mul(base, base)
        n >>= 1
    return result


@dataclass(frozen=True, eq=False)
class BallIndex:
    """Ordered enumeration of the word-metric ball B_r.

    ``elements[0]`` is the identity; layer k occupies
    ``elements[layer_offsets[k]:layer_offsets[k + 1]]``.
    """

    group: GroupDescriptor
    radius: int
    elements: Tuple[GroupElement, ...]
    layer_offsets: Tuple[int, ...]
    index: Mapping[GroupElement, int] = field(repr=False)

    identity_index: int = 0

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g: GroupElement) -> bool:
        return g in self.index

    def position(self, g: GroupElement) -> int:
        return self.index[g]

    def word_length(self, g: GroupElement) -> int:
        i = self.index[g]
        for k in range(self.radius + 1):
            if i < self.layer_offsets[k + 1]:
                return k
        raise KeyError(g)

    def inverse_permutation(self) -> np.ndarray:
        """perm[i] is the index of elements[i]^{-1}."""
        return np.array([self.index[inv(g)] for g in self.elements], dtype=np.int64)


def _layers(desc: GroupDescriptor) -> Iterator[List[GroupElement]]:
    """Sorted spheres S_1, S_2, ... of the Cayley graph; stops once a sphere is empty."""
    law = desc.law
    seen = {desc.identity()}
    layer = [desc.identity()]
    while layer:
        fresh = {mul(g, s) for g in layer for s in desc.generators} - seen
        layer = sorted(fresh, key=lambda x: law.sort_key(x.form))
        seen.update(layer)
        yield layer


def ball(desc: GroupDescriptor, r: int) -> BallIndex:
    """Breadth-first enumeration of B_r with respect to ``desc.generators``."""
    return _ball(desc, r, config.numerics.ball_size_cap)


@lru_cache(maxsize=128)
def _ball(desc: GroupDescriptor, r: int, cap: int) -> BallIndex:
    if r < 0:
        raise ParameterError(f"Ball radius must be >= 0, got {r}")
    identity = desc.identity()
    elements: List[GroupElement] = [identity]
    offsets = [0, 1]
    for k, layer in zip(range(1, r + 1), _layers(desc)):
        if len(elements) + len(layer) > cap:
            raise BallSizeLimitError(
                f"Ball B_{r} of {desc.key} exceeds the size cap {cap} at layer {k}"
            )
        elements.extend(layer)
        offsets.append(len(elements))
    offsets.extend([len(elements)] * (r + 2 - len(offsets)))
    index = {g: i for i, g in enumerate(elements)}
    logger.debug(f"Enumerated B_{r} of {desc.key}: {len(elements)} elements")
    return BallIndex(desc, r, tuple(elements), tuple(offsets), index)


ball.cache_clear = _ball.cache_clear  # type: ignore[attr-defined]


def support_radius(desc: GroupDescriptor, support: Iterable[GroupElement]) -> int:
    """Smallest r with every element of ``support`` inside B_r.

    Raises ``ExpressionError`` when the generators exhaust a finite subgroup
    without reaching an element, and ``BallSizeLimitError`` once the search
    passes ``support_radius_limit`` or ``ball_size_cap``.
    """
    remaining = set(support) - {desc.identity()}
    limit = config.numerics.support_radius_limit
    cap = config.numerics.ball_size_cap
    size, r = 1, 0
    layers = _layers(desc)
    while remaining:
        layer = next(layers)
        if not layer:
            raise ExpressionError(
                f"Elements not generated by the generators of {desc.key}: {remaining}"
            )
        r += 1
        size += len(layer)
        if r > limit or size > cap:
            raise BallSizeLimitError(
                f"No element of {remaining} within word length {r - 1} of {desc.key} "
                f"(limit {limit}, size cap {cap})"
            )
        remaining.difference_update(layer)
    return r


def radial_tree_oracle(k: int, r: int) -> float:
    """Largest adjacency eigenvalue of B_r in the 2k-regular tree.

    The Perron vector is radial, so the eigenvalue is that of the
    (r+1)x(r+1) tridiagonal quotient with off-diagonal entries
    sqrt(2k), sqrt(2k-1), ..., sqrt(2k-1).
    """
    if r == 0:
        return 0.0
    off = np.full(r, math.sqrt(2 * k - 1))
    off[0] = math.sqrt(2 * k)
    values = eigh_tridiagonal(np.zeros(r + 1), off, eigvals_only=True)
    return float(values[-1])
