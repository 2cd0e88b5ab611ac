"""Truncated convolution operators on ℓᵖ of word-metric balls.

``assemble(a, B_r, side)`` builds the compression P_r L_a P_r (or P_r ρ_a P_r,
or the flip permutation) as a sparse complex matrix whose rows and columns are
indexed by the ball. Passing a larger ``row_ball`` keeps every output row, so
the matrix is the exact restriction of L_a to vectors supported on B_r.

Exchange formats
----------------
Coordinate text::

    % surjunctive-coordinate 1
    % <rows> <cols> <nnz> <provenance>
    <row> <col> <re> <im>          (one line per stored entry, 0-based)

Binary (little endian): a 20 byte header ``b"SJOP"``, ``u8`` version (1),
``u8`` provenance code (0 left, 1 right, 2 flip, 3 composite, 4 unknown),
two pad bytes, ``u32`` rows, ``u32`` cols, ``u32`` nnz; then nnz records of
``u32`` row, ``u32`` col, ``f64`` re, ``f64`` im (24 bytes each).
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse

from .algebra import GaussianRational, GroupAlgebraElement
from .config import config
from .errors import GroupMismatchError, HypothesisError, ParameterError, SolverError
from .groups import BallIndex, ball, inv, mul, support_radius
from .spectral import largest_singular_value, smallest_singular_value

logger = logging.getLogger(__name__)


class Provenance(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    FLIP = "flip"
    COMPOSITE = "composite"
    UNKNOWN = "unknown"


_PROVENANCE_CODES = {p: i for i, p in enumerate(Provenance)}


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Sparse matrix with columns indexed by ``ball`` and rows by ``row_ball``."""

    ball: BallIndex
    row_ball: BallIndex
    matrix: scipy.sparse.csr_matrix
    provenance: Provenance
    element: Optional[GroupAlgebraElement] = None
    exact_entries: Optional[Mapping[Tuple[int, int], GaussianRational]] = field(
        default=None, repr=False
    )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def is_square(self) -> bool:
        return self.row_ball is self.ball

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, xi: np.ndarray) -> np.ndarray:
        return self.matrix @ xi


def assemble(
    a: Optional[GroupAlgebraElement],
    ball_index: BallIndex,
    side: str | Provenance = Provenance.LEFT,
    row_ball: Optional[BallIndex] = None,
) -> TruncatedOperator:
    """Matrix of L_a, ρ_a or the flip on the given ball.

    left:  entry[h, h'] = a(h h'⁻¹)
    right: entry[h, h'] = a(h⁻¹ h')
    flip:  entry[h⁻¹, h] = 1
    """
    side = Provenance(side)
    rows_idx = row_ball or ball_index
    if rows_idx.group.key != ball_index.group.key:
        raise GroupMismatchError(
            f"Row ball of {rows_idx.group.key} vs column ball of {ball_index.group.key}"
        )
    if rows_idx.radius < ball_index.radius:
        raise HypothesisError("The row ball must contain the column ball")
    n_rows, n_cols = len(rows_idx), len(ball_index)

    rows: List[int] = []
    cols: List[int] = []
    data: List[complex] = []
    exact: Optional[Dict[Tuple[int, int], GaussianRational]] = None

    if side is Provenance.FLIP:
        if row_ball is not None and row_ball is not ball_index:
            raise HypothesisError("The flip is only defined on a single ball")
        perm = ball_index.inverse_permutation()
        rows, cols, data = perm.tolist(), list(range(n_cols)), [1.0] * n_cols
        if a is not None and a.exact:
            exact = {(r, c): GaussianRational(1) for r, c in zip(rows, cols)}
    else:
        if a is None:
            raise HypothesisError(f"The {side.value} operator needs an element")
        if a.group.key != ball_index.group.key:
            raise GroupMismatchError(
                f"Element of {a.group.key} on a ball of {ball_index.group.key}"
            )
        if a.exact:
            exact = {}
        terms = a.items()
        if side is Provenance.RIGHT:
            terms = [(inv(g), c) for g, c in terms]
        for j, h_col in enumerate(ball_index.elements):
            for g, c in terms:
                h = mul(g, h_col) if side is Provenance.LEFT else mul(h_col, g)
                i = rows_idx.index.get(h)
                if i is None:
                    continue
                rows.append(i)
                cols.append(j)
                data.append(complex(c))
                if exact is not None:
                    exact[(i, j)] = c

    matrix = scipy.sparse.coo_matrix(
        (np.asarray(data, dtype=np.complex128), (rows, cols)), shape=(n_rows, n_cols)
    ).tocsr()
    logger.debug(
        f"Assembled {side.value} operator on B_{ball_index.radius} of "
        f"{ball_index.group.key}: shape {matrix.shape}, nnz {matrix.nnz}"
    )
    return TruncatedOperator(ball_index, rows_idx, matrix, side, a, exact)


def exact_image_operator(a: GroupAlgebraElement, radius: int) -> TruncatedOperator:
    """L_a restricted to ℓᵖ(B_r), with rows on B_{r+s} so no output is lost."""
    desc = a.group
    s = support_radius(desc, a.coeffs.keys()) if len(a) else 0
    return assemble(a, ball(desc, radius), Provenance.LEFT, ball(desc, radius + s))


def compose(T1: TruncatedOperator, T2: TruncatedOperator) -> TruncatedOperator:
    """The product T1·T2 (T2 acts first)."""
    if T1.ball is not T2.row_ball:
        raise HypothesisError("Incompatible balls for composition")
    return TruncatedOperator(
        T2.ball, T1.row_ball, (T1.matrix @ T2.matrix).tocsr(), Provenance.COMPOSITE
    )


def intertwine_check(a: GroupAlgebraElement, ball_index: BallIndex) -> float:
    """max |(t·ρ_a - L_a·t)[i, j]| on the ball; exactly 0 for exact elements."""
    left = assemble(a, ball_index, Provenance.LEFT)
    right = assemble(a, ball_index, Provenance.RIGHT)
    flip_op = assemble(a if a.exact else None, ball_index, Provenance.FLIP)
    if a.exact:
        perm = ball_index.inverse_permutation().tolist()
        flipped_right = {(perm[r], c): v for (r, c), v in right.exact_entries.items()}
        left_flipped = {(r, perm[c]): v for (r, c), v in left.exact_entries.items()}
        zero = GaussianRational()
        worst = 0.0
        for key in set(flipped_right) | set(left_flipped):
            diff = flipped_right.get(key, zero) - left_flipped.get(key, zero)
            if diff:
                worst = max(worst, abs(diff))
        return worst
    lhs = compose(flip_op, right).matrix
    rhs = compose(left, flip_op).matrix
    diff = (lhs - rhs).tocoo()
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


@dataclass(frozen=True)
class OperatorNormEstimate:
    p: float
    lower: float
    upper: float
    iterations: int = 0
    history: Tuple[float, ...] = ()


def column_norm(T: TruncatedOperator) -> float:
    """‖T‖_{1→1}: maximum column ℓ¹ sum."""
    if T.matrix.nnz == 0:
        return 0.0
    return float(np.max(np.asarray(abs(T.matrix).sum(axis=0))))


def row_norm(T: TruncatedOperator) -> float:
    """‖T‖_{∞→∞}: maximum row ℓ¹ sum."""
    if T.matrix.nnz == 0:
        return 0.0
    return float(np.max(np.asarray(abs(T.matrix).sum(axis=1))))


def interpolation_bound(T: TruncatedOperator, p: float) -> float:
    """‖T‖₁^{1/p} ‖T‖_∞^{1-1/p} (Riesz–Thorin)."""
    if math.isinf(p):
        return row_norm(T)
    return column_norm(T) ** (1 / p) * row_norm(T) ** (1 - 1 / p)


def duality_map(v: np.ndarray, p: float) -> np.ndarray:
    """ψ_p(v) = |v|^{p-1} · phase(v), the ℓᵖ duality map up to scaling."""
    mod = np.abs(v)
    out = np.zeros_like(v, dtype=np.complex128)
    nz = mod > 0
    out[nz] = mod[nz] ** (p - 1) * (v[nz] / mod[nz])
    return out


def power_iteration_pnorm(
    T: TruncatedOperator, p: float, start: Optional[np.ndarray] = None
) -> Tuple[float, int, Tuple[float, ...]]:
    """Fixed-point p-norm power iteration; returns the best ratio found."""
    M = T.matrix
    n = M.shape[1]
    if n == 0 or M.nnz == 0:
        return 0.0, 0, (0.0,)
    q = p / (p - 1)
    x = np.ones(n, dtype=np.complex128) if start is None else start.astype(np.complex128)
    x /= np.linalg.norm(x, p)
    value = float(np.linalg.norm(M @ x, p))
    history = [value]
    tol, max_iter = config.numerics.power_tol, config.numerics.power_max_iter
    iterations = 0
    for iterations in range(1, max_iter + 1):
        z = M.conj().T @ duality_map(M @ x, p)
        if not np.any(z):
            break
        x_next = duality_map(z, q)
        x_next /= np.linalg.norm(x_next, p)
        next_value = float(np.linalg.norm(M @ x_next, p))
        history.append(next_value)
        change = abs(next_value - value)
        x, value = x_next, max(value, next_value)
        if change <= tol * max(value, 1e-300):
            break
    return max(history), iterations, tuple(history)


def opnorm_est(T: TruncatedOperator, p: float) -> OperatorNormEstimate:
    """Bracket ‖T‖_{ℓᵖ→ℓᵖ}: exact for p ∈ {1, 2, ∞}, power iteration otherwise."""
    if not p >= 1:
        raise ParameterError(f"Exponent p must be in [1, inf], got {p}")
    if p == 1:
        value = column_norm(T)
        return OperatorNormEstimate(p, value, value)
    if math.isinf(p):
        value = row_norm(T)
        return OperatorNormEstimate(p, value, value)
    bound = interpolation_bound(T, p)
    if p == 2:
        sigma = largest_singular_value(T.matrix)
        upper = max(sigma, min(sigma * (1 + config.numerics.power_tol), bound))
        return OperatorNormEstimate(p, sigma, upper)
    lower, iterations, history = power_iteration_pnorm(T, p)
    return OperatorNormEstimate(p, lower, max(bound, lower), iterations, history)


@dataclass(frozen=True)
class ModulusEstimate:
    p: float
    value: float
    method: str
    restarts: int = 0


def injectivity_modulus_est(
    T: TruncatedOperator, p: float, restarts: int = 4, seed: int = 0
) -> ModulusEstimate:
    """Upper estimate of inf ‖Tξ‖_p/‖ξ‖_p over vectors supported on T.ball."""
    if not 1 <= p < math.inf:
        raise ParameterError(f"Exponent p must be in [1, inf), got {p}")
    if restarts < 1:
        raise ParameterError("restarts must be >= 1")
    if p == 2:
        return ModulusEstimate(p, smallest_singular_value(T.matrix), "svd")
    M = T.matrix
    n = M.shape[1]
    if n == 0:
        return ModulusEstimate(p, 0.0, "descent", restarts)
    columns = np.asarray(abs(M).power(p).sum(axis=0)).ravel() ** (1 / p)
    best = float(columns.min())
    rng = np.random.default_rng(seed)
    starts = [np.eye(1, n, int(columns.argmin()), dtype=np.complex128).ravel()]
    for _ in range(restarts):
        starts.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for start in starts:
        best = min(best, _descend(M, p, start))
    logger.debug(f"Modulus descent (p={p}, n={n}): {best:.6g}")
    return ModulusEstimate(p, best, "descent", restarts)


def _descend(M: scipy.sparse.csr_matrix, p: float, start: np.ndarray) -> float:
    xi = start / np.linalg.norm(start, p)
    MH = M.conj().T
    best = float(np.linalg.norm(M @ xi, p))
    for t in range(config.numerics.descent_iterations):
        image = M @ xi
        ratio = float(np.linalg.norm(image, p))
        if ratio == 0.0:
            return 0.0
        grad = MH @ duality_map(image, p) / ratio ** (p - 1) - ratio * duality_map(xi, p)
        size = np.linalg.norm(grad)
        if size == 0.0:
            break
        step = 0.5 / math.sqrt(t + 1) * np.linalg.norm(xi)
        xi = xi - step * grad / size
        xi /= np.linalg.norm(xi, p)
        best = min(best, float(np.linalg.norm(M @ xi, p)))
    return best


def to_coordinate_text(T: TruncatedOperator | scipy.sparse.spmatrix) -> str:
    matrix, provenance = _unwrap(T)
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [
        "% surjunctive-coordinate 1",
        f"% {matrix.shape[0]} {matrix.shape[1]} {coo.nnz} {provenance.value}",
    ]
    for k in order:
        v = complex(coo.data[k])
        lines.append(f"{coo.row[k]} {coo.col[k]} {v.real!r} {v.imag!r}")
    return "\n".join(lines) + "\n"


def from_coordinate_text(text: str) -> scipy.sparse.csr_matrix:
    header: Optional[List[str]] = None
    rows, cols, data = [], [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            fields = line[1:].split()
            if fields and fields[0].isdigit():
                header = fields
            continue
        r, c, re_, im = line.split()
        rows.append(int(r))
        cols.append(int(c))
        data.append(complex(float(re_), float(im)))
    if header is None:
        raise SolverError("Coordinate text has no '% rows cols nnz' header")
    shape = (int(header[0]), int(header[1]))
    return scipy.sparse.coo_matrix(
        (np.asarray(data, dtype=np.complex128), (rows, cols)), shape=shape
    ).tocsr()


_HEADER = struct.Struct("<4sBBxxIII")
_RECORD = np.dtype([("row", "<u4"), ("col", "<u4"), ("re", "<f8"), ("im", "<f8")])


def to_binary(T: TruncatedOperator | scipy.sparse.spmatrix) -> bytes:
    matrix, provenance = _unwrap(T)
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    records = np.zeros(coo.nnz, dtype=_RECORD)
    records["row"] = coo.row[order]
    records["col"] = coo.col[order]
    records["re"] = coo.data[order].real
    records["im"] = coo.data[order].imag
    header = _HEADER.pack(
        b"SJOP", 1, _PROVENANCE_CODES[provenance], matrix.shape[0], matrix.shape[1], coo.nnz
    )
    return header + records.tobytes()


def from_binary(blob: bytes) -> Tuple[scipy.sparse.csr_matrix, Provenance]:
    magic, version, code, n_rows, n_cols, nnz = _HEADER.unpack_from(blob)
    if magic != b"SJOP" or version != 1:
        raise SolverError("Not a surjunctive binary matrix (bad magic or version)")
    records = np.frombuffer(blob, dtype=_RECORD, count=nnz, offset=_HEADER.size)
    matrix = scipy.sparse.coo_matrix(
        (records["re"] + 1j * records["im"], (records["row"], records["col"])),
        shape=(n_rows, n_cols),
    ).tocsr()
    return matrix, list(Provenance)[code]


def _unwrap(T: Any) -> Tuple[scipy.sparse.csr_matrix, Provenance]:
    if isinstance(T, TruncatedOperator):
        return T.matrix.tocsr(), T.provenance
    return scipy.sparse.csr_matrix(T), Provenance.UNKNOWN
