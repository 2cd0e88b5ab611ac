"""ℓ¹ distance from a target vector to the range of a truncated operator.

min over ξ supported on the column ball of ‖Tξ - b‖₁ with complex entries.
|z| is replaced by the polyhedral under-approximation
max_k Re(e^{-iθ_k} z) over K equally spaced phases, giving the LP

    min Σ_i t_i  s.t.  Re(e^{-iθ_k}(Tξ - b)_i) ≤ t_i  for all i, k;  t ≥ 0,

whose optimum is a lower bound for the true distance. The true ℓ¹ residual of
the LP minimizer is an upper bound. K doubles until the bracket is tight.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse
from scipy.optimize import linprog

from .config import config
from .errors import HypothesisError, IterationLimitError, SolverError
from .operators import TruncatedOperator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RangeDistance:
    distance: float
    lower: float
    argmin_norm: float
    directions: int
    duality_gap: float
    argmin: np.ndarray


def _solve(
    A_re: scipy.sparse.csr_matrix,
    A_im: scipy.sparse.csr_matrix,
    b: np.ndarray,
    directions: int,
):
    n, m = A_re.shape
    blocks, rhs = [], []
    neg_eye = -scipy.sparse.identity(n, format="csr")
    for k in range(directions):
        theta = 2 * math.pi * k / directions
        c, s = math.cos(theta), math.sin(theta)
        blocks.append(
            scipy.sparse.hstack([c * A_re + s * A_im, s * A_re - c * A_im, neg_eye])
        )
        rhs.append(c * b.real + s * b.imag)
    A_ub = scipy.sparse.vstack(blocks, format="csr")
    b_ub = np.concatenate(rhs)
    cost = np.concatenate([np.zeros(2 * m), np.ones(n)])
    bounds = [(None, None)] * (2 * m) + [(0, None)] * n
    tol = config.numerics.lp_tolerance
    try:
        res = linprog(
            cost,
            A_ub=A_ub,
            b_ub=b_ub,
            bounds=bounds,
            method="highs-ds",
            options={
                "primal_feasibility_tolerance": tol,
                "dual_feasibility_tolerance": tol,
            },
        )
    except ValueError as e:
        logger.error(f"Failed to set up l1 LP ({A_ub.shape}): {e}")
        raise SolverError(f"Failed to set up l1 LP: {e}")
    if res.status == 1:
        raise IterationLimitError(f"LP hit its iteration limit: {res.message}")
    if res.status != 0:
        logger.error(f"Failed to solve l1 LP ({A_ub.shape}): {res.message}")
        raise SolverError(f"LP failed with status {res.status}: {res.message}")
    gap = abs(res.fun - float(b_ub @ res.ineqlin.marginals))
    xi = res.x[:m] + 1j * res.x[m : 2 * m]
    return float(res.fun), xi, gap


def range_distance_l1(
    T: TruncatedOperator,
    target: np.ndarray,
    incumbent: Optional[np.ndarray] = None,
) -> RangeDistance:
    """Bracket min ‖Tξ - target‖₁; ``distance`` is the certified upper envelope.

    ``incumbent`` is a feasible ξ (e.g. from a smaller ball, zero-padded) that
    is kept whenever its residual beats the LP minimizer.
    """
    M = T.matrix
    b = np.asarray(target, dtype=np.complex128)
    if b.shape != (M.shape[0],):
        raise HypothesisError(
            f"Target of length {b.shape} does not match {M.shape[0]} operator rows"
        )
    A_re = scipy.sparse.csr_matrix(M.real)
    A_im = scipy.sparse.csr_matrix(M.imag)
    directions = config.numerics.lp_directions
    cap = config.numerics.lp_max_directions
    while True:
        lower, xi, gap = _solve(A_re, A_im, b, directions)
        upper = float(np.sum(np.abs(M @ xi - b)))
        logger.debug(
            f"l1 LP with {directions} phases: lower {lower:.9g}, upper {upper:.9g}"
        )
        if upper - lower <= config.numerics.lp_refine_gap * upper or directions >= cap:
            break
        directions *= 2
    if gap > config.numerics.lp_tolerance * max(1.0, abs(lower)):
        logger.warning(f"LP duality gap {gap:.3e} exceeds tolerance")
    if incumbent is not None:
        residual = float(np.sum(np.abs(M @ incumbent - b)))
        if residual < upper:
            upper, xi = residual, np.asarray(incumbent, dtype=np.complex128)
    lower = min(lower, upper)
    return RangeDistance(
        distance=upper,
        lower=max(lower, 0.0),
        argmin_norm=float(np.sum(np.abs(xi))),
        directions=directions,
        duality_gap=gap,
        argmin=xi,
    )
