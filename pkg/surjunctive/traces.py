"""The canonical trace on CΓ and group-side noncommutative Lᵖ norms."""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .algebra import GroupAlgebraElement, convolve, star
from .config import config
from .errors import FunctionalCalculusError, ParameterError
from .groups import ball
from .operators import Provenance, assemble
from .records import NcLpReport
from .spectral import clamp_nonnegative, eig_herm, largest_singular_value

logger = logging.getLogger(__name__)


def trace_state(a: GroupAlgebraElement) -> complex:
    """τ(a) = ⟨L_a δ_e, δ_e⟩ = a(e)."""
    return complex(a[a.group.identity()])


def truncated_nc_lp(a: GroupAlgebraElement, p: float, r: int) -> float:
    """⟨(M_r)^{p/2} δ_e, δ_e⟩^{1/p} with M_r the compression of L_{a*a} to B_r."""
    b = ball(a.group, r)
    if math.isinf(p):
        return largest_singular_value(assemble(a, b, Provenance.LEFT).matrix)
    positive = convolve(star(a), a)
    M = assemble(positive, b, Provenance.LEFT).matrix
    D = eig_herm(M)
    values = clamp_nonnegative(D.eigenvalues)
    weights = np.abs(D.eigenvectors[b.identity_index, :]) ** 2
    moment = float(np.dot(weights, values ** (p / 2)))
    return max(moment, 0.0) ** (1 / p)


def nc_lp_norm_group(
    a: GroupAlgebraElement, p: float, radii: Sequence[int]
) -> NcLpReport:
    """τ((a*a)^{p/2})^{1/p} along a sweep of radii, with a convergence flag."""
    if not p >= 1:
        raise ParameterError(f"Exponent p must be in [1, inf], got {p}")
    radii = sorted(set(int(r) for r in radii))
    if not radii:
        raise ParameterError("At least one radius is required")
    values = []
    for r in radii:
        try:
            values.append(truncated_nc_lp(a, p, r))
        except FunctionalCalculusError as e:
            logger.error(f"Failed to evaluate nc-Lp norm at r={r}: {e}")
            raise
    converged = False
    if len(values) >= 2:
        last, prev = values[-1], values[-2]
        change = abs(last - prev) / max(abs(last), 1e-300)
        converged = change < config.numerics.convergence_tol
    if not converged and len(values) >= 2:
        logger.warning(
            f"nc-Lp values did not settle over radii {radii}: last two "
            f"{values[-2]:.9g}, {values[-1]:.9g}"
        )
    return NcLpReport(
        p=p,
        radii=radii,
        values=values,
        extrapolation=values[-1] if converged else None,
        converged=converged,
        diverging=len(values) >= 2 and not converged,
    )
