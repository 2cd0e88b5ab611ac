"""Finite-scale experiments on surjunctivity of group algebras.

Every probe works on word-metric balls. Range-distance and modulus values use
the exact-image operator (rows on B_{r+s}), so each reported number is a true
residual or ratio for a vector supported on B_r: an upper bound for the
corresponding quantity of the infinite operator.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from .algebra import (
    GroupAlgebraElement,
    coefficient_vector,
    delta,
    from_terms,
)
from .config import config
from .errors import HypothesisError, InvariantViolation, ParameterError
from .expressions import OMEGA, parse_expression
from .groups import GroupDescriptor, ball, parse_group, support_radius
from .operators import (
    Provenance,
    assemble,
    exact_image_operator,
    injectivity_modulus_est,
    interpolation_bound,
    opnorm_est,
)
from .range_lp import range_distance_l1
from .records import (
    ApproxKernelRecord,
    ExperimentRecord,
    FiniteSurjunctivityRecord,
    HerzRecord,
    ProbeRecord,
    TrendSummary,
    WillisRecord,
)
from .spectral import as_dense, clamp_nonnegative, eig_herm, fourier_symbol, func_calc

logger = logging.getLogger(__name__)

EVIDENCE_NOTE = "evidence only, no theorem"


def _describe(a: GroupAlgebraElement) -> str:
    return " + ".join(f"({complex(c):.12g})*d{g}" for g, c in a.items()) or "0"


def approx_kernel_sequence(
    a: GroupAlgebraElement, ns: Sequence[int], r: int
) -> List[ApproxKernelRecord]:
    """y_n = f_n(a*a) with f_n(t) = (1 + n√t)⁻¹ on the compression to B_r.

    The element is divided by the certified bound √(‖T‖₁‖T‖_∞) ≥ ‖T‖₂ when that
    exceeds 1, so the truncated spectrum of a*a lies in [0, 1].
    """
    T = assemble(a, ball(a.group, r), Provenance.LEFT)
    bound = interpolation_bound(T, 2)
    scale = bound if bound > 1 else 1.0
    A = as_dense(T.matrix) / scale
    D = eig_herm(A.conj().T @ A)
    lam = np.minimum(clamp_nonnegative(D.eigenvalues), 1.0)
    root = np.sqrt(lam)
    e = T.ball.identity_index
    out = []
    for n in sorted(set(ns)):
        if n < 0:
            raise ParameterError(f"n must be >= 0, got {n}")
        f = 1.0 / (1.0 + n * root)
        certified = float(np.max(root * f)) if len(f) else 0.0
        kernel_bound = 1.0 / (1 + n)
        if certified > kernel_bound * (1 + 4 * np.finfo(float).eps):
            raise InvariantViolation(
                f"sqrt(lambda) f_n(lambda) = {certified!r} exceeds 1/(1+n) = "
                f"{kernel_bound!r} for n={n}",
                "approx_kernel_bound",
            )
        Y = func_calc(D, lambda t, n=n: 1.0 / (1.0 + n * np.sqrt(np.clip(t, 0, 1))))
        ratio = float(scipy.linalg.norm(A @ Y, 2) / scipy.linalg.norm(Y, 2))
        y = Y[:, e]
        e_ratio = float(np.linalg.norm(A @ y) / np.linalg.norm(y))
        out.append(
            ApproxKernelRecord(
                n=n,
                radius=r,
                scale=scale,
                y_norm=float(np.max(f)),
                ratio=ratio,
                delta_e_ratio=e_ratio,
                certified_sup=certified,
                bound=kernel_bound,
                lambda_min=float(lam[0]),
            )
        )
        logger.debug(f"approx kernel n={n}: ratio {ratio:.6g}, certified {certified:.6g}")
    return out


def probe_element(
    a: GroupAlgebraElement,
    p: float,
    radii: Sequence[int],
    restarts: int = 4,
    seed: int = 0,
    target: Optional[GroupAlgebraElement] = None,
) -> List[ProbeRecord]:
    """Injectivity modulus and ℓ¹ distance from ``target`` (default δ_e) to the range.

    The best vector of each radius is carried to the next, so distances and
    moduli are nonincreasing in r.
    """
    desc = a.group
    target = target if target is not None else delta(desc, exact=a.exact)
    incumbent: Optional[np.ndarray] = None
    best_modulus = math.inf
    label = _describe(a)
    out: List[ProbeRecord] = []
    for r in sorted(set(radii)):
        T = exact_image_operator(a, r)
        if any(g not in T.row_ball for g in target.coeffs):
            raise HypothesisError(f"Target support leaves B_{T.row_ball.radius}")
        b = coefficient_vector(target, T.row_ball)
        start = None
        if incumbent is not None:
            start = np.zeros(len(T.ball), dtype=np.complex128)
            start[: len(incumbent)] = incumbent
        rd = range_distance_l1(T, b, start)
        incumbent = rd.argmin
        modulus = injectivity_modulus_est(T, p, restarts, seed).value
        best_modulus = min(best_modulus, modulus)
        out.append(
            ProbeRecord(
                group=desc.key,
                element=label,
                p=p,
                radius=r,
                distance=rd.distance,
                lower=rd.lower,
                argmin_norm=rd.argmin_norm,
                directions=rd.directions,
                duality_gap=rd.duality_gap,
                modulus=best_modulus,
            )
        )
        logger.info(
            f"{desc.key} r={r}: distance {rd.distance:.6g} (lower {rd.lower:.6g}), "
            f"modulus {best_modulus:.6g}"
        )
    return out


def plateau_summary(radii: Sequence[int], distances: Sequence[float]) -> TrendSummary:
    """Plateau: last three distances within ``plateau_spread`` and above 10x LP tol."""
    distances = list(distances)
    monotone = all(b <= a for a, b in zip(distances, distances[1:]))
    plateau, spread = False, None
    if len(distances) >= 3:
        tail = distances[-3:]
        top = max(tail)
        spread = (top - min(tail)) / top if top > 0 else 0.0
        plateau = (
            spread <= config.numerics.plateau_spread
            and min(tail) > 10 * config.numerics.lp_tolerance
        )
    return TrendSummary(
        radii=list(radii), distances=distances, monotone=monotone, plateau=plateau,
        spread=spread,
    )


def willis_element(
    t_a: complex, t_b: complex, desc: Optional[GroupDescriptor] = None
) -> GroupAlgebraElement:
    """x = δ_e + t_a δ_a + t_b δ_b over the free pair a, b."""
    desc = desc or parse_group("F2")
    if not (desc.key.startswith("F") and desc.law.k >= 2):
        raise HypothesisError(
            f"The Willis element needs a free group of rank >= 2, not {desc.key}"
        )
    for name, t in (("t_a", t_a), ("t_b", t_b)):
        if abs(abs(t) - 1) > 1e-12:
            raise HypothesisError(f"{name} = {t} is not of modulus 1")
    return from_terms(desc, [(desc.identity(), 1), ("a", t_a), ("b", t_b)])


def willis_experiment(
    t_a: complex,
    t_b: complex,
    p: float,
    radii: Sequence[int],
    restarts: int = 4,
    seed: int = 0,
    desc: Optional[GroupDescriptor] = None,
) -> tuple[List[WillisRecord], TrendSummary]:
    x = willis_element(t_a, t_b, desc)
    if p >= 2:
        logger.warning(f"p = {p} is outside the left-invertibility range 1 <= p < 2")
    records = [
        WillisRecord(
            **rec.model_dump(),
            t_a=(t_a.real, t_a.imag),
            t_b=(t_b.real, t_b.imag),
        )
        for rec in probe_element(x, p, radii, restarts, seed)
    ]
    summary = plateau_summary([r.radius for r in records], [r.distance for r in records])
    return records, summary


def herz_check(
    a: GroupAlgebraElement, p: float, r: int, samples: int = 100, seed: int = 0
) -> HerzRecord:
    """Compare sup ‖L_a η‖₂/‖η‖₂ over random η on B_r with ‖L_a‖_{p→p}."""
    desc = a.group
    if not desc.amenable:
        logger.error(f"Failed Herz check: {desc.key} is not amenable")
        raise HypothesisError(f"Herz majorization needs an amenable group, not {desc.key}")
    if samples < 100:
        raise HypothesisError(f"At least 100 samples are required, got {samples}")
    T = exact_image_operator(a, r)
    norm = opnorm_est(T, p)
    n = len(T.ball)
    rng = np.random.default_rng(seed)
    etas = rng.standard_normal((n, samples)) + 1j * rng.standard_normal((n, samples))
    etas[:, 0] = 0
    etas[T.ball.identity_index, 0] = 1
    ratios = np.linalg.norm(T.matrix @ etas, axis=0) / np.linalg.norm(etas, axis=0)
    max_ratio = float(ratios.max())
    floor = max_ratio / norm.upper if norm.upper > 0 else 0.0
    cp = config.numerics.herz_cp_candidate
    violation = max_ratio > cp * norm.upper * (1 + 1e-9)
    if violation:
        logger.warning(
            f"Herz ratio {max_ratio:.6g} exceeds C_p * |L_a|_p = {cp * norm.upper:.6g}"
        )
    return HerzRecord(
        group=desc.key,
        element=_describe(a),
        p=p,
        radius=r,
        samples=samples,
        norm_lower=norm.lower,
        norm_upper=norm.upper,
        max_ratio=max_ratio,
        constant_floor=floor,
        cp_candidate=cp,
        violation=violation,
    )


def finite_group_surjunctivity(a: GroupAlgebraElement) -> FiniteSurjunctivityRecord:
    """Kernel and range of L_a on ℓ²(G) for a finite group G."""
    desc = a.group
    if not desc.finite:
        raise HypothesisError(f"{desc.key} is not a finite group")
    order = desc.law.order
    whole = ball(desc, order - 1)
    if len(whole) != order:
        raise HypothesisError(f"Generators of {desc.key} do not reach every element")
    M = as_dense(assemble(a, whole, Provenance.LEFT).matrix)
    kernel_dim = scipy.linalg.null_space(M).shape[1]
    rank = int(np.linalg.matrix_rank(M))
    injective, surjective = kernel_dim == 0, rank == order
    if injective != surjective:
        raise InvariantViolation(
            f"{desc.key}: injective={injective} but surjective={surjective}",
            "finite_surjunctivity",
        )
    return FiniteSurjunctivityRecord(
        group=desc.key, element=_describe(a), order=order, rank=rank,
        injective=injective, surjective=surjective,
    )


def heisenberg_survey(
    p: float,
    radii: Sequence[int],
    elements: Optional[Dict[str, GroupAlgebraElement]] = None,
    restarts: int = 4,
    seed: int = 0,
) -> List[ExperimentRecord]:
    """Modulus and range-distance sweeps on H₃(ℤ); measurements only."""
    desc = parse_group("H3")
    elements = elements or trial_elements(desc)
    out = []
    for label in sorted(elements):
        a = elements[label]
        if a.group.key != desc.key:
            raise HypothesisError(f"Trial element '{label}' is not over H3")
        if len(a) and support_radius(desc, a.coeffs.keys()) > 2:
            raise HypothesisError(f"Trial element '{label}' leaves B_2 of H3")
        records = probe_element(a, p, radii, restarts, seed)
        summary = plateau_summary(
            [r.radius for r in records], [r.distance for r in records]
        )
        out.append(
            ExperimentRecord(
                experiment="heisenberg",
                group=desc.key,
                label=label,
                element=_describe(a),
                p=p,
                note=EVIDENCE_NOTE,
                records=[r.model_dump() for r in records],
                summary=summary.model_dump(),
            )
        )
    return out


def abelian_invertibility(a: GroupAlgebraElement, points: int = 64) -> Dict[str, float | bool]:
    """Wiener criterion on ℤᵈ: L_a is invertible on ℓ¹ iff â has no zero."""
    symbol = np.abs(fourier_symbol(a, points))
    low, high = float(symbol.min()), float(symbol.max())
    return {
        "symbol_min": low,
        "symbol_max": high,
        "invertible": bool(high > 0 and low > 1e-9 * high),
    }


def trial_elements(desc: GroupDescriptor) -> Dict[str, GroupAlgebraElement]:
    """Named elements for the CLI and the Heisenberg survey."""
    out: Dict[str, GroupAlgebraElement] = {
        "identity": delta(desc),
        "adjacency": from_terms(desc, [(g, 1) for g in desc.generators]),
    }
    letters = list(desc.law.letters())
    if letters:
        out["control"] = parse_expression(desc, f"3*de + d{letters[0]}")
    if desc.key == "H3":
        out["control"] = parse_expression(desc, "3*de + dx + dy")
        out["omega"] = parse_expression(desc, "de + w*dx + w2*dy")
    if desc.key.startswith("F") and desc.law.k >= 2:
        out["willis"] = willis_element(OMEGA, OMEGA.conjugate(), desc)
        out["willis-conjugate"] = willis_element(OMEGA.conjugate(), OMEGA, desc)
        out["willis-positive"] = willis_element(1, 1, desc)
        out["willis-mixed"] = willis_element(1j, -1j, desc)
    if desc.key == "Z":
        out["walk"] = parse_expression(desc, "(d1+d-1)/2")
    return out
