"""Eigensolvers, matrix functional calculus and small spectral lemmas."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.optimize import linear_sum_assignment

from .algebra import GroupAlgebraElement
from .config import config
from .errors import (
    BallSizeLimitError,
    FunctionalCalculusError,
    HypothesisError,
    InvariantViolation,
    NonHermitianError,
    SolverError,
)

logger = logging.getLogger(__name__)


def as_dense(M: Any) -> np.ndarray:
    if scipy.sparse.issparse(M):
        if max(M.shape) > config.numerics.dense_limit:
            raise BallSizeLimitError(
                f"Matrix of shape {M.shape} exceeds the dense limit "
                f"{config.numerics.dense_limit}"
            )
        return M.toarray()
    return np.asarray(M)


def hermitian_defect(M: np.ndarray) -> float:
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


@dataclass(frozen=True)
class SpectralDecomposition:
    """M = U diag(λ) U* with ascending λ and orthonormal columns of U."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float
    orthonormality_defect: float

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def to_json(self) -> Dict[str, Any]:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residual": self.residual,
            "orthonormality_defect": self.orthonormality_defect,
        }


def eig_herm(M: Any) -> SpectralDecomposition:
    """Full eigendecomposition of a Hermitian matrix (LAPACK symmetric QR)."""
    A = as_dense(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonHermitianError(f"Expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    defect = hermitian_defect(A)
    if defect > config.numerics.hermitian_tol * scale:
        raise NonHermitianError(f"Matrix is not Hermitian: max |M - M*| = {defect:.3e}")
    A = (A + A.conj().T) / 2
    try:
        values, vectors = scipy.linalg.eigh(A)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Failed to diagonalize {A.shape} Hermitian matrix: {e}")
        raise SolverError(f"Failed to diagonalize Hermitian matrix: {e}")
    residual = (
        float(np.max(np.linalg.norm(A @ vectors - vectors * values, axis=0)))
        if A.size
        else 0.0
    )
    orth = (
        float(np.max(np.abs(vectors.conj().T @ vectors - np.eye(len(values)))))
        if A.size
        else 0.0
    )
    norm = float(np.max(np.abs(values))) if A.size else 0.0
    if orth > 1e-10 or residual > 1e-9 * max(norm, 1.0):
        raise SolverError(
            f"Eigendecomposition failed its checks: residual {residual:.2e}, "
            f"orthonormality defect {orth:.2e}"
        )
    return SpectralDecomposition(values, vectors, residual, orth)


def apply_spectral(D: SpectralDecomposition, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        values = np.asarray(f(D.eigenvalues))
    if values.shape != D.eigenvalues.shape:
        values = np.broadcast_to(values, D.eigenvalues.shape)
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise FunctionalCalculusError(
            f"Function undefined at eigenvalue(s) {D.eigenvalues[bad][:5].tolist()}"
        )
    return values


def func_calc(D: SpectralDecomposition, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """U f(Λ) U* for a vectorized scalar function f."""
    values = apply_spectral(D, f)
    U = D.eigenvectors
    return (U * values) @ U.conj().T


def clamp_nonnegative(values: np.ndarray) -> np.ndarray:
    """Round-off eigenvalues of a positive operator (|λ| ≤ eig_clamp·λ_max) to 0."""
    tol = config.numerics.eig_clamp * max(1.0, float(np.max(np.abs(values), initial=0.0)))
    if np.any(values < -tol):
        raise FunctionalCalculusError(
            f"Operator is not positive: eigenvalue {float(values.min()):.3e}"
        )
    return np.where(values <= tol, 0.0, values)


def largest_eigenvalue(M: Any) -> float:
    """λ_max of a Hermitian matrix; sparse Lanczos above ``dense_limit``."""
    n = M.shape[0]
    if n == 0:
        return 0.0
    if n <= config.numerics.dense_limit:
        return float(eig_herm(M).eigenvalues[-1])
    try:
        values = scipy.sparse.linalg.eigsh(
            M, k=1, which="LA", v0=np.ones(n), tol=1e-13, maxiter=20 * n
        )[0]
    except scipy.sparse.linalg.ArpackNoConvergence as e:
        logger.error(f"Failed to converge Lanczos on {n}x{n} matrix: {e}")
        raise SolverError(f"Lanczos did not converge: {e}")
    logger.debug(f"Sparse lambda_max of {n}x{n} matrix: {values[0]}")
    return float(values[0])


def largest_singular_value(T: Any) -> float:
    """σ_max(T) as the square root of λ_max(T*T)."""
    if min(T.shape) == 0:
        return 0.0
    if scipy.sparse.issparse(T):
        gram = (T.conj().T @ T).tocsr()
    else:
        gram = np.asarray(T).conj().T @ np.asarray(T)
    return float(np.sqrt(max(largest_eigenvalue(gram), 0.0)))


def smallest_singular_value(T: Any) -> float:
    """σ_min(T) = inf |Tξ|₂/|ξ|₂ over the column space (dense only)."""
    A = as_dense(T)
    if A.shape[1] == 0:
        return 0.0
    if A.shape[0] < A.shape[1]:
        return 0.0
    try:
        values = scipy.linalg.svdvals(A)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Failed to compute singular values: {e}")
        raise SolverError(f"Failed to compute singular values: {e}")
    return float(values[-1])


def spectra_commute_check(x: Any, y: Any) -> float:
    """Max matched distance between the spectra of xy and yx."""
    X, Y = as_dense(x), as_dense(y)
    if X.shape != Y.shape or X.shape[0] != X.shape[1]:
        raise HypothesisError(f"Need square matrices of equal size, got {X.shape}, {Y.shape}")
    if X.shape[0] == 0:
        return 0.0
    try:
        left = scipy.linalg.eigvals(X @ Y)
        right = scipy.linalg.eigvals(Y @ X)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Failed to compute general eigenvalues: {e}")
        raise SolverError(f"Hessenberg QR did not converge: {e}")
    cost = np.abs(left[:, None] - right[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass(frozen=True)
class NeumannReport:
    delta: float
    distance: float
    t1_invertible: bool
    t1_inverse_norm: float
    inverse_bound: float
    defect: float

    @property
    def holds(self) -> bool:
        return (
            self.t1_invertible
            and self.t1_inverse_norm <= self.inverse_bound * (1 + 1e-9)
            and self.defect <= 0.5 + 1e-9
        )


def neumann_perturbation_check(T: Any, T1: Any) -> NeumannReport:
    """Norm-closure perturbation step: |T-T1| ≤ δ/3 forces |T1⁻¹T - I| ≤ 1/2."""
    A, B = as_dense(T), as_dense(T1)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise HypothesisError(f"Need square matrices of equal size, got {A.shape}, {B.shape}")
    delta = smallest_singular_value(A)
    if delta <= 0:
        raise HypothesisError("T is not bounded below (smallest singular value 0)")
    distance = float(scipy.linalg.norm(A - B, 2))
    if distance > delta / 3 * (1 + 1e-12):
        raise HypothesisError(
            f"|T - T1| = {distance:.6g} exceeds delta/3 = {delta / 3:.6g}"
        )
    bound = 3 / (2 * delta)
    try:
        inverse = scipy.linalg.inv(B)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Failed to invert T1: {e}")
        report = NeumannReport(delta, distance, False, float("inf"), bound, float("inf"))
    else:
        defect = float(scipy.linalg.norm(inverse @ A - np.eye(A.shape[0]), 2))
        report = NeumannReport(
            delta, distance, True, float(scipy.linalg.norm(inverse, 2)), bound, defect
        )
    if not report.holds:
        raise InvariantViolation(
            f"Neumann perturbation bound failed: {report}", "neumann_perturbation"
        )
    return report


def product_invertibility_check(x: Any, y: Any) -> Dict[str, Any]:
    """If xy is invertible then so are x and y (finite-dimensional shadow)."""
    X, Y = as_dense(x), as_dense(y)
    if X.shape != Y.shape or X.shape[0] != X.shape[1]:
        raise HypothesisError(f"Need square matrices of equal size, got {X.shape}, {Y.shape}")
    cond = {
        name: float(np.linalg.cond(M)) for name, M in (("xy", X @ Y), ("x", X), ("y", Y))
    }
    limit = 1.0 / (np.finfo(float).eps * max(X.shape[0], 1))
    invertible = {name: bool(np.isfinite(c) and c < limit) for name, c in cond.items()}
    holds = not invertible["xy"] or (invertible["x"] and invertible["y"])
    return {"condition": cond, "invertible": invertible, "holds": holds}


def fourier_symbol(a: GroupAlgebraElement, points: int = 64) -> np.ndarray:
    """â(θ) = Σ a(g) e^{i⟨g,θ⟩} on a uniform grid of the d-torus (Z^d only)."""
    key = a.group.key
    if not key.startswith("Z"):
        raise HypothesisError(f"Fourier symbols are defined here for Z^d only, not {key}")
    d = a.group.law.d
    if points**d > 4_000_000:
        raise BallSizeLimitError(f"Torus grid {points}^{d} is too large")
    axes = np.meshgrid(*([2 * np.pi * np.arange(points) / points] * d), indexing="ij")
    symbol = np.zeros(axes[0].shape, dtype=np.complex128)
    for g, c in a.coeffs.items():
        phase = sum(k * theta for k, theta in zip(g.form, axes))
        symbol += complex(c) * np.exp(1j * phase)
    return symbol
