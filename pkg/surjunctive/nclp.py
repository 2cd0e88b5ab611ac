"""Noncommutative Lᵖ on M_n with a faithful weighted trace.

Matrix algebras stand in for the group von Neumann algebra. The module bound
and the ``σ(xy) = σ(yx)`` lemma hold here verbatim; norm attainment is exact
because the spectral measure of a*a is atomic in finite dimension.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import HypothesisError, InvariantViolation, ParameterError
from .spectral import eig_herm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TracialMatrixAlgebra:
    """M_n with τ(x) = Σ wᵢ xᵢᵢ.

    Only uniform weights give a trace; other weights are accepted with
    ``mode="state"``, where tracial identities are not expected to hold.
    """

    n: int
    weights: np.ndarray = field(default=None, repr=False)
    mode: str = "trace"

    def __post_init__(self):
        if self.n < 1:
            raise HypothesisError(f"Dimension must be >= 1, got {self.n}")
        w = (
            np.full(self.n, 1.0 / self.n)
            if self.weights is None
            else np.asarray(self.weights, dtype=float)
        )
        if w.shape != (self.n,) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise HypothesisError("Trace weights must be positive and sum to 1")
        if self.mode not in ("trace", "state"):
            raise HypothesisError(f"Unknown mode '{self.mode}'")
        uniform = bool(np.allclose(w, 1.0 / self.n, rtol=0, atol=1e-15))
        if self.mode == "trace" and not uniform:
            raise HypothesisError("Non-uniform weights are only allowed in state mode")
        object.__setattr__(self, "weights", w)

    @property
    def uniform(self) -> bool:
        return bool(np.allclose(self.weights, 1.0 / self.n, rtol=0, atol=1e-15))

    def tau(self, x: Any) -> complex:
        return complex(np.dot(self.weights, np.diag(self._check(x))))

    def _check(self, x: Any) -> np.ndarray:
        X = np.asarray(x, dtype=np.complex128)
        if X.shape != (self.n, self.n):
            raise HypothesisError(f"Expected a {self.n}x{self.n} matrix, got {X.shape}")
        return X


def operator_norm(x: Any) -> float:
    X = np.asarray(x, dtype=np.complex128)
    return float(scipy.linalg.svdvals(X)[0]) if X.size else 0.0


def mat_nclp_norm(alg: TracialMatrixAlgebra, x: Any, p: float) -> float:
    """‖x‖_p = τ((x*x)^{p/2})^{1/p}; p = ∞ gives the operator norm."""
    if not p >= 1:
        raise ParameterError(f"Exponent p must be in [1, inf], got {p}")
    X = alg._check(x)
    if math.isinf(p):
        return operator_norm(X)
    if alg.uniform:
        s = scipy.linalg.svdvals(X)
        return float(np.mean(s**p) ** (1 / p))
    # |x| = V diag(s) V*, so the state sees the right singular vectors
    _, s, Vh = scipy.linalg.svd(X)
    mass = alg.weights @ (np.abs(Vh.conj().T) ** 2)
    return float(np.dot(mass, s**p) ** (1 / p))


@dataclass(frozen=True)
class ModuleBound:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-10


def module_bound_check(alg: TracialMatrixAlgebra, a: Any, x: Any, p: float) -> ModuleBound:
    """‖ax‖_p ≤ ‖a‖_∞ ‖x‖_p."""
    A, X = alg._check(a), alg._check(x)
    return ModuleBound(
        lhs=mat_nclp_norm(alg, A @ X, p),
        rhs=operator_norm(A) * mat_nclp_norm(alg, X, p),
    )


@dataclass(frozen=True)
class Attainment:
    x: np.ndarray
    achieved: float
    sigma_max: float
    multiplicity: int


def norm_attainment(alg: TracialMatrixAlgebra, a: Any, p: float) -> Attainment:
    """x = ((n/m) 1_{λmax}(a*a))^{1/p} has ‖x‖_p = 1 and ‖ax‖_p = ‖a‖_∞."""
    if not 1 <= p < math.inf:
        raise ParameterError(f"Exponent p must be in [1, inf), got {p}")
    if not alg.uniform:
        raise HypothesisError("Norm attainment needs uniform trace weights")
    A = alg._check(a)
    if not np.any(A):
        raise HypothesisError("Norm attainment is undefined for a = 0")
    D = eig_herm(A.conj().T @ A)
    top = D.eigenvalues[-1]
    atom = D.eigenvalues >= top - 1e-10 * top
    m = int(atom.sum())
    U = D.eigenvectors[:, atom]
    x = (alg.n / m) ** (1 / p) * (U @ U.conj().T)
    achieved = mat_nclp_norm(alg, A @ x, p)
    logger.debug(f"Top atom of a*a: lambda={top:.12g}, multiplicity {m}")
    return Attainment(x, achieved, operator_norm(A), m)


@dataclass(frozen=True)
class DirectFiniteness:
    left_identity_defect: float
    right_identity_defect: float
    checked: bool


def direct_finiteness_check(x: Any, y: Any) -> DirectFiniteness:
    """xy = I forces yx = I in M_n."""
    X, Y = np.asarray(x, dtype=np.complex128), np.asarray(y, dtype=np.complex128)
    if X.shape != Y.shape or X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise HypothesisError(f"Need square matrices of equal size, got {X.shape}, {Y.shape}")
    eye = np.eye(X.shape[0])
    left = float(scipy.linalg.norm(X @ Y - eye, 2))
    right = float(scipy.linalg.norm(Y @ X - eye, 2))
    checked = left <= 1e-10
    if checked and right > 1e-8:
        raise InvariantViolation(
            f"xy = I (defect {left:.2e}) but |yx - I| = {right:.2e}", "direct_finiteness"
        )
    return DirectFiniteness(left, right, checked)


def holder_profile(alg: TracialMatrixAlgebra, x: Any, ps: Sequence[float]) -> list[float]:
    """‖x‖_p for increasing p; nondecreasing on a probability trace."""
    return [mat_nclp_norm(alg, x, p) for p in sorted(ps)]


def random_unitary(n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Haar-distributed unitary from the QR of a complex Gaussian matrix."""
    rng = rng or np.random.default_rng(0)
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = scipy.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
