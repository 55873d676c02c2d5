"""Search directions via the two-loop recursion, plus dense operator oracles.

The two-loop recursion is the production path.  The dense builders
materialize the same operator (and its inverse) as explicit matrices so
tests and runtime audits can check the recursion and the norm bounds it
is supposed to satisfy.  All adjoints and outer products are taken with
respect to the weighted inner product of the supplied space, not the
Euclidean one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .secant_store import SecantPair
from .space import Space

DENSE_DIM_LIMIT = 2000


def two_loop(space: Space, active: Sequence[SecantPair], gamma: float, grad) -> np.ndarray:
    """Direction -H * grad for the operator seeded with gamma * identity.

    ``active`` holds the pairs in storage order (oldest first); the most
    recent pair acts outermost.  Every pair must have positive curvature
    and gamma must be positive, which makes the operator positive
    definite and the result a descent direction for any nonzero grad.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    q = space.check(grad).copy()
    coeffs = []
    for pair in reversed(active):
        if not pair.sy > 0.0:
            raise ValueError(f"active pair {pair.index} has nonpositive curvature {pair.sy}")
        a = space.inner(pair.s, q) / pair.sy
        coeffs.append(a)
        q -= a * pair.y
    r = gamma * q
    for pair, a in zip(active, reversed(coeffs)):
        b = space.inner(pair.y, r) / pair.sy
        r += (a - b) * pair.s
    return -r


@dataclass(frozen=True)
class DenseOperator:
    """Explicit matrix of a self-adjoint operator on ``space``.

    ``matrix`` maps coordinate vectors; self-adjointness is with respect
    to the weighted inner product.  With a uniform weight the weighted
    operator norm coincides with the Euclidean matrix 2-norm, which the
    norm routines rely on.
    """

    space: Space
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.space.dim

    def apply(self, v) -> np.ndarray:
        return self.matrix @ self.space.check(v)

    def self_adjoint_defect(self, n_probes: int = 8, seed: int = 0) -> float:
        """max |inner(Mu, v) - inner(u, Mv)| over random unit probes."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_probes):
            u = rng.standard_normal(self.dim)
            v = rng.standard_normal(self.dim)
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            worst = max(worst, abs(self.space.inner(self.matrix @ u, v) - self.space.inner(u, self.matrix @ v)))
        return worst

    def operator_norm(self) -> float:
        return _power_norm(lambda v: self.matrix @ v, self.dim)

    def inverse_norm(self) -> float:
        lu, piv = scipy.linalg.lu_factor(self.matrix)
        return _power_norm(lambda v: scipy.linalg.lu_solve((lu, piv), v), self.dim)


def _power_norm(matvec, dim: int, max_iter: int = 200, tol: float = 1e-10) -> float:
    # Power iteration; for self-adjoint operators the Euclidean ratio
    # converges to the spectral radius, which equals the operator norm.
    rng = np.random.default_rng(0)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(norm_w - estimate) <= tol * max(1.0, norm_w):
            return norm_w
        estimate = norm_w
    return estimate


def _validate_dense_inputs(space: Space, pairs: Sequence[SecantPair], gamma: float) -> None:
    if space.dim > DENSE_DIM_LIMIT:
        raise ValueError(f"dense oracle limited to dim <= {DENSE_DIM_LIMIT}, got {space.dim}")
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    for pair in pairs:
        if not pair.sy > 0.0:
            raise ValueError(f"pair {pair.index} has nonpositive curvature {pair.sy}")


def dense_hessian_inverse(space: Space, pairs: Sequence[SecantPair], gamma: float) -> DenseOperator:
    """Explicit inverse-Hessian approximation built by the update recursion.

    Starts from gamma * identity and applies the rank-two update for each
    pair, oldest first.  Outer products v w^T act as u -> v * inner(w, u),
    so in coordinates they carry the weight of the space.
    """
    _validate_dense_inputs(space, pairs, gamma)
    n = space.dim
    w = space.weight
    eye = np.eye(n)
    H = gamma * eye
    for pair in pairs:
        rho = pair.rho
        V = eye - rho * np.outer(pair.y, w * pair.s)
        V_adj = eye - rho * np.outer(pair.s, w * pair.y)
        H = V_adj @ H @ V + rho * np.outer(pair.s, w * pair.s)
    return DenseOperator(space=space, matrix=H)


def dense_hessian(space: Space, pairs: Sequence[SecantPair], gamma: float) -> DenseOperator:
    """Explicit Hessian approximation; inverse of :func:`dense_hessian_inverse`.

    Built from gamma^{-1} * identity by the direct rank-two recursion.  A
    nonpositive inner(B s, s) along the way means the positive-definite
    invariant was broken upstream and raises.
    """
    _validate_dense_inputs(space, pairs, gamma)
    n = space.dim
    w = space.weight
    B = (1.0 / gamma) * np.eye(n)
    for pair in pairs:
        Bs = B @ pair.s
        sBs = space.inner(Bs, pair.s)
        if not sBs > 0.0:
            raise ValueError(f"inner(B s, s) = {sBs} <= 0 at pair {pair.index}")
        B = B - np.outer(Bs, w * Bs) / sBs + np.outer(pair.y, w * pair.y) / pair.sy
    return DenseOperator(space=space, matrix=B)


@dataclass(frozen=True)
class BoundReport:
    """Computed operator norms and their comparison against known bounds."""

    norm_h: float
    norm_h_inv: float
    bound_h: float
    bound_h_inv: float

    @property
    def h_ok(self) -> bool:
        return self.norm_h <= self.bound_h * (1.0 + 1e-9)

    @property
    def h_inv_ok(self) -> bool:
        return self.norm_h_inv <= self.bound_h_inv * (1.0 + 1e-9)

    @property
    def ok(self) -> bool:
        return self.h_ok and self.h_inv_ok


def check_bounds(
    H: DenseOperator,
    gamma: float,
    kappa1: float,
    kappa2: float,
    n_pairs: int,
) -> BoundReport:
    """Audit ||H|| and ||H^{-1}|| against the update-count bounds.

    kappa1 and kappa2 must bound the pairs used (sy/ss >= 1/kappa1 and
    sy/yy >= 1/kappa2).  The inverse norm is bounded by
    1/gamma + n_pairs * kappa2 and the norm itself by
    5^n_pairs * max(1, gamma) * max(1, kappa1^n_pairs, (kappa1*kappa2)^n_pairs).
    """
    bound_h_inv = 1.0 / gamma + n_pairs * kappa2
    bound_h = (
        5.0**n_pairs
        * max(1.0, gamma)
        * max(1.0, kappa1**n_pairs, (kappa1 * kappa2) ** n_pairs)
    )
    return BoundReport(
        norm_h=H.operator_norm(),
        norm_h_inv=H.inverse_norm(),
        bound_h=bound_h,
        bound_h_inv=bound_h_inv,
    )


def cautious_bound_report(H: DenseOperator, threshold: float, m: int) -> BoundReport:
    """Audit against the threshold-based bounds of the cautious method.

    With every applied pair passing the quality filter at ``threshold``
    and the seed scaling confined to [threshold, 1/threshold], the
    operator norms obey ||H^{-1}|| <= (m+1)/threshold and
    ||H|| <= 5^m * max(1, threshold^-(2m+1)).
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    return BoundReport(
        norm_h=H.operator_norm(),
        norm_h_inv=H.inverse_norm(),
        bound_h=5.0**m * max(1.0, threshold ** -(2 * m + 1)),
        bound_h_inv=(m + 1) / threshold,
    )
