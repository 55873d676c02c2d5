"""Inner-product spaces that all solver arithmetic is carried out against."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Space:
    """Finite-dimensional real vector space with a uniformly weighted inner product.

    ``weight`` is a single positive scalar applied to every coordinate:
    Euclidean space has weight 1, a uniform grid approximating L2 on the
    unit square has weight h^2.  Instances are immutable and safe to share
    across concurrent solver runs.
    """

    dim: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not self.weight > 0.0:
            raise ValueError(f"weight must be strictly positive, got {self.weight}")

    def check(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise ValueError(f"expected vector of shape ({self.dim},), got {u.shape}")
        return u

    def inner(self, u, v) -> float:
        """Weighted scalar product sum_i weight * u_i * v_i."""
        u = self.check(u)
        v = self.check(v)
        return float(self.weight * np.dot(u, v))

    def norm(self, u) -> float:
        """Norm induced by :meth:`inner`; zero iff u is the zero vector."""
        u = self.check(u)
        return float(np.sqrt(self.weight) * np.linalg.norm(u))


def euclidean(dim: int) -> Space:
    """Ordinary R^dim with the dot product."""
    return Space(dim=dim, weight=1.0)


def make_grid_space(M: int) -> Space:
    """Space of interior-node grid functions on a uniform (M+1)x(M+1) grid.

    The grid covers the unit square with mesh width h = 1/M; only the
    (M-1)^2 interior nodes carry degrees of freedom and the inner product
    h^2 * sum(u_i * v_i) mimics the L2 product.
    """
    if M < 2:
        raise ValueError(f"grid parameter M must be >= 2, got {M}")
    h = 1.0 / M
    return Space(dim=(M - 1) ** 2, weight=h * h)
