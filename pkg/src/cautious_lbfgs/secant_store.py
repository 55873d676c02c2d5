"""Bounded secant-pair storage and the cautious-update bookkeeping.

The store keeps at most ``capacity`` pairs (s, y) in first-in-first-out
order together with the scaling interval [gamma_minus, gamma_plus]
computed from the most recent accepted pair.  Pairs enter only with
positive curvature inner(s, y) > 0; a rejected pair leaves the stored
pairs untouched and resets the scaling interval to the degenerate
(0, inf).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .space import Space


@dataclass(frozen=True)
class CautiousParams:
    """Constants steering the cautious filter.

    c0 bounds the threshold from above, c1 and c2 shape its dependence on
    the current gradient norm, and m is the storage capacity.  When c2 is
    omitted it defaults to 1/(2m + 3), which keeps the linear-rate guard
    satisfied for every line search mode.
    """

    m: int
    c0: float = 1e-4
    c1: float = 1.0
    c2: float | None = None

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError(f"memory size must be >= 0, got {self.m}")
        if not 0.0 < self.c0 <= 1.0:
            raise ValueError(f"c0 must lie in (0, 1], got {self.c0}")
        if not self.c1 > 0.0:
            raise ValueError(f"c1 must be positive, got {self.c1}")
        if self.c2 is None:
            object.__setattr__(self, "c2", 1.0 / (2 * self.m + 3))
        elif not self.c2 > 0.0:
            raise ValueError(f"c2 must be positive, got {self.c2}")

    def rate_guard_bound(self, wolfe: bool) -> float:
        """Largest c2 (exclusive) for which the linear-rate theory applies."""
        return 1.0 / (2 * self.m + 2) if wolfe else 1.0 / (2 * self.m + 1)

    def warn_if_rate_guard_violated(self, wolfe: bool) -> None:
        bound = self.rate_guard_bound(wolfe)
        if self.c2 >= bound:
            warnings.warn(
                f"c2 = {self.c2} >= {bound}; the linear-rate guarantee "
                "does not cover this configuration",
                stacklevel=2,
            )


@dataclass(frozen=True)
class SecantPair:
    """One curvature pair with its cached scalar products.

    s is the accepted step, y the gradient difference across it, and
    ``quality`` the cached value of :func:`curvature_quality`.  ``index``
    records the iteration the pair originated from.
    """

    s: np.ndarray
    y: np.ndarray
    sy: float
    ss: float
    yy: float
    quality: float
    index: int

    @property
    def rho(self) -> float:
        return 1.0 / self.sy


def curvature_quality(space: Space, s, y) -> float:
    """min(sy/ss, sy/yy), or exactly 0 when either vector vanishes.

    May be negative; a pair is worth storing only when the value is
    positive.
    """
    sy = space.inner(s, y)
    ss = space.inner(s, s)
    yy = space.inner(y, y)
    if ss == 0.0 or yy == 0.0:
        return 0.0
    return min(sy / ss, sy / yy)


def cautious_threshold(grad_norm: float, params: CautiousParams) -> float:
    """Per-iteration filter level min(c0, c1 * grad_norm**c2).

    Requires grad_norm > 0; the solver terminates before the gradient
    reaches zero, so a zero argument signals a logic error upstream.
    """
    if not grad_norm > 0.0:
        raise ValueError(f"grad_norm must be positive, got {grad_norm}")
    return min(params.c0, params.c1 * grad_norm**params.c2)


def bb_scalars(space: Space, s, y) -> tuple[float, float]:
    """Barzilai-Borwein scalings (sy/yy, ss/sy) of a positive-curvature pair.

    Cauchy-Schwarz guarantees the first value never exceeds the second.
    Callers must gate on inner(s, y) > 0 before calling.
    """
    sy = space.inner(s, y)
    if not sy > 0.0:
        raise ValueError(f"bb_scalars requires inner(s, y) > 0, got {sy}")
    lo = sy / space.inner(y, y)
    hi = space.inner(s, s) / sy
    # rounding can flip the ordering by one ulp for parallel vectors
    return min(lo, hi), max(lo, hi)


class SecantStore:
    """FIFO of at most ``capacity`` pairs plus the current scaling interval."""

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError(f"capacity must be >= 0, got {capacity}")
        self.capacity = capacity
        self.pairs: list[SecantPair] = []
        self.gamma_minus = 0.0
        self.gamma_plus = math.inf

    def __len__(self) -> int:
        return len(self.pairs)

    def push(self, space: Space, s, y, index: int) -> bool:
        """Store (s, y) if it has positive curvature; return whether it did.

        Acceptance appends the pair with its cached scalars, refreshes
        (gamma_minus, gamma_plus) and evicts the oldest pair on overflow.
        Rejection leaves the pair list untouched and resets the scaling
        interval to (0, inf).
        """
        s = space.check(s)
        y = space.check(y)
        sy = space.inner(s, y)
        ss = space.inner(s, s)
        yy = space.inner(y, y)
        # ss/yy can underflow to zero for subnormal vectors even when
        # sy > 0; such a pair carries no usable curvature information
        if not sy > 0.0 or ss == 0.0 or yy == 0.0:
            self.gamma_minus = 0.0
            self.gamma_plus = math.inf
            return False
        pair = SecantPair(
            s=s.copy(),
            y=y.copy(),
            sy=sy,
            ss=ss,
            yy=yy,
            quality=min(sy / ss, sy / yy),
            index=index,
        )
        self.pairs.append(pair)
        lo, hi = sy / yy, ss / sy
        self.gamma_minus = min(lo, hi)
        self.gamma_plus = max(lo, hi)
        if len(self.pairs) > self.capacity:
            self.pairs.pop(0)
        return True

    def active(self, threshold: float) -> list[SecantPair]:
        """Stored pairs whose quality reaches ``threshold``, oldest first.

        The filter is evaluated afresh on every call, so a pair skipped at
        one threshold remains eligible at a lower one.  Ties count as
        active.
        """
        return [p for p in self.pairs if p.quality >= threshold]

    def snapshot(self) -> list[dict]:
        """Scalar view of the stored pairs (vectors omitted)."""
        return [
            {"index": p.index, "sy": p.sy, "ss": p.ss, "yy": p.yy, "quality": p.quality}
            for p in self.pairs
        ]


def choose_seed_scaling(
    store: SecantStore,
    threshold: float,
    fallback: float = 1.0,
    restrict: bool = True,
) -> float:
    """Scaling factor for the seed operator of the next direction.

    The preferred target is the latest gamma_minus; when the scaling
    interval is the degenerate (0, inf) pair (start of the run, or right
    after a rejected pair) the unscaled seed ``fallback`` is targeted
    instead.  Carrying a stale scaling across a rejected pair instead of
    falling back turns the benchmark runs into a crawl, so the fallback
    is deliberately a constant.  With ``restrict`` the result is clamped
    into [gamma_minus, gamma_plus] intersected with
    [threshold, 1/threshold] when that intersection is nonempty, and
    into [threshold, 1/threshold] otherwise, so the returned value
    always lies in the threshold interval.  Without ``restrict`` the
    target is returned unclamped, which is the classical behaviour.
    """
    if restrict:
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
        lo, hi = threshold, 1.0 / threshold
    else:
        lo, hi = 0.0, math.inf
    degenerate = store.gamma_minus == 0.0 and math.isinf(store.gamma_plus)
    target = fallback if degenerate else store.gamma_minus
    if not degenerate:
        ilo = max(store.gamma_minus, lo)
        ihi = min(store.gamma_plus, hi)
        if ilo <= ihi:
            return min(max(target, ilo), ihi)
    return min(max(target, lo), hi)
