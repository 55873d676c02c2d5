"""Benchmark objectives: Rosenbrock, a block piecewise quadratic, and a
semilinear elliptic optimal-control problem on the unit square.

Every problem exposes ``value`` and ``value_and_grad`` where the gradient
is the Riesz representative with respect to the problem's space, i.e. the
directional derivative at x along v equals space.inner(grad, v).  That
convention matters for the grid-weighted control problem, whose gradient
differs from the vector of partial derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .space import Space, euclidean, make_grid_space


class Problem:
    """Objective interface used by the solver."""

    space: Space

    def value(self, x) -> float:
        raise NotImplementedError

    def value_and_grad(self, x) -> tuple[float, np.ndarray]:
        raise NotImplementedError


class Rosenbrock(Problem):
    """f(x) = (1 - x1)^2 + 100 (x2 - x1^2)^2 on Euclidean R^2."""

    def __init__(self):
        self.space = euclidean(2)
        self.x_star = np.array([1.0, 1.0])
        self.f_star = 0.0

    def value(self, x) -> float:
        x = self.space.check(x)
        return float((1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2)

    def value_and_grad(self, x):
        x = self.space.check(x)
        t = x[1] - x[0] ** 2
        f = (1.0 - x[0]) ** 2 + 100.0 * t**2
        grad = np.array([-2.0 * (1.0 - x[0]) - 400.0 * x[0] * t, 200.0 * t])
        return float(f), grad

    def hessian(self, x) -> np.ndarray:
        x = self.space.check(x)
        return np.array(
            [
                [2.0 - 400.0 * x[1] + 1200.0 * x[0] ** 2, -400.0 * x[0]],
                [-400.0 * x[0], 200.0],
            ]
        )

    def hessian_spectrum_scan(self, lo=-0.5, hi=1.4, n=41) -> tuple[float, float]:
        """(min, max) Hessian eigenvalue over an n x n scan of [lo, hi]^2.

        The minimum comes out negative on parts of that square (wherever
        x2 > x1^2 + 0.005), so strong-convexity constants have to be read
        off a region where the returned minimum is positive.
        """
        grid = np.linspace(lo, hi, n)
        lo_eig, hi_eig = np.inf, -np.inf
        for a in grid:
            for b in grid:
                eig = np.linalg.eigvalsh(self.hessian(np.array([a, b])))
                lo_eig = min(lo_eig, eig[0])
                hi_eig = max(hi_eig, eig[-1])
        return float(lo_eig), float(hi_eig)


def rosenbrock(x) -> tuple[float, np.ndarray]:
    return Rosenbrock().value_and_grad(x)


class PiecewiseQuadratic(Problem):
    """f(x) = 0.5 ||x - b||^2 + 49.5 * sum(max(0, x_i)^2) on R^(3n).

    b repeats the block (1, -1, 0).  The objective is 1-strongly convex
    with a 100-Lipschitz, piecewise linear gradient that is not
    differentiable on the coordinate hyperplanes; the unique stationary
    point repeats the block (0.01, -1, 0).
    """

    mu = 1.0
    lipschitz = 100.0

    def __init__(self, n_blocks: int = 100):
        if n_blocks < 1:
            raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
        self.n_blocks = n_blocks
        self.space = euclidean(3 * n_blocks)
        self.b = np.tile([1.0, -1.0, 0.0], n_blocks)
        self.x_star = np.tile([0.01, -1.0, 0.0], n_blocks)
        self.f_star = self.value(self.x_star)

    def value(self, x) -> float:
        x = self.space.check(x)
        d = x - self.b
        return float(0.5 * np.dot(d, d) + 49.5 * np.sum(np.maximum(0.0, x) ** 2))

    def value_and_grad(self, x):
        x = self.space.check(x)
        d = x - self.b
        pos = np.maximum(0.0, x)
        f = 0.5 * np.dot(d, d) + 49.5 * np.sum(pos**2)
        return float(f), d + 99.0 * pos


def piecewise_quadratic(x, n_blocks: int) -> tuple[float, np.ndarray]:
    return PiecewiseQuadratic(n_blocks).value_and_grad(x)


class NewtonError(RuntimeError):
    """Inner state solver failed to reach its residual tolerance."""


def _default_target_state(M: int) -> np.ndarray:
    h = 1.0 / M
    idx = np.arange(1, M) * h
    x1, x2 = np.meshgrid(idx, idx, indexing="ij")
    return (np.sin(2.0 * np.pi * x1) * np.cos(2.0 * np.pi * x2)).ravel()


def laplacian_5pt(M: int) -> sp.csr_matrix:
    """Dirichlet 5-point-stencil Laplacian on the (M-1)^2 interior nodes.

    Scaled by 1/h^2; node ordering is lexicographic, x1-major.
    """
    n = M - 1
    T = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n))
    eye = sp.identity(n)
    return ((sp.kron(eye, T) + sp.kron(T, eye)) * float(M * M)).tocsr()


@dataclass(frozen=True)
class OcpGrid:
    """Discretization data of the optimal-control problem.

    M is the grid parameter (mesh width 1/M, must be a power of two),
    nu the control penalty weight, and target_state the desired state at
    the interior nodes (defaults to sin(2 pi x1) cos(2 pi x2)).
    """

    M: int
    nu: float = 1e-3
    target_state: np.ndarray | None = None
    newton_tol: float = 1e-12
    newton_max: int = 50

    def __post_init__(self) -> None:
        if self.M < 2 or self.M & (self.M - 1) != 0:
            raise ValueError(f"M must be a power of two >= 2, got {self.M}")
        if not self.nu > 0.0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.target_state is None:
            object.__setattr__(self, "target_state", _default_target_state(self.M))
        else:
            y_d = np.asarray(self.target_state, dtype=float)
            if y_d.shape != ((self.M - 1) ** 2,):
                raise ValueError(f"target_state must have {(self.M - 1) ** 2} entries")
            object.__setattr__(self, "target_state", y_d)


class OcpControlProblem(Problem):
    """Tracking objective constrained by -lap(y) + exp(y) = u, y = 0 on the boundary.

    f(u) = 0.5 ||y_u - y_d||^2 + nu/2 ||u||^2 in the grid inner product.
    The state is solved by a damped Newton iteration from y = 0 and the
    gradient nu*u + p comes from one linearized (self-adjoint) solve, so
    one objective-plus-gradient evaluation costs one nonlinear and one
    linear PDE solve.
    """

    def __init__(self, grid: OcpGrid):
        self.grid = grid
        self.space = make_grid_space(grid.M)
        self.laplacian = laplacian_5pt(grid.M)
        self.target_state = grid.target_state

    def solve_state(self, u) -> np.ndarray:
        """State y whose residual A y + exp(y) - u is below newton_tol.

        Full Newton steps, halved until the residual norm decreases.  The
        residual is measured in the grid norm; the Euclidean norm of the
        strong-form residual scales like 1/h^2 and would sit above any
        fixed absolute tolerance on fine grids.
        """
        u = self.space.check(u)
        y = np.zeros(self.space.dim)
        with np.errstate(over="ignore", invalid="ignore"):
            residual = self.laplacian @ y + np.exp(y) - u
            res_norm = self.space.norm(residual)
            for _ in range(self.grid.newton_max):
                if res_norm <= self.grid.newton_tol:
                    return y
                jac = (self.laplacian + sp.diags(np.exp(y))).tocsc()
                delta = spla.splu(jac).solve(-residual)
                t = 1.0
                while True:
                    y_trial = y + t * delta
                    r_trial = self.laplacian @ y_trial + np.exp(y_trial) - u
                    r_norm = self.space.norm(r_trial)
                    if r_norm < res_norm:
                        break
                    t *= 0.5
                    if t < 2.0**-40:
                        raise NewtonError("damping failed to reduce the state residual")
                y, residual, res_norm = y_trial, r_trial, r_norm
            if res_norm <= self.grid.newton_tol:
                return y
        raise NewtonError(
            f"state residual {res_norm} above {self.grid.newton_tol} "
            f"after {self.grid.newton_max} iterations"
        )

    def solve_adjoint(self, y) -> np.ndarray:
        """Solve (A + diag(exp(y))) p = y - y_d.

        The linearized state operator is self-adjoint in the grid inner
        product, so the same matrix serves as its own adjoint.
        """
        y = self.space.check(y)
        jac = (self.laplacian + sp.diags(np.exp(y))).tocsc()
        return spla.splu(jac).solve(y - self.target_state)

    def value(self, u) -> float:
        u = self.space.check(u)
        y = self.solve_state(u)
        mismatch = y - self.target_state
        return 0.5 * self.space.inner(mismatch, mismatch) + 0.5 * self.grid.nu * self.space.inner(u, u)

    def value_and_grad(self, u):
        u = self.space.check(u)
        y = self.solve_state(u)
        mismatch = y - self.target_state
        f = 0.5 * self.space.inner(mismatch, mismatch) + 0.5 * self.grid.nu * self.space.inner(u, u)
        p = self.solve_adjoint(y)
        return f, self.grid.nu * u + p


def ocp_state_solve(grid: OcpGrid, u) -> np.ndarray:
    return OcpControlProblem(grid).solve_state(u)


def ocp_adjoint_solve(grid: OcpGrid, y, target_state=None) -> np.ndarray:
    problem = OcpControlProblem(grid)
    if target_state is not None:
        y = problem.space.check(y)
        jac = (problem.laplacian + sp.diags(np.exp(y))).tocsc()
        return spla.splu(jac).solve(y - np.asarray(target_state, dtype=float))
    return problem.solve_adjoint(y)


def ocp_eval(grid: OcpGrid, u) -> tuple[float, np.ndarray]:
    return OcpControlProblem(grid).value_and_grad(u)


def fd_gradient_check(problem: Problem, x, n_directions: int = 5,
                      step: float = 1e-6, seed: int = 0) -> float:
    """Max relative error of inner(grad, v) against central differences.

    Directions are random unit vectors in the problem's space norm.  The
    relative error is taken against the larger of the two derivative
    magnitudes to stay meaningful when either is small.
    """
    space = problem.space
    x = space.check(x)
    _, grad = problem.value_and_grad(x)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_directions):
        v = rng.standard_normal(space.dim)
        v /= space.norm(v)
        fd = (problem.value(x + step * v) - problem.value(x - step * v)) / (2.0 * step)
        exact = space.inner(grad, v)
        scale = max(abs(fd), abs(exact), 1e-300)
        worst = max(worst, abs(fd - exact) / scale)
    return worst
