"""Screened-Poisson solves ``(sigma + c) w - lap_h w = f`` with Neumann BCs.

For ``sigma > 0`` and ``c >= 0`` the flux-form system is symmetric positive
definite and an M-matrix, so Jacobi-preconditioned conjugate gradients
converge and nonnegative data gives nonnegative solutions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, SolverError
from .grid import laplacian_apply

DEFAULT_TOL = 1e-11
_MAX_RESTARTS = 5


@dataclass
class HelmholtzProblem:
    """One linear problem ``(sigma + c) w - lap_h w = rhs`` on ``grid``.

    ``c`` may be a scalar or a field; it defaults to zero.
    """

    grid: object
    sigma: float
    rhs: np.ndarray
    c: object = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ContractViolation(f"sigma must be > 0, got {self.sigma}")
        self.grid.check(self.rhs)
        if np.ndim(self.c) == 0:
            self.c = float(self.c)
        else:
            self.grid.check(self.c)
        if np.any(np.asarray(self.c) < 0):
            raise ContractViolation("reaction coefficient c must be >= 0")

    def apply(self, w):
        return (self.sigma + self.c) * w - laplacian_apply(self.grid, w)

    def diagonal(self):
        g = self.grid
        diag = np.full(g.dims, self.sigma) + self.c
        for ax, (n, h) in enumerate(zip(g.dims, g.spacing)):
            if n == 1:
                continue
            per_axis = np.full(n, 2.0 / h**2)
            per_axis[[0, -1]] = 1.0 / h**2
            shape = [1] * g.ndim
            shape[ax] = n
            diag = diag + per_axis.reshape(shape)
        return diag


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool


def solve(problem, tol=DEFAULT_TOL, maxit=None, x0=None):
    """Solve ``problem`` by Jacobi-preconditioned conjugate gradients.

    Parameters
    ----------
    problem : HelmholtzProblem
    tol : float
        Target for ``||A w - f||_2 / ||f||_2``. Residuals at the rounding
        floor ``16 eps ||A|| ||w||`` are accepted as converged even when that
        floor lies above ``tol``.
    maxit : int, optional
        Iteration cap, ``10 * n_cells`` by default.
    x0 : ndarray, optional
        Initial guess (warm start).

    Returns
    -------
    w : ndarray
    report : SolveReport

    Raises
    ------
    SolverError
        If the residual target is not met within ``maxit`` iterations.
    """
    f = problem.rhs
    if maxit is None:
        maxit = 10 * problem.grid.n_cells
    fnorm = float(np.linalg.norm(f))
    if fnorm == 0.0:
        return np.zeros(problem.grid.dims), SolveReport(0, 0.0, True)

    diag = problem.diagonal()
    inv_diag = 1.0 / diag
    # Gershgorin bound on ||A||_2; residuals below eps * ||A|| ||x|| are rounding noise
    a_norm = 2.0 * float(np.max(diag))
    x = np.zeros(problem.grid.dims) if x0 is None else np.array(x0, dtype=float)
    it = 0

    def target():
        floor = 16.0 * np.finfo(float).eps * a_norm * float(np.linalg.norm(x))
        return max(tol * fnorm, floor)

    # restart from the true residual when the recursive one drifts below it
    for _ in range(_MAX_RESTARTS):
        r = f - problem.apply(x)
        rnorm = float(np.linalg.norm(r))
        goal = target()
        if rnorm <= goal or it >= maxit:
            break
        zr = inv_diag * r
        p = zr.copy()
        rz = float(np.vdot(r, zr))
        while it < maxit:
            it += 1
            ap = problem.apply(p)
            step = rz / float(np.vdot(p, ap))
            x += step * p
            r -= step * ap
            if float(np.linalg.norm(r)) <= goal:
                break
            zr = inv_diag * r
            rz_new = float(np.vdot(r, zr))
            p *= rz_new / rz
            p += zr
            rz = rz_new
    res_abs = float(np.linalg.norm(f - problem.apply(x)))
    true_res = res_abs / fnorm
    report = SolveReport(it, true_res, res_abs <= target())
    if not report.converged:
        raise SolverError(
            f"CG stopped after {it} iterations at relative residual "
            f"{true_res:.3e} (tol {tol:.1e})", report)
    return x, report


def assemble_dense(problem):
    """Explicit system matrix, columns built by applying the operator.

    Meant for small grids (oracle comparisons, M-matrix checks).
    """
    n = problem.grid.n_cells
    mat = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        mat[:, j] = problem.apply(e.reshape(problem.grid.dims)).ravel()
        e[j] = 0.0
    return mat


def is_m_matrix(mat, atol=1e-12):
    """Off-diagonals <= 0 and rows weakly diagonally dominant."""
    diag = np.diag(mat)
    off = mat - np.diag(diag)
    if np.any(off > atol):
        return False
    return bool(np.all(diag + atol >= np.sum(np.abs(off), axis=1)))


@dataclass
class BoundReport:
    lower: float
    upper: float
    min_value: float
    max_value: float
    slack: float
    below: int
    above: int

    @property
    def ok(self):
        return self.below == 0 and self.above == 0


def max_principle_check(problem, w, tol=DEFAULT_TOL):
    """Compare ``w`` against the comparison-principle enclosure of ``problem``.

    With ``c >= 0`` constants are sub/supersolutions, so::

        min f / (sigma + max c) <= w <= max f / sigma      if f >= 0

    and the general case takes the bound on the side where the sign of the
    data allows it. Violations are counted only beyond
    ``10 * tol * ||f||_2 / sigma``.
    """
    f = problem.rhs
    sigma = problem.sigma
    cmax = float(np.max(problem.c))
    fmin, fmax = float(np.min(f)), float(np.max(f))
    lower = fmin / (sigma + cmax) if fmin >= 0 else fmin / sigma
    upper = fmax / sigma if fmax >= 0 else fmax / (sigma + cmax)
    slack = 10.0 * tol * float(np.linalg.norm(f)) / sigma
    return BoundReport(
        lower=lower,
        upper=upper,
        min_value=float(np.min(w)),
        max_value=float(np.max(w)),
        slack=slack,
        below=int(np.sum(w < lower - slack)),
        above=int(np.sum(w > upper + slack)),
    )
