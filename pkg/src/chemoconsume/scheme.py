"""One Backward Euler step of the truncated ``(u, z)`` scheme.

The step solves, for ``z >= alpha`` and ``u >= 0``::

    (u - u_prev)/k - lap u = -div( min(u, m) grad z**2 )
    (z - z_prev)/k - |grad z|**2 / z - lap z = -1/2 min(u, m)**s (z - alpha**2 / z)

by Picard iteration on the decoupled linear map ``(ub, zb) -> (u, z)``::

    z/k - lap z + c z = gs(zb)/Ta(zb) + c alpha**2/Ta(zb) + z_prev/k,  c = Tb(ub)**s / 2
    u/k - lap u = -2 div( Tb(ub) zb grad z ) + u_prev/k

where ``Tb`` clamps to ``[0, m]`` and ``Ta`` clamps below at ``alpha``. At a
fixed point the bounds hold, both truncations are inactive and the pair
solves the first system.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import elliptic
from .errors import BoundViolationError, ContractViolation, PicardDivergenceError, SolverError
from .grid import FluxScheme, div_chemotaxis_flux, grad_norm_sq, grad_sq, integrate, l2_norm_sq
from .truncations import pow_s, t_band, t_lower

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemeParams:
    k: float
    m: float
    alpha: float
    s: float = 1.0
    flux: FluxScheme = FluxScheme.CENTRAL
    picard_tol: float = 1e-11
    picard_maxit: int = 200
    step_halving_max: int = 4
    bound_tol: float = 1e-8
    damping: float = 1.0
    linear_tol: float = 1e-13

    def __post_init__(self):
        object.__setattr__(self, "flux", FluxScheme(self.flux))
        for name in ("k", "m", "alpha", "picard_tol", "bound_tol", "linear_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ContractViolation(f"{name} must be > 0, got {value}")
        if not self.s >= 1:
            raise ContractViolation(f"s must be >= 1, got {self.s}")
        if not 0 < self.damping <= 1:
            raise ContractViolation(f"damping must lie in (0, 1], got {self.damping}")
        if self.picard_maxit < 1 or self.step_halving_max < 0:
            raise ContractViolation("picard_maxit must be >= 1 and step_halving_max >= 0")


@dataclass
class State:
    """One time level. ``v`` is filled by the chosen recovery variant."""

    grid: object
    u: np.ndarray
    z: np.ndarray
    v: np.ndarray = None
    t: float = 0.0
    n: int = 0


@dataclass
class StepResult:
    """Outcome of :func:`solve_step`.

    ``substeps`` lists ``(k_sub, u_sub, z_sub)`` for every sub-interval that
    was integrated (a single entry unless the step was halved), so the
    chemical can be advanced on the same sub-grid. ``incr_z_sq`` and
    ``grad_z_dt`` accumulate ``||z_j - z_{j-1}||**2`` and
    ``k_sub * ||grad z_j||**2`` over those sub-intervals.
    """

    state: State
    picard_iterations: int
    halvings_used: int
    residuals: list = field(default_factory=list)
    substeps: list = field(default_factory=list)
    incr_z_sq: float = 0.0
    grad_z_dt: float = 0.0


class _Stagnation(Exception):
    def __init__(self, residuals):
        super().__init__("Picard iteration stagnated")
        self.residuals = residuals


def mass(g, f):
    """Total amount ``sum(f) * cell_volume``."""
    return integrate(g, f)


def initial_state(g, u0, v0, alpha):
    """Time-zero state: ``z0 = sqrt(v0 + alpha**2)``, ``v = v0``."""
    g.check(u0, v0)
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if np.any(u0 < 0) or np.any(v0 < 0):
        raise ContractViolation("initial data must satisfy u0 >= 0 and v0 >= 0")
    return State(g, u0.copy(), np.sqrt(v0 + alpha * alpha), v0.copy(), 0.0, 0)


def picard_substep(prev, u_bar, z_bar, p):
    """Apply the decoupled linear map once: ``(u_bar, z_bar) -> (u, z)``.

    The ``z`` system is solved first and its solution enters the
    chemotaxis term of the ``u`` system.
    """
    if np.any(z_bar < p.alpha - p.bound_tol):
        raise ContractViolation("z_bar must be >= alpha")
    return _substep(prev.grid, prev.u, prev.z, u_bar, z_bar, p, p.k)


def _substep(g, u_prev, z_prev, u_bar, z_bar, p, k):
    g.check(u_prev, z_prev, u_bar, z_bar)
    coeff = t_band(u_bar, p.m)
    za = t_lower(z_bar, p.alpha)
    c = 0.5 * pow_s(coeff, p.s)
    rhs_z = grad_sq(g, z_bar) / za + c * (p.alpha**2) / za + z_prev / k
    z_new, _ = elliptic.solve(
        elliptic.HelmholtzProblem(g, 1.0 / k, rhs_z, c), tol=p.linear_tol, x0=z_bar)
    chemo = div_chemotaxis_flux(g, coeff, z_new, p.flux, z_weight=z_bar)
    rhs_u = u_prev / k - chemo
    u_new, _ = elliptic.solve(
        elliptic.HelmholtzProblem(g, 1.0 / k, rhs_u), tol=p.linear_tol, x0=u_bar)
    return u_new, z_new


def _rel_change(new, old):
    scale = max(float(np.max(np.abs(new))), 1e-300)
    return float(np.max(np.abs(new - old))) / scale


def _picard(g, u_prev, z_prev, p, k):
    u_bar, z_bar = u_prev, z_prev
    residuals = []
    for it in range(1, p.picard_maxit + 1):
        u_new, z_new = _substep(g, u_prev, z_prev, u_bar, z_bar, p, k)
        res = max(_rel_change(u_new, u_bar), _rel_change(z_new, z_bar))
        residuals.append(res)
        if not np.isfinite(res):
            raise _Stagnation(residuals)
        if p.damping < 1.0:
            u_new = u_bar + p.damping * (u_new - u_bar)
            z_new = z_bar + p.damping * (z_new - z_bar)
        u_bar, z_bar = u_new, z_new
        if res < p.picard_tol:
            return u_bar, z_bar, it, residuals
        if it >= 5 and res > 1e3 * residuals[0]:
            break
    raise _Stagnation(residuals)


def solve_step(prev, p):
    """Advance ``prev`` by one step of length ``p.k``.

    Picard iteration starts from the previous level. If it does not reach
    ``p.picard_tol`` the interval is re-integrated with 2, 4, ... equal
    sub-steps, at most ``p.step_halving_max`` times; the returned state is
    always at ``prev.t + p.k``.

    Raises
    ------
    PicardDivergenceError
        After the halving budget is exhausted.
    BoundViolationError
        If the result breaks ``u >= 0`` or ``alpha <= z <= max z_prev`` by
        more than ``p.bound_tol``.
    """
    g = prev.grid
    trace = []
    for halvings in range(p.step_halving_max + 1):
        n_sub = 2**halvings
        k_sub = p.k / n_sub
        u, z = prev.u, prev.z
        subs, residuals, iters = [], [], 0
        incr = grad_dt = 0.0
        try:
            for _ in range(n_sub):
                u_new, z_new, it, res = _picard(g, u, z, p, k_sub)
                _check_bounds(g, u_new, z_new, z, p)
                incr += l2_norm_sq(g, z_new - z)
                grad_dt += k_sub * grad_norm_sq(g, z_new)
                subs.append((k_sub, u_new, z_new))
                residuals.extend(res)
                iters = max(iters, it)
                u, z = u_new, z_new
        except (_Stagnation, SolverError) as exc:
            trace.extend(getattr(exc, "residuals", []))
            log.warning("step %d: Picard failed with %d sub-steps, halving",
                        prev.n + 1, n_sub)
            continue
        state = State(g, u, z, None, (prev.n + 1) * p.k, prev.n + 1)
        return StepResult(state, iters, halvings, residuals, subs, incr, grad_dt)
    raise PicardDivergenceError(
        f"step {prev.n + 1}: no convergence after {p.step_halving_max} halvings",
        trace, prev.n + 1)


def _check_bounds(g, u, z, z_prev, p):
    checks = (
        ("u", -u, "u below 0"),
        ("z", p.alpha - z, "z below alpha"),
        ("z", z - float(np.max(z_prev)), "z above previous max"),
    )
    for name, excess, what in checks:
        worst = int(np.argmax(excess))
        if excess.flat[worst] > p.bound_tol:
            idx = np.unravel_index(worst, g.dims)
            raise BoundViolationError(
                f"{what} by {float(excess.flat[worst]):.3e} at cell {idx}",
                name, idx, float(excess.flat[worst]))


def with_v(state, v):
    return replace(state, v=v)
