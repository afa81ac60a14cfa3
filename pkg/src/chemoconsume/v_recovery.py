"""Recovering the chemical concentration ``v`` from a step solution.

Two routes are available: the algebraic inverse of the substitution
(``v = z**2 - alpha**2``) or a linear Backward Euler step of the consumption
equation driven by the truncated cell density.
"""

from enum import Enum

import numpy as np

from . import elliptic
from .errors import ContractViolation
from .truncations import pow_s, t_band


class VVariant(str, Enum):
    FROM_Z = "from_z"
    FROM_U = "from_u"


def v_from_z(z, alpha):
    return z * z - alpha * alpha


def v_from_u(g, v_prev, u, p, k=None):
    """Solve ``(1/k + min(u, m)**s) v - lap_h v = v_prev / k``.

    ``u`` may carry round-off negatives from a central-flux step; the
    consumption rate is evaluated on ``u`` clamped to ``[0, m]``, which
    equals ``min(u, m)`` whenever ``u >= 0``.
    """
    k = p.k if k is None else k
    g.check(v_prev, u)
    if np.any(v_prev < -p.bound_tol):
        raise ContractViolation(f"v_prev must be >= 0, min is {float(np.min(v_prev))}")
    rate = pow_s(t_band(u, p.m), p.s)
    problem = elliptic.HelmholtzProblem(g, 1.0 / k, v_prev / k, rate)
    v, _ = elliptic.solve(problem, tol=p.linear_tol, x0=v_prev)
    return v


def advance_v_from_u(g, v_prev, substeps, p):
    """Apply :func:`v_from_u` over the sub-steps recorded by a step."""
    v = v_prev
    for k_sub, u_sub, _ in substeps:
        v = v_from_u(g, v, u_sub, p, k_sub)
    return v
