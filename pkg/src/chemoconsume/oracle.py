"""Scalar recursions for spatially constant data.

With constant fields every gradient vanishes, the cell density never
changes, and one step of the scheme for ``z`` reduces to the quadratic::

    (1/k + c/2) z**2 - (z_prev / k) z - c alpha**2 / 2 = 0,   c = min(u0, m)**s

This module deliberately imports nothing from the field solver.
"""

import math
from dataclasses import dataclass, field


@dataclass
class ScalarTrace:
    k: float
    alpha: float
    s: float
    m: float
    u: list = field(default_factory=list)
    z: list = field(default_factory=list)
    v_from_z: list = field(default_factory=list)
    v_from_u: list = field(default_factory=list)

    @property
    def t(self):
        return [n * self.k for n in range(len(self.u))]


def z_root(z_prev, c, alpha, k):
    """Positive root of the step quadratic, free of cancellation.

    Writing the quadratic as ``a z**2 + b z + q = 0`` with ``b < 0 <= -q``,
    the large root is ``(-b + sqrt(b*b - 4 a q)) / (2 a)`` where both terms
    of the numerator are positive.
    """
    a = 1.0 / k + 0.5 * c
    b = -z_prev / k
    q = -0.5 * c * alpha * alpha
    return (-b + math.sqrt(b * b - 4.0 * a * q)) / (2.0 * a)


def run_scalar(u0, v0, alpha, s, m, k, steps):
    """Run ``steps`` steps of the scheme on constant data.

    Returns a :class:`ScalarTrace` whose lists have ``steps + 1`` entries,
    the first being the initial value.
    """
    c = min(u0, m) ** s
    z = math.sqrt(v0 + alpha * alpha)
    vu = float(v0)
    tr = ScalarTrace(k=k, alpha=alpha, s=s, m=m)
    tr.u.append(float(u0))
    tr.z.append(z)
    tr.v_from_z.append(z * z - alpha * alpha)
    tr.v_from_u.append(vu)
    for _ in range(steps):
        z = z_root(z, c, alpha, k)
        vu = vu / (1.0 + k * c)
        tr.u.append(float(u0))
        tr.z.append(z)
        tr.v_from_z.append(z * z - alpha * alpha)
        tr.v_from_u.append(vu)
    return tr


def exact_ode_reference(u0, v0, s, t):
    """``v0 * exp(-u0**s * t)``: the exact chemical decay for constant data."""
    return v0 * math.exp(-(u0 ** s) * t)
