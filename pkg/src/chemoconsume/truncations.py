"""Pointwise truncations and the consumption power ``w**s``.

All functions accept scalars or arrays and return the same kind.
"""

import numpy as np

from .errors import ContractViolation


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def t_upper(u, m):
    """``min(u, m)``: the upper truncation used in the scheme."""
    return _out(np.minimum(u, m), u)


def t_band(u, m):
    """Clamp to ``[0, m]``."""
    return _out(np.clip(u, 0.0, m), u)


def t_lower(z, alpha):
    """``max(z, alpha)``."""
    return _out(np.maximum(z, alpha), z)


def pow_s(w, s):
    """``w**s`` for ``w >= 0`` and ``s >= 1``.

    Integer exponents use repeated multiplication; otherwise
    ``exp(s * log w)`` with ``0**s = 0``.
    """
    if s < 1:
        raise ContractViolation(f"exponent s must be >= 1, got {s}")
    arr = np.asarray(w, dtype=float)
    if np.any(arr < 0):
        raise ContractViolation(f"pow_s needs w >= 0, min is {float(np.min(arr))}")
    if float(s).is_integer():
        res = arr ** int(s)
    else:
        pos = arr > 0
        res = np.zeros_like(arr)
        res[pos] = np.exp(s * np.log(arr[pos]))
    return _out(res, w)


def default_alpha(v0):
    """Default lower level for ``z``: ``1e-2 * max(1, sqrt(max v0))``."""
    return 1e-2 * max(1.0, float(np.sqrt(np.max(v0))))
