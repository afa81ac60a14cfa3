import numpy as np
import pytest

from chemoconsume.errors import ContractViolation
from chemoconsume.grid import build_grid
from chemoconsume.scheme import SchemeParams
from chemoconsume.v_recovery import advance_v_from_u, v_from_u, v_from_z


def test_v_from_z_inverts_substitution(rng):
    v = rng.random((4, 4)) * 3
    assert np.allclose(v_from_z(np.sqrt(v + 0.01), 0.1), v, atol=1e-15)


def test_constant_data_is_scalar_backward_euler():
    g = build_grid((3, 3), (1.0, 1.0))
    p = SchemeParams(k=0.1, m=10.0, alpha=0.1, s=2.0)
    v = v_from_u(g, g.full(1.0), g.full(2.0), p)
    assert np.allclose(v, 1.0 / (1.0 + 0.1 * 4.0), atol=1e-14)


def test_rate_uses_truncated_density():
    g = build_grid((4,), (1.0,))
    p = SchemeParams(k=0.5, m=1.0, alpha=0.1)
    a = v_from_u(g, g.full(1.0), g.full(7.0), p)
    b = v_from_u(g, g.full(1.0), g.full(1.0), p)
    c = v_from_u(g, g.full(1.0), g.full(-1e-12), p)
    assert np.array_equal(a, b)
    assert np.allclose(c, 1.0)


def test_stays_in_data_range(rng):
    g = build_grid((8, 8), (1.0, 1.0))
    p = SchemeParams(k=0.05, m=5.0, alpha=0.1, s=1.5)
    v_prev = rng.random(g.dims)
    v = v_from_u(g, v_prev, rng.random(g.dims) * 3, p)
    assert v.min() >= 0.0
    assert v.max() <= v_prev.max() + 1e-12


def test_negative_previous_value_rejected():
    g = build_grid((3,), (1.0,))
    p = SchemeParams(k=0.1, m=1.0, alpha=0.1)
    with pytest.raises(ContractViolation):
        v_from_u(g, np.array([0.5, -1e-3, 0.1]), np.ones(3), p)


def test_advance_over_substeps(rng):
    g = build_grid((5,), (1.0,))
    p = SchemeParams(k=0.1, m=3.0, alpha=0.1)
    u1, u2 = rng.random(5), rng.random(5)
    v0 = rng.random(5)
    expected = v_from_u(g, v_from_u(g, v0, u1, p, 0.05), u2, p, 0.05)
    got = advance_v_from_u(g, v0, [(0.05, u1, None), (0.05, u2, None)], p)
    assert np.array_equal(got, expected)
