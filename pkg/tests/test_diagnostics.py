import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from chemoconsume.diagnostics import (
    Baseline,
    DiagnosticsRecord,
    TimeSeries,
    check_bounds,
    check_uniform_estimates,
    convexity_identity_check,
    energy,
    energy_monitor,
    f_m_eval,
    f_m_prime,
    make_record,
    reconstruct_timeseries,
)
from chemoconsume.errors import ChemoError, ContractViolation
from chemoconsume.grid import build_grid
from chemoconsume.scheme import SchemeParams, State


@pytest.mark.parametrize("s", [1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("m", [0.5, 2.0, 10.0])
def test_f_m_matches_quadrature(s, m):
    for r in np.linspace(0.0, 3 * m, 31):
        pts = [m] if 0 < m < r else None
        ref, _ = quad(lambda x: f_m_prime(x, m, s) if x > 0 else 0.0, 0.0, r,
                      points=pts, epsabs=1e-13, epsrel=1e-13, limit=200)
        assert abs(f_m_eval(r, m, s) - ref) <= 1e-8, (r, m, s)


def test_f_m_vectorized_and_contract():
    r = np.array([0.0, 0.5, 4.0])
    out = f_m_eval(r, 2.0, 2.0)
    assert np.allclose(out, [0.0, 0.125, 2.0 + 2.0 * 2.0])
    with pytest.raises(ContractViolation):
        f_m_eval(-1.0, 2.0, 1.0)


def test_f_m_s1_closed_form():
    assert f_m_eval(0.0, 3.0, 1.0) == 0.0
    assert math.isclose(f_m_eval(1.0, 3.0, 1.0), -1.0)
    assert math.isclose(f_m_eval(5.0, 3.0, 1.0), 3 * math.log(3) - 3 + 2 * math.log(3))


def _state(g, u, z):
    return State(g, u, z)


def test_energy_examples():
    g = build_grid((4, 4), (1.0, 2.0))
    p = SchemeParams(k=0.1, m=3.0, alpha=0.1, s=2.0)
    assert energy(g, g.full(0.0), g.full(0.7), p).energy == 0.0
    # (s/4) * f_m(2) * |Omega| with f_m(2) = 2**2 / 2
    assert math.isclose(energy(g, g.full(2.0), g.full(0.7), p).energy, g.volume)


def test_energy_reports_clamped_mass():
    g = build_grid((2,), (1.0,))
    p = SchemeParams(k=0.1, m=3.0, alpha=0.1, s=2.0)
    pieces = energy(g, np.array([-0.2, 1.0]), np.ones(2), p)
    assert math.isclose(pieces.clamped_mass, 0.1)
    assert math.isclose(pieces.energy, 0.5 * 0.5 * 0.5)


def _records(values):
    base = dict(t=0.0, mass_u=1.0, linf_u=1.0, linf_z=1.0, linf_v=0.0, l2_z_sq=1.0,
                incr_z_sq=0.0, grad_z_sq=0.0, energy=0.0, min_u=0.0, min_z=0.1,
                picard_iterations=0)
    return [DiagnosticsRecord(n=i, **{**base, **v}) for i, v in enumerate(values)]


BASE = Baseline(k=0.1, alpha=0.1, s=1.0, mass_u0=1.0, z0_l2_sq=1.0, zsq0_l2_sq=0.04, energy0=0.0)


def test_estimate_checks_pass_and_fail():
    ok = _records([{}, {"l2_z_sq": 0.9, "incr_z_sq": 0.05, "grad_z_sq": 1.0}, {"l2_z_sq": 0.85}])
    report = check_uniform_estimates(ok, BASE)
    assert report.passed
    assert all(line.startswith("PASS") for line in report.lines())

    drift = _records([{}, {"mass_u": 1.0 + 1e-6}])
    assert [it.passed for it in check_uniform_estimates(drift, BASE).items] == [False, True, True]

    grow = _records([{}, {"l2_z_sq": 0.95, "incr_z_sq": 0.1}])
    assert [it.passed for it in check_uniform_estimates(grow, BASE).items] == [True, False, True]

    # budget is 0.04 / (4 * 0.01) = 1; k * sum = 0.1 * 11 = 1.1
    steep = _records([{}, {"grad_z_sq": 11.0}])
    assert [it.passed for it in check_uniform_estimates(steep, BASE).items] == [True, True, False]

    with pytest.raises(ChemoError):
        check_uniform_estimates(ok[:1], BASE)


def test_bounds_check():
    recs = _records([{}, {"linf_z": 0.9}, {"linf_z": 0.9, "min_u": -1e-9}])
    assert check_bounds(recs, BASE).passed
    rising = _records([{}, {"linf_z": 0.9}, {"linf_z": 0.95}])
    names = [it.name for it in check_bounds(rising, BASE).items if not it.passed]
    assert names == ["max z non-increasing"]
    low = _records([{}, {"min_z": 0.1 - 1e-9}])
    assert not check_bounds(low, BASE).passed


def test_energy_monitor_reports_excursions():
    recs = _records([{"energy": 0.5}, {"energy": 150.0}, {"energy": 1.0}])
    report = energy_monitor(recs, BASE, envelope=100.0)
    assert not report.passed
    assert report.excursions == [(1, 150.0)]
    assert energy_monitor(recs, BASE, envelope=200.0).passed
    bad = _records([{}, {"energy": float("nan")}])
    assert not energy_monitor(bad, BASE).passed


def test_make_record_uses_time_averaged_gradient():
    g = build_grid((3,), (1.0,))
    p = SchemeParams(k=0.5, m=3.0, alpha=0.1)
    st_ = State(g, np.array([1.0, 2.0, 3.0]), np.array([0.2, 0.3, 0.4]), t=0.5, n=1)
    rec = make_record(g, st_, p, grad_dt=0.25)
    assert rec.grad_z_sq == 0.5
    assert rec.mass_u == pytest.approx(2.0)
    assert rec.linf_v == pytest.approx(0.4**2 - 0.01)


def _fm2(r):
    return f_m_eval(r, 50.0, 2.0)


def _fm2_prime(r):
    return np.minimum(r, 50.0)


def test_convexity_identity_examples():
    assert convexity_identity_check([[1.0, 1.0]], lambda r: r**2, lambda r: 2 * r) == (0, 0.0)
    # (1 - 0) * 2 >= 1 - 0
    assert convexity_identity_check([[1.0, 0.0]], lambda r: r**2, lambda r: 2 * r) == (0, 1.0)
    # concave f fails
    violations, margin = convexity_identity_check([[1.0, 0.0]], lambda r: -r**2, lambda r: -2 * r)
    assert violations == 1 and margin == -1.0


def test_convexity_identity_random_pairs_f_m(rng):
    pairs = rng.uniform(0, 100, size=(10_000, 2))
    violations, margin = convexity_identity_check(pairs, _fm2, _fm2_prime, atol=1e-12)
    assert violations == 0
    assert margin >= -1e-12


@settings(max_examples=200)
@given(st.floats(0, 100), st.floats(0, 100), st.sampled_from([1.5, 2.0, 3.0]))
def test_convexity_identity_property(a, b, s):
    m = 20.0
    f = lambda r: f_m_eval(r, m, s)  # noqa: E731
    fp = lambda r: np.minimum(r, m) ** (s - 1) / (s - 1)  # noqa: E731
    scale = 1.0 + abs(f(a)) + abs(f(b))
    violations, _ = convexity_identity_check([[a, b]], f, fp, atol=1e-12 * scale)
    assert violations == 0


def test_time_series_modes():
    vals = [np.array([0.0]), np.array([1.0]), np.array([3.0])]
    pc = TimeSeries(vals, 0.5)
    pl = TimeSeries(vals, 0.5, mode="piecewise_linear")
    assert pc(0.5)[0] == 1.0 and pl(0.5)[0] == 1.0
    assert pc(1.0)[0] == 3.0 and pl(1.0)[0] == 3.0
    assert pc(0.25)[0] == 1.0
    assert pl(0.25)[0] == pytest.approx(0.5)
    assert pl(0.75)[0] == pytest.approx(2.0)
    assert pc(0.0)[0] == 0.0
    for bad in (-0.1, 1.01):
        with pytest.raises(ChemoError):
            pc(bad)
    with pytest.raises(ChemoError):
        TimeSeries(vals[:1], 0.5)
    with pytest.raises(ChemoError):
        TimeSeries(vals, 0.5, mode="cubic")


def test_reconstruct_from_states():
    g = build_grid((1,), (1.0,))
    states = [State(g, np.array([float(n)]), np.ones(1), t=0.1 * n, n=n) for n in range(4)]
    ts = reconstruct_timeseries(states, 0.1, "piecewise_linear")
    assert ts(0.15)[0] == pytest.approx(1.5)
    assert reconstruct_timeseries(states, 0.1, attr="z")(0.3)[0] == 1.0
