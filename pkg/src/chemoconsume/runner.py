"""Run orchestration: time loop, artifacts on disk, refinement studies."""

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import io
from .diagnostics import (
    Baseline,
    TimeSeries,
    check_uniform_estimates,
    energy_monitor,
    make_record,
)
from .errors import BoundViolationError, ChemoError, ConfigError, PicardDivergenceError, SolverError
from .grid import l2_norm_sq
from .oracle import exact_ode_reference, run_scalar
from .scheme import initial_state, solve_step
from .v_recovery import VVariant, advance_v_from_u, v_from_z

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4


@dataclass
class RunResult:
    records: list
    baseline: Baseline
    grid: object = None
    states: list = field(default_factory=list)
    v_z: list = field(default_factory=list)
    v_u: list = field(default_factory=list)
    error: Exception = None

    @property
    def sup_u(self):
        return max(r.linf_u for r in self.records)


def simulate(cfg, keep_states=False, on_step=None):
    """Integrate ``cfg`` up to ``t_final`` and collect diagnostics.

    Both recoveries of the chemical are advanced when ``cfg.track_gap`` is
    set (or when the selected variant needs it); the selected one fills
    ``State.v``. A failing step ends the run: the error is stored on the
    result together with everything computed before it.
    """
    g, u0, v0 = cfg.initial_data()
    p = cfg.params
    state = initial_state(g, u0, v0, p.alpha)
    base = Baseline.from_initial(g, state.u, state.z, p)
    need_u = cfg.track_gap or cfg.v_variant is VVariant.FROM_U
    vz = vu = state.v
    v0_max = float(np.max(v0))

    result = RunResult([], base, g)
    result.records.append(make_record(g, state, p, gap=0.0 if cfg.track_gap else None))
    if keep_states:
        result.states.append(state)
        result.v_z.append(vz)
        result.v_u.append(vu)

    for _ in range(cfg.n_steps):
        try:
            step = solve_step(state, p)
            vz = v_from_z(step.state.z, p.alpha)
            if need_u:
                vu = advance_v_from_u(g, vu, step.substeps, p)
                _check_v(vu, v0_max, p.bound_tol, step.state.n)
        except (ChemoError, SolverError) as exc:
            result.error = exc
            log.error("run stopped at step %d: %s", state.n + 1, exc)
            break
        state = step.state
        state.v = vu if cfg.v_variant is VVariant.FROM_U else vz
        gap = math.sqrt(l2_norm_sq(g, vz - vu)) if cfg.track_gap else None
        result.records.append(make_record(
            g, state, p, incr_z_sq=step.incr_z_sq, grad_dt=step.grad_z_dt,
            picard_iterations=step.picard_iterations, gap=gap))
        if keep_states:
            result.states.append(state)
            result.v_z.append(vz)
            result.v_u.append(vu)
        if on_step is not None:
            on_step(state, step)
    return result


def _check_v(v, v0_max, tol, n):
    for what, excess in (("v below 0", -v), ("v above max v0", v - v0_max)):
        worst = int(np.argmax(excess))
        if excess.flat[worst] > tol:
            idx = np.unravel_index(worst, v.shape)
            raise BoundViolationError(
                f"step {n}: {what} by {float(excess.flat[worst]):.3e} at cell {idx}",
                "v", idx, float(excess.flat[worst]))


def exit_code_for(error):
    if error is None:
        return EXIT_OK
    if isinstance(error, BoundViolationError):
        return EXIT_INVARIANT
    if isinstance(error, (PicardDivergenceError, SolverError)):
        return EXIT_SOLVER
    return EXIT_INVARIANT


def run_simulation(cfg, out_dir=None):
    """Run ``cfg`` and write its artifacts; return a process exit code.

    Written into ``out_dir`` (default ``cfg.output_dir``):

    * ``diagnostics.csv``: one row per step (every step, so that the estimate
      checks can be replayed from the file) plus ``diagnostics.csv.meta.json``;
    * ``snapshots/{u,z,v}_NNNNNN.txt`` every ``cfg.cadence`` steps and at the
      final step.
    """
    out_dir = out_dir or cfg.output_dir
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    g = cfg.grid()

    def snapshot(state, _step=None):
        if state.n % cfg.cadence == 0 or state.n == cfg.n_steps:
            for name in ("u", "z", "v"):
                io.write_snapshot(os.path.join(snap_dir, f"{name}_{state.n:06d}.txt"),
                                  g, getattr(state, name), state.t)

    g0, u0, v0 = cfg.initial_data()
    snapshot(initial_state(g0, u0, v0, cfg.params.alpha))
    result = simulate(cfg, on_step=snapshot)

    csv_path = os.path.join(out_dir, "diagnostics.csv")
    io.write_records(csv_path, result.records)
    io.write_meta(csv_path, result.baseline, {"v_variant": cfg.v_variant.value,
                                             "energy_envelope": cfg.energy_envelope,
                                             "params": asdict(cfg.params)})
    if result.error is not None:
        trace = getattr(result.error, "residuals", [])
        log.error("step failure: %s; residual trace: %s", result.error,
                  ", ".join("%.3e" % r for r in trace[-20:]))
        return exit_code_for(result.error)

    report = check_uniform_estimates(result.records, result.baseline)
    energy = energy_monitor(result.records, result.baseline, cfg.energy_envelope)
    for line in list(report.lines()) + list(energy.lines()):
        log.info(line)
    if energy.excursions:
        log.warning("energy above heuristic envelope at %d steps", len(energy.excursions))
    return EXIT_OK if report.passed else EXIT_INVARIANT


def check_csv(csv_path):
    """Replay the estimate checks on an emitted diagnostics CSV."""
    records = io.read_records(csv_path)
    base, meta = io.read_meta(csv_path)
    report = check_uniform_estimates(records, base)
    energy = energy_monitor(records, base, meta.get("energy_envelope", 100.0))
    return report, energy


@dataclass
class OracleComparison:
    max_diff: dict
    field_result: RunResult
    trace: object

    @property
    def worst(self):
        return max(self.max_diff.values())


def oracle_check(cfg):
    """Compare a field run on constant data against the scalar recursion."""
    if not (cfg.u0.is_constant and cfg.v0.is_constant):
        raise ConfigError("oracle-check needs spatially constant u0 and v0", "u0")
    cfg = _with_gap(cfg)
    res = simulate(cfg, keep_states=True)
    if res.error is not None:
        raise res.error
    p = cfg.params
    tr = run_scalar(cfg.u0.base, cfg.v0.base, p.alpha, p.s, p.m, p.k, cfg.n_steps)
    diffs = {
        "u": max(float(np.max(np.abs(s.u - a))) for s, a in zip(res.states, tr.u)),
        "z": max(float(np.max(np.abs(s.z - a))) for s, a in zip(res.states, tr.z)),
        "v_from_z": max(float(np.max(np.abs(v - a))) for v, a in zip(res.v_z, tr.v_from_z)),
        "v_from_u": max(float(np.max(np.abs(v - a))) for v, a in zip(res.v_u, tr.v_from_u)),
    }
    return OracleComparison(diffs, res, tr)


def _with_gap(cfg):
    return replace(cfg, track_gap=True)


@dataclass
class StudyRow:
    kind: str
    m: float
    k: float
    m_next: float
    k_next: float
    diff_u: float
    diff_z: float
    order_u: float = None
    order_z: float = None
    gap_v: float = None
    ref_err_v: float = None
    sup_u: float = None


STUDY_FIELDS = ["kind", "m", "k", "m_next", "k_next", "diff_u", "diff_z",
                "order_u", "order_z", "gap_v", "ref_err_v", "sup_u"]


@dataclass
class StudyResult:
    """Refinement table; ``runs`` maps ``(m, k)`` to the completed :class:`RunResult`."""

    rows: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    failure: str = None
    runs: dict = field(default_factory=dict)

    def table(self, kind):
        return [r for r in self.rows if r.kind == kind]


def _study_run(cfg):
    return simulate(cfg, keep_states=True)


def _spacetime_gap(res, k):
    return math.sqrt(sum(k * l2_norm_sq(res.grid, a - b) for a, b in zip(res.v_z[1:], res.v_u[1:])))


def _coarse_diff(res_a, res_b, attr, k_a, k_b, k0, n0):
    sa = TimeSeries([getattr(s, attr) for s in res_a.states], k_a)
    sb = TimeSeries([getattr(s, attr) for s in res_b.states], k_b)
    total = sum(k0 * l2_norm_sq(res_a.grid, sa(n * k0) - sb(n * k0)) for n in range(1, n0 + 1))
    return math.sqrt(total)


def convergence_study(cfg, k_levels, m_levels, jobs=1):
    """Joint refinement in ``k`` (halving) and ``m`` (doubling).

    Every pair ``(m * 2**i, k / 2**j)`` is run. For each ``m`` the
    successive differences between consecutive ``k`` levels are measured
    in ``L2(0, T; L2)`` on the coarsest time grid, using the
    right-constant reconstruction; the observed order is
    ``log2(e_j / e_{j+1})``. For each ``k`` the same norm is taken between
    consecutive ``m`` levels. The space-time gap between the two
    recoveries of ``v`` is reported per level, and for constant data the
    error of ``v`` (from ``u``) at ``t_final`` against the exact decay.

    A failing run stops the study; rows computed so far are kept and
    ``failure`` describes the error.
    """
    if k_levels < 2 or m_levels < 2:
        raise ChemoError("need k_levels >= 2 and m_levels >= 2")
    k0, m0 = cfg.params.k, cfg.params.m
    levels = [(m0 * 2**i, k0 / 2**j) for i in range(m_levels) for j in range(k_levels)]
    cfgs = [_with_gap(cfg).with_params(m=m, k=k) for m, k in levels]
    out = StudyResult(levels=levels)
    runs = out.runs

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_study_run, cfgs))
    else:
        results = []
        for c in cfgs:
            results.append(_study_run(c))
            if results[-1].error is not None:
                break
    for lvl, res in zip(levels, results):
        if res.error is not None:
            out.failure = f"run m={lvl[0]}, k={lvl[1]} failed: {res.error}"
            break
        runs[lvl] = res

    homogeneous = cfg.u0.is_constant and cfg.v0.is_constant
    n0 = cfg.n_steps
    for i in range(m_levels):
        m = m0 * 2**i
        prev = None
        for j in range(k_levels - 1):
            a, b = (m, k0 / 2**j), (m, k0 / 2**(j + 1))
            if a not in runs or b not in runs:
                break
            ra, rb = runs[a], runs[b]
            row = StudyRow("k", m, a[1], m, b[1],
                           _coarse_diff(ra, rb, "u", a[1], b[1], k0, n0),
                           _coarse_diff(ra, rb, "z", a[1], b[1], k0, n0),
                           gap_v=_spacetime_gap(ra, a[1]), sup_u=ra.sup_u)
            if prev is not None:
                row.order_u = _order(prev.diff_u, row.diff_u)
                row.order_z = _order(prev.diff_z, row.diff_z)
            if homogeneous:
                row.ref_err_v = _ref_err(cfg, ra)
            out.rows.append(row)
            prev = row
    for j in range(k_levels):
        k = k0 / 2**j
        for i in range(m_levels - 1):
            a, b = (m0 * 2**i, k), (m0 * 2**(i + 1), k)
            if a not in runs or b not in runs:
                break
            ra, rb = runs[a], runs[b]
            out.rows.append(StudyRow("m", a[0], k, b[0], k,
                                     _coarse_diff(ra, rb, "u", k, k, k0, n0),
                                     _coarse_diff(ra, rb, "z", k, k, k0, n0),
                                     gap_v=_spacetime_gap(ra, k), sup_u=ra.sup_u))
    # per-level rows for quantities of single runs (finest level included)
    for (m, k), res in runs.items():
        out.rows.append(StudyRow("level", m, k, None, None, None, None,
                                 gap_v=_spacetime_gap(res, k), sup_u=res.sup_u,
                                 ref_err_v=_ref_err(cfg, res) if homogeneous else None))
    return out


def _order(e_coarse, e_fine):
    if e_coarse > 0 and e_fine > 0:
        return math.log2(e_coarse / e_fine)
    return None


def _ref_err(cfg, res):
    exact = exact_ode_reference(cfg.u0.base, cfg.v0.base, cfg.params.s, cfg.t_final)
    return float(np.max(np.abs(res.v_u[-1] - exact)))


def write_study(path, study):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STUDY_FIELDS)
        for row in study.rows:
            values = [getattr(row, f) for f in STUDY_FIELDS]
            writer.writerow([v if isinstance(v, str) else io.format_value(v) for v in values])
