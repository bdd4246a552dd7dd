"""Simulation driver and the experiment commands behind the CLI."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .config import ConfigError, RunConfig
from .controller import (
    StepPlan,
    adaptive_tau,
    bisect_mesh,
    energy_rate_estimate,
    ratios,
    uniform_mesh,
    write_mesh,
)
from .diagnostics import ConvergenceTable, RunSeries, bubble_radius, mbp_check, richardson_errors
from .grid import sup_norm, write_field
from .linsolve import DEFAULT_TOL
from .model import Problem, discrete_energy
from .stepper import (
    RATIO_LIMIT,
    KernelParams,
    SolverState,
    advance,
    check_guaranteed,
    first_step_cap,
    max_stable_step,
)

log = logging.getLogger(__name__)


class MBPViolation(RuntimeError):
    pass


@dataclass
class RunResult:
    series: RunSeries
    phi: np.ndarray
    steps: np.ndarray
    extra: dict = field(default_factory=dict)


def simulate(
    problem: Problem,
    phi0: np.ndarray,
    plan: StepPlan | np.ndarray,
    *,
    guaranteed: bool = False,
    params: KernelParams | None = None,
    tol: float = DEFAULT_TOL,
    slack: float | None = None,
    observer: Callable[[SolverState], None] | None = None,
) -> RunResult:
    """Integrate from ``phi0`` along ``plan`` (a StepPlan or an explicit step array).

    In guaranteed mode the mesh is checked against the bound-preserving caps
    before stepping (adaptive meshes are clamped to them instead) and every
    iterate must satisfy ``||phi||_inf <= 1 + slack``.
    """
    grid = problem.grid
    phi0 = grid.check(phi0)
    slack = 10 * tol if slack is None else slack
    adaptive = isinstance(plan, StepPlan) and plan.mode == "adaptive"
    if guaranteed and params is None:
        raise ValueError("guaranteed mode needs KernelParams")

    if adaptive:
        ap = plan.adaptive
        horizon = plan.horizon
        fixed = None
        cap1 = cap = math.inf
        if guaranteed:
            check_guaranteed([], problem, params, phi0)
            cap1 = first_step_cap(params.gamma_star, problem, params.eta)
            cap = max_stable_step(params.gamma_star, problem, params.eta)
    else:
        fixed = plan.steps() if isinstance(plan, StepPlan) else np.asarray(plan, dtype=float)
        if guaranteed:
            check_guaranteed(fixed, problem, params, phi0)
        horizon = float(np.sum(fixed))
        nodes = np.concatenate([[0.0], np.cumsum(fixed)])

    series = RunSeries()
    state = SolverState(phi0)
    energies = [discrete_energy(phi0, problem)]
    # a row's modified energy needs the ratio of the step that follows it
    pending = (0.0, sup_norm(phi0), energies[0], 0.0, 0.0)

    def flush(gamma_next):
        t, sup, E, incr, tau = pending
        modified = E if tau == 0.0 else E + gamma_next**1.5 / (1 + gamma_next) * incr / (2 * tau)
        series.append(t, sup, E, modified, tau)

    if observer:
        observer(state)
    steps = []
    n = 0
    while True:
        if fixed is not None:
            if n >= fixed.size:
                break
            tau = float(fixed[n])
        else:
            remaining = horizon - state.time_now
            if remaining <= 1e-12 * horizon:
                break
            if n == 0:
                tau = min(ap.tau_min, cap1)
            else:
                rate = energy_rate_estimate(energies[-1], energies[-2], state.tau_curr)
                tau = min(adaptive_tau(rate, state.tau_curr, ap), cap)
            tau = min(tau, remaining)
        flush(tau / state.tau_curr if state.tau_curr > 0 else 1.0)
        prev = state.phi_curr
        state = advance(state, tau, problem, tol)
        if fixed is not None:
            state = _with_time(state, nodes[n + 1])
        n += 1
        steps.append(tau)
        sup = sup_norm(state.phi_curr)
        if guaranteed and sup > 1.0 + slack:
            raise MBPViolation(f"step {n} at t={state.time_now:.6g}: ||phi||_inf = {sup!r} exceeds 1 + {slack:g}")
        energies.append(discrete_energy(state.phi_curr, problem))
        diff = state.phi_curr - prev
        pending = (state.time_now, sup, energies[-1], grid.inner(diff, diff), tau)
        if observer:
            observer(state)
    flush(1.0)
    return RunResult(series, state.phi_curr, np.asarray(steps))


def _with_time(state: SolverState, t: float) -> SolverState:
    return replace(state, time_now=float(t))


# -- commands --------------------------------------------------------------


class _Snapshots:
    def __init__(self, out: Path | None, times, grid):
        self.out = out
        self.times = list(times)
        self.grid = grid

    def __call__(self, state: SolverState) -> None:
        while self.times and state.time_now >= self.times[0] - 1e-9:
            target = self.times.pop(0)
            if self.out is not None:
                write_field(self.out / f"field_t{target:g}.csv", state.phi_curr, self.grid, state.time_now)


def _out_dir(config: RunConfig, write: bool) -> Path | None:
    if not write:
        return None
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_config(config: RunConfig, observers=(), write: bool = True) -> tuple[RunResult, Path | None, dict]:
    config.validate()
    problem = config.problem()
    plan = config.plan(problem)
    phi0 = config.initial_field(problem.grid)
    guaranteed = config.mbp == "guaranteed"
    params = config.kernel_params() if guaranteed else None
    out = _out_dir(config, write)
    snaps = _Snapshots(out, config.snapshot_list(), problem.grid)

    def observer(state):
        snaps(state)
        for obs in observers:
            obs(state)

    t0 = time.perf_counter()
    result = simulate(
        problem, phi0, plan, guaranteed=guaranteed, params=params,
        tol=config.tol, slack=config.slack, observer=observer,
    )
    wall = time.perf_counter() - t0
    s = result.series
    summary = {
        "final_time": s.t[-1],
        "steps": len(result.steps),
        "sup_norm_min": min(s.sup_norm),
        "sup_norm_max": max(s.sup_norm),
        "energy_initial": s.energy[0],
        "energy_final": s.energy[-1],
        "stabilizer": problem.stabilizer,
        "mbp_mode": config.mbp,
        "mbp_ok": mbp_check(s, config.slack),
        "wall_time_s": round(wall, 3),
    }
    if out is not None:
        s.to_csv(out / "series.csv")
        write_mesh(out / "mesh.csv", result.steps)
    return result, out, summary


def _emit_summary(out: Path | None, command: str, summary: dict) -> None:
    record = json.dumps({"command": command, **summary}, sort_keys=True)
    if out is not None:
        (out / "summary.txt").write_text(record + "\n")
    print(record)


def cmd_run(config: RunConfig, write: bool = True) -> RunResult:
    result, out, summary = _run_config(config, write=write)
    _emit_summary(out, "run", summary)
    return result


def cmd_bubble(config: RunConfig, write: bool = True) -> RunResult:
    """Shrinking circle; returns the run with ``extra['radius']`` as ``(t, R)`` pairs."""
    grid = config.grid()
    radii = []

    def track(state):
        radii.append((state.time_now, bubble_radius(state.phi_curr, grid)))

    result, out, summary = _run_config(config, observers=[track], write=write)
    result.extra["radius"] = radii
    positive = [t for t, r in radii if r > 0]
    vanished = [t for t, r in radii if r == 0]
    summary["extinction_time"] = vanished[0] if vanished else None
    summary["last_positive_time"] = positive[-1] if positive else None
    if out is not None:
        lines = ["t,radius,radius_sharp_interface"]
        for t, r in radii:
            exact = math.sqrt(max(config.init_radius**2 - 2 * config.epsilon**2 * t, 0.0))
            lines.append(f"{t:.17g},{r:.17g},{exact:.17g}")
        (out / "radius.csv").write_text("\n".join(lines) + "\n")
    _emit_summary(out, "bubble", summary)
    return result


def cmd_coarsen(config: RunConfig, write: bool = True) -> RunResult:
    result, out, summary = _run_config(config, write=write)
    steps = result.steps
    summary["max_ratio"] = float(np.max(ratios(steps))) if steps.size > 1 else None
    summary["tau_final"] = float(steps[-1])
    _emit_summary(out, "coarsen", summary)
    return result


def cmd_converge(config: RunConfig, write: bool = True) -> ConvergenceTable:
    """Richardson study: each level N against its refinement to 2N steps."""
    config.validate()
    if config.mode not in ("uniform", "perturbed"):
        raise ConfigError("converge needs mode uniform or perturbed")
    problem = config.problem()
    phi0 = config.initial_field(problem.grid)
    cache: dict[int, np.ndarray] = {}

    def run_uniform(N):
        if N not in cache:
            cache[N] = simulate(problem, phi0, uniform_mesh(N, config.T), tol=config.tol).phi
        return cache[N]

    table = ConvergenceTable()
    t0 = time.perf_counter()
    for N in config.level_list():
        if config.mode == "uniform":
            steps = uniform_mesh(N, config.T)
            coarse, fine = run_uniform(N), run_uniform(2 * N)
        else:
            steps = StepPlan("perturbed", config.T, N=N, seed=config.seed, amplitude=config.amplitude).steps()
            coarse = simulate(problem, phi0, steps, tol=config.tol).phi
            fine = simulate(problem, phi0, bisect_mesh(steps), tol=config.tol).phi
        gmax = float(np.max(ratios(steps))) if N > 1 else 1.0
        e_inf, e_h1 = richardson_errors(coarse, fine, problem.grid)
        row = table.add(N, float(np.max(steps)), gmax, e_inf, e_h1)
        log.info("N=%d e_inf=%.3e e_h1=%.3e orders %.2f %.2f", N, e_inf, e_h1, row.order_inf, row.order_h1)
        if gmax >= RATIO_LIMIT:
            log.warning("N=%d: max step ratio %.3f lies outside the bound-preserving window", N, gmax)
    out = _out_dir(config, write)
    print(table.format())
    if out is not None:
        table.to_csv(out / "table.csv")
    summary = {
        "levels": config.level_list(),
        "mode": config.mode,
        "mobility": config.mobility,
        "max_ratio_outside_window": any(r.gamma_max_observed >= RATIO_LIMIT for r in table.rows),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    _emit_summary(out, "converge", summary)
    return table


COMMANDS = {"run": cmd_run, "bubble": cmd_bubble, "coarsen": cmd_coarsen, "converge": cmd_converge}
