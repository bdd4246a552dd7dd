"""Run configuration: flat ``key = value`` files, per-command defaults, resolution to solver objects."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .controller import AdaptiveParams, StepPlan, uniform_open
from .grid import Grid, read_field
from .model import Mobility, Problem, stabilizer_bound
from .stepper import KernelParams, check_guaranteed, max_stable_step, optimal_eta

log = logging.getLogger(__name__)

AUTO = "auto"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # grid
    m: int = 128
    L: float = 1.0
    # physics
    epsilon: float = 0.01
    mobility: str = "constant"
    mobility_value: float = 1.0
    stabilizer: str = AUTO
    # time
    mode: str = "uniform"
    N: str = AUTO
    T: float = 1.0
    seed: int = 0
    amplitude: float = 0.25
    gamma_star: float = 1.0
    eta: str = AUTO
    mbp: str = "free"
    tau_min: float = 1e-5
    tau_max: str = AUTO
    alpha: float = 1e5
    gamma_max: float = 1.5
    levels: str = "10,20,40,80,160,320"
    # initial condition: cosine | bubble | random | file
    init: str = "cosine"
    init_radius: float = 0.2
    init_cx: float = 0.5
    init_cy: float = 0.5
    init_lo: float = -0.1
    init_hi: float = 0.1
    init_file: str = ""
    # output
    out: str = "out"
    snapshot_every: float = 0.0
    snapshot_times: str = ""
    # linear solver
    tol: float = 1e-12
    slack: float = 1e-11

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def update(self, values: dict) -> "RunConfig":
        """Return a copy with string or typed ``values`` coerced to the field types."""
        types = {f.name: f.type for f in fields(self)}
        changes = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            changes[key] = _coerce(key, types[key], raw)
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "\n".join(f"{k} = {getattr(self, k)}" for k in self.keys()) + "\n"

    # -- resolution -----------------------------------------------------

    def grid(self) -> Grid:
        return Grid(self.m, self.L)

    def mobility_model(self) -> Mobility:
        if self.mobility == "constant":
            return Mobility.constant(self.mobility_value)
        if self.mobility == "degenerate":
            return Mobility.degenerate()
        raise ConfigError(f"mobility must be 'constant' or 'degenerate', got {self.mobility!r}")

    def problem(self) -> Problem:
        mob = self.mobility_model()
        if self.stabilizer == AUTO:
            S = max(stabilizer_bound(mob), 2.0)
        else:
            S = float(self.stabilizer)
        return Problem(self.grid(), self.epsilon, mob, S)

    def kernel_params(self) -> KernelParams:
        gstar = self.gamma_max if self.mode == "adaptive" else self.gamma_star
        eta = optimal_eta(gstar) if self.eta == AUTO else float(self.eta)
        return KernelParams(gstar, eta)

    def level_list(self) -> list[int]:
        return [int(v) for v in self.levels.split(",") if v.strip()]

    def snapshot_list(self) -> list[float]:
        times = [float(v) for v in self.snapshot_times.split(",") if v.strip()]
        if self.snapshot_every > 0:
            k = 0
            while k * self.snapshot_every <= self.T * (1 + 1e-12):
                times.append(k * self.snapshot_every)
                k += 1
        return sorted(set(times))

    def plan(self, problem: Problem | None = None) -> StepPlan:
        problem = problem or self.problem()
        if self.mode == "adaptive":
            tau_max = self.tau_max
            if tau_max == AUTO:
                tau_max = max_stable_step(self.gamma_max, problem)
            params = AdaptiveParams(self.tau_min, float(tau_max), self.alpha, self.gamma_max)
            return StepPlan("adaptive", self.T, adaptive=params)
        if self.N == AUTO:
            if self.mode != "uniform":
                raise ConfigError("N=auto is only available for uniform meshes")
            cap = max_stable_step(self.gamma_star, problem, None if self.eta == AUTO else float(self.eta))
            N = math.ceil(self.T / cap * (1.0 - 1e-12))
        else:
            N = int(self.N)
        return StepPlan(self.mode, self.T, N=N, seed=self.seed, amplitude=self.amplitude)

    def initial_field(self, grid: Grid | None = None) -> np.ndarray:
        grid = grid or self.grid()
        if self.init == "cosine":
            return grid.sample(lambda x, y: 0.1 * (np.cos(3 * x) * np.cos(2 * y) + np.cos(5 * x) * np.cos(5 * y)))
        if self.init == "bubble":
            r2 = self.init_radius**2
            return grid.sample(lambda x, y: np.where((x - self.init_cx) ** 2 + (y - self.init_cy) ** 2 < r2, 1.0, -1.0))
        if self.init == "random":
            u = uniform_open(self.seed, grid.m * grid.m).reshape(grid.shape)
            return self.init_lo + (self.init_hi - self.init_lo) * u
        if self.init == "file":
            phi, fgrid, _ = read_field(self.init_file)
            if fgrid != grid:
                raise ConfigError(f"initial field grid {fgrid} does not match configured {grid}")
            return phi
        raise ConfigError(f"unknown initial condition {self.init!r}")

    def validate(self) -> None:
        """Check every precondition that does not require stepping."""
        if self.mbp not in ("guaranteed", "free"):
            raise ConfigError(f"mbp must be 'guaranteed' or 'free', got {self.mbp!r}")
        try:
            problem = self.problem()
            plan = self.plan(problem)
            if self.mbp == "guaranteed":
                params = self.kernel_params()
                check_guaranteed([] if plan.mode == "adaptive" else plan.steps(), problem, params)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.init == "random" and not self.init_lo <= self.init_hi:
            raise ConfigError("init_lo must not exceed init_hi")


def _coerce(key: str, typ, raw):
    typ = typ if isinstance(typ, str) else typ.__name__
    if typ == "str":
        if isinstance(raw, str):
            return raw.strip()
        return str(raw)
    try:
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} expects {typ}, got {raw!r}") from None
    raise ConfigError(f"unsupported field type {typ} for {key!r}")


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    return (base or RunConfig()).update(parse_config_text(Path(path).read_text()))


def defaults(command: str, paper_scale: bool = False) -> RunConfig:
    """Desk-scale defaults for each experiment; ``paper_scale`` restores the published sizes."""
    if command == "converge":
        cfg = RunConfig(m=256, epsilon=0.1, T=1.0, init="cosine", mode="uniform", mbp="free", N="10")
        if paper_scale:
            cfg = cfg.update({"m": 1024, "levels": "10,20,40,80,160,320,640"})
    elif command == "bubble":
        cfg = RunConfig(
            m=128, epsilon=0.01, T=220.0, init="bubble", init_radius=0.2, mode="uniform",
            gamma_star=1.0, mbp="guaranteed", snapshot_times="0,20,80,120,180,200",
        )
        if paper_scale:
            cfg = cfg.update({"m": 512})
    elif command == "coarsen":
        cfg = RunConfig(
            m=128, epsilon=0.01, T=100.0, mobility="degenerate", init="random", init_lo=-0.1, init_hi=0.1,
            mode="adaptive", gamma_max=1.5, alpha=1e5, tau_min=1e-5, mbp="guaranteed",
            snapshot_times="0,5,50,100",
        )
        if paper_scale:
            cfg = cfg.update({"m": 256, "T": 500.0, "snapshot_times": "0,5,50,200,400,500"})
    elif command == "run":
        cfg = RunConfig()
    else:
        raise ConfigError(f"unknown command {command!r}")
    if paper_scale:
        log.warning("paper-scale settings for %s: runs may take hours", command)
    return cfg
