"""Time meshes and step-size control."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .stepper import RATIO_LIMIT

_MASK64 = (1 << 64) - 1


def splitmix64(seed: int):
    """Yield 64-bit outputs of the splitmix64 generator started at ``seed``.

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    yield z ^ (z >> 31)            (all arithmetic mod 2**64)
    """
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def uniform_open(seed: int, count: int) -> np.ndarray:
    """``count`` doubles in the open interval (0, 1): ``((z >> 11) + 0.5) * 2**-53``."""
    gen = splitmix64(seed)
    return np.array([((next(gen) >> 11) + 0.5) * 2.0**-53 for _ in range(count)])


def uniform_mesh(N: int, T: float) -> np.ndarray:
    if N < 1:
        raise ValueError(f"need at least one step, got N={N}")
    return np.full(N, T / N)


def perturbed_mesh(N: int, T: float, seed: int = 0, amplitude: float = 0.25) -> np.ndarray:
    """Steps between nodes ``(n + amplitude*theta_n) T / N`` with ``theta_n`` uniform on (-1, 1).

    End nodes stay at 0 and ``T``; ``amplitude < 1/2`` keeps nodes increasing.
    """
    if N < 1:
        raise ValueError(f"need at least one step, got N={N}")
    if not 0.0 <= amplitude < 0.5:
        raise ValueError(f"amplitude must lie in [0, 0.5), got {amplitude}")
    theta = 2.0 * uniform_open(seed, max(N - 1, 0)) - 1.0
    nodes = np.empty(N + 1)
    nodes[0] = 0.0
    nodes[N] = T
    nodes[1:N] = (np.arange(1, N) + amplitude * theta) / N * T
    return np.diff(nodes)


def bisect_mesh(steps: np.ndarray) -> np.ndarray:
    """Split every step in half (nested refinement used as the reference mesh)."""
    return np.repeat(np.asarray(steps, dtype=float) / 2.0, 2)


def ratios(steps: np.ndarray) -> np.ndarray:
    steps = np.asarray(steps, dtype=float)
    return steps[1:] / steps[:-1]


@dataclass(frozen=True)
class AdaptiveParams:
    tau_min: float
    tau_max: float
    alpha: float = 1e5
    gamma_max: float = 1.5

    def __post_init__(self):
        if not 0 < self.tau_min <= self.tau_max:
            raise ValueError(f"need 0 < tau_min <= tau_max, got {self.tau_min}, {self.tau_max}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.gamma_max < RATIO_LIMIT:
            raise ValueError(f"gamma_max must lie in (0, 1+sqrt(2)), got {self.gamma_max}")


def adaptive_tau(energy_rate: float, tau_prev: float, params: AdaptiveParams) -> float:
    """Energy-variation step rule: small steps while energy moves fast, capped ratio growth."""
    if not tau_prev > 0:
        raise ValueError(f"previous step must be positive, got {tau_prev}")
    target = params.tau_max / math.sqrt(1.0 + params.alpha * energy_rate**2)
    tau = min(max(params.tau_min, target), params.gamma_max * tau_prev)
    # rounding in gamma_max * tau_prev must not push the realized ratio past gamma_max
    while tau / tau_prev > params.gamma_max:
        tau = math.nextafter(tau, 0.0)
    return tau


def energy_rate_estimate(E_curr: float, E_prev: float, tau_curr: float) -> float:
    if not tau_curr > 0:
        raise ValueError(f"step must be positive, got {tau_curr}")
    return (E_curr - E_prev) / tau_curr


def write_mesh(path, steps) -> None:
    """CSV with columns ``n,t_n,tau_n,gamma_n`` (row 0 is the initial node)."""
    steps = np.asarray(steps, dtype=float)
    t = np.concatenate([[0.0], np.cumsum(steps)])
    lines = ["n,t_n,tau_n,gamma_n", f"0,{0.0:.17g},,"]
    for n in range(1, steps.size + 1):
        gamma = f"{steps[n - 1] / steps[n - 2]:.17g}" if n >= 2 else ""
        lines.append(f"{n},{t[n]:.17g},{steps[n - 1]:.17g},{gamma}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class StepPlan:
    """``uniform`` / ``perturbed`` meshes are fixed up front; ``adaptive`` is built while stepping."""

    mode: str
    horizon: float
    N: int = 0
    seed: int = 0
    amplitude: float = 0.25
    adaptive: AdaptiveParams | None = None

    def __post_init__(self):
        if self.mode not in ("uniform", "perturbed", "adaptive"):
            raise ValueError(f"unknown time mode {self.mode!r}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.mode == "adaptive" and self.adaptive is None:
            raise ValueError("adaptive plan needs AdaptiveParams")

    def steps(self) -> np.ndarray:
        if self.mode == "uniform":
            return uniform_mesh(self.N, self.horizon)
        if self.mode == "perturbed":
            return perturbed_mesh(self.N, self.horizon, self.seed, self.amplitude)
        raise ValueError("adaptive plans have no precomputed steps")
