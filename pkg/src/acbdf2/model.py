"""Allen-Cahn physics: double-well potential, mobility, stabilizer and energies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid


def potential(phi):
    """Double well ``F = (1 - phi^2)^2 / 4``."""
    return 0.25 * (1.0 - phi * phi) ** 2


def potential_prime(phi):
    return phi * phi * phi - phi


@dataclass(frozen=True)
class Mobility:
    """``constant`` (M = value) or ``degenerate`` (M = 1 - phi^2, clamped at 0)."""

    kind: str = "constant"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "degenerate"):
            raise ValueError(f"unknown mobility kind {self.kind!r}")
        if self.kind == "constant" and not self.value > 0:
            raise ValueError(f"constant mobility must be positive, got {self.value}")

    @classmethod
    def constant(cls, value: float = 1.0) -> "Mobility":
        return cls("constant", float(value))

    @classmethod
    def degenerate(cls) -> "Mobility":
        return cls("degenerate", 1.0)

    def __call__(self, phi):
        if self.kind == "constant":
            return np.full_like(np.asarray(phi, dtype=float), self.value)
        return np.maximum(1.0 - np.asarray(phi, dtype=float) ** 2, 0.0)

    @property
    def max_value(self) -> float:
        """max of M over [-1, 1]."""
        return self.value if self.kind == "constant" else 1.0


def reaction(phi, mobility: Mobility):
    """``f(phi) = M(phi) F'(phi)``."""
    return mobility(phi) * potential_prime(phi)


def stabilizer_bound(mobility: Mobility) -> float:
    """max over [-1, 1] of ``M'F' + M F''``, the smallest stabilizer keeping ``S*rho - f`` monotone."""
    if mobility.kind == "constant":
        # F'' = 3 rho^2 - 1 peaks at rho = +-1
        return 2.0 * mobility.value
    # -5 rho^4 + 6 rho^2 - 1, maximal at rho^2 = 3/5
    r2 = 0.6
    return -5.0 * r2 * r2 + 6.0 * r2 - 1.0


@dataclass(frozen=True)
class Problem:
    grid: Grid
    epsilon: float
    mobility: Mobility = Mobility()
    stabilizer: float = 2.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.stabilizer < 0:
            raise ValueError(f"stabilizer must be nonnegative, got {self.stabilizer}")

    @property
    def stiffness(self) -> float:
        """``S + 4 L eps^2 / h^2``, the denominator of the MBP step caps."""
        h = self.grid.spacing
        return self.stabilizer + 4.0 * self.mobility.max_value * self.epsilon**2 / h**2

    def satisfies_stabilizer_bound(self) -> bool:
        return self.stabilizer >= stabilizer_bound(self.mobility) - 1e-14


def discrete_energy(phi: np.ndarray, problem: Problem) -> float:
    grid = problem.grid
    phi = grid.check(phi)
    return 0.5 * problem.epsilon**2 * grid.grad_norm_sq(phi) + grid.spacing**2 * float(np.sum(potential(phi)))


def modified_energy(phi_curr, phi_prev, tau_curr: float, gamma_next: float, problem: Problem) -> float:
    """Discrete energy plus the step-history term ``w ||phi_curr - phi_prev||^2 / (2 tau)``,
    with ``w = gamma_next^{3/2} / (1 + gamma_next)``."""
    if not tau_curr > 0 or not gamma_next > 0:
        raise ValueError(f"tau and gamma must be positive, got tau={tau_curr}, gamma={gamma_next}")
    grid = problem.grid
    diff = grid.check(phi_curr) - grid.check(phi_prev)
    weight = gamma_next**1.5 / (1.0 + gamma_next)
    return discrete_energy(phi_curr, problem) + weight * grid.inner(diff, diff) / (2.0 * tau_curr)
