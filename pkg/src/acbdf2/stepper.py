"""Linear BDF1 / predictor-corrector BDF2 steps and the bound-preserving step caps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import sup_norm
from .linsolve import DEFAULT_TOL, LinearOperator, solve
from .model import Problem, reaction, stabilizer_bound

RATIO_LIMIT = 1.0 + math.sqrt(2.0)


class ConstraintViolation(ValueError):
    """A step, ratio or parameter falls outside the bound-preserving window."""


@dataclass(frozen=True)
class Bdf2Coeffs:
    b0: float
    b1: float
    gamma: float
    tau_next: float


def bdf2_coeffs(tau_prev: float, tau_next: float) -> Bdf2Coeffs:
    """Variable-step BDF2 weights: ``F2 phi = b0 (phi^{n+1} - phi^n) + b1 (phi^n - phi^{n-1})``."""
    if not (tau_prev > 0 and tau_next > 0):
        raise ValueError(f"step sizes must be positive, got {tau_prev}, {tau_next}")
    g = tau_next / tau_prev
    b0 = (1.0 + 2.0 * g) / (tau_next * (1.0 + g))
    b1 = -g * g / (tau_next * (1.0 + g))
    return Bdf2Coeffs(b0, b1, g, tau_next)


def eta_window_low(gamma: float) -> float:
    return gamma * gamma / (1.0 + 2.0 * gamma)


def recombined_kernels(coeffs: Bdf2Coeffs, eta: float, n: int) -> np.ndarray:
    """Kernels ``d_0..d_{n+1}`` of BDF2 rewritten in ``psi^k = phi^k - eta phi^{k-1}``.

    ``d_0 = b0`` and ``d_k = eta^{k-1} (b0 eta + b1)``; they are nonnegative and
    nonincreasing exactly when ``gamma^2/(1+2 gamma) <= eta < 1``.
    """
    low = eta_window_low(coeffs.gamma)
    if not eta < 1.0 or eta < low * (1.0 - 1e-12):
        raise ConstraintViolation(
            f"eta={eta} outside [{low}, 1) required for step ratio gamma={coeffs.gamma}"
        )
    d1 = max(coeffs.b0 * eta + coeffs.b1, 0.0)
    d = np.empty(n + 2)
    d[0] = coeffs.b0
    d[1:] = d1 * eta ** np.arange(n + 1)
    return d


def _check_gamma_star(gamma_star: float) -> None:
    if not 0.0 < gamma_star < RATIO_LIMIT:
        raise ValueError(f"ratio cap must lie in (0, 1+sqrt(2)), got {gamma_star}")


def optimal_eta(gamma_star: float) -> float:
    """Recombination weight maximizing the admissible step: ``2 g^2 / (1+g)^2``."""
    _check_gamma_star(gamma_star)
    return 2.0 * gamma_star**2 / (1.0 + gamma_star) ** 2


def step_factor(s: float, z: float) -> float:
    """``(1-z)((1+2s)z - s^2) / (z^2 (1+s))``: step-size numerator for ratio ``s``, weight ``z``."""
    if not s > 0:
        raise ValueError(f"ratio must be positive, got {s}")
    if not 0.0 < z < 1.0 or z < eta_window_low(s) * (1.0 - 1e-12):
        raise ValueError(f"weight {z} outside [{eta_window_low(s)}, 1) for ratio {s}")
    return (1.0 - z) * ((1.0 + 2.0 * s) * z - s * s) / (z * z * (1.0 + s))


def max_step_factor(gamma_star: float) -> float:
    """Closed form of ``step_factor(gamma_star, optimal_eta(gamma_star))``."""
    _check_gamma_star(gamma_star)
    g = gamma_star
    return (1.0 + 2.0 * g - g * g) ** 2 / (4.0 * g * g * (1.0 + g))


def max_stable_step(gamma_star: float, problem: Problem, eta: float | None = None) -> float:
    """Largest ``tau_{n+1}`` (n >= 1) for which the BDF2 iterate stays in [-1, 1]."""
    factor = max_step_factor(gamma_star) if eta is None else step_factor(gamma_star, eta)
    return factor / problem.stiffness


def first_step_cap(gamma_star: float, problem: Problem, eta: float | None = None) -> float:
    """Largest ``tau_1`` compatible with the recombined bound ``||psi^1|| <= 1 - eta``."""
    eta = optimal_eta(gamma_star) if eta is None else eta
    return (1.0 - eta) / (eta * problem.stiffness)


@dataclass(frozen=True)
class KernelParams:
    gamma_star: float
    eta: float

    def __post_init__(self):
        if not 1.0 <= self.gamma_star < RATIO_LIMIT:
            raise ConstraintViolation(f"ratio cap gamma*={self.gamma_star} outside [1, 1+sqrt(2))")
        low = eta_window_low(self.gamma_star)
        if not (low * (1.0 - 1e-12) <= self.eta < 1.0):
            raise ConstraintViolation(f"eta={self.eta} outside [{low}, 1) for gamma*={self.gamma_star}")

    @classmethod
    def default(cls, gamma_star: float) -> "KernelParams":
        return cls(gamma_star, optimal_eta(gamma_star))


def check_guaranteed(steps, problem: Problem, params: KernelParams, phi0=None, rtol: float = 1e-12) -> None:
    """Raise :class:`ConstraintViolation` naming the first violated bound-preserving hypothesis."""
    bound = stabilizer_bound(problem.mobility)
    if problem.stabilizer < bound * (1.0 - rtol):
        raise ConstraintViolation(
            f"stabilizer bound violated: S={problem.stabilizer} < max(M'F' + MF'') = {bound}"
        )
    if phi0 is not None and sup_norm(phi0) > 1.0:
        raise ConstraintViolation(f"initial data violates ||phi0||_inf <= 1 (got {sup_norm(phi0)})")
    steps = np.asarray(steps, dtype=float)
    if steps.size == 0:
        return
    cap1 = first_step_cap(params.gamma_star, problem, params.eta)
    if steps[0] > cap1 * (1.0 + rtol):
        raise ConstraintViolation(
            f"first-step cap violated: tau_1={steps[0]:.6g} > (1-eta)/(eta(S+4L eps^2/h^2)) = {cap1:.6g}"
        )
    cap = max_stable_step(params.gamma_star, problem, params.eta)
    for n in range(1, steps.size):
        if steps[n] > cap * (1.0 + rtol):
            raise ConstraintViolation(
                f"step-size cap violated at step {n + 1}: tau={steps[n]:.6g} > "
                f"g(gamma*, eta)/(S+4L eps^2/h^2) = {cap:.6g}"
            )
        ratio = steps[n] / steps[n - 1]
        if ratio > params.gamma_star * (1.0 + rtol):
            raise ConstraintViolation(
                f"step-ratio window violated at step {n + 1}: gamma={ratio:.6g} > gamma*={params.gamma_star}"
            )


def bdf1_step(phi: np.ndarray, tau: float, problem: Problem, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Stabilized backward Euler with mobility and reaction frozen at ``phi``."""
    if not tau > 0:
        raise ValueError(f"step size must be positive, got {tau}")
    grid = problem.grid
    phi = grid.check(phi)
    S = problem.stabilizer
    op = LinearOperator(1.0 / tau + S, problem.epsilon**2, problem.mobility(phi), grid)
    rhs = phi / tau + S * phi - reaction(phi, problem.mobility)
    out, _ = solve(op, rhs, tol=tol, x0=phi)
    return out


def bdf2_step(
    phi_curr: np.ndarray,
    phi_prev: np.ndarray,
    tau_next: float,
    tau_curr: float,
    problem: Problem,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """One predictor-corrector step; returns ``(phi_next, predictor)``.

    The predictor is a BDF1 step of size ``tau_next``; the corrector freezes
    mobility and reaction at the predictor and applies the variable-step BDF2
    difference.
    """
    star = bdf1_step(phi_curr, tau_next, problem, tol)
    out = corrector_step(phi_curr, phi_prev, star, bdf2_coeffs(tau_curr, tau_next), problem, tol)
    return out, star


def corrector_step(phi_curr, phi_prev, star, coeffs: Bdf2Coeffs, problem: Problem, tol: float = DEFAULT_TOL):
    """Solve ``((b0+S) I - eps^2 M(star) D_h) phi = b0 phi^n - b1 (phi^n - phi^{n-1}) + S star - f(star)``."""
    grid = problem.grid
    phi_curr = grid.check(phi_curr)
    phi_prev = grid.check(phi_prev)
    star = grid.check(star)
    S = problem.stabilizer
    op = LinearOperator(coeffs.b0 + S, problem.epsilon**2, problem.mobility(star), grid)
    rhs = coeffs.b0 * phi_curr - coeffs.b1 * (phi_curr - phi_prev) + S * star - reaction(star, problem.mobility)
    out, _ = solve(op, rhs, tol=tol, x0=star)
    return out


@dataclass(frozen=True)
class SolverState:
    phi_curr: np.ndarray
    phi_prev: np.ndarray | None = None
    tau_curr: float = 0.0
    time_now: float = 0.0
    step_index: int = 0

    def __post_init__(self):
        if self.phi_prev is None and self.step_index > 0:
            raise ValueError("state past the first step needs the previous iterate")


def advance(state: SolverState, tau: float, problem: Problem, tol: float = DEFAULT_TOL) -> SolverState:
    """Take one step: BDF1 from the initial state, BDF2 afterwards."""
    if state.step_index == 0:
        new = bdf1_step(state.phi_curr, tau, problem, tol)
    else:
        new, _ = bdf2_step(state.phi_curr, state.phi_prev, tau, state.tau_curr, problem, tol)
    return replace(
        state,
        phi_curr=new,
        phi_prev=state.phi_curr,
        tau_curr=tau,
        time_now=state.time_now + tau,
        step_index=state.step_index + 1,
    )
