import hypothesis
import numpy as np
import pytest

from acbdf2.grid import Grid

hypothesis.settings.register_profile("default", deadline=None, max_examples=100)
hypothesis.settings.load_profile("default")

ACCEPTANCE = []


def dense_laplacian(m, h):
    """Neumann Laplacian assembled as I (x) G + G (x) I, x index fastest."""
    G = np.diag(-2.0 * np.ones(m)) + np.diag(np.ones(m - 1), 1) + np.diag(np.ones(m - 1), -1)
    G[0, 0] = G[-1, -1] = -1.0
    G /= h * h
    eye = np.eye(m)
    return np.kron(eye, G) + np.kron(G, eye)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_grid():
    return Grid(8, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def dense_system(a, epsilon, lam, grid):
    D = dense_laplacian(grid.m, grid.spacing)
    return a * np.eye(grid.m**2) - epsilon**2 * np.diag(lam.ravel()) @ D


def dense_bdf1(phi, tau, problem):
    from acbdf2.model import reaction

    A = dense_system(1 / tau + problem.stabilizer, problem.epsilon, problem.mobility(phi), problem.grid)
    rhs = phi / tau + problem.stabilizer * phi - reaction(phi, problem.mobility)
    return np.linalg.solve(A, rhs.ravel()).reshape(phi.shape)


def dense_bdf2(phi_curr, phi_prev, tau_next, tau_curr, problem):
    from acbdf2.model import reaction

    g = tau_next / tau_curr
    b0 = (1 + 2 * g) / (tau_next * (1 + g))
    b1 = -g * g / (tau_next * (1 + g))
    star = dense_bdf1(phi_curr, tau_next, problem)
    S = problem.stabilizer
    A = dense_system(b0 + S, problem.epsilon, problem.mobility(star), problem.grid)
    rhs = b0 * phi_curr - b1 * (phi_curr - phi_prev) + S * star - reaction(star, problem.mobility)
    return np.linalg.solve(A, rhs.ravel()).reshape(phi_curr.shape), star


def scalar_run(c0, steps, problem):
    """Two-step recurrence for spatially constant data (the Laplacian drops out)."""
    from acbdf2.model import reaction

    S = problem.stabilizer
    mob = problem.mobility

    def bdf1(u, tau):
        return (u / tau + S * u - reaction(u, mob)) / (1 / tau + S)

    values = [c0, bdf1(c0, steps[0])]
    for n in range(1, len(steps)):
        g = steps[n] / steps[n - 1]
        b0 = (1 + 2 * g) / (steps[n] * (1 + g))
        b1 = -g * g / (steps[n] * (1 + g))
        u, v = values[-1], values[-2]
        star = bdf1(u, steps[n])
        values.append((b0 * u - b1 * (u - v) + S * star - reaction(star, mob)) / (b0 + S))
    return values
