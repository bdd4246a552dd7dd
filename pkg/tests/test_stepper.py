import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acbdf2.controller import perturbed_mesh
from acbdf2.experiments import simulate
from acbdf2.grid import Grid
from acbdf2.model import Mobility, Problem
from acbdf2.stepper import (
    RATIO_LIMIT,
    Bdf2Coeffs,
    ConstraintViolation,
    KernelParams,
    SolverState,
    advance,
    bdf1_step,
    bdf2_coeffs,
    bdf2_step,
    check_guaranteed,
    corrector_step,
    eta_window_low,
    first_step_cap,
    max_step_factor,
    max_stable_step,
    optimal_eta,
    recombined_kernels,
    step_factor,
)

from conftest import dense_bdf1, dense_bdf2, scalar_run


def smooth_field(grid):
    return grid.sample(lambda x, y: 0.1 * (np.cos(3 * x) * np.cos(2 * y) + np.cos(5 * x) * np.cos(5 * y)))


def test_bdf2_coeff_examples():
    c = bdf2_coeffs(0.1, 0.1)
    assert c.b0 == pytest.approx(15.0) and c.b1 == pytest.approx(-5.0) and c.gamma == 1.0
    c = bdf2_coeffs(0.1, 0.2)
    assert c.b0 == pytest.approx(5 / 0.6) and c.b1 == pytest.approx(-4 / 0.6)
    c = bdf2_coeffs(1e9, 0.1)
    assert c.b0 == pytest.approx(10.0) and abs(c.b1) < 1e-15
    with pytest.raises(ValueError):
        bdf2_coeffs(0.0, 0.1)


@given(st.floats(1e-3, 10.0), st.floats(1e-3, 10.0))
def test_bdf2_coeff_signs(tp, tn):
    c = bdf2_coeffs(tp, tn)
    assert c.b0 > 0 > c.b1


@given(
    st.floats(0.05, 1.0),
    st.floats(0.05, 2.4),
    st.floats(0.05, 2.4),
    st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3)),
)
def test_bdf2_exact_on_quadratics(tau_prev, g, t0, coef):
    tau_next = g * tau_prev
    a, b, c = coef
    p = lambda t: a + b * t + c * t * t
    t_prev, t_curr = t0, t0 + tau_prev
    t_next = t_curr + tau_next
    k = bdf2_coeffs(tau_prev, tau_next)
    approx = k.b0 * (p(t_next) - p(t_curr)) + k.b1 * (p(t_curr) - p(t_prev))
    exact = b + 2 * c * t_next
    assert approx == pytest.approx(exact, abs=1e-9 * (1 + abs(a) + abs(b) + abs(c)) / tau_next)


def test_kernel_example():
    d = recombined_kernels(bdf2_coeffs(1.0, 1.0), 0.5, 2)
    np.testing.assert_allclose(d, [1.5, 0.25, 0.125, 0.0625], rtol=1e-15)


def test_kernel_window_edge_and_violation():
    c = bdf2_coeffs(1.0, 1.5)
    d = recombined_kernels(c, eta_window_low(1.5), 5)
    assert d[0] == c.b0
    assert np.all(d[1:] == 0.0)
    with pytest.raises(ConstraintViolation, match="gamma=1.5"):
        recombined_kernels(c, 0.5 * eta_window_low(1.5), 3)
    with pytest.raises(ConstraintViolation):
        recombined_kernels(c, 1.0, 3)


def test_kernels_positive_nonincreasing_random():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        gamma = rng.uniform(0.01, RATIO_LIMIT - 1e-6)
        low = eta_window_low(gamma)
        if low >= 1.0:
            continue
        eta = rng.uniform(low, 1.0)
        c = bdf2_coeffs(1.0, gamma)
        n = int(rng.integers(0, 30))
        d = recombined_kernels(c, eta, n)
        direct = [c.b0] + [eta ** (k - 1) * (c.b0 * eta + c.b1) for k in range(1, n + 2)]
        np.testing.assert_allclose(d, direct, rtol=1e-12, atol=1e-14)
        assert np.all(d >= 0) and np.all(np.diff(d) <= 1e-14 * d[0])
        np.testing.assert_allclose(d[2:], eta * d[1:-1], rtol=1e-12, atol=1e-15)


@given(st.integers(1, 10), st.floats(0.3, 2.4), st.integers(0, 2**32 - 1))
def test_kernel_telescoping(n, gamma, seed):
    low = eta_window_low(gamma)
    if low >= 0.999:
        return
    rng = np.random.default_rng(seed)
    eta = rng.uniform(low, 1.0)
    c = bdf2_coeffs(1.0, gamma)
    d = recombined_kernels(c, eta, n)
    dphi = np.concatenate([[0.0], rng.standard_normal(n + 1)])  # dphi[k] = phi^k - phi^{k-1}, k >= 1
    dpsi = [dphi[k] - eta * dphi[k - 1] for k in range(1, n + 2)]
    lhs = sum(d[n + 1 - k] * dpsi[k - 1] for k in range(1, n + 2))
    rhs = c.b0 * dphi[n + 1] + c.b1 * dphi[n]
    scale = sum(abs(d[n + 1 - k] * dpsi[k - 1]) for k in range(1, n + 2)) + 1.0
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_cap_constants():
    assert max_step_factor(1.0) == pytest.approx(0.5, abs=1e-14)
    assert max_step_factor(2.0) == pytest.approx(1 / 48, abs=1e-14)
    assert max_step_factor(1.5) == pytest.approx(1.75**2 / 22.5, rel=1e-14)
    assert optimal_eta(1.0) == 0.5
    assert optimal_eta(2.0) == pytest.approx(8 / 9, rel=1e-15)
    for g in (0.5, 1.0, 1.3, 2.0, 2.4):
        assert max_step_factor(g) == pytest.approx(step_factor(g, optimal_eta(g)), rel=1e-12)
    with pytest.raises(ValueError):
        max_step_factor(RATIO_LIMIT)
    with pytest.raises(ValueError):
        step_factor(1.0, 0.2)


def test_optimal_eta_maximizes_step_factor():
    for g in (1.0, 1.5, 2.0):
        zs = np.linspace(eta_window_low(g), 1 - 1e-9, 20001)
        vals = [step_factor(g, z) for z in zs]
        assert max(vals) <= max_step_factor(g) * (1 + 1e-12)


def test_step_caps_example():
    p = Problem(Grid(512), 0.01, Mobility.constant(), 2.0)
    cap = max_stable_step(1.0, p)
    assert cap == pytest.approx(0.5 / (2 + 4e-4 * 512**2), rel=1e-14)
    assert cap == pytest.approx(4.679e-3, rel=1e-3)
    assert first_step_cap(1.0, p) == pytest.approx(2 * cap, rel=1e-14)
    pd = Problem(Grid(512), 0.01, Mobility.degenerate(), 2.0)
    assert max_stable_step(1.0, pd) == pytest.approx(cap, rel=1e-14)


def test_kernel_params_validation():
    assert KernelParams.default(1.5).eta == optimal_eta(1.5)
    with pytest.raises(ConstraintViolation):
        KernelParams(0.9, 0.5)
    with pytest.raises(ConstraintViolation):
        KernelParams(2.0, 0.5)
    with pytest.raises(ConstraintViolation):
        KernelParams(RATIO_LIMIT, 0.9)


def test_check_guaranteed_messages():
    g = Grid(16)
    p = Problem(g, 0.1, Mobility.constant(), 2.0)
    params = KernelParams.default(1.5)
    cap1 = first_step_cap(1.5, p)
    cap = max_stable_step(1.5, p)
    check_guaranteed([cap1, cap, cap], p, params, np.zeros((16, 16)))
    with pytest.raises(ConstraintViolation, match="stabilizer bound"):
        check_guaranteed([cap1], Problem(g, 0.1, Mobility.constant(), 1.0), params)
    with pytest.raises(ConstraintViolation, match="initial data"):
        check_guaranteed([cap1], p, params, np.full((16, 16), 1.01))
    with pytest.raises(ConstraintViolation, match="first-step cap"):
        check_guaranteed([1.01 * cap1], p, params)
    with pytest.raises(ConstraintViolation, match="step-size cap"):
        check_guaranteed([cap1, 1.01 * cap], p, params)
    with pytest.raises(ConstraintViolation, match="step-ratio window"):
        check_guaranteed([cap1, cap / 2, cap], p, params)


@pytest.mark.parametrize("c", [0.0, 1.0, -1.0])
def test_fixed_points(c):
    g = Grid(8)
    p = Problem(g, 0.05)
    u = np.full((8, 8), c)
    np.testing.assert_array_equal(bdf1_step(u, 0.1, p), u)
    out, star = bdf2_step(u, u, 0.1, 0.1, p)
    assert np.max(np.abs(out - c)) <= 1e-15 and np.max(np.abs(star - c)) <= 1e-15


@pytest.mark.parametrize("mob", [Mobility.constant(), Mobility.degenerate()])
def test_constant_fields_follow_scalar_recurrence(mob):
    g = Grid(8)
    p = Problem(g, 0.05, mob, 2.0)
    steps = perturbed_mesh(100, 5.0, seed=3)
    fields = []
    simulate(p, np.full((8, 8), 0.3), steps, observer=lambda s: fields.append(s.phi_curr))
    oracle = scalar_run(0.3, steps, p)
    assert len(fields) == 101
    assert max(np.max(np.abs(f - c)) for f, c in zip(fields, oracle)) <= 1e-11


@pytest.mark.parametrize("mob", [Mobility.constant(), Mobility.degenerate()])
def test_steps_match_dense_solve(mob):
    g = Grid(6)
    p = Problem(g, 0.1, mob, 2.0)
    phi0 = smooth_field(g) * 5
    phi1 = bdf1_step(phi0, 0.05, p)
    assert np.max(np.abs(phi1 - dense_bdf1(phi0, 0.05, p))) <= 1e-10
    out, star = bdf2_step(phi1, phi0, 0.07, 0.05, p)
    ref, ref_star = dense_bdf2(phi1, phi0, 0.07, 0.05, p)
    assert np.max(np.abs(star - ref_star)) <= 1e-10
    assert np.max(np.abs(out - ref)) <= 1e-10


def test_corrector_degenerates_to_bdf1():
    g = Grid(12)
    p = Problem(g, 0.05, Mobility.degenerate(), 2.0)
    phi = smooth_field(g) * 8
    tau = 0.03
    coeffs = Bdf2Coeffs(1 / tau, 0.0, 0.0, tau)
    out = corrector_step(phi, np.zeros_like(phi), phi, coeffs, p)
    assert np.max(np.abs(out - bdf1_step(phi, tau, p))) <= 1e-14


def test_advance_and_state():
    g = Grid(8)
    p = Problem(g, 0.1)
    phi0 = smooth_field(g)
    s = advance(SolverState(phi0), 0.1, p)
    assert s.step_index == 1 and s.tau_curr == 0.1 and s.phi_prev is phi0
    np.testing.assert_array_equal(s.phi_curr, bdf1_step(phi0, 0.1, p))
    s2 = advance(s, 0.15, p)
    np.testing.assert_array_equal(s2.phi_curr, bdf2_step(s.phi_curr, phi0, 0.15, 0.1, p)[0])
    assert s2.time_now == pytest.approx(0.25)
    with pytest.raises(ValueError):
        SolverState(phi0, None, 0.1, 0.1, 1)
    with pytest.raises(ValueError):
        bdf1_step(phi0, 0.0, p)
