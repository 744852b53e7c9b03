"""Symplectic one-step methods on T*Q from the theta family."""

import numpy as np
import pytest

from geomint.errors import DimensionMismatchError
from geomint.retractions import theta_map
from geomint.solvers import SolverConfig, newton_solve
from geomint.symplectic import (
    CanonicalState,
    HamiltonianModel,
    LagrangianModel,
    hamiltonian_step,
    harmonic_oscillator,
    lagrangian_step,
)
from geomint.verify import seeded_states, symplectic_residual

OSC = harmonic_oscillator(1)


def test_theta_zero_oscillator_closed_form():
    # symplectic Euler: p1 = p0 - h q0, q1 = q0 + h p1
    out, info = hamiltonian_step(OSC, CanonicalState([1.0], [0.0]), 0.1, theta_map(0.0, 1))
    np.testing.assert_allclose(out.q, [0.99], atol=1e-14)
    np.testing.assert_allclose(out.p, [-0.1], atol=1e-14)
    assert info.residual <= 1e-12


def test_theta_half_oscillator_closed_form():
    out, _ = hamiltonian_step(OSC, CanonicalState([1.0], [0.0]), 0.1, theta_map(0.5, 1))
    np.testing.assert_allclose(out.q, [0.9975 / 1.0025], atol=1e-14)
    np.testing.assert_allclose(out.p, [-0.1 / 1.0025], atol=1e-14)


def test_zero_step_is_identity():
    state = CanonicalState([0.3, -0.4], [0.1, 0.9])
    for theta in (0.0, 0.5, 1.0):
        out, _ = hamiltonian_step(harmonic_oscillator(2), state, 0.0, theta_map(theta, 2))
        np.testing.assert_allclose(out.q, state.q, atol=1e-14)
        np.testing.assert_allclose(out.p, state.p, atol=1e-14)


def _implicit_midpoint_oracle(model, q, p, h):
    # z1 = z0 + h J grad H((z0 + z1)/2), solved by Newton
    n = model.dim
    z0 = np.concatenate([q, p])

    def residual(z1):
        mid = 0.5 * (z0 + z1)
        rhs = np.concatenate([model.grad_p(mid[:n], mid[n:]),
                              -model.grad_q(mid[:n], mid[n:])])
        return z1 - z0 - h * rhs

    return newton_solve(residual, z0, SolverConfig(tol=1e-14)).x


def test_theta_half_equals_implicit_midpoint_quadratic():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    S = A @ A.T + np.eye(4)  # positive definite quadratic form on (q, p)

    model = HamiltonianModel(
        dim=2,
        h=lambda q, p: 0.5 * float(np.concatenate([q, p]) @ S @ np.concatenate([q, p])),
        grad_q=lambda q, p: (S @ np.concatenate([q, p]))[:2],
        grad_p=lambda q, p: (S @ np.concatenate([q, p]))[2:],
    )
    m = theta_map(0.5, 2)
    for _ in range(5):
        q, p = rng.standard_normal(2), rng.standard_normal(2)
        out, _ = hamiltonian_step(model, CanonicalState(q, p), 0.05, m)
        oracle = _implicit_midpoint_oracle(model, q, p, 0.05)
        np.testing.assert_allclose(np.concatenate([out.q, out.p]), oracle, atol=1e-12)


@pytest.mark.parametrize("theta", [0.0, 0.25, 0.5, 1.0])
def test_symplecticity_residual(theta):
    model = harmonic_oscillator(2)
    m = theta_map(theta, 2)

    def step(z):
        out, _ = hamiltonian_step(model, CanonicalState(z[:2], z[2:]), 0.1, m)
        return np.concatenate([out.q, out.p])

    report = symplectic_residual(step, seeded_states(42, 20, 4), 0.1)
    assert report.passed, report.max_residual


def test_symplecticity_nonquadratic():
    model = HamiltonianModel(
        dim=1,
        h=lambda q, p: 0.5 * float(p @ p) + 0.25 * float(q @ q) ** 2,
        grad_q=lambda q, p: (q @ q) * q,
        grad_p=lambda q, p: np.asarray(p, dtype=float),
        name="quartic",
    )
    m = theta_map(0.3, 1)

    def step(z):
        out, _ = hamiltonian_step(model, CanonicalState(z[:1], z[1:]), 0.05, m)
        return np.concatenate([out.q, out.p])

    report = symplectic_residual(step, seeded_states(1, 10, 2), 0.05)
    assert report.passed, report.max_residual


# -- Lagrangian side -----------------------------------------------------------


def free_particle(n=1):
    return LagrangianModel(
        dim=n,
        lag=lambda q, v: 0.5 * float(v @ v),
        grad_q=lambda q, v: np.zeros(n),
        grad_v=lambda q, v: np.asarray(v, dtype=float),
        fiber_hessian=lambda q, v: np.eye(n),
    )


def oscillator_lagrangian(n=1):
    return LagrangianModel(
        dim=n,
        lag=lambda q, v: 0.5 * float(v @ v) - 0.5 * float(q @ q),
        grad_q=lambda q, v: -np.asarray(q, dtype=float),
        grad_v=lambda q, v: np.asarray(v, dtype=float),
        fiber_hessian=lambda q, v: np.eye(n),
    )


def test_legendre_identity_free_particle():
    model = free_particle(2)
    v = np.array([0.4, -0.7])
    np.testing.assert_array_equal(model.legendre(np.zeros(2), v), v)


def test_lagrangian_matches_hamiltonian_through_legendre():
    lmodel = oscillator_lagrangian(1)
    (q1, v1), _ = lagrangian_step(lmodel, (np.array([1.0]), np.array([0.0])), 0.1,
                                  theta_map(0.0, 1))
    out, _ = hamiltonian_step(OSC, CanonicalState([1.0], [0.0]), 0.1, theta_map(0.0, 1))
    np.testing.assert_allclose(q1, out.q, atol=1e-12)
    np.testing.assert_allclose(lmodel.legendre(q1, v1), out.p, atol=1e-12)


@pytest.mark.parametrize("theta", [0.0, 0.5, 0.8])
def test_legendre_equivalence_general_quadratic(theta):
    # hyperregular L with mass matrix M: H = p M^-1 p / 2 + V(q)
    M = np.array([[2.0, 0.3], [0.3, 1.0]])
    Minv = np.linalg.inv(M)
    K = np.array([[1.0, -0.2], [-0.2, 0.5]])
    lmodel = LagrangianModel(
        dim=2,
        lag=lambda q, v: 0.5 * float(v @ M @ v) - 0.5 * float(q @ K @ q),
        grad_q=lambda q, v: -(K @ q),
        grad_v=lambda q, v: M @ v,
        fiber_hessian=lambda q, v: M,
    )
    hmodel = HamiltonianModel(
        dim=2,
        h=lambda q, p: 0.5 * float(p @ Minv @ p) + 0.5 * float(q @ K @ q),
        grad_q=lambda q, p: K @ q,
        grad_p=lambda q, p: Minv @ p,
    )
    rng = np.random.default_rng(2)
    m = theta_map(theta, 2)
    for _ in range(5):
        q, v = rng.standard_normal(2), rng.standard_normal(2)
        (q1, v1), _ = lagrangian_step(lmodel, (q, v), 0.08, m)
        out, _ = hamiltonian_step(hmodel, CanonicalState(q, M @ v), 0.08, m)
        np.testing.assert_allclose(q1, out.q, atol=1e-10)
        np.testing.assert_allclose(M @ v1, out.p, atol=1e-10)


def test_lagrangian_small_step_consistency():
    lmodel = oscillator_lagrangian(1)
    h = 1e-4
    (q1, v1), _ = lagrangian_step(lmodel, (np.array([1.0]), np.array([0.5])), h,
                                  theta_map(0.5, 1))
    assert abs(q1[0] - 1.0) < 1e-3
    assert abs(v1[0] - 0.5) < 1e-3


def test_gradient_validation_rejects_wrong_gradient():
    with pytest.raises(DimensionMismatchError):
        HamiltonianModel(dim=1, h=lambda q, p: 0.5 * float(q @ q + p @ p),
                         grad_q=lambda q, p: 2.0 * np.asarray(q, dtype=float),
                         grad_p=lambda q, p: np.asarray(p, dtype=float))
