"""Poisson integrators on Q x h* for right action groupoids.

The discretization map (q, xi) -> (q, tau(xi)) turns the Lie-Poisson scheme
into the coupled update

    mu_k    = J(h dH/dq(q_k, mu_bar)) + dtau_inv_right(h dH/dmu)^T mu_bar
    q_{k+1} = act(q_k, tau(h dH/dmu))
    mu_{k+1}= dtau_inv_left(h dH/dmu)^T mu_bar

where J is the momentum map of the action, <J(p), eta> = <p, eta_Q(q)>.
The Lagrangian scheme solves for xi with the -J sign.  The induced linear
Poisson tensor on Q x h* has blocks {q, q} = 0, {q^j, mu_i} = -rho^j_i(q),
{mu_i, mu_j} = C^k_ij mu_k, with rho the infinitesimal-generator matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _fd
from .algebra import LieAlgebra, so3
from .errors import ConvergenceError, DimensionMismatchError, ParameterError
from .retractions import RetractionMap, exp_retraction
from .solvers import DEFAULT_SOLVER, SolverConfig, StepInfo, newton_solve


@dataclass(frozen=True, eq=False)
class ActionModel:
    """A right action of a matrix group on Q in R^m plus H(q, mu) and/or L(q, xi)."""

    ambient_dim: int
    algebra: LieAlgebra
    act: Callable[[np.ndarray, np.ndarray], np.ndarray]
    generators: Callable[[np.ndarray], np.ndarray]
    hamiltonian: Callable[[np.ndarray, np.ndarray], float] | None = None
    grad_q_h: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    grad_mu_h: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    lagrangian: Callable[[np.ndarray, np.ndarray], float] | None = None
    grad_q_l: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    grad_xi_l: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = "action-model"

    def __post_init__(self):
        m, r = self.ambient_dim, self.algebra.dim

        def fd_grad(fun, argindex, dim):
            def grad(a, b):
                args = [np.asarray(a, dtype=float), np.asarray(b, dtype=float)]
                z = args[argindex]
                h = _fd.fd_step(z, 1e-6)
                out = np.empty(dim)
                for i in range(dim):
                    e = np.zeros(dim)
                    e[i] = h
                    up = list(args)
                    up[argindex] = z + e
                    dn = list(args)
                    dn[argindex] = z - e
                    out[i] = (fun(*up) - fun(*dn)) / (2.0 * h)
                return out
            return grad

        if self.hamiltonian is not None:
            if self.grad_q_h is None:
                object.__setattr__(self, "grad_q_h", fd_grad(self.hamiltonian, 0, m))
            if self.grad_mu_h is None:
                object.__setattr__(self, "grad_mu_h", fd_grad(self.hamiltonian, 1, r))
        if self.lagrangian is not None:
            if self.grad_q_l is None:
                object.__setattr__(self, "grad_q_l", fd_grad(self.lagrangian, 0, m))
            if self.grad_xi_l is None:
                object.__setattr__(self, "grad_xi_l", fd_grad(self.lagrangian, 1, r))

    def validate(self, points: Sequence[np.ndarray],
                 group_samples: Sequence[np.ndarray],
                 tau: RetractionMap | None = None,
                 axiom_tol: float = 1e-12, generator_tol: float = 1e-6):
        """Check the action axiom and generator consistency on sample data."""
        tau = tau or exp_retraction(self.algebra)
        for q in points:
            q = np.asarray(q, dtype=float)
            for g in group_samples:
                for g2 in group_samples:
                    lhs = self.act(self.act(q, g), g2)
                    rhs = self.act(q, g @ g2)
                    if np.max(np.abs(lhs - rhs)) > axiom_tol:
                        raise DimensionMismatchError(
                            f"{self.name}: action axiom residual exceeds {axiom_tol}")
            gen = self.generators(q)
            t = 1e-6
            for i in range(self.algebra.dim):
                e = np.zeros(self.algebra.dim)
                e[i] = 1.0
                fd = (self.act(q, tau.evaluate(t * e))
                      - self.act(q, tau.evaluate(-t * e))) / (2.0 * t)
                if np.max(np.abs(fd - gen[:, i])) > generator_tol:
                    raise DimensionMismatchError(
                        f"{self.name}: generator {i} disagrees with the action derivative")


@dataclass(frozen=True, eq=False)
class ActionState:
    q: np.ndarray
    mu: np.ndarray
    t: float = 0.0
    warm_start: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).reshape(-1))


def momentum_map(model: ActionModel, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """J(p)_i = p . (e_i)_Q(q) for a covector p at q."""
    return model.generators(np.asarray(q, dtype=float)).T @ np.asarray(p, dtype=float)


def action_hamiltonian_step(model: ActionModel, s: ActionState, h: float,
                            tau: RetractionMap,
                            solver: SolverConfig = DEFAULT_SOLVER
                            ) -> tuple[ActionState, StepInfo]:
    """One Poisson step for H: Q x h* -> R."""
    if model.hamiltonian is None:
        raise DimensionMismatchError("model has no Hamiltonian")
    q_k, mu_k = s.q, s.mu
    gen_t = model.generators(q_k).T

    def residual(mu_bar):
        omega = h * model.grad_mu_h(q_k, mu_bar)
        jterm = gen_t @ (h * model.grad_q_h(q_k, mu_bar))
        return jterm + tau.dtau_inv_right(omega).T @ mu_bar - mu_k

    guess = s.warm_start if s.warm_start is not None else mu_k
    sol = newton_solve(residual, guess, solver)
    mu_bar = sol.x
    omega = h * model.grad_mu_h(q_k, mu_bar)
    q_next = model.act(q_k, tau.evaluate(omega))
    mu_next = tau.dtau_inv_left(omega).T @ mu_bar
    return (ActionState(q_next, mu_next, s.t + h, warm_start=mu_bar),
            StepInfo(sol.iterations, sol.residual))


def action_lagrangian_step(model: ActionModel, s: ActionState, h: float,
                           tau: RetractionMap,
                           solver: SolverConfig = DEFAULT_SOLVER
                           ) -> tuple[ActionState, StepInfo, np.ndarray]:
    """One Poisson step for L: Q x h -> R; returns the solved xi."""
    if model.lagrangian is None:
        raise DimensionMismatchError("model has no Lagrangian")
    q_k, mu_k = s.q, s.mu
    gen_t = model.generators(q_k).T

    def residual(xi):
        jterm = -gen_t @ (h * model.grad_q_l(q_k, xi))
        return jterm + tau.dtau_inv_right(h * xi).T @ model.grad_xi_l(q_k, xi) - mu_k

    if s.warm_start is not None:
        guess = s.warm_start
    else:
        try:
            guess = newton_solve(lambda xi: model.grad_xi_l(q_k, xi) - mu_k,
                                 mu_k, solver).x
        except ConvergenceError as exc:
            raise ConvergenceError(f"Legendre inversion failed: {exc}",
                                   exc.residual, exc.iterations) from exc
    sol = newton_solve(residual, guess, solver)
    xi = sol.x
    q_next = model.act(q_k, tau.evaluate(h * xi))
    mu_next = tau.dtau_inv_left(h * xi).T @ model.grad_xi_l(q_k, xi)
    return (ActionState(q_next, mu_next, s.t + h, warm_start=xi),
            StepInfo(sol.iterations, sol.residual), xi)


def action_poisson_tensor(model: ActionModel) -> Callable[[np.ndarray, np.ndarray],
                                                          np.ndarray]:
    """Linear Poisson tensor on Q x h* in the block form stated above."""
    c = model.algebra.structure_constants
    m, r = model.ambient_dim, model.algebra.dim

    def tensor(q, mu):
        rho = model.generators(np.asarray(q, dtype=float))
        out = np.zeros((m + r, m + r))
        out[:m, m:] = -rho
        out[m:, :m] = rho.T
        out[m:, m:] = np.einsum("ijk,k->ij", c, np.asarray(mu, dtype=float))
        return out

    return tensor


def action_vector_field(model: ActionModel) -> Callable[[np.ndarray], np.ndarray]:
    """Continuous equations on packed (q, mu):
    q' = rho(q) dH/dmu,  mu' = ad*_{dH/dmu} mu - J(dH/dq)."""
    m = model.ambient_dim

    def f(z):
        q, mu = z[:m], z[m:]
        xi = model.grad_mu_h(q, mu)
        gen = model.generators(q)
        mudot = model.algebra.ad_star(xi, mu) - gen.T @ model.grad_q_h(q, mu)
        return np.concatenate([gen @ xi, mudot])

    return f


def heavy_top_model(inertia=(1.0, 2.0, 3.0), mass: float = 1.0,
                    gravity: float = 9.81, lever: float = 0.2,
                    axis=(0.0, 0.0, 1.0)) -> ActionModel:
    """Heavy top on S^2 x so(3)*: L(q, xi) = xi . I xi / 2 - m g d q . e.

    The right action is act(q, R) = R^T q, so the generator matrix at q is
    hat(q) (columns q x e_i) and the momentum map is J(p) = p x q.
    """
    I = np.asarray(inertia, dtype=float)
    if I.shape != (3,) or np.any(I <= 0):
        raise ParameterError("inertia must be three positive moments")
    e = np.asarray(axis, dtype=float)
    if e.shape != (3,) or abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise ParameterError("axis e must be a unit vector in R^3")
    if mass <= 0 or lever < 0 or gravity < 0:
        raise ParameterError("mass must be positive; gravity and lever nonnegative")
    mgd = mass * gravity * lever
    Iinv = 1.0 / I
    alg = so3()

    def gen(q):
        return np.array([[0.0, -q[2], q[1]],
                         [q[2], 0.0, -q[0]],
                         [-q[1], q[0], 0.0]])

    model = ActionModel(
        ambient_dim=3,
        algebra=alg,
        act=lambda q, g: np.asarray(g, dtype=float).T @ np.asarray(q, dtype=float),
        generators=gen,
        hamiltonian=lambda q, mu: 0.5 * float(mu @ (Iinv * mu)) + mgd * float(q @ e),
        grad_q_h=lambda q, mu: mgd * e,
        grad_mu_h=lambda q, mu: Iinv * mu,
        lagrangian=lambda q, xi: 0.5 * float(xi @ (I * xi)) - mgd * float(q @ e),
        grad_q_l=lambda q, xi: -mgd * e,
        grad_xi_l=lambda q, xi: I * xi,
        name="heavy-top",
    )
    rng = np.random.default_rng(7)
    pts = [v / np.linalg.norm(v) for v in rng.standard_normal((3, 3))]
    tau = exp_retraction(alg)
    gs = [tau.evaluate(0.3 * rng.standard_normal(3)) for _ in range(2)]
    model.validate(pts, gs, tau=tau)
    return model


def run_action_trajectory(model: ActionModel, q0: np.ndarray, mu0: np.ndarray,
                          h: float, steps: int, tau: RetractionMap,
                          solver: SolverConfig = DEFAULT_SOLVER
                          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate the Hamiltonian action step; returns (states, iters, residuals)
    with states of shape (steps + 1, m + r)."""
    q0 = np.asarray(q0, dtype=float)
    mu0 = np.asarray(mu0, dtype=float)
    zs = np.empty((steps + 1, q0.size + mu0.size))
    iters = np.zeros(steps + 1, dtype=int)
    residuals = np.zeros(steps + 1)
    zs[0] = np.concatenate([q0, mu0])
    state = ActionState(q0, mu0)
    for k in range(steps):
        state, info = action_hamiltonian_step(model, state, h, tau, solver)
        zs[k + 1] = np.concatenate([state.q, state.mu])
        iters[k + 1] = info.newton_iterations
        residuals[k + 1] = info.residual
    return zs, iters, residuals
