"""One-step symplectic integrators on T*Q = R^2n from a discretization map.

The Hamiltonian step finds the intermediate point (q_bar, p_bar) such that the
cotangent lift of R_d maps the exchanged differential

    (q_bar, h dH/dp; -h dH/dq, p_bar)   in T*TQ

to an element of T*(Q x Q) with base (q_k, q_{k+1}) and covector
(-p_k, p_{k+1}).  The Lagrangian step carries the h-scaled fiber
(q_bar, h v_bar; h dL/dq, dL/dv) instead and closes with the Legendre
transform on both ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _fd
from .errors import ConvergenceError, DimensionMismatchError
from .retractions import VectorDiscretizationMap, cotangent_lift
from .solvers import DEFAULT_SOLVER, SolverConfig, StepInfo, newton_solve

_GRAD_CHECK_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class CanonicalState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.atleast_1d(np.asarray(self.q, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        if self.q.shape != self.p.shape:
            raise DimensionMismatchError("q and p must have the same dimension")


def _check_grad(fun, grad, dim, argindex, label):
    rng = np.random.default_rng(99)
    for _ in range(4):
        a = rng.standard_normal(dim)
        b = rng.standard_normal(dim)
        args = [a, b]
        z = args[argindex]
        h = _fd.fd_step(z, 1e-6)
        g = grad(a, b)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            pert = list(args)
            pert[argindex] = z + e
            mert = list(args)
            mert[argindex] = z - e
            fd = (fun(*pert) - fun(*mert)) / (2.0 * h)
            if abs(fd - g[i]) > _GRAD_CHECK_TOL * max(1.0, abs(fd)):
                raise DimensionMismatchError(
                    f"{label}: gradient component {i} disagrees with finite differences")


def _fd_grad2(fun, dim, argindex):
    def grad(a, b):
        args = [np.asarray(a, dtype=float), np.asarray(b, dtype=float)]
        z = args[argindex]
        h = _fd.fd_step(z, 1e-6)
        out = np.empty(dim)
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            pert = list(args)
            pert[argindex] = z + e
            mert = list(args)
            mert[argindex] = z - e
            out[i] = (fun(*pert) - fun(*mert)) / (2.0 * h)
        return out
    return grad


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """H(q, p) with partial gradients; analytic gradients are FD-validated."""

    dim: int
    h: Callable[[np.ndarray, np.ndarray], float]
    grad_q: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    grad_p: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = "hamiltonian"

    def __post_init__(self):
        if self.grad_q is None:
            object.__setattr__(self, "grad_q", _fd_grad2(self.h, self.dim, 0))
        else:
            _check_grad(self.h, self.grad_q, self.dim, 0, self.name + ".grad_q")
        if self.grad_p is None:
            object.__setattr__(self, "grad_p", _fd_grad2(self.h, self.dim, 1))
        else:
            _check_grad(self.h, self.grad_p, self.dim, 1, self.name + ".grad_p")

    def energy(self, state: CanonicalState) -> float:
        return float(self.h(state.q, state.p))


@dataclass(frozen=True, eq=False)
class LagrangianModel:
    """Regular L(q, v) with partial gradients and fiber Hessian."""

    dim: int
    lag: Callable[[np.ndarray, np.ndarray], float]
    grad_q: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    grad_v: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    fiber_hessian: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = "lagrangian"

    def __post_init__(self):
        if self.grad_q is None:
            object.__setattr__(self, "grad_q", _fd_grad2(self.lag, self.dim, 0))
        else:
            _check_grad(self.lag, self.grad_q, self.dim, 0, self.name + ".grad_q")
        if self.grad_v is None:
            object.__setattr__(self, "grad_v", _fd_grad2(self.lag, self.dim, 1))
        else:
            _check_grad(self.lag, self.grad_v, self.dim, 1, self.name + ".grad_v")
        if self.fiber_hessian is None:
            grad_v = self.grad_v

            def hess(q, v):
                v = np.asarray(v, dtype=float)
                return _fd.jacobian(lambda vv: grad_v(q, vv), v, _fd.fd_step(v, 1e-6))

            object.__setattr__(self, "fiber_hessian", hess)

    def legendre(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.grad_v(q, v)

    def legendre_inverse(self, q: np.ndarray, p: np.ndarray, v0: np.ndarray,
                         solver: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
        try:
            return newton_solve(lambda v: self.grad_v(q, v) - p, v0, solver,
                                jac=lambda v: self.fiber_hessian(q, v)).x
        except ConvergenceError as exc:
            raise ConvergenceError(f"Legendre inversion failed: {exc}",
                                   exc.residual, exc.iterations) from exc


def harmonic_oscillator(n: int = 1) -> HamiltonianModel:
    """H(q, p) = (|q|^2 + |p|^2) / 2."""
    return HamiltonianModel(
        dim=n,
        h=lambda q, p: 0.5 * float(q @ q + p @ p),
        grad_q=lambda q, p: np.asarray(q, dtype=float),
        grad_p=lambda q, p: np.asarray(p, dtype=float),
        name="harmonic-oscillator",
    )


def hamiltonian_step(model: HamiltonianModel, z_k: CanonicalState, h: float,
                     m: VectorDiscretizationMap,
                     solver: SolverConfig = DEFAULT_SOLVER
                     ) -> tuple[CanonicalState, StepInfo]:
    """One Hamiltonian step; Newton on the 2n unknowns (q_bar, p_bar)."""
    n = model.dim
    q_k, p_k = z_k.q, z_k.p

    def lifted(u):
        qb, pb = u[:n], u[n:]
        return cotangent_lift(m, qb, h * model.grad_p(qb, pb),
                              -h * model.grad_q(qb, pb), pb)

    def residual(u):
        x0, _, c0, _ = lifted(u)
        return np.concatenate([x0 - q_k, c0 + p_k])

    sol = newton_solve(residual, np.concatenate([q_k, p_k]), solver)
    _, x1, _, c1 = lifted(sol.x)
    return CanonicalState(x1, c1, z_k.t + h), StepInfo(sol.iterations, sol.residual)


def lagrangian_step(model: LagrangianModel, v_k: tuple[np.ndarray, np.ndarray] | CanonicalState,
                    h: float, m: VectorDiscretizationMap,
                    solver: SolverConfig = DEFAULT_SOLVER
                    ) -> tuple[tuple[np.ndarray, np.ndarray], StepInfo]:
    """One Lagrangian step on (q, v); Legendre transform at both ends."""
    n = model.dim
    if isinstance(v_k, CanonicalState):
        q_k, vel_k = v_k.q, v_k.p
    else:
        q_k, vel_k = (np.atleast_1d(np.asarray(x, dtype=float)) for x in v_k)
    p_k = model.legendre(q_k, vel_k)

    def lifted(u):
        qb, vb = u[:n], u[n:]
        return cotangent_lift(m, qb, h * vb, h * model.grad_q(qb, vb),
                              model.grad_v(qb, vb))

    def residual(u):
        x0, _, c0, _ = lifted(u)
        return np.concatenate([x0 - q_k, c0 + p_k])

    sol = newton_solve(residual, np.concatenate([q_k, vel_k]), solver)
    _, x1, _, c1 = lifted(sol.x)
    v_next = model.legendre_inverse(x1, c1, sol.x[n:], solver)
    return (x1, v_next), StepInfo(sol.iterations, sol.residual)


def canonical_vector_field(model: HamiltonianModel) -> Callable[[np.ndarray], np.ndarray]:
    """Hamilton's equations as a vector field on packed (q, p)."""
    n = model.dim

    def f(z):
        q, p = z[:n], z[n:]
        return np.concatenate([model.grad_p(q, p), -model.grad_q(q, p)])

    return f
