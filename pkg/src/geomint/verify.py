"""Quantified checks of the structural guarantees.

All residual computations differentiate one-step maps by central finite
differences with step fd_step * max(1, |z|); the default Poisson/symplectic
tolerance of 1e-6 sits well above the differencing floor.  Sampling helpers
take explicit seeds so every report is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import LieAlgebra
from .compose import StepMap
from .retractions import exp_retraction

DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class ResidualReport:
    label: str
    residuals: tuple[float, ...]
    tolerance: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "max_residual": self.max_residual,
            "residuals": list(self.residuals),
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class OrderFitReport:
    slope: float
    hs: tuple[float, ...]
    errors: tuple[float, ...]
    reference: str
    plateau: bool

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "hs": list(self.hs),
            "errors": list(self.errors),
            "reference": self.reference,
            "plateau_warning": self.plateau,
        }


def _as_vector_map(step, h: float) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(step, StepMap):
        return step.vector_map(h)
    return step


def _fd_map_jacobian(phi, z, fd_step):
    z = np.asarray(z, dtype=float)
    h = fd_step * max(1.0, float(np.linalg.norm(z)))
    out0 = np.asarray(phi(z), dtype=float)
    J = np.empty((out0.size, z.size))
    for i in range(z.size):
        dz = np.zeros_like(z)
        dz[i] = h
        J[:, i] = (np.asarray(phi(z + dz)) - np.asarray(phi(z - dz))) / (2.0 * h)
    return J


def poisson_pushforward_residual(step, tensor: Callable[[np.ndarray], np.ndarray],
                                 samples: Sequence[np.ndarray], h: float,
                                 fd_step: float = DEFAULT_FD_STEP,
                                 tol: float = 1e-6,
                                 label: str = "poisson") -> ResidualReport:
    """Residual |Dphi L(z) Dphi^T - L(phi(z))| per sample, Dphi by central FD."""
    phi = _as_vector_map(step, h)
    residuals = []
    for z in samples:
        z = np.asarray(z, dtype=float)
        D = _fd_map_jacobian(phi, z, fd_step)
        res = D @ tensor(z) @ D.T - tensor(np.asarray(phi(z), dtype=float))
        residuals.append(float(np.max(np.abs(res))))
    return ResidualReport(label, tuple(residuals), tol)


def symplectic_matrix(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def symplectic_residual(step, samples: Sequence[np.ndarray], h: float,
                        fd_step: float = DEFAULT_FD_STEP, tol: float = 1e-6,
                        label: str = "symplectic") -> ResidualReport:
    """Residual |Dphi^T J Dphi - J| per sample on packed (q, p) states."""
    phi = _as_vector_map(step, h)
    residuals = []
    for z in samples:
        z = np.asarray(z, dtype=float)
        if z.size % 2:
            raise ValueError("symplectic residual needs an even state dimension")
        J = symplectic_matrix(z.size // 2)
        D = _fd_map_jacobian(phi, z, fd_step)
        residuals.append(float(np.max(np.abs(D.T @ J @ D - J))))
    return ResidualReport(label, tuple(residuals), tol)


def casimir_drift(states: np.ndarray, casimir: Callable[[np.ndarray], float]) -> float:
    """max_k |C(z_k) - C(z_0)| / max(1, |C(z_0)|) along a trajectory."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] == 0:
        raise ValueError("trajectory must be a nonempty (N+1, d) array")
    c0 = float(casimir(states[0]))
    drift = max(abs(float(casimir(z)) - c0) for z in states)
    return drift / max(1.0, abs(c0))


# -- reference flows ------------------------------------------------------------


def rk4_step(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: float) -> np.ndarray:
    k1 = f(z)
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(f, z0: np.ndarray, h: float, steps: int) -> np.ndarray:
    z = np.asarray(z0, dtype=float).copy()
    for _ in range(steps):
        z = rk4_step(f, z, h)
    return z


def convergence_order(step_family: Callable[[float], Callable[[np.ndarray], np.ndarray]],
                      z0: np.ndarray, T: float, hs: Sequence[float],
                      reference: str = "self",
                      vector_field: Callable[[np.ndarray], np.ndarray] | None = None,
                      ref_refine: int = 100,
                      error_floor: float = 1e-13) -> OrderFitReport:
    """Least-squares slope of log error(T) against log h.

    For each h the trajectory runs n = round(T/h) steps to T_h = n h and is
    compared at T_h against either the same method at h/ref_refine ("self")
    or an RK4 oracle on vector_field ("rk4").  Errors below error_floor are
    dropped from the fit with a plateau warning.
    """
    hs = sorted(float(h) for h in hs)
    z0 = np.asarray(z0, dtype=float)

    def family_map(step_size):
        obj = step_family(step_size)
        return obj.vector_map(step_size) if isinstance(obj, StepMap) else obj

    errors = []
    for h in hs:
        n = round(T / h)
        phi = family_map(h)
        z = z0.copy()
        for _ in range(n):
            z = np.asarray(phi(z), dtype=float)
        if reference == "self":
            phir = family_map(h / ref_refine)
            zr = z0.copy()
            for _ in range(n * ref_refine):
                zr = np.asarray(phir(zr), dtype=float)
        elif reference == "rk4":
            if vector_field is None:
                raise ValueError("rk4 reference requires a vector field")
            zr = rk4_integrate(vector_field, z0, h / ref_refine, n * ref_refine)
        else:
            raise ValueError(f"unknown reference {reference!r}")
        errors.append(float(np.linalg.norm(z - zr)))
    keep = [i for i, e in enumerate(errors) if e > error_floor]
    plateau = len(keep) < len(errors)
    if len(keep) < 2:
        return OrderFitReport(float("nan"), tuple(hs), tuple(errors), reference, True)
    lh = np.log([hs[i] for i in keep])
    le = np.log([errors[i] for i in keep])
    slope = float(np.polyfit(lh, le, 1)[0])
    return OrderFitReport(slope, tuple(hs), tuple(errors), reference, plateau)


# -- equivariance on the pair groupoid of a matrix group -------------------------


def left_exp_pair_map(algebra: LieAlgebra):
    """R_d(g, gdot) = (g, g exp(g^-1 gdot)) on the pair groupoid of the group."""
    tau = exp_retraction(algebra)

    def pair_map(g, gdot):
        g = np.asarray(g, dtype=float)
        xi = algebra.vee(np.linalg.solve(g, np.asarray(gdot, dtype=float)))
        return g, g @ tau.evaluate(xi)

    return pair_map


def entrywise_shift_pair_map(eps: float = 0.0):
    """R_d(g, gdot) = (g, g + gdot [+ eps g^T]); eps != 0 breaks equivariance."""
    def pair_map(g, gdot):
        g = np.asarray(g, dtype=float)
        out = g + np.asarray(gdot, dtype=float)
        if eps:
            out = out + eps * g.T
        return g, out

    return pair_map


def equivariance_residual(pair_map, group_samples: Sequence[np.ndarray],
                          tangent_samples: Sequence[tuple[np.ndarray, np.ndarray]],
                          tol: float = 1e-12,
                          label: str = "equivariance") -> ResidualReport:
    """Residual |a . R_d(v) - R_d(T Phi_a v)| for left multiplication by a."""
    residuals = []
    for a in group_samples:
        a = np.asarray(a, dtype=float)
        for g, gdot in tangent_samples:
            r1, r2 = pair_map(g, gdot)
            s1, s2 = pair_map(a @ g, a @ gdot)
            res = max(float(np.max(np.abs(a @ r1 - s1))),
                      float(np.max(np.abs(a @ r2 - s2))))
            residuals.append(res)
    return ResidualReport(label, tuple(residuals), tol)


def quotient_representative_residual(algebra: LieAlgebra, pair_map,
                                     group_samples: Sequence[np.ndarray],
                                     xi_samples: Sequence[np.ndarray],
                                     tol: float = 1e-12) -> ResidualReport:
    """|g^-1 R^2(g, g hat(xi)) - exp(hat(xi))|: the reduced map equals exp."""
    tau = exp_retraction(algebra)
    residuals = []
    for g in group_samples:
        g = np.asarray(g, dtype=float)
        for xi in xi_samples:
            _, r2 = pair_map(g, g @ algebra.hat(xi))
            residuals.append(float(np.max(np.abs(
                np.linalg.solve(g, r2) - tau.evaluate(xi)))))
    return ResidualReport("quotient-representative", tuple(residuals), tol)


# -- seeded sampling --------------------------------------------------------------


def seeded_states(seed: int, n: int, dim: int, scale: float = 1.0) -> np.ndarray:
    """Reproducible sample states, shape (n, dim)."""
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal((n, dim))


def seeded_rotations(algebra: LieAlgebra, seed: int, n: int,
                     scale: float = 0.8) -> list[np.ndarray]:
    """Reproducible rotations tau(xi) for seeded xi of the given scale."""
    tau = exp_retraction(algebra)
    rng = np.random.default_rng(seed)
    return [tau.evaluate(scale * rng.standard_normal(algebra.dim)) for _ in range(n)]
