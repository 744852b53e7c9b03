"""Retraction and discretization maps with their lifts.

Two families are implemented:

* ``RetractionMap``: tau: g -> G on a matrix Lie group, bundled with its local
  inverse and the left/right trivialized inverse differentials.  The label
  convention is fixed by the trivialization identity

      dtau_inv_left(w) = dtau_inv_right(w) @ Ad_{tau(w)}

  (equivalently dtau_inv_right is the inverse of the right-trivialized
  differential: eta = dtau_inv_right(w) applied to (T_w tau(eta) tau(w)^-1)).
  On so(3) both shipped maps additionally satisfy
  dtau_inv_left(w) = dtau_inv_right(w)^T.

* ``VectorDiscretizationMap``: R_d: TQ -> Q x Q on Q = R^n, e.g. the theta
  family R_d(q, v) = (q - theta v, q + (1 - theta) v).

Both kinds support the adjoint construction R*(v) = inverse(R(-v)) and the
axiom checker for the defining conditions (zero section to identities,
normalized fiber derivative, nonsingular Jacobian).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _fd
from .algebra import LieAlgebra
from .errors import (
    DimensionMismatchError,
    LinearSolveError,
    ParameterError,
    RetractionDomainError,
    UnsupportedRealizationError,
)

FD_BASE_STEP = 1e-6

# B_2, B_4, ..., B_28 for the generic dexp-inverse series.
_EVEN_BERNOULLI = (
    1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6,
    -3617.0 / 510, 43867.0 / 798, -174611.0 / 330, 854513.0 / 138,
    -236364091.0 / 2730, 8553103.0 / 6, -23749461029.0 / 870,
)


@dataclass(frozen=True, eq=False)
class RetractionMap:
    """A retraction tau: g -> G with inverse and trivialized inverse differentials."""

    algebra: LieAlgebra
    evaluate: Callable[[np.ndarray], np.ndarray]
    invert: Callable[[np.ndarray], np.ndarray]
    dtau_inv_left: Callable[[np.ndarray], np.ndarray] | None
    dtau_inv_right: Callable[[np.ndarray], np.ndarray] | None
    name: str = "retraction"


@dataclass(frozen=True, eq=False)
class VectorDiscretizationMap:
    """A discretization map R_d: TQ -> Q x Q on Q = R^n."""

    dim: int
    forward: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    inverse: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    jacobian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    theta: float | None = None
    name: str = "discretization"

    def jacobian_or_fd(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.jacobian is not None:
            return self.jacobian(q, v)
        z = np.concatenate([q, v])

        def packed(zz):
            a, b = self.forward(zz[: self.dim], zz[self.dim:])
            return np.concatenate([a, b])

        return _fd.jacobian(packed, z, _fd.fd_step(z, FD_BASE_STEP))


# -- so(3) kernels ------------------------------------------------------------


def _hat3(w: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


def _vee3(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def _rodrigues(w: np.ndarray) -> np.ndarray:
    th2 = float(w @ w)
    th = math.sqrt(th2)
    H = _hat3(w)
    if th < 1e-4:
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
    else:
        a = math.sin(th) / th
        b = (1.0 - math.cos(th)) / th2
    return np.eye(3) + a * H + b * (H @ H)


def _so3_log(g: np.ndarray) -> np.ndarray:
    cos_th = min(1.0, max(-1.0, (np.trace(g) - 1.0) / 2.0))
    th = math.acos(cos_th)
    if th >= math.pi - 1e-8:
        raise RetractionDomainError(
            f"rotation angle {th:.6f} within 1e-8 of the log branch cut at pi")
    axis2 = _vee3(g - g.T)  # 2 sin(th) * axis_coords
    if th < 1e-8:
        return 0.5 * axis2
    return (th / (2.0 * math.sin(th))) * axis2


def _dexp_inv_coeff(th: float) -> float:
    """Coefficient of hat(w)^2 in the closed-form so(3) dexp-inverse."""
    if th < 1e-4:
        t2 = th * th
        return 1.0 / 12 + t2 / 720 + t2 * t2 / 30240 + t2 * t2 * t2 / 1209600
    return 1.0 / (th * th) - (1.0 + math.cos(th)) / (2.0 * th * math.sin(th))


def _so3_dexp_inv_right(w: np.ndarray) -> np.ndarray:
    H = _hat3(w)
    return np.eye(3) - 0.5 * H + _dexp_inv_coeff(math.sqrt(float(w @ w))) * (H @ H)


def _matrix_exp_series(X: np.ndarray) -> np.ndarray:
    out = np.eye(X.shape[0])
    term = np.eye(X.shape[0])
    for k in range(1, 80):
        term = term @ X / k
        out = out + term
        if np.max(np.abs(term)) < 1e-18:
            break
    return out


def _matrix_log_series(g: np.ndarray) -> np.ndarray:
    X = g - np.eye(g.shape[0])
    if np.linalg.norm(X, 2) >= 1.0:
        raise RetractionDomainError("matrix log series requires ||g - I|| < 1")
    out = np.zeros_like(X)
    term = np.eye(g.shape[0])
    for k in range(1, 120):
        term = term @ X
        out = out + ((-1.0) ** (k + 1) / k) * term
        if np.max(np.abs(term)) < 1e-18:
            break
    return out


def _dexp_inv_right_series(algebra: LieAlgebra, w: np.ndarray) -> np.ndarray:
    M = algebra.ad_matrix(w)
    out = np.eye(algebra.dim) - 0.5 * M
    M2 = M @ M
    power = np.eye(algebra.dim)
    fact = 1.0
    for k, b in enumerate(_EVEN_BERNOULLI, start=1):
        power = power @ M2
        fact *= (2 * k) * (2 * k - 1)
        out = out + (b / fact) * power
    return out


def exp_retraction(descriptor: LieAlgebra) -> RetractionMap:
    """Exponential map as a retraction; Rodrigues on so(3), series otherwise."""
    descriptor._require_realization()
    if descriptor.name == "so(3)":
        def left(w):
            return _so3_dexp_inv_right(np.asarray(w, dtype=float)).T

        return RetractionMap(
            algebra=descriptor,
            evaluate=lambda w: _rodrigues(np.asarray(w, dtype=float)),
            invert=_so3_log,
            dtau_inv_left=left,
            dtau_inv_right=lambda w: _so3_dexp_inv_right(np.asarray(w, dtype=float)),
            name="exp",
        )

    def evaluate(w):
        return _matrix_exp_series(descriptor.hat(np.asarray(w, dtype=float)))

    def invert(g):
        return descriptor.vee(_matrix_log_series(np.asarray(g, dtype=float)))

    def right(w):
        return _dexp_inv_right_series(descriptor, np.asarray(w, dtype=float))

    def left(w):
        # exp is symmetric, so the adjoint relation gives left(w) = right(-w).
        return _dexp_inv_right_series(descriptor, -np.asarray(w, dtype=float))

    return RetractionMap(descriptor, evaluate, invert, left, right, name="exp")


def cayley_retraction(descriptor: LieAlgebra) -> RetractionMap:
    """Cayley map on so(3): cay(w) = I + 4/(4+|w|^2) (hat(w) + hat(w)^2/2)."""
    if descriptor.name != "so(3)":
        raise UnsupportedRealizationError(
            "the Cayley retraction relies on the quadratic so(3) hat identity")

    def evaluate(w):
        w = np.asarray(w, dtype=float)
        H = _hat3(w)
        return np.eye(3) + (4.0 / (4.0 + float(w @ w))) * (H + 0.5 * (H @ H))

    def invert(g):
        g = np.asarray(g, dtype=float)
        m = np.eye(3) + g
        det = np.linalg.det(m)
        if abs(det) < 1e-12:
            raise RetractionDomainError("cay inverse undefined at rotations by pi")
        return 2.0 * _vee3(np.linalg.solve(m.T, (g - np.eye(3)).T).T)

    def right(w):
        w = np.asarray(w, dtype=float)
        H = _hat3(w)
        return (1.0 + 0.25 * float(w @ w)) * np.eye(3) - 0.5 * H + 0.25 * (H @ H)

    def left(w):
        w = np.asarray(w, dtype=float)
        H = _hat3(w)
        return (1.0 + 0.25 * float(w @ w)) * np.eye(3) + 0.5 * H + 0.25 * (H @ H)

    return RetractionMap(descriptor, evaluate, invert, left, right, name="cay")


def theta_map(theta: float, n: int) -> VectorDiscretizationMap:
    """R_d(q, v) = (q - theta v, q + (1 - theta) v) on R^n, theta in [0, 1]."""
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")
    eye = np.eye(n)
    jac = np.block([[eye, -theta * eye], [eye, (1.0 - theta) * eye]])

    def forward(q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        return q - theta * v, q + (1.0 - theta) * v

    def inverse(q0, q1):
        q0 = np.asarray(q0, dtype=float)
        q1 = np.asarray(q1, dtype=float)
        d = q1 - q0
        return q0 + theta * d, d

    return VectorDiscretizationMap(
        dim=n, forward=forward, inverse=inverse,
        jacobian=lambda q, v: jac, theta=theta, name=f"theta({theta:g})")


def adjoint_map(m: RetractionMap | VectorDiscretizationMap):
    """Adjoint R*(v) = inverse(R(-v)); swaps the two legs on the pair groupoid."""
    if isinstance(m, RetractionMap):
        base_left, base_right = m.dtau_inv_left, m.dtau_inv_right

        def evaluate(w):
            return np.linalg.inv(m.evaluate(-np.asarray(w, dtype=float)))

        def invert(g):
            return -m.invert(np.linalg.inv(np.asarray(g, dtype=float)))

        left = (lambda w: base_right(-np.asarray(w, dtype=float))) if base_right else None
        right = (lambda w: base_left(-np.asarray(w, dtype=float))) if base_left else None
        return RetractionMap(m.algebra, evaluate, invert, left, right,
                             name=m.name + "*")

    if isinstance(m, VectorDiscretizationMap):
        n = m.dim

        def forward(q, v):
            a, b = m.forward(np.asarray(q, dtype=float), -np.asarray(v, dtype=float))
            return b, a

        def inverse(q0, q1):
            q, v = m.inverse(np.asarray(q1, dtype=float), np.asarray(q0, dtype=float))
            return q, -v

        def jacobian(q, v):
            J = m.jacobian_or_fd(np.asarray(q, dtype=float), -np.asarray(v, dtype=float))
            swap = np.vstack([J[n:], J[:n]])
            swap[:, n:] *= -1.0
            return swap

        theta = None if m.theta is None else 1.0 - m.theta
        return VectorDiscretizationMap(n, forward, inverse, jacobian,
                                       theta=theta, name=m.name + "*")

    raise ParameterError(f"adjoint_map does not support {type(m).__name__}")


def is_symmetric(m, samples: Sequence, tol: float = 1e-10) -> bool:
    """Whether m equals its adjoint pointwise on the given samples."""
    adj = adjoint_map(m)
    if isinstance(m, RetractionMap):
        return all(
            np.max(np.abs(m.evaluate(s) - adj.evaluate(s))) <= tol for s in samples)
    for q, v in samples:
        a = np.concatenate(m.forward(q, v))
        b = np.concatenate(adj.forward(q, v))
        if np.max(np.abs(a - b)) > tol:
            return False
    return True


# -- axiom checking -----------------------------------------------------------


@dataclass(frozen=True)
class AxiomReport:
    """Result of checking the discretization-map axioms on sample base points."""

    map_name: str
    zero_section_residual: float
    fiber_identity_residual: float
    jacobian_min_singular_value: float
    tol: float
    passed: bool
    failures: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "map": self.map_name,
            "zero_section_residual": self.zero_section_residual,
            "fiber_identity_residual": self.fiber_identity_residual,
            "jacobian_min_singular_value": self.jacobian_min_singular_value,
            "tol": self.tol,
            "pass": self.passed,
            "failures": list(self.failures),
        }


def check_axioms(m, samples: Sequence | None = None, tol: float = 1e-8) -> AxiomReport:
    """Verify R(0_q) = identities and the unit fiber derivative, by central FD.

    For pair-groupoid maps the fiber condition reads
    d(R^2 - R^1)/dv |_(q,0) = Id; the adapted-coordinate Jacobian at (q, 0) is
    additionally checked for invertibility.  Reports residuals, never raises.
    """
    if isinstance(m, RetractionMap):
        r = m.algebra.dim
        eye_g = m.algebra.identity_matrix()
        zero_res = float(np.max(np.abs(m.evaluate(np.zeros(r)) - eye_g)))
        cols = []
        h = FD_BASE_STEP
        for i in range(r):
            e = np.zeros(r)
            e[i] = h
            cols.append(m.algebra.vee((m.evaluate(e) - m.evaluate(-e)) / (2.0 * h)))
        D = np.column_stack(cols)
        fiber_res = float(np.max(np.abs(D - np.eye(r))))
        min_sv = float(np.linalg.svd(D, compute_uv=False)[-1])
    elif isinstance(m, VectorDiscretizationMap):
        n = m.dim
        if samples is None:
            samples = [np.zeros(n)]
        zero_res = 0.0
        fiber_res = 0.0
        min_sv = math.inf
        for q in samples:
            q = np.asarray(q, dtype=float)
            a, b = m.forward(q, np.zeros(n))
            zero_res = max(zero_res, float(np.max(np.abs(a - q))),
                           float(np.max(np.abs(b - q))))
            h = _fd.fd_step(q, FD_BASE_STEP)
            cols = []
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                ap, bp = m.forward(q, e)
                am, bm = m.forward(q, -e)
                cols.append(((bp - ap) - (bm - am)) / (2.0 * h))
            D = np.column_stack(cols)
            fiber_res = max(fiber_res, float(np.max(np.abs(D - np.eye(n)))))
            J = m.jacobian_or_fd(q, np.zeros(n))
            min_sv = min(min_sv, float(np.linalg.svd(J, compute_uv=False)[-1]))
    else:
        raise ParameterError(f"check_axioms does not support {type(m).__name__}")

    failures = []
    if zero_res > tol:
        failures.append(f"zero section residual {zero_res:.3e} > {tol:.1e}")
    if fiber_res > tol:
        failures.append(f"fiber derivative residual {fiber_res:.3e} > {tol:.1e}")
    if not min_sv > 1e-8:
        failures.append(f"Jacobian near-singular (min sv {min_sv:.3e})")
    return AxiomReport(
        map_name=getattr(m, "name", "map"),
        zero_section_residual=zero_res,
        fiber_identity_residual=fiber_res,
        jacobian_min_singular_value=min_sv,
        tol=tol,
        passed=not failures,
        failures=tuple(failures),
    )


# -- lifts ---------------------------------------------------------------------


def tangent_lift(m: RetractionMap) -> Callable[[np.ndarray, np.ndarray],
                                               tuple[np.ndarray, np.ndarray]]:
    """Lift to (xi, eta) -> (tau(xi), right-trivialized T_xi tau (eta)).

    Uses the analytic differential (inverse of dtau_inv_right) when available
    and central finite differences of evaluate otherwise.
    """

    def lifted(xi, eta):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        g = m.evaluate(xi)
        if m.dtau_inv_right is not None:
            out = np.linalg.solve(m.dtau_inv_right(xi), eta)
        else:
            h = _fd.fd_step(xi, FD_BASE_STEP)
            if h == 0.0:
                raise ParameterError("finite-difference step underflowed")
            dg = (m.evaluate(xi + h * eta) - m.evaluate(xi - h * eta)) / (2.0 * h)
            out = m.algebra.vee(dg @ np.linalg.inv(g))
        return g, out

    return lifted


def cotangent_exchange(q: np.ndarray, y: np.ndarray, dq: np.ndarray,
                       dy: np.ndarray) -> tuple[np.ndarray, np.ndarray,
                                                np.ndarray, np.ndarray]:
    """Canonical antisymplectomorphism T*A* -> T*A in fibered coordinates:
    (q, y; dq, dy) -> (q, dy; -dq, y)."""
    q, y = np.atleast_1d(np.asarray(q, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))
    dq, dy = np.atleast_1d(np.asarray(dq, dtype=float)), np.atleast_1d(np.asarray(dy, dtype=float))
    if q.shape != dq.shape or y.shape != dy.shape:
        raise DimensionMismatchError("base/fiber dimension mismatch in cotangent exchange")
    return q, dy, -dq, y


def cotangent_exchange_inverse(q, Y, PQ, PY):
    """Inverse of cotangent_exchange: (q, Y; P_q, P_Y) -> (q, P_Y; -P_q, Y)."""
    q, Y = np.atleast_1d(np.asarray(q, dtype=float)), np.atleast_1d(np.asarray(Y, dtype=float))
    PQ, PY = np.atleast_1d(np.asarray(PQ, dtype=float)), np.atleast_1d(np.asarray(PY, dtype=float))
    if q.shape != PQ.shape or Y.shape != PY.shape:
        raise DimensionMismatchError("base/fiber dimension mismatch in cotangent exchange")
    return q, PY, -PQ, Y


def cotangent_lift(m: VectorDiscretizationMap, q: np.ndarray, v: np.ndarray,
                   a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray,
                                                          np.ndarray, np.ndarray]:
    """Cotangent lift of R_d: base point maps by forward, covector (a, b) by the
    inverse transpose of the Jacobian.  Returns (x0, x1, c0, c1)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    x0, x1 = m.forward(q, v)
    J = m.jacobian_or_fd(q, v)
    try:
        c = np.linalg.solve(J.T, np.concatenate([np.asarray(a, dtype=float),
                                                 np.asarray(b, dtype=float)]))
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError(f"singular Jacobian in cotangent lift: {exc}") from exc
    n = m.dim
    return x0, x1, c[:n], c[n:]
