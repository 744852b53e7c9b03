"""Dense Newton solver used by all implicit steps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _fd
from .errors import ConvergenceError, LinearSolveError


@dataclass(frozen=True)
class SolverConfig:
    """Newton settings: max-norm residual tolerance, iteration cap, FD step.

    jacobian_mode "fresh" recomputes the FD Jacobian every iteration;
    "frozen" reuses the Jacobian computed at the initial guess and refreshes
    it only when the residual stalls (chord iteration; same fixed point).
    """

    tol: float = 1e-12
    max_iter: int = 50
    fd_step: float = 1e-7
    jacobian_mode: str = "fresh"


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class StepInfo:
    """Per-step diagnostics attached to every integrator step."""

    newton_iterations: int
    residual: float

    @staticmethod
    def merge(infos: list["StepInfo"]) -> "StepInfo":
        return StepInfo(sum(i.newton_iterations for i in infos),
                        max((i.residual for i in infos), default=0.0))


def newton_solve(f: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
                 config: SolverConfig = DEFAULT_SOLVER,
                 jac: Callable[[np.ndarray], np.ndarray] | None = None) -> NewtonResult:
    """Solve f(x) = 0 from x0; raises ConvergenceError / LinearSolveError."""
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(f(x), dtype=float)
    res = float(np.max(np.abs(r))) if r.size else 0.0
    if res <= config.tol:
        return NewtonResult(x, 0, res)

    def jacobian_at(z):
        if jac is not None:
            return np.asarray(jac(z), dtype=float)
        return _fd.jacobian(f, z, _fd.fd_step(z, config.fd_step))

    J = jacobian_at(x)
    for it in range(1, config.max_iter + 1):
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise LinearSolveError(f"singular Newton Jacobian: {exc}") from exc
        x = x + dx
        r = np.asarray(f(x), dtype=float)
        new_res = float(np.max(np.abs(r)))
        if new_res <= config.tol:
            return NewtonResult(x, it, new_res)
        if config.jacobian_mode == "fresh" or new_res > 0.5 * res:
            J = jacobian_at(x)
        res = new_res
    raise ConvergenceError(
        f"Newton did not reach tol {config.tol:.1e} in {config.max_iter} iterations "
        f"(final residual {res:.3e})", residual=res, iterations=config.max_iter)
