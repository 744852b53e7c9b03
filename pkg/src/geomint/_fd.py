"""Central finite differences shared by the solver, lifts and verification code."""

from __future__ import annotations

from typing import Callable

import numpy as np


def fd_step(z: np.ndarray, base: float) -> float:
    """Step size scaled as base * max(1, ||z||)."""
    return base * max(1.0, float(np.linalg.norm(z)))


def jacobian(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray,
             step: float) -> np.ndarray:
    """Dense Jacobian of f at z by central differences, one column per input."""
    z = np.asarray(z, dtype=float)
    f0 = np.asarray(f(z), dtype=float)
    J = np.empty((f0.size, z.size))
    for i in range(z.size):
        dz = np.zeros_like(z)
        dz[i] = step
        J[:, i] = (np.asarray(f(z + dz)) - np.asarray(f(z - dz))) / (2.0 * step)
    return J


def directional(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray,
                v: np.ndarray, step: float) -> np.ndarray:
    """Central difference of f at z in the direction v (v not normalized)."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    return (np.asarray(f(z + step * v)) - np.asarray(f(z - step * v))) / (2.0 * step)
