"""Composition of one-step maps: adjoints, Strang pairs, coefficient schedules.

A StepMap is a one-step integrator (state, h) -> (state, info) together with
the discretization map that generated it, so the adjoint method (the same
algorithm run with the adjoint map) can be built mechanically.  Compositions
of the induced Poisson step maps stand in for compositions of the underlying
Lagrangian bisections.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import actiongroupoid, liepoisson, symplectic
from .errors import ParameterError
from .retractions import RetractionMap, VectorDiscretizationMap, adjoint_map
from .solvers import DEFAULT_SOLVER, SolverConfig, StepInfo


@dataclass(frozen=True, eq=False)
class StepMap:
    """One-step integrator with state packing and an optional generating map."""

    advance: Callable[[object, float], tuple[object, StepInfo]]
    pack: Callable[[object], np.ndarray]
    unpack: Callable[[np.ndarray], object]
    disc_map: RetractionMap | VectorDiscretizationMap | None = None
    rebuild: Callable[[object], "StepMap"] | None = None
    name: str = "step"

    def __call__(self, state, h: float) -> tuple[object, StepInfo]:
        return self.advance(state, h)

    def vector_map(self, h: float) -> Callable[[np.ndarray], np.ndarray]:
        """The step as a plain map on packed state vectors."""
        def phi(z):
            out, _ = self.advance(self.unpack(np.asarray(z, dtype=float)), h)
            return self.pack(out)
        return phi


def lp_step_map(model: liepoisson.DualModel, tau: RetractionMap,
                solver: SolverConfig = DEFAULT_SOLVER,
                side: str = "hamiltonian") -> StepMap:
    """Lie-Poisson step on g* as a StepMap (state: LPState)."""
    if side == "hamiltonian":
        def advance(state, h):
            return liepoisson.lp_hamiltonian_step(model, state, h, tau, solver)
    elif side == "lagrangian":
        def advance(state, h):
            out, info, _ = liepoisson.lp_lagrangian_step(model, state, h, tau, solver)
            return out, info
    else:
        raise ParameterError(f"unknown side {side!r}")

    return StepMap(
        advance=advance,
        pack=lambda s: np.asarray(s.mu, dtype=float),
        unpack=lambda z: liepoisson.LPState(mu=z),
        disc_map=tau,
        rebuild=lambda m: lp_step_map(model, m, solver, side),
        name=f"lp-{side}({tau.name})",
    )


def action_step_map(model: actiongroupoid.ActionModel, tau: RetractionMap,
                    solver: SolverConfig = DEFAULT_SOLVER) -> StepMap:
    """Action-groupoid Hamiltonian step as a StepMap (state: ActionState)."""
    m = model.ambient_dim

    def advance(state, h):
        return actiongroupoid.action_hamiltonian_step(model, state, h, tau, solver)

    return StepMap(
        advance=advance,
        pack=lambda s: np.concatenate([s.q, s.mu]),
        unpack=lambda z: actiongroupoid.ActionState(z[:m], z[m:]),
        disc_map=tau,
        rebuild=lambda mm: action_step_map(model, mm, solver),
        name=f"action({tau.name})",
    )


def canonical_step_map(model: symplectic.HamiltonianModel,
                       m: VectorDiscretizationMap,
                       solver: SolverConfig = DEFAULT_SOLVER) -> StepMap:
    """Hamiltonian T*Q step as a StepMap (state: CanonicalState)."""
    n = model.dim

    def advance(state, h):
        return symplectic.hamiltonian_step(model, state, h, m, solver)

    return StepMap(
        advance=advance,
        pack=lambda s: np.concatenate([s.q, s.p]),
        unpack=lambda z: symplectic.CanonicalState(z[:n], z[n:]),
        disc_map=m,
        rebuild=lambda mm: canonical_step_map(model, mm, solver),
        name=f"canonical({m.name})",
    )


def adjoint_step(base: StepMap) -> StepMap:
    """The same stepping algorithm run with the adjoint discretization map."""
    if base.disc_map is None or base.rebuild is None:
        raise ParameterError(f"step map {base.name!r} has no generating map to adjoint")
    out = base.rebuild(adjoint_map(base.disc_map))
    return replace(out, name=base.name + "*")


def compose_with_coeffs(base: StepMap, a) -> StepMap:
    """Schedule base with substeps a_1 h, ..., a_s h (a_1 applied first)."""
    coeffs = [float(x) for x in a]
    if not coeffs:
        raise ParameterError("coefficient list must be nonempty")

    def advance(state, h):
        infos = []
        for ai in coeffs:
            state, info = base.advance(state, ai * h)
            infos.append(info)
        return state, StepInfo.merge(infos)

    return StepMap(advance=advance, pack=base.pack, unpack=base.unpack,
                   name=f"compose({base.name}, {coeffs})")


def strang_pair(base: StepMap) -> StepMap:
    """Half step of base followed by a half step of its adjoint method."""
    adjoint = adjoint_step(base)

    def advance(state, h):
        s1, i1 = base.advance(state, 0.5 * h)
        s2, i2 = adjoint.advance(s1, 0.5 * h)
        return s2, StepInfo.merge([i1, i2])

    return StepMap(advance=advance, pack=base.pack, unpack=base.unpack,
                   name=f"strang({base.name})")


def triple_jump(base: StepMap) -> StepMap:
    """Order-3 coefficient schedule applied to the Strang pair of base."""
    return compose_with_coeffs(strang_pair(base), solve_order3_coeffs())


def solve_order3_coeffs(s: int = 3) -> tuple[float, float, float]:
    """Symmetric coefficients with sum 1 and cubic sum 0:
    a1 = a3 = 1/(2 - 2^(1/3)), a2 = 1 - 2 a1."""
    if s != 3:
        raise ParameterError("only the three-stage symmetric schedule is provided")
    a1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
    return (a1, 1.0 - 2.0 * a1, a1)


def substep_schedule(method: str) -> tuple[float, ...]:
    """Substep sizes (fractions of h) realizing a composed method directly on
    the base step.  Valid when the generating retraction is symmetric, so the
    adjoint method coincides with the base method (true for exp and cay;
    asserted by tests)."""
    if method in ("base", "adjoint"):
        return (1.0,)
    if method == "strang":
        return (0.5, 0.5)
    if method == "triple-jump":
        a1, a2, a3 = solve_order3_coeffs()
        return (0.5 * a1, 0.5 * a1, 0.5 * a2, 0.5 * a2, 0.5 * a3, 0.5 * a3)
    raise ParameterError(f"no substep schedule for method {method!r}")
