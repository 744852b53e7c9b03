"""Experiment runner CLI.

Subcommands: simulate, verify, order, sweep, check-map.  Options can also be
given in a plain key=value config file (--config); explicit flags win.  The
environment variable GI_SEED provides a fallback seed.  Exit codes: 0 success,
2 configuration error, 3 solver failure (partial trajectory is flushed).

Trajectories are CSV with the fixed header
step,t,<state...>,energy,<casimirs...>,newton_iters,residual and all floats
printed with 17 significant digits; reports are JSON.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import actiongroupoid, compose, liepoisson, symplectic, verify
from .errors import ConvergenceError, GeomintError, LinearSolveError, ParameterError
from .liepoisson import LPState
from .retractions import (
    VectorDiscretizationMap,
    cayley_retraction,
    check_axioms,
    exp_retraction,
    theta_map,
)
from .solvers import SolverConfig

MODELS = ("rigid-body", "heavy-top", "harmonic-oscillator", "custom-coefficients")
METHODS = ("base", "strang", "triple-jump", "adjoint", "forced-ep", "bundle")
RETRACTIONS = ("exp", "cay")


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(p) for p in str(text).split(",")], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"cannot parse vector {text!r}: {exc}") from exc


def _default_seed() -> int:
    env = os.environ.get("GI_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"GI_SEED must be an integer, got {env!r}") from exc
    return 0


@dataclass
class ExperimentConfig:
    model: str = "rigid-body"
    retraction: str = "cay"
    discretization: str = "theta:0.5"
    method: str = "base"
    h: float = 0.01
    steps: int = 100
    mu0: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.5, 0.25]))
    q0: np.ndarray | None = None
    p0: np.ndarray | None = None
    xi0: np.ndarray | None = None
    inertia: np.ndarray = field(default_factory=lambda: np.array([1.0, 2.0, 3.0]))
    coeffs: np.ndarray | None = None
    mass: float = 1.0
    gravity: float = 9.81
    lever: float = 0.2
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    damping: float = 0.0
    solver_tol: float = 1e-12
    solver_max_iter: int = 50
    seed: int = 0
    output_format: str = "csv"
    renormalize: bool = False
    reconstruct: bool = False

    @property
    def theta(self) -> float:
        text = self.discretization
        if not text.startswith("theta:"):
            raise ConfigError(f"unknown discretization {text!r} (expected theta:<value>)")
        try:
            value = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad theta in {text!r}") from exc
        return value

    def solver(self, jacobian_mode: str = "fresh") -> SolverConfig:
        return SolverConfig(tol=self.solver_tol, max_iter=self.solver_max_iter,
                            jacobian_mode=jacobian_mode)

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.retraction not in RETRACTIONS:
            raise ConfigError(f"unknown retraction {self.retraction!r}")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError("theta must lie in [0, 1]")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.method == "forced-ep" and self.model not in ("rigid-body", "custom-coefficients"):
            raise ConfigError("forced-ep runs on the rigid-body family")
        if self.method == "bundle" and self.model != "rigid-body":
            raise ConfigError("the bundle demo runs on the rigid-body model")
        if self.model == "harmonic-oscillator" and self.method not in ("base", "strang",
                                                                       "triple-jump", "adjoint"):
            raise ConfigError("harmonic-oscillator supports composition methods only")

    def as_dict(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return [float(x) for x in v]
            return v
        return {k: conv(v) for k, v in self.__dict__.items()}


def _retraction(config: ExperimentConfig):
    from .algebra import so3
    return cayley_retraction(so3()) if config.retraction == "cay" else exp_retraction(so3())


def _doubled_euler(n: int) -> VectorDiscretizationMap:
    """Deliberate axiom-(ii) violation: (q, v) -> (q, q + 2v)."""
    eye = np.eye(n)
    jac = np.block([[eye, np.zeros((n, n))], [eye, 2.0 * eye]])
    return VectorDiscretizationMap(
        dim=n,
        forward=lambda q, v: (np.asarray(q, dtype=float),
                              np.asarray(q, dtype=float) + 2.0 * np.asarray(v, dtype=float)),
        inverse=lambda q0, q1: (np.asarray(q0, dtype=float),
                                0.5 * (np.asarray(q1, dtype=float) - np.asarray(q0, dtype=float))),
        jacobian=lambda q, v: jac,
        name="doubled-euler",
    )


# -- trajectory assembly --------------------------------------------------------


@dataclass
class Trajectory:
    header: list[str]
    rows: list[list]

    def csv_lines(self):
        yield ",".join(self.header)
        for row in self.rows:
            out = []
            for cell in row:
                if isinstance(cell, (int, np.integer)):
                    out.append(str(int(cell)))
                else:
                    out.append(_fmt(cell))
            yield ",".join(out)

    def as_json(self) -> dict:
        return {"header": self.header,
                "rows": [[int(c) if isinstance(c, (int, np.integer)) else float(c)
                          for c in row] for row in self.rows]}

    def column(self, name: str) -> np.ndarray:
        i = self.header.index(name)
        return np.array([float(r[i]) for r in self.rows])


def _run_rows(config: ExperimentConfig):
    """Yield (names, energy_fn, casimirs, row generator).  Raises solver errors
    annotated with the failing step index."""
    h, steps = config.h, config.steps
    solver = config.solver()

    if config.model in ("rigid-body", "custom-coefficients") and config.method != "forced-ep":
        model = (liepoisson.rigid_body(config.inertia) if config.model == "rigid-body"
                 else liepoisson.quadratic_coefficients(config.coeffs
                                                        if config.coeffs is not None
                                                        else 1.0 / config.inertia))
        tau = _retraction(config)
        casimirs = {"casimir_musq": lambda z: float(z @ z)}
        names = ["mu1", "mu2", "mu3"]
        energy = lambda z: float(model.hamiltonian(z))

        if config.method == "bundle":
            return _bundle_rows(config, model, tau)

        if config.method == "base" and not config.reconstruct:
            def rows():
                try:
                    mus, iters, residuals = liepoisson.run_lp_trajectory(
                        model, config.mu0, h, steps, tau,
                        config.solver(jacobian_mode="frozen"))
                except (ConvergenceError, LinearSolveError) as exc:
                    mus, iters, residuals = getattr(
                        exc, "partial", (config.mu0[None, :], np.zeros(1, dtype=int),
                                         np.zeros(1)))
                    for k in range(mus.shape[0]):
                        yield k, k * h, mus[k], int(iters[k]), float(residuals[k])
                    raise
                for k in range(steps + 1):
                    yield k, k * h, mus[k], int(iters[k]), float(residuals[k])
            return names, energy, casimirs, rows

        base = compose.lp_step_map(model, tau, solver)
        step_map = {"base": lambda: base,
                    "adjoint": lambda: compose.adjoint_step(base),
                    "strang": lambda: compose.strang_pair(base),
                    "triple-jump": lambda: compose.triple_jump(base)}[config.method]()

        if config.reconstruct:
            names = names + [f"g{i}{j}" for i in range(1, 4) for j in range(1, 4)]

        def rows():
            from .algebra import GroupElement
            state = LPState(mu=config.mu0,
                            g=GroupElement.identity() if config.reconstruct else None)
            vec = np.concatenate([state.mu, state.g.matrix.ravel()]) \
                if config.reconstruct else state.mu
            yield 0, 0.0, vec, 0, 0.0
            for k in range(steps):
                try:
                    state, info = step_map(state, h)
                except (ConvergenceError, LinearSolveError) as exc:
                    exc.failing_step = k
                    raise
                if config.reconstruct and config.renormalize:
                    u, _, vt = np.linalg.svd(state.g.matrix)
                    from .algebra import GroupElement
                    state = LPState(state.mu, GroupElement(u @ vt), state.t,
                                    state.last_xi, state.warm_start)
                vec = np.concatenate([state.mu, state.g.matrix.ravel()]) \
                    if config.reconstruct else state.mu
                yield k + 1, (k + 1) * h, vec, info.newton_iterations, info.residual

        def energy_mu(z):
            return float(model.hamiltonian(z[:3]))

        casimirs = {"casimir_musq": lambda z: float(z[:3] @ z[:3])}
        return names, energy_mu, casimirs, rows

    if config.model == "heavy-top":
        model = actiongroupoid.heavy_top_model(config.inertia, config.mass,
                                               config.gravity, config.lever, config.axis)
        tau = _retraction(config)
        q0 = config.q0 if config.q0 is not None else np.array([0.0, 0.0, 1.0])
        names = ["q1", "q2", "q3", "mu1", "mu2", "mu3"]
        energy = lambda z: float(model.hamiltonian(z[:3], z[3:]))
        casimirs = {"casimir_qsq": lambda z: float(z[:3] @ z[:3]),
                    "casimir_qmu": lambda z: float(z[:3] @ z[3:])}
        base = compose.action_step_map(model, tau, solver)
        step_map = {"base": lambda: base,
                    "adjoint": lambda: compose.adjoint_step(base),
                    "strang": lambda: compose.strang_pair(base),
                    "triple-jump": lambda: compose.triple_jump(base)}[config.method]()

        def rows():
            state = actiongroupoid.ActionState(q0, config.mu0)
            yield 0, 0.0, np.concatenate([state.q, state.mu]), 0, 0.0
            for k in range(steps):
                try:
                    state, info = step_map(state, h)
                except (ConvergenceError, LinearSolveError) as exc:
                    exc.failing_step = k
                    raise
                yield (k + 1, (k + 1) * h, np.concatenate([state.q, state.mu]),
                       info.newton_iterations, info.residual)

        return names, energy, casimirs, rows

    if config.model == "harmonic-oscillator":
        q0 = config.q0 if config.q0 is not None else np.array([1.0])
        p0 = config.p0 if config.p0 is not None else np.zeros_like(q0)
        if q0.shape != p0.shape:
            raise ConfigError("q0 and p0 must have the same length")
        n = q0.size
        model = symplectic.harmonic_oscillator(n)
        disc = theta_map(config.theta, n)
        names = [f"q{i+1}" for i in range(n)] + [f"p{i+1}" for i in range(n)]
        energy = lambda z: float(model.h(z[:n], z[n:]))
        base = compose.canonical_step_map(model, disc, solver)
        step_map = {"base": lambda: base,
                    "adjoint": lambda: compose.adjoint_step(base),
                    "strang": lambda: compose.strang_pair(base),
                    "triple-jump": lambda: compose.triple_jump(base)}[config.method]()

        def rows():
            state = symplectic.CanonicalState(q0, p0)
            yield 0, 0.0, np.concatenate([state.q, state.p]), 0, 0.0
            for k in range(steps):
                try:
                    state, info = step_map(state, h)
                except (ConvergenceError, LinearSolveError) as exc:
                    exc.failing_step = k
                    raise
                yield (k + 1, (k + 1) * h, np.concatenate([state.q, state.p]),
                       info.newton_iterations, info.residual)

        return names, energy, {}, rows

    if config.method == "forced-ep":
        model = liepoisson.rigid_body(config.inertia)
        I = model.inertia
        c = config.damping
        F = (lambda xi: -c * (I * xi)) if c else (lambda xi: np.zeros(3))
        xi0 = config.xi0 if config.xi0 is not None else config.mu0 / I
        names = ["xi1", "xi2", "xi3"]
        energy = lambda z: float(model.lagrangian(z))

        def rows():
            xi = np.asarray(xi0, dtype=float)
            yield 0, 0.0, xi, 0, 0.0
            for k in range(steps):
                xi = liepoisson.forced_ep_step(model, F, xi, h)
                yield k + 1, (k + 1) * h, xi, 0, 0.0

        return names, energy, {}, rows

    raise ConfigError(f"unsupported model/method combination: {config.model}/{config.method}")


def _bundle_rows(config: ExperimentConfig, model, tau):
    """Demo bundle system: rigid body x harmonic oscillator on R^1."""
    I = model.inertia
    q0 = config.q0 if config.q0 is not None else np.array([1.0])
    p0 = config.p0 if config.p0 is not None else np.zeros_like(q0)
    n = q0.size
    bmodel = liepoisson.BundleModel(
        algebra=model.algebra, dim_q=n,
        lagrangian=lambda xi, q, v: 0.5 * float(xi @ (I * xi)) + 0.5 * float(v @ v)
        - 0.5 * float(q @ q),
        grad_xi=lambda xi, q, v: I * xi,
        grad_q=lambda xi, q, v: -np.asarray(q, dtype=float),
        grad_v=lambda xi, q, v: np.asarray(v, dtype=float),
        name="bundle-demo")
    disc = theta_map(config.theta, n)
    names = (["mu1", "mu2", "mu3"] + [f"q{i+1}" for i in range(n)]
             + [f"p{i+1}" for i in range(n)])
    energy = lambda z: (0.5 * float(z[:3] @ (z[:3] / I))
                        + 0.5 * float(z[3 + n:] @ z[3 + n:])
                        + 0.5 * float(z[3:3 + n] @ z[3:3 + n]))
    casimirs = {"casimir_musq": lambda z: float(z[:3] @ z[:3])}
    solver = config.solver()

    def rows():
        state = liepoisson.BundleState(config.mu0, q0, p0)
        yield 0, 0.0, np.concatenate([state.mu, state.q, state.p]), 0, 0.0
        for k in range(config.steps):
            try:
                state, info = liepoisson.bundle_step(bmodel, state, config.h, tau,
                                                     disc, solver)
            except (ConvergenceError, LinearSolveError) as exc:
                exc.failing_step = k
                raise
            yield (k + 1, (k + 1) * config.h,
                   np.concatenate([state.mu, state.q, state.p]),
                   info.newton_iterations, info.residual)

    return names, energy, casimirs, rows


def build_trajectory(config: ExperimentConfig) -> tuple[Trajectory, dict, int | None]:
    """Run the experiment; returns (trajectory, diagnostics, failing_step|None)."""
    names, energy, casimirs, rows = _run_rows(config)
    header = (["step", "t"] + names + ["energy"] + list(casimirs)
              + ["newton_iters", "residual"])
    out_rows = []
    failing_step = None
    error_text = None
    try:
        for k, t, vec, iters, residual in rows():
            row = [k, t] + [float(x) for x in vec] + [energy(vec)]
            row += [fn(vec) for fn in casimirs.values()]
            row += [iters, residual]
            out_rows.append(row)
    except (ConvergenceError, LinearSolveError) as exc:
        failing_step = getattr(exc, "failing_step", len(out_rows) - 1)
        error_text = str(exc)
    traj = Trajectory(header, out_rows)
    diag = {"config": config.as_dict(), "rows": len(out_rows)}
    if out_rows:
        e = traj.column("energy")
        diag["energy_drift"] = float(np.max(np.abs(e - e[0])))
        for cname in casimirs:
            c = traj.column(cname)
            diag[f"{cname}_drift"] = float(np.max(np.abs(c - c[0])))
        diag["max_residual"] = float(np.max(traj.column("residual")))
        diag["total_newton_iters"] = int(np.sum(traj.column("newton_iters")))
    if failing_step is not None:
        diag["solver_failure_at_step"] = failing_step
        diag["error"] = error_text
    return traj, diag, failing_step


# -- output helpers ---------------------------------------------------------------


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_trajectory(traj: Trajectory, diag: dict, config: ExperimentConfig,
                      path: str | None):
    if config.output_format == "json":
        payload = _json_dumps({"trajectory": traj.as_json(), "diagnostics": diag})
        _emit(payload, path)
    else:
        _emit("\n".join(traj.csv_lines()) + "\n", path)
        if path:
            with open(path + ".diag.json", "w") as fh:
                fh.write(_json_dumps(diag))


# -- subcommand implementations ----------------------------------------------------


def _config_from_args(args, overrides: dict | None = None) -> ExperimentConfig:
    file_values = {}
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
    seen_keys = set()

    def pick(key, default, convert=lambda x: x):
        seen_keys.add(key)
        if overrides and key in overrides:
            return convert(overrides[key])
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            return flag
        if key in file_values:
            return convert(file_values[key])
        return default

    cfg = ExperimentConfig(
        model=pick("model", "rigid-body"),
        retraction=pick("retraction", "cay"),
        discretization=pick("discretization", "theta:0.5"),
        method=pick("method", "base"),
        h=pick("h", 0.01, float),
        steps=pick("steps", 100, int),
        mu0=pick("mu0", np.array([1.0, 0.5, 0.25]), _parse_vector),
        q0=pick("q0", None, _parse_vector),
        p0=pick("p0", None, _parse_vector),
        xi0=pick("xi0", None, _parse_vector),
        inertia=pick("inertia", np.array([1.0, 2.0, 3.0]), _parse_vector),
        coeffs=pick("coeffs", None, _parse_vector),
        mass=pick("mass", 1.0, float),
        gravity=pick("gravity", 9.81, float),
        lever=pick("lever", 0.2, float),
        axis=pick("axis", np.array([0.0, 0.0, 1.0]), _parse_vector),
        damping=pick("damping", 0.0, float),
        solver_tol=pick("solver-tol", 1e-12, float),
        solver_max_iter=pick("solver-max-iter", 50, int),
        seed=pick("seed", _default_seed(), int),
        output_format=pick("format", "csv"),
        renormalize=bool(pick("renormalize", False, _parse_bool)),
        reconstruct=bool(pick("reconstruct", False, _parse_bool)),
    )
    for stray in (overrides or {}):
        if stray not in seen_keys:
            raise ConfigError(f"unknown configuration key {stray!r}")
    cfg.validate()
    return cfg


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"malformed config line: {line!r}")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _cmd_simulate(args) -> int:
    config = _config_from_args(args)
    traj, diag, failing_step = build_trajectory(config)
    _write_trajectory(traj, diag, config, args.output)
    if failing_step is not None:
        print(f"solver failure at step {failing_step}: {diag.get('error')}",
              file=sys.stderr)
        return 3
    return 0


def _cmd_verify(args) -> int:
    config = _config_from_args(args)
    nsamples = args.samples
    seed = config.seed
    check = args.check
    solver = config.solver()
    if check == "poisson":
        if config.model in ("rigid-body", "custom-coefficients"):
            model = liepoisson.rigid_body(config.inertia)
            tau = _retraction(config)
            step = _method_step_map(config, compose.lp_step_map(model, tau, solver))
            tensor = liepoisson.lie_poisson_tensor(model.algebra)
            samples = verify.seeded_states(seed, nsamples, 3)
            report = verify.poisson_pushforward_residual(
                step, tensor, samples, config.h, tol=args.tol,
                label=f"poisson[{config.model}/{config.method}]")
        elif config.model == "heavy-top":
            model = actiongroupoid.heavy_top_model(config.inertia, config.mass,
                                                   config.gravity, config.lever,
                                                   config.axis)
            tau = _retraction(config)
            step = _method_step_map(config, compose.action_step_map(model, tau, solver))
            t = actiongroupoid.action_poisson_tensor(model)
            tensor = lambda z: t(z[:3], z[3:])
            rng = np.random.default_rng(seed)
            samples = []
            for _ in range(nsamples):
                q = rng.standard_normal(3)
                q /= np.linalg.norm(q)
                samples.append(np.concatenate([q, rng.standard_normal(3)]))
            report = verify.poisson_pushforward_residual(
                step, tensor, samples, config.h, tol=args.tol,
                label=f"poisson[heavy-top/{config.method}]")
        else:
            raise ConfigError(f"poisson check unsupported for model {config.model}")
    elif check == "symplectic":
        if config.model != "harmonic-oscillator":
            raise ConfigError("symplectic check runs on harmonic-oscillator")
        q0 = config.q0 if config.q0 is not None else np.array([1.0])
        n = q0.size
        model = symplectic.harmonic_oscillator(n)
        step = _method_step_map(config, compose.canonical_step_map(
            model, theta_map(config.theta, n), solver))
        samples = verify.seeded_states(seed, nsamples, 2 * n)
        report = verify.symplectic_residual(step, samples, config.h, tol=args.tol,
                                            label=f"symplectic[theta={config.theta:g}]")
    elif check == "casimir":
        traj, diag, failing = build_trajectory(config)
        if failing is not None:
            print(f"solver failure at step {failing}", file=sys.stderr)
            return 3
        mus = np.column_stack([traj.column("mu1"), traj.column("mu2"),
                               traj.column("mu3")])
        drift = verify.casimir_drift(mus, lambda z: float(z @ z))
        payload = {"label": f"casimir[{config.model}/{config.method}]",
                   "max_relative_drift": drift, "tolerance": args.tol,
                   "pass": drift <= args.tol, "steps": config.steps, "h": config.h}
        _emit(_json_dumps(payload), args.output)
        return 0
    elif check == "equivariance":
        from .algebra import so3
        alg = so3()
        pair = verify.left_exp_pair_map(alg)
        gs = verify.seeded_rotations(alg, seed, max(2, nsamples // 10))
        rng = np.random.default_rng(seed + 1)
        tangents = []
        for _ in range(nsamples):
            g = gs[int(rng.integers(len(gs)))]
            tangents.append((g, g @ alg.hat(rng.standard_normal(3))))
        report = verify.equivariance_residual(pair, gs, tangents, tol=args.tol,
                                              label="equivariance[exp-pair]")
    else:
        raise ConfigError(f"unknown check {check!r}")
    _emit(_json_dumps(report.as_dict()), args.output)
    return 0


def _method_step_map(config: ExperimentConfig, base: compose.StepMap) -> compose.StepMap:
    if config.method == "base":
        return base
    if config.method == "adjoint":
        return compose.adjoint_step(base)
    if config.method == "strang":
        return compose.strang_pair(base)
    if config.method == "triple-jump":
        return compose.triple_jump(base)
    raise ConfigError(f"method {config.method!r} is not a composable step")


def _cmd_order(args) -> int:
    config = _config_from_args(args)
    hs = [float(x) for x in args.hs.split(",")]
    model = liepoisson.rigid_body(config.inertia)
    tau = _retraction(config)
    solver = config.solver()

    try:
        schedule = compose.substep_schedule(config.method)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    def family(h):
        def phi(z):
            mus, _, _ = liepoisson.run_lp_trajectory(model, z, h, 1, tau, solver,
                                                     substeps=schedule)
            return mus[-1]
        return phi

    report = verify.convergence_order(
        family, config.mu0, args.T, hs, reference=args.reference,
        vector_field=liepoisson.lp_vector_field(model), ref_refine=args.ref_refine)
    payload = report.as_dict()
    payload["model"] = config.model
    payload["method"] = config.method
    payload["retraction"] = config.retraction
    _emit(_json_dumps(payload), args.output)
    return 0


def _cmd_sweep(args) -> int:
    values = args.values.split(",")
    outdir = args.output or "."
    os.makedirs(outdir, exist_ok=True)

    def one(value):
        config = _config_from_args(args, overrides={args.param: value})
        traj, diag, failing = build_trajectory(config)
        stem = os.path.join(outdir, f"{args.param}-{value}")
        _write_trajectory(traj, diag, config, stem + ".csv")
        return failing

    failures = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for value, failing in zip(values, pool.map(one, values)):
            if failing is not None:
                failures.append((value, failing))
    for value, failing in failures:
        print(f"sweep value {value}: solver failure at step {failing}", file=sys.stderr)
    return 3 if failures else 0


def _cmd_check_map(args) -> int:
    name = args.map
    rng = np.random.default_rng(args.seed if args.seed is not None else _default_seed())
    if name in ("exp", "cay"):
        from .algebra import so3
        m = exp_retraction(so3()) if name == "exp" else cayley_retraction(so3())
        report = check_axioms(m, tol=args.tol)
    elif name.startswith("theta:"):
        theta = float(name.split(":", 1)[1])
        m = theta_map(theta, args.dim)
        samples = rng.standard_normal((args.samples, args.dim))
        report = check_axioms(m, samples, tol=args.tol)
    elif name == "doubled-euler":
        m = _doubled_euler(args.dim)
        samples = rng.standard_normal((args.samples, args.dim))
        report = check_axioms(m, samples, tol=args.tol)
    else:
        raise ConfigError(f"unknown map {name!r}")
    _emit(_json_dumps(report.as_dict()), args.output)
    return 0


# -- argument parsing ----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file; flags take precedence")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--retraction", choices=RETRACTIONS)
    p.add_argument("--discretization", help="discretization id, theta:<value>")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--h", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--mu0", type=_parse_vector)
    p.add_argument("--q0", type=_parse_vector)
    p.add_argument("--p0", type=_parse_vector)
    p.add_argument("--xi0", type=_parse_vector)
    p.add_argument("--inertia", type=_parse_vector)
    p.add_argument("--coeffs", type=_parse_vector)
    p.add_argument("--mass", type=float)
    p.add_argument("--gravity", type=float)
    p.add_argument("--lever", type=float)
    p.add_argument("--axis", type=_parse_vector)
    p.add_argument("--damping", type=float)
    p.add_argument("--solver-tol", type=float)
    p.add_argument("--solver-max-iter", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--renormalize", action="store_const", const=True)
    p.add_argument("--reconstruct", action="store_const", const=True)
    p.add_argument("--output", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomint",
        description="Structure-preserving integrators from discretization maps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one configuration to CSV")
    _add_common(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("verify", help="run a structural check, emit a JSON report")
    _add_common(p)
    p.add_argument("--check", required=True,
                   choices=("poisson", "symplectic", "casimir", "equivariance"))
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("order", help="convergence-order study")
    _add_common(p)
    p.add_argument("--hs", default="0.08,0.04,0.02,0.01")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--reference", choices=("self", "rk4"), default="self")
    p.add_argument("--ref-refine", type=int, default=100)
    p.set_defaults(fn=_cmd_order)

    p = sub.add_parser("sweep", help="run simulate over several parameter values")
    _add_common(p)
    p.add_argument("--param", required=True, help="config key to sweep, e.g. h")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=4)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("check-map", help="discretization-map axiom report")
    p.add_argument("--map", required=True,
                   help="theta:<value> | exp | cay | doubled-euler")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--output")
    p.set_defaults(fn=_cmd_check_map)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, LinearSolveError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except GeomintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
