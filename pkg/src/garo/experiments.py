"""Experiment runners behind the command-line interface.

Every runner takes a plain configuration mapping (already merged with
command-line overrides) and returns an :class:`ExperimentResult`.  The result
carries a JSON-serialisable report next to an optional table of rows; its
``passed`` flag tells whether the configured acceptance thresholds were met.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .algebra import BLADE_NAMES, MOTOR, Multivector, sandwich
from .control import run_mpc
from .costs import GRASP_BLOCKS, GraspCost, MotorPoseCost, ReachCost, grasp_terms, reach_error, velocity_cost
from .dynamics import forward_dynamics, inverse_dynamics
from .errors import ConfigError
from .ik import solve_ik_batch
from .ilqr import IlqrProblem, double_integrator, ilqr_solve
from .kinematics import analytic_jacobian, end_effector_point, forward_kinematics, geometric_jacobian
from .model import RobotModel, load_model
from .motors import exp_bivector, log_motor, motor_constraint_residual, motor_interpolate, normalize_motor
from .targets import default_tool, parse_target

SCHEMA_VERSION = 1
EXPERIMENTS = ("bench", "ik", "reach", "pointmass", "interp")


@dataclass
class ExperimentResult:
    report: dict
    columns: list = field(default_factory=list)
    rows: np.ndarray | None = None
    passed: bool = True


# -- configuration -------------------------------------------------------------


def shipped_config(name: str) -> Path:
    return Path(str(resources.files("garo") / "configs" / f"{name}.yaml"))


def load_config(source) -> dict:
    """Read a YAML experiment configuration (path or shipped experiment name)."""
    path = Path(source)
    if not path.exists():
        shipped = shipped_config(str(source))
        if not shipped.is_file():
            raise ConfigError(f"configuration {source!r} not found")
        path = shipped
    try:
        cfg = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path} does not hold a mapping")
    cfg.setdefault("seed", 42)
    cfg["_base"] = str(path.parent)
    return cfg


def _model(cfg: dict) -> RobotModel:
    ref = cfg.get("model")
    if ref is None:
        raise ConfigError("configuration lacks a 'model' entry")
    path = Path(cfg.get("_base", ".")) / str(ref)
    return load_model(path if path.is_file() else ref)


def _get(cfg: dict, key: str, kind=float, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"configuration lacks {key!r}")
        return default
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {key!r}: {cfg[key]!r}") from exc


def _vector(value, n: int, what: str) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} must be numeric") from exc
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise ConfigError(f"{what} must hold {n} finite numbers")
    return v


def _motor(value, what: str) -> Multivector:
    m = Multivector(MOTOR, _vector(value, 8, what))
    if motor_constraint_residual(m) > 1e-6:
        raise ConfigError(f"{what} is not a unit motor")
    return normalize_motor(m)


def _acceptance(cfg: dict) -> dict:
    acc = cfg.get("acceptance") or {}
    if not isinstance(acc, dict):
        raise ConfigError("'acceptance' must be a mapping")
    return {k: float(v) for k, v in acc.items()}


# -- bench ---------------------------------------------------------------------


def _time_kernel(fn, executions: int, repetitions: int) -> np.ndarray:
    samples = np.empty(repetitions)
    fn()  # warm caches
    for r in range(repetitions):
        start = time.perf_counter_ns()
        for _ in range(executions):
            fn()
        samples[r] = (time.perf_counter_ns() - start) / executions
    return samples


def run_bench(cfg: dict) -> ExperimentResult:
    model = _model(cfg)
    executions = _get(cfg, "executions", int, 10000)
    repetitions = _get(cfg, "repetitions", int, 10)
    if executions < 1 or repetitions < 1:
        raise ConfigError("executions and repetitions must be positive")
    rng = np.random.default_rng(_get(cfg, "seed", int, 42))
    q = model.sample_configurations(rng, 1)[0]
    qd = rng.uniform(-1.0, 1.0, model.dof)
    qdd = rng.uniform(-1.0, 1.0, model.dof)
    tau = inverse_dynamics(model, q, qd, qdd)
    kernels = {
        "forward_kinematics": lambda: forward_kinematics(model, q),
        "analytic_jacobian": lambda: analytic_jacobian(model, q),
        "geometric_jacobian": lambda: geometric_jacobian(model, q),
        "inverse_dynamics": lambda: inverse_dynamics(model, q, qd, qdd),
        "forward_dynamics": lambda: forward_dynamics(model, q, qd, tau),
    }
    selected = cfg.get("kernels") or list(kernels)
    unknown = set(selected) - set(kernels)
    if unknown:
        raise ConfigError(f"unknown benchmark kernels: {', '.join(sorted(unknown))}")
    out = {}
    for name in selected:
        s = _time_kernel(kernels[name], executions, repetitions)
        out[name] = {"median_ns": float(np.median(s)), "mean_ns": float(np.mean(s)), "std_ns": float(np.std(s)), "samples_ns": s.tolist()}
    report = {
        "schema": f"garo.bench/{SCHEMA_VERSION}",
        "model": model.name,
        "executions": executions,
        "repetitions": repetitions,
        "kernels": out,
    }
    rows = np.array([[out[k]["median_ns"], out[k]["mean_ns"], out[k]["std_ns"]] for k in out])
    return ExperimentResult(report, ["median_ns", "mean_ns", "std_ns"], rows)


def compare_bench(current: dict, baseline: dict, tolerance: float = 0.15) -> dict:
    """Median-to-median comparison; kernels slower than ``1 + tolerance`` times the baseline regress."""
    result = {}
    for name, stats in current.get("kernels", {}).items():
        base = baseline.get("kernels", {}).get(name)
        if base is None:
            continue
        ratio = stats["median_ns"] / base["median_ns"]
        result[name] = {"ratio": ratio, "regression": bool(ratio > 1.0 + tolerance)}
    return result


# -- ik ------------------------------------------------------------------------


def run_ik(cfg: dict) -> ExperimentResult:
    model = _model(cfg)
    trials = _get(cfg, "trials", int, 10000)
    tol = _get(cfg, "tol", float, 1e-6)
    max_iters = _get(cfg, "max_iters", int, 100)
    chunk = _get(cfg, "chunk", int, 2000)
    if trials < 1 or not tol > 0:
        raise ConfigError("trials must be positive and tol > 0")
    rng = np.random.default_rng(_get(cfg, "seed", int, 42))
    q_target = model.sample_configurations(rng, trials)
    q0 = model.sample_configurations(rng, trials)
    converged = np.empty(trials, dtype=bool)
    iterations = np.empty(trials, dtype=int)
    cost = np.empty(trials)
    start = time.perf_counter()
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        rep = solve_ik_batch(model, forward_kinematics(model, q_target[lo:hi]), q0[lo:hi], tol, max_iters)
        converged[lo:hi], iterations[lo:hi], cost[lo:hi] = rep.converged, rep.iterations, rep.final_cost
    wall = time.perf_counter() - start
    ok = converged
    report = {
        "schema": f"garo.ik/{SCHEMA_VERSION}",
        "model": model.name,
        "trials": trials,
        "tol": tol,
        "seed": _get(cfg, "seed", int, 42),
        "success_rate": float(ok.mean()),
        "mean_iterations": float(iterations[ok].mean()) if ok.any() else float("nan"),
        "mean_final_cost": float(cost[ok].mean()) if ok.any() else float("nan"),
        "mean_wall_time_s": wall / trials,
        "total_wall_time_s": wall,
    }
    acc = _acceptance(cfg)
    passed = (
        report["success_rate"] >= acc.get("min_success_rate", 0.0)
        and report["mean_iterations"] <= acc.get("max_mean_iterations", np.inf)
        and report["mean_final_cost"] <= acc.get("max_mean_cost", np.inf)
    )
    report["passed"] = bool(passed)
    rows = np.column_stack([np.arange(trials), converged.astype(float), iterations, cost])
    return ExperimentResult(report, ["trial", "converged", "iterations", "final_cost"], rows, passed)


# -- reach ---------------------------------------------------------------------


def resolve_target(cfg: dict):
    text = cfg.get("target")
    if text is None:
        raise ConfigError("configuration lacks a 'target'")
    named = cfg.get("targets") or {}
    return parse_target(str(named.get(text, text)))


def reach_costs(model: RobotModel, spec, weights: dict, grasp_weights=(1.0, 1.0, 1.0)) -> list:
    running = float(weights.get("running", 100.0))
    final = float(weights.get("final", 1e6))
    velocity = float(weights.get("velocity", 100.0))
    if spec.kind == "grasp":
        circle = spec.static()
        task = [GraspCost(model, circle, [running * w for w in grasp_weights], "running"), GraspCost(model, circle, [final * w for w in grasp_weights], "final")]
    else:
        target, tool = spec.as_target(), default_tool(spec.kind)
        task = [ReachCost(model, target, tool, running, "running"), ReachCost(model, target, tool, final, "final")]
    return task + [velocity_cost(model.dof, velocity, "final")]


def task_error(model: RobotModel, spec, qs: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Task residual along a joint trajectory, shape (S, K)."""
    if spec.kind == "grasp":
        from .costs import GraspGeometry

        values, _ = grasp_terms(model, qs, GraspGeometry.from_circle(spec.static()))
        return np.concatenate([values[b] for b in GRASP_BLOCKS], axis=-1)
    target = spec.primitive_at(times) if spec.moving else spec.static()
    return reach_error(model, qs, default_tool(spec.kind), target)


def run_reach(cfg: dict) -> ExperimentResult:
    model = _model(cfg)
    n = model.dof
    spec = resolve_target(cfg)
    dt = _get(cfg, "dt", float, 0.02)
    horizon = _get(cfg, "horizon", int, 50)
    steps = _get(cfg, "steps", int, 150)
    mode = str(cfg.get("mode", "mpc"))
    if not dt > 0 or horizon < 1 or steps < 1:
        raise ConfigError("dt, horizon and steps must be positive")
    q0 = _vector(cfg.get("q0", np.zeros(n)), n, "q0")
    weights = cfg.get("weights") or {}
    control = float(weights.get("control", 1e-3))
    grasp_weights = [float(w) for w in cfg.get("grasp_weights", (1.0, 1.0, 1.0))]
    system = double_integrator(n, dt)
    x0 = np.concatenate([q0, np.zeros(n)])
    costs = reach_costs(model, spec, weights, grasp_weights)
    if mode == "mpc":
        res = run_mpc(system, lambda: costs, x0, horizon, steps, control, _get(cfg, "iters_per_step", int, 5))
        states, times = res.states, res.times
        plan_iters = float(np.mean(res.plans))
    elif mode == "plan":
        sol = ilqr_solve(IlqrProblem(system, horizon, costs, control, x0), max_iters=_get(cfg, "max_iters", int, 200))
        states, times = sol.xs, np.arange(horizon + 1) * dt
        plan_iters = float(sol.iterations)
    else:
        raise ConfigError(f"unknown reach mode {mode!r}")
    qs = states[:, :n]
    err = task_error(model, spec, qs, times)
    norms = np.linalg.norm(err, axis=-1)
    report = {
        "schema": f"garo.reach/{SCHEMA_VERSION}",
        "model": model.name,
        "target": spec.text,
        "kind": spec.kind,
        "error_dim": int(err.shape[-1]),
        "mode": mode,
        "final_error_norm": float(norms[-1]),
        "final_position": end_effector_point(model, qs[-1]).tolist(),
        "final_q": qs[-1].tolist(),
        "mean_ilqr_iterations": plan_iters,
    }
    if spec.kind == "grasp":
        offs = np.cumsum([0, 5, 3, 3])
        report["final_blocks"] = {b: float(np.linalg.norm(err[-1, offs[i] : offs[i + 1]])) for i, b in enumerate(GRASP_BLOCKS)}
    acc = _acceptance(cfg)
    passed = report["final_error_norm"] <= acc.get("max_final_error", np.inf)
    if spec.kind == "grasp" and "max_grasp_block_error" in acc:
        passed = passed and max(report["final_blocks"].values()) <= acc["max_grasp_block_error"]
    report["passed"] = bool(passed)
    columns = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"e{k + 1}" for k in range(err.shape[-1])] + ["error_norm"]
    rows = np.column_stack([times, qs, err, norms])
    return ExperimentResult(report, columns, rows, passed)


# -- oriented pointmass --------------------------------------------------------


def pointmass_vias(cfg: dict, horizon: int) -> list:
    vias = cfg.get("vias")
    if not vias:
        raise ConfigError("configuration lacks 'vias'")
    out = []
    for k, v in enumerate(vias):
        if not isinstance(v, dict) or "motor" not in v:
            raise ConfigError(f"via {k} needs a 'motor' entry")
        if "step" in v:
            step = int(v["step"])
        elif "at" in v:
            step = int(round(float(v["at"]) * horizon))
        else:
            raise ConfigError(f"via {k} needs 'step' or 'at'")
        if not 1 <= step <= horizon:
            raise ConfigError(f"via {k} step {step} outside 1..{horizon}")
        out.append((step, _motor(v["motor"], f"via {k} motor")))
    return out


def run_pointmass(cfg: dict) -> ExperimentResult:
    horizon = _get(cfg, "horizon", int, 100)
    dt = _get(cfg, "dt", float, 0.02)
    via_weight = _get(cfg, "via_weight", float, 1e4)
    control = _get(cfg, "control_weight", float, 1e-4)
    vias = pointmass_vias(cfg, horizon)
    start = cfg.get("start")
    b0 = np.zeros(6) if start is None else log_motor(_motor(start, "start")).coeffs
    system = double_integrator(6, dt)
    costs = [MotorPoseCost(m, via_weight, [s]) for s, m in vias]
    sol = ilqr_solve(IlqrProblem(system, horizon, costs, control, np.concatenate([b0, np.zeros(6)])), max_iters=_get(cfg, "max_iters", int, 200))
    b = sol.xs[:, :6]
    motors = exp_bivector(b).coeffs
    via_err = []
    for s, m in vias:
        e = log_motor((m.reverse() * exp_bivector(b[s])).cast(MOTOR)).coeffs
        via_err.append({"step": s, "time": s * dt, "error": float(np.linalg.norm(e))})
    report = {
        "schema": f"garo.pointmass/{SCHEMA_VERSION}",
        "horizon": horizon,
        "dt": dt,
        "iterations": sol.iterations,
        "converged": bool(sol.converged),
        "cost": sol.cost,
        "vias": via_err,
    }
    acc = _acceptance(cfg)
    passed = max(v["error"] for v in via_err) <= acc.get("max_via_error", np.inf)
    report["passed"] = bool(passed)
    names = [BLADE_NAMES[i] for i in MOTOR]
    columns = ["t"] + [f"b{i + 1}" for i in range(6)] + [f"m_{nm}" for nm in names]
    rows = np.column_stack([np.arange(horizon + 1) * dt, b, motors])
    return ExperimentResult(report, columns, rows, passed)


# -- interpolation ---------------------------------------------------------------


def linear_schedule(n_motors: int, steps: int) -> np.ndarray:
    """Piecewise-linear (hat function) weights over equally spaced knots, (steps, n_motors)."""
    if steps < 2 or n_motors < 1:
        raise ConfigError("interpolation needs at least 2 steps and 1 motor")
    s = np.linspace(0.0, 1.0, steps)
    if n_motors == 1:
        return np.ones((steps, 1))
    knots = np.linspace(0.0, 1.0, n_motors)
    eye = np.eye(n_motors)
    return np.stack([np.interp(s, knots, eye[j]) for j in range(n_motors)], axis=-1)


def run_interp(cfg: dict) -> ExperimentResult:
    raw = cfg.get("motors")
    if not raw:
        raise ConfigError("configuration lacks 'motors'")
    motors = [_motor(m, f"motor {k}") for k, m in enumerate(raw)]
    if "weights" in cfg:
        try:
            w = np.asarray(cfg["weights"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError("weights must be numeric") from exc
        if w.ndim != 2 or w.shape[1] != len(motors):
            raise ConfigError(f"weights must be a (steps x {len(motors)}) table")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-9):
            raise ConfigError("interpolation weights must sum to 1 in every row")
    else:
        w = linear_schedule(len(motors), _get(cfg, "steps", int, 11))
    interp = motor_interpolate(motors, w)
    s = np.linspace(0.0, 1.0, len(w))
    names = [BLADE_NAMES[i] for i in MOTOR]
    columns = ["s"] + [f"m_{nm}" for nm in names]
    blocks = [s[:, None], interp.coeffs]
    report = {
        "schema": f"garo.interp/{SCHEMA_VERSION}",
        "steps": len(w),
        "max_constraint_residual": float(np.max(motor_constraint_residual(interp))),
    }
    if cfg.get("primitive"):
        spec = parse_target(str(cfg["primitive"]))
        x = spec.static()
        moved = sandwich(interp, x)
        report["primitive"] = spec.text
        report["primitive_blades"] = [BLADE_NAMES[i] for i in moved.blades]
        columns += [f"x_{BLADE_NAMES[i]}" for i in moved.blades]
        blocks.append(moved.coeffs)
    return ExperimentResult(report, columns, np.column_stack(blocks))


RUNNERS = {"bench": run_bench, "ik": run_ik, "reach": run_reach, "pointmass": run_pointmass, "interp": run_interp}
