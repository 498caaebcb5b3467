"""Scenario files, benchmark presets, run drivers, sweeps, and CSV records.

Scenario files are INI-style text: ``[section]`` headers with
``key = value`` lines, ``#``/``;`` comments, vectors as whitespace-
separated floats.  Unknown sections or keys are rejected.  The grammar:

    [scenario]      name, model (ball|brick|hopper), mode (simulate|optimize)
    [model]         per-model overrides (mass, radius, dimensions, gravity,
                    torso_mass, torso_inertia, link_masses, link_lengths)
    [initial_state] 3D models: position, orientation_mrp, angular_velocity,
                    linear_velocity (Table-style body-frame base velocities);
                    hopper: planar_position, pitch, joints, planar_velocity,
                    pitch_rate, joint_rates
    [contact]       r_n, r_t, mu, eps
    [time]          h, t_f  (t_f must be a whole number of steps)
    [cost]          configuration_weight/_target, final_weight/_target,
                    torque_weight, joint_velocity_weight  (optimize mode)
    [waypoint.*]    knot, coordinate (name), target, weight
    [limits]        torque (symmetric box)
    [solver]        method (newton|auglag), tol, max_iterations, init
                    (zeros | nominal | march | scenario:<name>)

Bundled presets live in ``citopt/data`` and are addressable by bare name.
Outputs are CSV written with 17 significant digits, so repeated runs are
byte-identical.
"""

from __future__ import annotations

import configparser
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import dynamics, transcription
from .contact import ContactParams
from .models import PlanarHopper, ball_model, brick_model, hopper_model
from .rotations import mrp_to_rotation
from .solvers import SolveOptions, SolveReport, augmented_lagrangian_solve, newton_root
from .timestepping import SimState, simulate
from .transcription import CostSpec, DecisionTrajectory, TrajectoryProblem, Waypoint

WORKERS_ENV = "CITOPT_WORKERS"


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


@dataclass
class Scenario:
    name: str
    model: str
    mode: str
    model_overrides: dict = field(default_factory=dict)
    initial_state: dict = field(default_factory=dict)
    r_n: float = 100.0
    r_t: float = 1.0
    mu: float = 0.5
    eps: float = 1e-3
    h: float = 0.1
    t_f: float = 1.0
    cost: dict = field(default_factory=dict)
    waypoints: list = field(default_factory=list)
    torque_limit: float | None = None
    solver_method: str | None = None  # default: newton if unactuated else auglag
    solver_tol: float = 1e-9
    solver_max_iterations: int = 500
    solver_init: str = "zeros"

    @property
    def n_steps(self):
        return int(round(self.t_f / self.h))

    @property
    def contact_params(self):
        return ContactParams(r_n=self.r_n, r_t=self.r_t, mu=self.mu, eps=self.eps)


_SCALAR_MODEL_KEYS = {"mass", "radius", "gravity", "torso_mass", "torso_inertia"}
_VECTOR_MODEL_KEYS = {"dimensions", "link_masses", "link_lengths"}
_STATE_KEYS_3D = {"position", "orientation_mrp", "angular_velocity", "linear_velocity"}
_STATE_KEYS_HOPPER = {
    "planar_position",
    "pitch",
    "joints",
    "planar_velocity",
    "pitch_rate",
    "joint_rates",
}
_COST_KEYS = {
    "configuration_weight",
    "configuration_target",
    "final_weight",
    "final_target",
    "torque_weight",
    "joint_velocity_weight",
}


def _floats(text):
    try:
        return [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise ScenarioError(f"cannot parse float list from {text!r}") from exc


def _one_float(section, key, text):
    try:
        return float(text)
    except ValueError as exc:
        raise ScenarioError(f"[{section}] {key}: not a number: {text!r}") from exc


def bundled_scenario_names():
    return sorted(
        p.name[:-4] for p in resources.files("citopt.data").iterdir() if p.name.endswith(".ini")
    )


def load_scenario(path_or_name):
    """Load a scenario from a file path or a bundled preset name."""
    path = Path(path_or_name)
    if path.exists():
        text = path.read_text()
    else:
        name = str(path_or_name)
        candidate = resources.files("citopt.data") / f"{name}.ini"
        if not candidate.is_file():
            raise ScenarioError(
                f"no scenario file at '{path_or_name}' and no bundled scenario of that "
                f"name (bundled: {', '.join(bundled_scenario_names())})"
            )
        text = candidate.read_text()
    return scenario_from_text(text)


def scenario_from_text(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc

    if "scenario" not in parser:
        raise ScenarioError("missing [scenario] section")
    head = parser["scenario"]
    for key in head:
        if key not in ("name", "model", "mode"):
            raise ScenarioError(f"[scenario] unknown key '{key}'")
    model = head.get("model", "")
    if model not in ("ball", "brick", "hopper"):
        raise ScenarioError(f"[scenario] model must be ball|brick|hopper, got '{model}'")
    mode = head.get("mode", "")
    if mode not in ("simulate", "optimize"):
        raise ScenarioError(f"[scenario] mode must be simulate|optimize, got '{mode}'")
    sc = Scenario(name=head.get("name", "unnamed"), model=model, mode=mode)

    state_keys = _STATE_KEYS_HOPPER if model == "hopper" else _STATE_KEYS_3D
    for section in parser.sections():
        if section == "scenario":
            continue
        body = parser[section]
        if section == "model":
            for key, val in body.items():
                if key in _SCALAR_MODEL_KEYS:
                    sc.model_overrides[key] = _one_float(section, key, val)
                elif key in _VECTOR_MODEL_KEYS:
                    sc.model_overrides[key] = tuple(_floats(val))
                else:
                    raise ScenarioError(f"[model] unknown key '{key}'")
        elif section == "initial_state":
            for key, val in body.items():
                if key not in state_keys:
                    raise ScenarioError(f"[initial_state] unknown key '{key}' for model {model}")
                vals = _floats(val)
                sc.initial_state[key] = vals[0] if key in ("pitch", "pitch_rate") else vals
        elif section == "contact":
            for key, val in body.items():
                if key not in ("r_n", "r_t", "mu", "eps"):
                    raise ScenarioError(f"[contact] unknown key '{key}'")
                setattr(sc, key, _one_float(section, key, val))
        elif section == "time":
            for key, val in body.items():
                if key not in ("h", "t_f"):
                    raise ScenarioError(f"[time] unknown key '{key}'")
                setattr(sc, key, _one_float(section, key, val))
        elif section == "cost":
            for key, val in body.items():
                if key not in _COST_KEYS:
                    raise ScenarioError(f"[cost] unknown key '{key}'")
                vals = _floats(val)
                sc.cost[key] = vals[0] if len(vals) == 1 else vals
        elif section.startswith("waypoint"):
            wp = {}
            for key, val in body.items():
                if key == "coordinate":
                    wp["coordinate"] = val.strip()
                elif key == "knot":
                    wp["knot"] = int(val)
                elif key in ("target", "weight"):
                    wp[key] = _one_float(section, key, val)
                else:
                    raise ScenarioError(f"[{section}] unknown key '{key}'")
            missing = {"knot", "coordinate", "target", "weight"} - set(wp)
            if missing:
                raise ScenarioError(f"[{section}] missing keys {sorted(missing)}")
            sc.waypoints.append(wp)
        elif section == "limits":
            for key, val in body.items():
                if key != "torque":
                    raise ScenarioError(f"[limits] unknown key '{key}'")
                sc.torque_limit = _one_float(section, key, val)
        elif section == "solver":
            for key, val in body.items():
                if key == "method":
                    if val not in ("newton", "auglag"):
                        raise ScenarioError(f"[solver] method must be newton|auglag, got '{val}'")
                    sc.solver_method = val
                elif key == "tol":
                    sc.solver_tol = _one_float(section, key, val)
                elif key == "max_iterations":
                    sc.solver_max_iterations = int(val)
                elif key == "init":
                    sc.solver_init = val.strip()
                else:
                    raise ScenarioError(f"[solver] unknown key '{key}'")
        else:
            raise ScenarioError(f"unknown section [{section}]")

    if sc.h <= 0.0:
        raise ScenarioError("[time] h must be positive")
    if sc.t_f <= 0.0:
        raise ScenarioError("[time] t_f must be positive")
    steps = sc.t_f / sc.h
    if abs(steps - round(steps)) > 1e-9:
        raise ScenarioError(f"[time] t_f/h = {steps} is not a whole number of steps")
    if sc.eps <= 0.0 or sc.r_n <= 0.0 or sc.r_t < 0.0 or sc.mu < 0.0:
        raise ScenarioError("[contact] requires r_n > 0, r_t >= 0, mu >= 0, eps > 0")
    return sc


def _fmt(value):
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(sc):
    """Canonical scenario text; load(serialize(load(x))) is the identity."""
    out = io.StringIO()
    out.write("[scenario]\n")
    out.write(f"name = {sc.name}\nmodel = {sc.model}\nmode = {sc.mode}\n")
    if sc.model_overrides:
        out.write("\n[model]\n")
        for key in sorted(sc.model_overrides):
            out.write(f"{key} = {_fmt(sc.model_overrides[key])}\n")
    if sc.initial_state:
        out.write("\n[initial_state]\n")
        for key in sorted(sc.initial_state):
            out.write(f"{key} = {_fmt(sc.initial_state[key])}\n")
    out.write("\n[contact]\n")
    for key in ("r_n", "r_t", "mu", "eps"):
        out.write(f"{key} = {_fmt(getattr(sc, key))}\n")
    out.write("\n[time]\n")
    out.write(f"h = {_fmt(sc.h)}\nt_f = {_fmt(sc.t_f)}\n")
    if sc.cost:
        out.write("\n[cost]\n")
        for key in sorted(sc.cost):
            out.write(f"{key} = {_fmt(sc.cost[key])}\n")
    for i, wp in enumerate(sc.waypoints):
        out.write(f"\n[waypoint.{i}]\n")
        out.write(f"knot = {wp['knot']}\ncoordinate = {wp['coordinate']}\n")
        out.write(f"target = {_fmt(wp['target'])}\nweight = {_fmt(wp['weight'])}\n")
    if sc.torque_limit is not None:
        out.write("\n[limits]\n")
        out.write(f"torque = {_fmt(sc.torque_limit)}\n")
    out.write("\n[solver]\n")
    if sc.solver_method is not None:
        out.write(f"method = {sc.solver_method}\n")
    out.write(f"tol = {_fmt(sc.solver_tol)}\n")
    out.write(f"max_iterations = {sc.solver_max_iterations}\n")
    out.write(f"init = {sc.solver_init}\n")
    return out.getvalue()


def build_model(sc):
    ov = sc.model_overrides
    if sc.model == "ball":
        return ball_model(
            mass=ov.get("mass", 0.2),
            radius=ov.get("radius", 0.1),
            gravity=ov.get("gravity", 9.81),
        )
    if sc.model == "brick":
        return brick_model(
            mass=ov.get("mass", 1.0),
            dimensions=tuple(ov.get("dimensions", (0.5, 0.3, 0.2))),
            gravity=ov.get("gravity", 9.81),
        )
    kwargs = {
        k: ov[k]
        for k in ("torso_mass", "torso_inertia", "link_masses", "link_lengths", "gravity")
        if k in ov
    }
    return hopper_model(**kwargs)


def hopper_standing_configuration(model):
    """Nominal stance: bent leg, foot exactly on the floor."""
    hip, knee = 0.4, -0.8
    l1, l2 = model.link_lengths
    z = l1 * np.cos(hip) + l2 * np.cos(hip + knee)
    return np.array([0.0, z, 0.0, hip, knee])


def initial_state_arrays(sc, model):
    """(q0, v0) packed arrays; base velocities in scenario files are
    body-frame (spatial-velocity convention) and are converted here."""
    st = sc.initial_state
    if isinstance(model, PlanarHopper):
        q_nom = hopper_standing_configuration(model)
        pos = st.get("planar_position", q_nom[0:2])
        pitch = st.get("pitch", 0.0)
        joints = st.get("joints", q_nom[3:5])
        q0 = np.concatenate([np.asarray(pos, float), [pitch], np.asarray(joints, float)])
        vel = st.get("planar_velocity", (0.0, 0.0))
        pitch_rate = st.get("pitch_rate", 0.0)
        joint_rates = st.get("joint_rates", (0.0, 0.0))
        v0 = np.concatenate(
            [np.asarray(vel, float), [pitch_rate], np.asarray(joint_rates, float)]
        )
        return q0, v0
    sigma = np.asarray(st.get("orientation_mrp", (0.0, 0.0, 0.0)), float)
    pos = np.asarray(st.get("position", (0.0, 0.0, 1.0)), float)
    w_body = np.asarray(st.get("angular_velocity", (0.0, 0.0, 0.0)), float)
    v_body = np.asarray(st.get("linear_velocity", (0.0, 0.0, 0.0)), float)
    v_world = np.asarray(mrp_to_rotation(sigma)) @ v_body
    return np.concatenate([sigma, pos]), np.concatenate([w_body, v_world])


def _coordinate_index(model, name):
    names = model.coordinate_names
    if name not in names:
        raise ScenarioError(f"unknown coordinate '{name}' for model (have {names})")
    return names.index(name)


def build_problem(sc, model=None):
    """TrajectoryProblem for an optimize-mode scenario."""
    model = model or build_model(sc)
    q0, v0 = initial_state_arrays(sc, model)
    nq = model.n_q

    def vec(key, default=None):
        if key not in sc.cost:
            return default
        val = sc.cost[key]
        arr = np.asarray(val, dtype=float)
        if arr.ndim == 0:
            arr = np.full(nq, float(arr))
        if arr.shape != (nq,):
            raise ScenarioError(f"[cost] {key} needs 1 or {nq} values")
        return arr

    cost = CostSpec(
        configuration_weight=vec("configuration_weight"),
        configuration_target=vec("configuration_target"),
        final_weight=vec("final_weight"),
        final_target=vec("final_target"),
        torque_weight=float(np.atleast_1d(sc.cost.get("torque_weight", 0.0))[0]),
        joint_velocity_weight=float(
            np.atleast_1d(sc.cost.get("joint_velocity_weight", 0.0))[0]
        ),
    )
    waypoints = tuple(
        Waypoint(
            knot=wp["knot"],
            coordinate=_coordinate_index(model, wp["coordinate"]),
            target=wp["target"],
            weight=wp["weight"],
        )
        for wp in sc.waypoints
    )
    return TrajectoryProblem(
        model=model,
        n_knots=sc.n_steps,
        h=sc.h,
        contact=sc.contact_params,
        q0=q0,
        v0=v0,
        cost=cost,
        waypoints=waypoints,
        torque_limit=sc.torque_limit,
    )


# --- trajectory records and CSV ----------------------------------------------


@dataclass
class TrajectoryRecord:
    """Per-knot trajectory data with a fixed per-model column schema."""

    columns: tuple
    data: np.ndarray  # (rows, len(columns))

    @property
    def t(self):
        return self.data[:, 0]

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def to_csv(self):
        lines = [",".join(self.columns)]
        for row in self.data:
            lines.append(",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text):
        lines = [ln for ln in text.strip().splitlines() if ln]
        columns = tuple(lines[0].split(","))
        data = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
        return cls(columns=columns, data=data)


def record_columns(model):
    cols = ["t"]
    cols += list(model.coordinate_names)
    cols += list(model.velocity_names)
    for i in range(model.n_c):
        cols += [f"lam_t1_c{i}", f"lam_t2_c{i}", f"lam_n_c{i}"]
    for i, idx in enumerate(model.actuated_index):
        cols.append(f"tau_{model.coordinate_names[idx]}")
    return tuple(cols)


def make_record(model, t, q, v, impulses, torques=None):
    rows = len(t)
    torques = np.zeros((rows, model.n_a)) if torques is None else np.asarray(torques)
    data = np.hstack(
        [
            np.asarray(t)[:, None],
            np.asarray(q),
            np.asarray(v),
            np.asarray(impulses).reshape(rows, -1),
            torques.reshape(rows, model.n_a),
        ]
    )
    return TrajectoryRecord(columns=record_columns(model), data=data)


# --- run drivers --------------------------------------------------------------


@dataclass
class RunResult:
    scenario: Scenario
    record: TrajectoryRecord
    report: SolveReport
    trajectory: object = None  # DecisionTrajectory for optimize mode


def _initial_guess(sc, problem):
    kind = sc.solver_init
    model = problem.model
    if kind == "zeros":
        return np.zeros(problem.n_var)
    if kind == "nominal":
        if isinstance(model, PlanarHopper):
            return np.tile(hopper_standing_configuration(model), problem.n_knots)
        return np.tile(problem.q0, problem.n_knots)
    if kind == "march":
        sim = simulate(
            model,
            SimState(q=problem.q0, v=problem.v0),
            problem.h,
            problem.n_knots - 1,
            problem.contact,
            solver="analytic",
        )
        return sim["q"].ravel()
    if kind.startswith("scenario:"):
        other = load_scenario(kind.split(":", 1)[1])
        result = run(other)
        if result.trajectory is None:
            raise ScenarioError(f"warm-start scenario '{other.name}' is not optimize-mode")
        return result.trajectory.qs.ravel()
    raise ScenarioError(f"unknown solver init '{kind}'")


def run(sc, out_dir=None, solver=None, tol=None, max_iterations=None):
    """Execute a scenario; optionally write CSV + summary under ``out_dir``."""
    model = build_model(sc)
    if sc.mode == "simulate":
        q0, v0 = initial_state_arrays(sc, model)
        sim = simulate(
            model, SimState(q=q0, v=v0), sc.h, sc.n_steps, sc.contact_params, solver="ncp"
        )
        record = make_record(model, sim["t"], sim["q"], sim["v"], sim["impulses"])
        report = SolveReport(
            status="converged" if sim["converged"] else "iteration-limit",
            iterations=sc.n_steps,
            residual_norm=0.0,
            wall_time=0.0,
        )
        result = RunResult(scenario=sc, record=record, report=report)
    else:
        problem = build_problem(sc, model)
        nlp = transcription.assemble_nlp(problem)
        method = solver or sc.solver_method or ("newton" if model.n_a == 0 else "auglag")
        opts = SolveOptions(
            max_iterations=max_iterations or sc.solver_max_iterations,
            residual_tol=tol or sc.solver_tol,
        )
        x0 = _initial_guess(sc, problem)
        if method == "newton":
            if nlp.n_eq != nlp.n_var or nlp.n_ineq:
                raise ScenarioError(
                    "newton solver requires a square unconstrained-root problem "
                    f"(n_eq={nlp.n_eq}, n_var={nlp.n_var}, n_ineq={nlp.n_ineq})"
                )
            x, report = newton_root(nlp.eq_residual, nlp.eq_jacobian, x0, opts)
            report.objective = nlp.objective(x)
        else:
            x, report = augmented_lagrangian_solve(nlp, x0, opts)
        traj = DecisionTrajectory.from_flat(problem, x)
        vel = transcription.eliminate_velocities(traj, problem.h, model)
        impulses = transcription.impulse_trajectory(traj, problem)
        torques = transcription.recovered_torque_trajectory(traj, problem)
        record = make_record(model, problem.knot_times, traj.qs, vel, impulses, torques)
        result = RunResult(scenario=sc, record=record, report=report, trajectory=traj)

    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.scenario.name}_trajectory.csv"
    csv_path.write_text(result.record.to_csv())
    summary = [f"scenario = {result.scenario.name}", f"mode = {result.scenario.mode}"]
    summary += result.report.summary_lines()
    (out / f"{result.scenario.name}_summary.txt").write_text("\n".join(summary) + "\n")
    return csv_path


SWEEPABLE = ("r_n", "r_t", "mu", "h")


def sweep(sc, parameter, values, out_dir=None, solver=None):
    """One run per parameter value; failures are recorded, the sweep continues.

    Returns (results, summary_rows); each row has the parameter value,
    status, and the final base position/orientation coordinates.  Worker
    count comes from the CITOPT_WORKERS environment variable (default 1).
    """
    if parameter not in SWEEPABLE:
        raise ScenarioError(f"sweep parameter must be one of {SWEEPABLE}")
    scenarios = []
    for val in values:
        sub = replace(
            sc,
            model_overrides=dict(sc.model_overrides),
            initial_state=dict(sc.initial_state),
            cost=dict(sc.cost),
            waypoints=list(sc.waypoints),
        )
        setattr(sub, parameter, float(val))
        sub.name = f"{sc.name}_{parameter}_{val:g}"
        scenarios.append(sub)

    workers = max(1, int(os.environ.get(WORKERS_ENV, "1")))

    def _one(sub):
        try:
            sub_out = Path(out_dir) / sub.name if out_dir is not None else None
            return run(sub, out_dir=sub_out, solver=solver)
        except Exception as exc:  # individual failures do not stop the sweep
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, scenarios))
    else:
        results = [_one(sub) for sub in scenarios]

    rows = []
    model = build_model(sc)
    for val, res in zip(values, results):
        row = {"value": float(val)}
        if isinstance(res, Exception):
            row["status"] = f"error: {res}"
            for cname in model.coordinate_names:
                row[f"final_{cname}"] = float("nan")
        else:
            row["status"] = res.report.status
            final = res.record.data[-1]
            for i, cname in enumerate(model.coordinate_names):
                row[f"final_{cname}"] = final[1 + i]
        rows.append(row)
    if out_dir is not None and rows:
        keys = list(rows[0].keys())
        lines = [",".join(keys)]
        for row in rows:
            cells = [str(row[k]) if k == "status" else f"{row[k]:.17g}" for k in keys]
            lines.append(",".join(cells))
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / f"{sc.name}_{parameter}_sweep.csv").write_text("\n".join(lines) + "\n")
    return results, rows


@dataclass
class CompareReport:
    channels: tuple
    rmse: np.ndarray
    max_deviation: np.ndarray

    def rmse_for(self, name):
        return float(self.rmse[self.channels.index(name)])

    def to_csv(self):
        lines = ["channel,rmse,max_deviation"]
        for name, r, m in zip(self.channels, self.rmse, self.max_deviation):
            lines.append(f"{name},{r:.17g},{m:.17g}")
        return "\n".join(lines) + "\n"

    def to_text(self):
        width = max(len(c) for c in self.channels)
        lines = [f"{'channel'.ljust(width)}  {'rmse':>14}  {'max-dev':>14}"]
        for name, r, m in zip(self.channels, self.rmse, self.max_deviation):
            lines.append(f"{name.ljust(width)}  {r:14.6e}  {m:14.6e}")
        return "\n".join(lines)


def compare(record_a, record_b):
    """Per-channel RMSE between two records on record_a's time grid.

    Schemas must match; record_b is linearly interpolated onto
    record_a's knot times when the grids differ.
    """
    if isinstance(record_a, (str, Path)):
        record_a = TrajectoryRecord.from_csv(Path(record_a).read_text())
    if isinstance(record_b, (str, Path)):
        record_b = TrajectoryRecord.from_csv(Path(record_b).read_text())
    if record_a.columns != record_b.columns:
        raise ScenarioError(
            f"schema mismatch: {record_a.columns} vs {record_b.columns}"
        )
    t_a = record_a.t
    channels = record_a.columns[1:]
    rmse = np.zeros(len(channels))
    maxdev = np.zeros(len(channels))
    for j, name in enumerate(channels):
        a = record_a.data[:, j + 1]
        b = np.interp(t_a, record_b.t, record_b.data[:, j + 1])
        err = a - b
        rmse[j] = np.sqrt(np.mean(err**2))
        maxdev[j] = np.max(np.abs(err))
    return CompareReport(channels=tuple(channels), rmse=rmse, max_deviation=maxdev)


def position_rmse(report, model):
    """Aggregate RMSE over the base position channels of a CompareReport."""
    if isinstance(model, PlanarHopper):
        names = ("pos_x", "pos_z")
    else:
        names = ("pos_x", "pos_y", "pos_z")
    vals = [report.rmse_for(n) ** 2 for n in names]
    return float(np.sqrt(np.mean(vals)))
