"""Experiment orchestration: build environments from a config, run training,
evaluation, baseline, comparison, and window-sweep jobs, and write every
artifact (CSV tables, checkpoints, manifests) under the configured output
directory."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .baselines import (EulerAuvModel, LqiController, NmpcConfig,
                        NmpcController, build_lqi_gain, paper_plant)
from .config import ExperimentConfig, config_to_dict
from .dynamics import ControlInput, HydroParams, VehicleState
from .envs import ConstantDepthEnv, CostWeights, CurvedDepthEnv, SeafloorEnv
from .metrics import TrajectoryRecord, compute_metrics
from .nets import Mlp, actor_forward, load_checkpoint, save_checkpoint
from .profiles import (load_profile_csv, save_profile_csv, sinusoid_profile,
                       synthetic_seafloor)
from .trainer import evaluate, train

METRIC_FIELDS = ("sse_z", "sse_theta", "overshoot_z", "rt_z", "rt_theta",
                 "long_term_cost")


# ---------------------------------------------------------------------------
# Environment building
# ---------------------------------------------------------------------------

def build_profile(cfg: ExperimentConfig):
    p = cfg.env.profile
    if p is None:
        raise ValueError(f"task '{cfg.task}' needs a reference profile")
    if p.kind == "sinusoid":
        return sinusoid_profile(p.depth, p.wavenumber)
    return load_profile_csv(p.path)


def build_env(cfg: ExperimentConfig, seed: int):
    """Instantiate the task's environment with the config's physical
    parameters, cost weights, and a disturbance stream derived from seed."""
    e = cfg.env
    weights = CostWeights(rho1=e.cost.rho1, rho2=e.cost.rho2,
                          rho3=e.cost.rho3, rho4=e.cost.rho4,
                          R=np.diag([e.cost.r1, e.cost.r2]))
    common = dict(params=HydroParams(**cfg.hydro), weights=weights,
                  dt=e.dt, horizon_s=e.horizon_s, u0=e.u0,
                  disturbance_sigma=e.disturbance_sigma,
                  disturbance_beta=e.disturbance_beta,
                  divergence_penalty=e.divergence_penalty,
                  dz_limit=e.dz_limit, w_limit=e.w_limit,
                  spawn_radius=e.spawn_radius, min_depth=e.min_depth,
                  rng=np.random.default_rng(seed))
    if cfg.task == "constant":
        return ConstantDepthEnv(z_ref=e.z_ref, **common)
    profile = build_profile(cfg)
    if cfg.task == "curved":
        return CurvedDepthEnv(profile, **common)
    return SeafloorEnv(profile, window_n=e.window, safe_offset=e.safe_offset,
                       **common)


def build_controller(cfg: ExperimentConfig, which: str, env):
    """A ready-to-roll model-based controller targeting the reference at
    the start of the track."""
    z0 = env.z_ref_at(0.0)
    if which == "lqi":
        gain = build_lqi_gain(paper_plant(),
                              Q_aug=np.diag(cfg.lqi.q_diag),
                              R=np.diag(cfg.lqi.r_diag))
        return LqiController(gain, z_ref=z0, dt=cfg.env.dt)
    if which == "nmpc":
        model = EulerAuvModel(env.params, cfg.env.u0, cfg.env.dt)
        ncfg = NmpcConfig(horizon=cfg.nmpc.horizon,
                          Q=np.diag(cfg.nmpc.q_diag),
                          R=np.diag(cfg.nmpc.r_diag),
                          max_sweeps=cfg.nmpc.max_sweeps, tol=cfg.nmpc.tol,
                          step_size=cfg.nmpc.step_size,
                          max_halvings=cfg.nmpc.max_halvings)
        return NmpcController(ncfg, model, z_ref=z0)
    raise ValueError(f"unknown controller '{which}': choose 'lqi' or 'nmpc'")


class PolicyController:
    """Greedy wrapper around a trained actor network."""

    def __init__(self, actor: Mlp):
        self.actor = actor

    def reset(self) -> None:
        pass

    def retarget(self, z_ref: float) -> None:
        pass  # the observation already encodes the local reference

    def act(self, obs: np.ndarray) -> ControlInput:
        u = actor_forward(self.actor, obs)
        return ControlInput(float(u[0]), float(u[1]))


def rollout_controller(controller, env, start_depth: float | None = None
                       ) -> TrajectoryRecord:
    """Run one closed-loop episode and log it.

    Each step the controller is retargeted to the reference depth at the
    vehicle's current track position, so moving references are followed.
    Observation-driven policies expose act(obs); model-based controllers
    expose control(state). Rows carry the state the control was computed
    from, the applied (saturated) command, and the cost charged for the
    resulting transition.
    """
    if start_depth is None:
        obs = env.reset()
    else:
        obs = env.reset(VehicleState(x=0.0, z=float(start_depth),
                                     theta=0.0, w=0.0, q=0.0))
    controller.reset()
    acts_on_obs = hasattr(controller, "act")
    rows: dict[str, list[float]] = {
        name: [] for name in ("t", "x", "z", "theta", "w", "q",
                              "tau1", "tau2", "z_ref", "cost")}
    t, done = 0.0, False
    while not done:
        st = env.state
        z_ref = env.z_ref_at(st.x)
        controller.retarget(z_ref)
        u = controller.act(obs) if acts_on_obs else controller.control(st)
        obs, cost, done = env.step(u)
        rows["t"].append(t)
        rows["x"].append(st.x)
        rows["z"].append(st.z)
        rows["theta"].append(st.theta)
        rows["w"].append(st.w)
        rows["q"].append(st.q)
        rows["tau1"].append(u.tau1)
        rows["tau2"].append(u.tau2)
        rows["z_ref"].append(z_ref)
        rows["cost"].append(cost)
        t += env.dt
    return TrajectoryRecord(**{k: np.array(v) for k, v in rows.items()})


# ---------------------------------------------------------------------------
# Artifact helpers
# ---------------------------------------------------------------------------

def write_manifest(out_dir, command: str, cfg: ExperimentConfig,
                   artifacts) -> Path:
    """Record what produced this directory: the command, the full config,
    the seeds, and a sha256 digest of every artifact file."""
    out_dir = Path(out_dir)
    digests = {}
    for p in sorted(Path(a) for a in artifacts):
        digests[p.relative_to(out_dir).as_posix()] = hashlib.sha256(
            p.read_bytes()).hexdigest()
    payload = {"command": command, "seeds": list(cfg.seeds),
               "config": config_to_dict(cfg), "artifacts": digests}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _fmt(value) -> str:
    if value is None:
        return "inf"  # the trajectory never reached the settling band
    return repr(float(value))


def _metric_row(m) -> list[str]:
    return [_fmt(getattr(m, name)) for name in METRIC_FIELDS]


def _write_rows(path: Path, header: str, rows) -> Path:
    lines = [header] + [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_controls(path: Path, rec: TrajectoryRecord) -> Path:
    rows = [(repr(float(t)), repr(float(a)), repr(float(b)))
            for t, a, b in zip(rec.t, rec.tau1, rec.tau2)]
    return _write_rows(path, "t,tau1,tau2", rows)


def _seed_dir(cfg: ExperimentConfig, seed: int) -> Path:
    return Path(cfg.out_dir) / "train" / f"seed{seed}"


def load_trained_actor(cfg: ExperimentConfig, seed: int) -> Mlp:
    """The best evaluated actor if one was checkpointed, else the final one."""
    d = _seed_dir(cfg, seed)
    for name in ("best_actor.ckpt", "actor.ckpt"):
        if (d / name).exists():
            return load_checkpoint(d / name)
    raise FileNotFoundError(
        f"no trained policy under {d}; run the train command first")


def load_seafloor(path):
    """Load a seafloor CSV plus a small extent report for logging."""
    prof = load_profile_csv(path)
    report = {"min_depth": float(np.min(prof.depths)),
              "max_depth": float(np.max(prof.depths)),
              "range_m": float(prof.distances[-1] - prof.distances[0]),
              "samples": int(prof.distances.size)}
    return prof, report


def generate_seafloor(path, length_m: float = 600.0, spacing_m: float = 1.0,
                      base_depth: float = 12.0, amplitude: float = 2.0,
                      kind: str = "sinusoid", wavelength: float = 100.0,
                      smooth_m: float = 25.0, seed: int = 0) -> dict:
    """Synthesize a seafloor profile, save it as CSV, and report extents."""
    prof = synthetic_seafloor(length_m, spacing_m, base_depth, amplitude,
                              kind=kind, wavelength=wavelength,
                              smooth_m=smooth_m,
                              rng=np.random.default_rng(seed))
    save_profile_csv(prof, path)
    return load_seafloor(path)[1]


# ---------------------------------------------------------------------------
# Jobs
# ---------------------------------------------------------------------------

def run_train(cfg: ExperimentConfig) -> list[Path]:
    """Train one policy per configured seed; write traces and checkpoints."""
    written: list[Path] = []
    for seed in cfg.seeds:
        env = build_env(cfg, seed)
        result = train(env, dataclasses.replace(cfg.trainer, seed=seed))
        d = _seed_dir(cfg, seed)
        d.mkdir(parents=True, exist_ok=True)
        result.trace.to_csv(d / "trace.csv")
        save_checkpoint(result.actor, d / "actor.ckpt")
        save_checkpoint(result.critic, d / "critic.ckpt")
        written += [d / "trace.csv", d / "actor.ckpt", d / "critic.ckpt"]
        if result.best_actor is not None:
            save_checkpoint(result.best_actor, d / "best_actor.ckpt")
            written.append(d / "best_actor.ckpt")
    written.append(write_manifest(Path(cfg.out_dir) / "train", "train", cfg,
                                  written))
    return written


def run_evaluate(cfg: ExperimentConfig, episodes: int = 10) -> list[Path]:
    """Roll the first seed's trained policy for several episodes; write each
    trajectory and a per-episode metrics table."""
    actor = load_trained_actor(cfg, cfg.seeds[0])
    env = build_env(cfg, cfg.seeds[0])
    _, records = evaluate(actor, env, episodes, gamma=cfg.trainer.gamma)
    root = Path(cfg.out_dir) / "evaluate"
    root.mkdir(parents=True, exist_ok=True)
    written, rows = [], []
    for i, rec in enumerate(records):
        path = root / f"trajectory_{i:03d}.csv"
        rec.to_csv(path)
        written.append(path)
        rows.append([i] + _metric_row(compute_metrics(rec,
                                                      gamma=cfg.trainer.gamma)))
    written.append(_write_rows(root / "metrics.csv",
                               "episode," + ",".join(METRIC_FIELDS), rows))
    written.append(write_manifest(root, "evaluate", cfg, written))
    return written


def run_baseline(cfg: ExperimentConfig, which: str) -> list[Path]:
    """Roll one model-based controller from the standard offset start."""
    env = build_env(cfg, cfg.seeds[0])
    ctrl = build_controller(cfg, which, env)
    start = max(env.z_ref_at(0.0) - cfg.env.spawn_radius, cfg.env.min_depth)
    rec = rollout_controller(ctrl, env, start_depth=start)
    root = Path(cfg.out_dir) / f"baseline_{which}"
    root.mkdir(parents=True, exist_ok=True)
    written = [root / "trajectory_000.csv"]
    rec.to_csv(written[0])
    row = [0] + _metric_row(compute_metrics(rec, gamma=cfg.trainer.gamma))
    written.append(_write_rows(root / "metrics.csv",
                               "episode," + ",".join(METRIC_FIELDS), [row]))
    written.append(write_manifest(root, f"baseline {which}", cfg, written))
    return written


COMPARE_CONTROLLERS = ("nndpg", "lqi", "nmpc")


def run_compare(cfg: ExperimentConfig) -> list[Path]:
    """Roll the learned policy and both baselines from the same start under
    identical disturbance realizations, once per seed.

    Every controller gets its own freshly seeded environment, so all three
    see the same spawn and the same disturbance sample at each step index.
    Emits per-run trajectory and control tables, a per-run metrics table,
    and a per-controller median summary.
    """
    actors = {seed: load_trained_actor(cfg, seed) for seed in cfg.seeds}
    root = Path(cfg.out_dir) / "compare"
    root.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    rows = []
    per_ctrl: dict[str, list] = {name: [] for name in COMPARE_CONTROLLERS}
    for seed in cfg.seeds:
        for name in COMPARE_CONTROLLERS:
            env = build_env(cfg, seed)
            if name == "nndpg":
                ctrl = PolicyController(actors[seed])
            else:
                ctrl = build_controller(cfg, name, env)
            start = max(env.z_ref_at(0.0) - cfg.env.spawn_radius,
                        cfg.env.min_depth)
            rec = rollout_controller(ctrl, env, start_depth=start)
            rec.to_csv(root / f"{name}_seed{seed}.csv")
            written.append(root / f"{name}_seed{seed}.csv")
            written.append(_write_controls(
                root / f"{name}_seed{seed}_controls.csv", rec))
            m = compute_metrics(rec, gamma=cfg.trainer.gamma)
            per_ctrl[name].append(m)
            rows.append([name, seed] + _metric_row(m))
    written.append(_write_rows(root / "metrics.csv",
                               "controller,seed," + ",".join(METRIC_FIELDS),
                               rows))
    med_rows = []
    for name in COMPARE_CONTROLLERS:
        meds = []
        for field in METRIC_FIELDS:
            vals = [getattr(m, field) for m in per_ctrl[name]]
            vals = [np.inf if v is None else float(v) for v in vals]
            meds.append(repr(float(np.median(vals))))
        med_rows.append([name] + meds)
    written.append(_write_rows(root / "metrics_median.csv",
                               "controller," + ",".join(METRIC_FIELDS),
                               med_rows))
    written.append(write_manifest(root, "compare", cfg, written))
    return written


def run_window_sweep(cfg: ExperimentConfig, sizes=(1, 3, 5, 7, 9),
                     eval_episodes: int = 10) -> list[Path]:
    """Train one policy per seafloor-window size, then score each on a
    shared evaluation stream.

    The evaluation environment is seeded identically for every window size,
    so episode k pairs the same spawn depth and disturbance realization
    across sizes and the per-episode costs compare like for like.
    """
    if cfg.task != "seafloor":
        raise ValueError("the window sweep requires the seafloor task")
    root = Path(cfg.out_dir) / "window"
    root.mkdir(parents=True, exist_ok=True)
    seed = cfg.seeds[0]
    written: list[Path] = []
    rows = []
    for n in sizes:
        wcfg = dataclasses.replace(
            cfg, env=dataclasses.replace(cfg.env, window=int(n)))
        env = build_env(wcfg, seed)
        result = train(env, dataclasses.replace(cfg.trainer, seed=seed))
        actor = (result.best_actor if result.best_actor is not None
                 else result.actor)
        ckpt = root / f"actor_w{n}.ckpt"
        save_checkpoint(actor, ckpt)
        written.append(ckpt)
        eval_env = build_env(wcfg, seed + 10_000)
        _, records = evaluate(actor, eval_env, eval_episodes,
                              gamma=cfg.trainer.gamma)
        for k, rec in enumerate(records):
            j = compute_metrics(rec, gamma=cfg.trainer.gamma).long_term_cost
            rows.append([int(n), k, repr(float(j))])
    written.append(_write_rows(root / "window_sweep.csv", "window,episode,J",
                               rows))
    written.append(write_manifest(root, "window-sweep", cfg, written))
    return written
