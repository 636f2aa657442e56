import dataclasses
import math
import shutil
from pathlib import Path

import numpy as np

from auvdepth.config import default_config, parse_config
from auvdepth.envs import ConstantDepthEnv
from auvdepth.harness import (build_env, load_trained_actor, run_compare,
                              run_train, run_window_sweep)
from auvdepth.metrics import compute_metrics
from auvdepth.trainer import Trainer, evaluate

out = Path("/tmp/smoke7")
shutil.rmtree(out, ignore_errors=True)

# --- criterion 7 plumbing: per-seed run_train, actor load, detuned compare
cfg = dataclasses.replace(default_config(), out_dir=str(out), seeds=(0, 1))
cfg = dataclasses.replace(cfg, trainer=dataclasses.replace(
    cfg.trainer, episodes=4, eval_every=2, eval_episodes=1,
    adaptive=True, critic_rate=5e-4, actor_rate=5e-5))
for seed in cfg.seeds:
    run_train(dataclasses.replace(cfg, seeds=(seed,)))
actor = load_trained_actor(cfg, 0)
env = ConstantDepthEnv(z_ref=8.0, disturbance_sigma=0.0,
                       rng=np.random.default_rng(1000))
_, recs = evaluate(actor, env, 1, starts=[2.0], gamma=cfg.trainer.gamma)
m = compute_metrics(recs[0], gamma=cfg.trainer.gamma)
print("c7 eval ok: sse", round(m.sse_z, 3), "rt", m.rt_z)
ccfg = dataclasses.replace(
    cfg, nmpc=dataclasses.replace(cfg.nmpc, max_sweeps=1, horizon=15))
run_compare(ccfg)
text = (out / "compare" / "metrics_median.csv").read_text()
print("c7 compare csv:")
print(text)
med = {}
for line in text.splitlines()[1:]:
    cells = line.split(",")
    med[cells[0]] = {"os": float(cells[3]), "rt": float(cells[4])}
assert set(med) == {"nndpg", "nmpc", "lqi"}, med
print("c7 plumbing OK")

# --- criterion 8 plumbing: config dict -> window sweep csv
w8 = Path("/tmp/smoke8")
shutil.rmtree(w8, ignore_errors=True)
data = {
    "task": "seafloor",
    "out_dir": str(w8),
    "seeds": [0],
    "env": {"safe_offset": 0.0,
            "profile": {"kind": "sinusoid", "depth": 10.0,
                        "wavenumber": math.pi / 50.0}},
    "trainer": {"episodes": 4, "eval_every": 2, "eval_episodes": 1,
                "adaptive": True, "critic_rate": 5e-4, "actor_rate": 5e-5},
}
c8 = parse_config(data)
run_window_sweep(c8, sizes=(1, 3), eval_episodes=2)
rows = (w8 / "window" / "window_sweep.csv").read_text().splitlines()
print("c8 rows:", rows)
by_window = {}
for line in rows[1:]:
    w, _, j = line.split(",")
    by_window.setdefault(int(w), []).append(float(j))
assert set(by_window) == {1, 3}, by_window
print("c8 plumbing OK")

# --- criterion 9 plumbing: paired replay traces
base = dataclasses.replace(default_config().trainer, episodes=3,
                           adaptive=True, critic_rate=5e-4, actor_rate=5e-5)
traces = {}
for uniform in (False, True):
    for seed in (0, 1):
        tcfg = dataclasses.replace(base, seed=seed, uniform_replay=uniform)
        env = build_env(default_config(), seed)
        traces[(uniform, seed)] = list(
            Trainer(env, tcfg).train().trace.episode_costs)
assert all(len(v) == 3 for v in traces.values())
print("c9 plumbing OK")
