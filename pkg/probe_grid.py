"""Stability/convergence probe over trainer hyperparameters (scratch)."""
import sys
import numpy as np
from auvdepth.envs import ConstantDepthEnv
from auvdepth.metrics import compute_metrics
from auvdepth.trainer import Trainer, TrainerConfig, TrainingAbort, evaluate

STARTS = (2.0, 5.0, 8.0, 11.0, 14.0)

def probe(tag, episodes=40, **kw):
    env = ConstantDepthEnv(z_ref=8.0, rng=np.random.default_rng(100))
    cfg = TrainerConfig(episodes=episodes, seed=1, **kw)
    tr = Trainer(env, cfg)
    try:
        res = tr.train()
    except TrainingAbort as e:
        n = len(e.trace.episode_costs) if e.trace else 0
        print(f"{tag:44s} ABORT after ep {n}: {e}", flush=True)
        return
    tail = np.mean(res.trace.episode_costs[-5:])
    eenv = ConstantDepthEnv(z_ref=8.0, rng=np.random.default_rng(777))
    _, recs = evaluate(res.actor, eenv, len(STARTS), starts=STARTS)
    ms = [compute_metrics(r) for r in recs]
    sse = np.median([m.sse_z for m in ms])
    ovs = np.median([m.overshoot_z for m in ms])
    rts = [m.rt_z for m in ms]
    rt = "None" if any(r is None for r in rts) else f"{np.median(rts):.1f}"
    print(f"{tag:44s} tailJ={tail:9.1f} sse={sse:6.3f} os={ovs:6.3f} rt={rt}",
          flush=True)

import warnings
warnings.filterwarnings("ignore", category=RuntimeWarning)
probe("sgd 1e-6/1e-7 sig1.0", critic_rate=1e-6, actor_rate=1e-7)
probe("adam 1e-3/1e-4 sig1.0", adaptive=True)
probe("adam 3e-4/3e-5 sig1.0", adaptive=True, critic_rate=3e-4,
      actor_rate=3e-5)
probe("adam 1e-3/1e-4 sig2.5", adaptive=True, explore_sigma=2.5)
probe("adam 1e-3/1e-4 sig2.5 blend.01", adaptive=True, explore_sigma=2.5,
      target_blend=0.01)
print("grid done", flush=True)
