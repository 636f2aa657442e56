import time

import numpy as np

from auvdepth.envs import ConstantDepthEnv
from auvdepth.metrics import compute_metrics
from auvdepth.nets import save_checkpoint
from auvdepth.trainer import TrainerConfig, evaluate, train

OUT = open("/root/pkg/probe_wave2.out", "a", buffering=1)


def log(msg):
    print(msg, file=OUT)


def step_metrics(actor):
    env = ConstantDepthEnv(z_ref=8.0, disturbance_sigma=0.0,
                           rng=np.random.default_rng(0))
    _, recs = evaluate(actor, env, 1, starts=[2.0])
    m = compute_metrics(recs[0])
    return m.sse_z, m.overshoot_z, m.rt_z


def run(tag, **kw):
    base = dict(episodes=500, eval_every=5, eval_episodes=3,
                explore_decay_to=0.05, seed=3)
    base.update(kw)
    cfg = TrainerConfig(**base)
    env = ConstantDepthEnv(rng=np.random.default_rng(103))
    t0 = time.time()
    res = train(env, cfg)
    mins = (time.time() - t0) / 60
    J = res.trace.episode_costs
    marks = [int(np.median(J[max(0, k - 10):k])) for k in (50, 150, 300, 500)]
    for name, actor in (("final", res.actor), ("best", res.best_actor)):
        if actor is None:
            continue
        sse, os_, rt = step_metrics(actor)
        save_checkpoint(actor, f"/root/pkg/probe_{tag}_{name}.ckpt")
        log(f"{tag} [{name}]: J@{marks} best_ep={res.best_episode} "
            f"sse={sse:.3f} os={os_:.3f} rt={rt} ({mins:.1f} min)")


run("J_adam_sel5", adaptive=True, critic_rate=1e-3, actor_rate=1e-4)
run("L_sgd_tiny", adaptive=False, critic_rate=1e-6, actor_rate=1e-7)
run("M_adam_half", adaptive=True, critic_rate=5e-4, actor_rate=5e-5)
log("wave2 finished")
OUT.close()
