import time
import warnings

import numpy as np

from auvdepth.envs import ConstantDepthEnv
from auvdepth.metrics import compute_metrics
from auvdepth.nets import save_checkpoint
from auvdepth.trainer import TrainerConfig, Trainer, evaluate

warnings.filterwarnings("ignore", category=RuntimeWarning)


def step_eval(actor, gamma):
    env = ConstantDepthEnv(z_ref=8.0, disturbance_sigma=0.0,
                           rng=np.random.default_rng(0))
    _, recs = evaluate(actor, env, 1, starts=[2.0], gamma=gamma)
    return compute_metrics(recs[0], gamma=gamma)


def run(tag, episodes=500, **kw):
    t0 = time.time()
    cfg = TrainerConfig(episodes=episodes, steps_per_episode=1000,
                        seed=3, eval_every=10, eval_episodes=3,
                        explore_decay_to=0.05, adaptive=True,
                        critic_rate=1e-3, gamma=0.99, explore_sigma=1.0, **kw)
    env = ConstantDepthEnv(z_ref=8.0, rng=np.random.default_rng(103))
    tr = Trainer(env, cfg)
    try:
        res = tr.train()
    except Exception as e:
        print(f"{tag}: ABORT {e}", flush=True)
        return
    J = res.trace.episode_costs
    jq = " ".join(f"{float(np.median(J[max(0,k-10):k])):.0f}"
                  for k in (50, 150, 300, 500) if k <= len(J))
    mins = (time.time() - t0) / 60
    for name, net in (("final", res.actor), ("best", res.best_actor)):
        if net is None:
            continue
        m = step_eval(net, cfg.gamma)
        rt = f"{m.rt_z:.1f}" if m.rt_z is not None else "None"
        print(f"{tag} [{name}]: J@[{jq}] best_ep={res.best_episode} "
              f"sse={m.sse_z:.3f} os={m.overshoot_z:.3f} rt={rt} "
              f"({mins:.1f} min)", flush=True)
        save_checkpoint(net, f"/root/pkg/probe_{tag.split()[0]}_{name}.ckpt")


run("G plain a1e-4", actor_rate=1e-4)
run("H blend.01 a5e-5", actor_rate=5e-5, target_blend=0.01)
run("I batch128 a1e-4", actor_rate=1e-4, batch_size=128)
print("500 grid finished", flush=True)
