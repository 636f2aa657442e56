import time
import warnings

import numpy as np

from auvdepth.envs import ConstantDepthEnv
from auvdepth.dynamics import VehicleState
from auvdepth.metrics import compute_metrics
from auvdepth.trainer import TrainerConfig, Trainer, evaluate

warnings.filterwarnings("ignore", category=RuntimeWarning)

EPISODES = 150


def step_eval(actor, gamma):
    # noise-free 2m -> 8m step, the acceptance benchmark
    env = ConstantDepthEnv(z_ref=8.0, disturbance_sigma=0.0,
                           rng=np.random.default_rng(0))
    _, recs = evaluate(actor, env, 1, starts=[2.0], gamma=gamma)
    return compute_metrics(recs[0], gamma=gamma)


def run(tag, **kw):
    t0 = time.time()
    cfg = TrainerConfig(episodes=EPISODES, steps_per_episode=1000,
                        batch_size=64, seed=3, eval_every=10,
                        eval_episodes=1, **kw)
    env = ConstantDepthEnv(z_ref=8.0, rng=np.random.default_rng(103))
    tr = Trainer(env, cfg)
    try:
        res = tr.train()
    except Exception as e:
        print(f"{tag}: ABORT {e}", flush=True)
        return
    J = res.trace.episode_costs
    j50 = float(np.median(J[40:50])) if len(J) >= 50 else float("nan")
    j100 = float(np.median(J[90:100])) if len(J) >= 100 else float("nan")
    jend = float(np.median(J[-10:]))
    mins = (time.time() - t0) / 60
    for name, net in (("final", res.actor), ("best", res.best_actor)):
        if net is None:
            continue
        m = step_eval(net, cfg.gamma)
        rt = f"{m.rt_z:.1f}" if m.rt_z is not None else "None"
        print(f"{tag} [{name}]: J50={j50:.0f} J100={j100:.0f} Jend={jend:.0f} "
              f"sse={m.sse_z:.3f} os={m.overshoot_z:.3f} rt={rt} "
              f"({mins:.1f} min)", flush=True)


run("A adam 1e-3/1e-4 sig1.0 g0.99", adaptive=True, critic_rate=1e-3,
    actor_rate=1e-4, explore_sigma=1.0, gamma=0.99)
run("B adam 1e-3/1e-4 sig1.0 g0.95", adaptive=True, critic_rate=1e-3,
    actor_rate=1e-4, explore_sigma=1.0, gamma=0.95)
run("C adam 3e-3/3e-4 sig1.0 g0.99", adaptive=True, critic_rate=3e-3,
    actor_rate=3e-4, explore_sigma=1.0, gamma=0.99)
run("D adam 1e-3/1e-4 sig0.5 g0.99", adaptive=True, critic_rate=1e-3,
    actor_rate=1e-4, explore_sigma=0.5, explore_decay_to=0.05, gamma=0.99)
run("E sgd 1e-6/1e-7 sig1.0 g0.99", adaptive=False, critic_rate=1e-6,
    actor_rate=1e-7, explore_sigma=1.0, gamma=0.99)
run("F adam+blend.005 sig1.0 g0.99", adaptive=True, critic_rate=1e-3,
    actor_rate=1e-4, explore_sigma=1.0, gamma=0.99, target_blend=0.005)
print("long grid finished", flush=True)
