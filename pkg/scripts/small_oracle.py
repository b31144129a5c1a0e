"""Exhaustive search on a small grid, compared with greedy, all-Bob and PPO.

    python3 scripts/small_oracle.py --config configs/worst_3x3.json --seeds 0,1,2,3,4
"""
import argparse
import json
import time

import numpy as np

from lumisec import Evaluator, PpoConfig, baseline, brute_force, build_scenario, train

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--config", default="configs/worst_3x3.json")
ap.add_argument("--mode", default="colluding")
ap.add_argument("--seeds", default="0,1,2,3,4")
ap.add_argument("--episodes", type=int, default=1500)
args = ap.parse_args()

scenario = build_scenario(json.loads(open(args.config).read()))
t0 = time.perf_counter()
best, opt, table = brute_force(scenario, args.mode)
print(f"oracle: {table.size} allocations in {time.perf_counter() - t0:.1f} s, "
      f"best {best.to_string()} = {opt:.6e} bit/s (worst {table.min():.6e})")
for kind in ("all-bob", "greedy"):
    alloc, val = baseline(scenario, kind, args.mode)
    print(f"{kind:>8}: {val:.6e} bit/s  gap {opt - val:.3e}  {alloc.to_string()}")
ev = Evaluator(scenario, args.mode)
vals = []
for seed in (int(s) for s in args.seeds.split(",")):
    res = train(ev, PpoConfig(seed=seed, episodes=args.episodes))
    vals.append(res.best_value)
    print(f"ppo seed {seed}: {res.best_value:.6e} bit/s  gap {opt - res.best_value:.3e}")
print(f"ppo median best {np.median(vals):.6e} bit/s")
