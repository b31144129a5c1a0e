"""PPO training curves against the all-Bob reference on the 15x15 presets.

    python3 scripts/convergence.py --seeds 0,1,2 --power 3 --out results/convergence
Each (preset, mode) cell gets its own directory with per-seed convergence CSVs,
best_allocations.csv and all_bob_reference.csv.  Expect ~2 minutes per seed
on one core.
"""
import argparse
import sys

from lumisec.cli import main

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--out", default="results/convergence")
ap.add_argument("--seeds", default="0")
ap.add_argument("--power", default="3")
ap.add_argument("--episodes", default=None)
ap.add_argument("--cases", default="best,worst")
ap.add_argument("--modes", default="colluding,non-colluding")
args = ap.parse_args()

extra = ["--episodes", args.episodes] if args.episodes else []
for case in args.cases.split(","):
    for mode in args.modes.split(","):
        rc = main(["optimize", "--scenario", f"configs/{case}_15x15.json", "--mode", mode, "--power", args.power,
                   "--seeds", args.seeds, "--out", f"{args.out}/{case}_{mode}", *extra])
        if rc:
            sys.exit(rc)
