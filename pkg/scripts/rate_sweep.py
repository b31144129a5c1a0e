"""Rates versus transmit power, LoS only and with every element serving Bob.

Writes one rates.csv per preset under OUT/<preset>/.
    python3 scripts/rate_sweep.py --out results/rates
"""
import argparse
import sys

from lumisec.cli import main

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--out", default="results/rates")
ap.add_argument("--power", default="1,2,3,4,5,6,7,8,9,10")
ap.add_argument("--panels", default="4096")
args = ap.parse_args()

for case in ("best", "worst"):
    rc = main(["simulate", "--scenario", f"configs/{case}_15x15.json", "--power", args.power,
               "--panels", args.panels, "--out", f"{args.out}/{case}"])
    if rc:
        sys.exit(rc)
