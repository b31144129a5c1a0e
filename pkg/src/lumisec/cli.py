"""Command-line front end.

Subcommands write CSV files into ``--out``; every file starts with a ``#``
provenance line (package version, config hash, seed) followed by a header row.
Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 validation failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .allocation import Allocation, Evaluator, ObjectiveMode, baseline, brute_force, write_csv_atomic, write_golden_csv
from .channel import scenario_paths
from .errors import LumisecError, NumericalError
from .ppo import PpoConfig, save_checkpoint, train
from .scene import PRESETS, build_scenario, config_hash, preset_config
from .secrecy import Quadrature, rate_exact, snr_prefix
from .validate import FAULTS, run_all

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3
OPTIMIZERS = ("ppo", "all-bob", "random", "greedy", "brute-force")
DEFAULT_SWEEP = [float(p) for p in range(1, 11)]
PRESETS_POWER = 6.0  # scenario power for bare preset names; --power overrides


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def max_workers() -> int:
    cap = os.environ.get("LUMISEC_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"LUMISEC_THREADS must be an integer, got {cap!r}") from None
    return n


def resolve_config(text: str) -> dict:
    """A JSON file path, or a preset name ``best`` / ``worst`` with optional ``:RxC`` grid."""
    path = Path(text)
    if path.is_file():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not valid JSON ({exc})") from None
    case, _, grid = text.partition(":")
    if case in PRESETS:
        rows, cols = 15, 15
        if grid:
            try:
                rows, cols = (int(v) for v in grid.lower().split("x"))
            except ValueError:
                raise UsageError(f"bad grid {grid!r}; expected e.g. 4x4") from None
        return preset_config(case, rows, cols, PRESETS_POWER)
    raise UsageError(f"scenario {text!r} is neither a file nor a preset ({', '.join(sorted(PRESETS))})")


def _provenance(config: dict, seed: int | str, **extra) -> str:
    parts = [f"lumisec {__version__}", f"config={config_hash(config)}", f"seed={seed}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts)


def _fmt(x: float) -> str:
    return repr(float(x))


def _powers(args, scenario, default_sweep: bool) -> list[float]:
    if args.power is None:
        powers = DEFAULT_SWEEP if default_sweep else [scenario.system.optical_power]
    else:
        powers = args.power
    if not powers:
        raise UsageError("empty power sweep")
    if any(p <= 0 for p in powers):
        raise UsageError("powers must be positive")
    return sorted(set(powers))


def _choose_allocation(scenario, optimizer: str, mode: str, power: float, seed: int, quadrature: Quadrature,
                       episodes: int | None = None):
    """Returns (allocation, objective, ppo TrainResult or None)."""
    if optimizer == "ppo":
        cfg = PpoConfig(seed=seed) if episodes is None else PpoConfig(seed=seed, episodes=episodes)
        res = train(Evaluator(scenario, mode, power, quadrature), cfg)
        return res.best_allocation, res.best_value, res
    if optimizer == "brute-force":
        alloc, val, _ = brute_force(scenario, mode, power, quadrature=quadrature)
        return alloc, val, None
    kind = "uniform-random" if optimizer == "random" else optimizer
    alloc, val = baseline(scenario, kind, mode, power, seed=seed, quadrature=quadrature)
    return alloc, val, None


# --------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    config = resolve_config(args.scenario)
    scenario = build_scenario(config)
    powers = _powers(args, scenario, default_sweep=True)
    quad = Quadrature(args.panels)
    seed = args.seeds[0] if args.seeds else 0
    users = ["B"] + [f"E{k}" for k in range(1, scenario.n_eves + 1)]
    paths = scenario_paths(scenario)
    rows = []
    for p in powers:
        if args.optimizer == "all-bob" or scenario.n_eves == 0:
            alloc = Allocation.all_bob(scenario.n_irs)
        else:
            alloc = _choose_allocation(scenario, args.optimizer, args.mode, p, seed, quad, args.episodes)[0]
        prefix = snr_prefix(scenario.system, scenario.optical, p)
        tags = np.asarray(alloc.assign, dtype=int)
        for k, name in enumerate(users):
            los = rate_exact(paths[k], [], prefix, quad).rate
            irs = rate_exact(paths[k], np.flatnonzero(tags == k), prefix, quad).rate
            gain = 100.0 * (irs - los) / los if los > 0 else float("nan")
            rows.append((p, k, [_fmt(p), name, _fmt(los), _fmt(irs), _fmt(gain)]))
    rows.sort(key=lambda r: (r[0], r[1]))
    out = Path(args.out) / "rates.csv"
    write_csv_atomic(out, ["power_w", "user", "rate_los_bps", "rate_irs_bps", "gain_pct"], [r[2] for r in rows],
                     _provenance(config, seed, command="simulate", optimizer=args.optimizer, mode=args.mode))
    print(f"wrote {out}")
    return EXIT_OK


def _optimize_cell(job):
    config, optimizer, mode, power, seed, panels, episodes, ckpt_dir = job
    scenario = build_scenario(config)
    quad = Quadrature(panels)
    alloc, val, res = _choose_allocation(scenario, optimizer, mode, power, seed, quad, episodes)
    report = Evaluator(scenario, mode, power, quad).report(alloc)
    curve = None
    if res is not None:
        curve = np.column_stack([np.arange(1, len(res.rewards) + 1), res.rewards, res.best_so_far])
        if ckpt_dir is not None:
            Path(ckpt_dir).mkdir(parents=True, exist_ok=True)
            save_checkpoint(Path(ckpt_dir) / f"checkpoint_p{power:g}_seed{seed}.npz", res.nets,
                            PpoConfig(seed=seed) if episodes is None else PpoConfig(seed=seed, episodes=episodes))
    return power, seed, alloc, val, report.capacity, curve


def cmd_optimize(args) -> int:
    config = resolve_config(args.scenario)
    scenario = build_scenario(config)
    if scenario.n_eves == 0:
        raise UsageError("optimisation needs at least one eavesdropper")
    powers = _powers(args, scenario, default_sweep=False)
    seeds = sorted(set(args.seeds)) if args.seeds else [0]
    stochastic = args.optimizer in ("ppo", "random")
    cells = [(p, s) for p in powers for s in (seeds if stochastic else [0])]
    out = Path(args.out)
    ckpt = str(out) if args.checkpoint else None
    jobs = [(config, args.optimizer, args.mode, p, s, args.panels, args.episodes, ckpt) for p, s in cells]
    workers = min(max_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_optimize_cell, jobs))
    else:
        results = [_optimize_cell(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))

    best_rows, ref_rows = [], []
    quad = Quadrature(args.panels)
    for power, seed, alloc, val, cap, curve in results:
        best_rows.append([_fmt(power), str(seed), args.optimizer, _fmt(val), _fmt(cap), alloc.to_string()])
        if curve is not None:
            path = out / f"convergence_p{power:g}_seed{seed}.csv"
            write_csv_atomic(path, ["episode", "reward_bits_per_s", "best_so_far_bits_per_s"],
                             ([str(int(e)), _fmt(r), _fmt(b)] for e, r, b in curve),
                             _provenance(config, seed, command="optimize", mode=args.mode, power_w=power))
    for power in powers:
        rep = Evaluator(scenario, args.mode, power, quad).report(Allocation.all_bob(scenario.n_irs))
        ref_rows.append([_fmt(power), _fmt(rep.objective), _fmt(rep.capacity)])
    header = ["power_w", "seed", "optimizer", "objective_bits_per_s", "capacity_bits_per_s", "allocation"]
    seeds_text = ";".join(map(str, seeds)) if stochastic else "-"
    write_csv_atomic(out / "best_allocations.csv", header, best_rows,
                     _provenance(config, seeds_text, command="optimize", mode=args.mode))
    write_csv_atomic(out / "all_bob_reference.csv", ["power_w", "objective_bits_per_s", "capacity_bits_per_s"],
                     ref_rows, _provenance(config, "-", command="optimize", mode=args.mode))
    for r in best_rows:
        print(f"P={r[0]} W seed={r[1]} {args.optimizer}: objective={float(r[3]):.6e} bit/s")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = resolve_config(args.scenario)
    scenario = build_scenario(config)
    if scenario.n_eves == 0:
        raise UsageError("the oracle needs at least one eavesdropper")
    powers = _powers(args, scenario, default_sweep=False)
    out = Path(args.out)
    for p in powers:
        alloc, val, table = brute_force(scenario, args.mode, p, quadrature=Quadrature(args.panels),
                                        workers=max_workers())
        path = out / (f"oracle_p{p:g}.csv")
        write_golden_csv(path, table, scenario.n_irs, scenario.n_eves,
                         _provenance(config, "-", command="oracle", mode=args.mode, power_w=p))
        print(f"P={p:g} W: {table.size} allocations, best {alloc.to_string()} = {val:.6e} bit/s")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    seed = args.seeds[0] if args.seeds else 0
    results = run_all(seed, inject_fault=args.inject_fault, scale=args.scale)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="best",
                        help="JSON config file, or preset 'best'/'worst' with optional ':RxC' grid (default: best)")
    common.add_argument("--mode", choices=[m.value for m in ObjectiveMode], default="colluding")
    common.add_argument("--power", type=_float_list, default=None,
                        help="comma-separated transmit powers in W")
    common.add_argument("--seeds", type=_int_list, default=None, help="comma-separated seeds (default 0)")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--panels", type=int, default=4096, help="Simpson panels (even)")

    parser = _Parser(prog="lumisec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lumisec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", parents=[common], help="LoS vs LoS+IRS rates over a power sweep (default 1-10 W)")
    sim.add_argument("--optimizer", choices=OPTIMIZERS, default="all-bob",
                     help="how to pick the allocation at each power")
    sim.add_argument("--episodes", type=int, default=None, help=argparse.SUPPRESS)

    opt = sub.add_parser("optimize", parents=[common], help="search for the best allocation")
    opt.add_argument("--optimizer", choices=OPTIMIZERS, default="ppo")
    opt.add_argument("--episodes", type=int, default=None, help="override the PPO episode count")
    opt.add_argument("--checkpoint", action="store_true", help="also save PPO network checkpoints")

    sub.add_parser("oracle", parents=[common], help="exhaustive enumeration table")

    val = sub.add_parser("validate", parents=[common], help="run the invariant suites")
    val.add_argument("--scale", type=float, default=1.0, help="multiplier on the per-suite case counts")
    val.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    return parser


COMMANDS = {"simulate": cmd_simulate, "optimize": cmd_optimize, "oracle": cmd_oracle, "validate": cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.panels < 2 or args.panels % 2:
            raise UsageError("--panels must be an even integer >= 2")
        if getattr(args, "episodes", None) is not None and args.episodes < 1:
            raise UsageError("--episodes must be positive")
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"lumisec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, LumisecError, ValueError, OSError) as exc:
        print(f"lumisec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
