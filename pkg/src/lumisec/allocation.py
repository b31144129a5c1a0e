"""IRS element allocation: objective evaluation, baselines and exhaustive search.

An allocation assigns every IRS element to exactly one user; tag ``0`` is Bob
and tag ``j`` (``1 <= j <= K``) is eavesdropper ``E_j``.  A user's CFR only
includes the elements assigned to it.

The optimisation objective is the *signed* secrecy value (the integral before
the ``[.]^+`` clamp).  Maximising it also maximises the clamped capacity, and
it still ranks allocations when every candidate is insecure.
"""
from __future__ import annotations

import csv
import enum
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import phasor_table, scenario_paths
from .errors import EmptyEveSet, SearchSpaceTooLarge
from .scene import Scenario
from .secrecy import (Quadrature, SecrecyReport, check_convergence, frequency_grid, integrate,
                      simpson_weights, snr_prefix)

UNASSIGNED = -1


class ObjectiveMode(str, enum.Enum):
    COLLUDING = "colluding"
    NON_COLLUDING = "non-colluding"

    @classmethod
    def parse(cls, value: "str | ObjectiveMode") -> "ObjectiveMode":
        return value if isinstance(value, cls) else cls(str(value))


def tag_name(tag: int) -> str:
    return "B" if tag == 0 else f"E{tag}"


def tag_from_name(name: str) -> int:
    if name == "B":
        return 0
    if name.startswith("E") and name[1:].isdigit() and int(name[1:]) >= 1:
        return int(name[1:])
    raise ValueError(f"unknown user tag {name!r}")


@dataclass(frozen=True)
class Allocation:
    assign: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "assign", tuple(int(a) for a in self.assign))

    @classmethod
    def all_bob(cls, n_irs: int) -> "Allocation":
        return cls((0,) * n_irs)

    def validate(self, n_irs: int, n_eves: int) -> "Allocation":
        if len(self.assign) != n_irs:
            raise ValueError(f"allocation has {len(self.assign)} entries, scenario has {n_irs} elements")
        if any(not 0 <= a <= n_eves for a in self.assign):
            raise ValueError(f"allocation tags must lie in 0..{n_eves}")
        return self

    def active_sets(self, n_users: int) -> list[np.ndarray]:
        arr = np.asarray(self.assign, dtype=int)
        return [np.flatnonzero(arr == k) for k in range(n_users)]

    def to_string(self) -> str:
        return ".".join(tag_name(a) for a in self.assign)

    @classmethod
    def from_string(cls, text: str) -> "Allocation":
        return cls(tuple(tag_from_name(t) for t in text.split("."))) if text else cls(())

    def __len__(self) -> int:
        return len(self.assign)


class Evaluator:
    """Objective evaluation for one (scenario, power, mode), with the per-user
    phasor tables on the quadrature grid precomputed.

    User CFRs are accumulated element by element in index order, so a given
    allocation always produces bit-identical results regardless of who asks.
    """

    def __init__(self, scenario: Scenario, mode="colluding", power: float | None = None,
                 quadrature: Quadrature = Quadrature()):
        self.scenario = scenario
        self.mode = ObjectiveMode.parse(mode)
        self.power = scenario.system.optical_power if power is None else float(power)
        self.quadrature = quadrature
        self.prefix = snr_prefix(scenario.system, scenario.optical, self.power)
        self.paths = scenario_paths(scenario)
        self.freqs = frequency_grid(self.prefix.f_max, quadrature.panels)
        self.weights = simpson_weights(self.prefix.f_max, quadrature.panels)
        tables = [phasor_table(p, self.freqs) for p in self.paths]
        self._los = [t[0] for t in tables]
        self._nlos = [t[1] for t in tables]
        self._fine: Evaluator | None = None

    @property
    def n_irs(self) -> int:
        return self.scenario.n_irs

    @property
    def n_users(self) -> int:
        return 1 + self.scenario.n_eves

    def user_power(self, user: int, assign: np.ndarray) -> np.ndarray:
        idx = np.flatnonzero(assign == user)
        q = self._los[user]
        if idx.size:
            q = q + self._nlos[user][idx].sum(axis=0)
        return q.real ** 2 + q.imag ** 2

    def _integrals(self, assign: np.ndarray) -> tuple[float, list[float], float, float, float]:
        lam = self.prefix.scale
        powers = [self.user_power(k, assign) for k in range(self.n_users)]
        rates = [integrate(np.log2(1.0 + lam * p), self.weights) for p in powers]
        if self.n_users == 1:
            return rates[0], [], 0.0, 0.0, 0.0
        p_coll = powers[1].copy()
        for p in powers[2:]:
            p_coll += p
        r_coll = integrate(np.log2(1.0 + lam * p_coll), self.weights)
        ratio = np.log2((1.0 + lam * powers[0]) / (1.0 + lam * p_coll))
        return rates[0], rates[1:], r_coll, integrate(ratio, self.weights), integrate(np.abs(ratio), self.weights)

    def report(self, alloc: "Allocation | Sequence[int] | np.ndarray") -> SecrecyReport:
        assign = _as_array(alloc)
        if assign.size != self.n_irs:
            raise ValueError(f"allocation has {assign.size} entries, scenario has {self.n_irs} elements")
        if self.n_users == 1:
            raise EmptyEveSet("secrecy objectives need at least one eavesdropper")
        r_bob, r_eves, r_coll, signed_coll, _ = self._integrals(assign)
        signed_nc = r_bob - max(r_eves)
        return SecrecyReport(r_bob, tuple(r_eves), r_coll, signed_nc, signed_coll, self.mode.value)

    def objective(self, alloc) -> float:
        return self.report(alloc).objective

    def check(self, alloc) -> None:
        """Raise IntegrationNotConverged if doubling the panel count moves any integral."""
        if self._fine is None:
            self._fine = Evaluator(self.scenario, self.mode, self.power,
                                   Quadrature(self.quadrature.panels * 2, self.quadrature.rtol, False))
        assign = _as_array(alloc)
        coarse = self._integrals(assign)
        fine = self._fine._integrals(assign)
        rtol = self.quadrature.rtol
        check_convergence(coarse[0], fine[0], fine[0], rtol, "Bob rate")
        for a, b in zip(coarse[1], fine[1]):
            check_convergence(a, b, b, rtol, "eavesdropper rate")
        if coarse[1]:
            check_convergence(coarse[3], fine[3], fine[4], rtol, "colluding secrecy integral")


def _as_array(alloc) -> np.ndarray:
    if isinstance(alloc, Allocation):
        return np.asarray(alloc.assign, dtype=int)
    return np.asarray(alloc, dtype=int).reshape(-1)


def evaluate_objective(scenario: Scenario, alloc: Allocation, mode="colluding", power: float | None = None,
                       quadrature: Quadrature = Quadrature()) -> SecrecyReport:
    alloc.validate(scenario.n_irs, scenario.n_eves)
    ev = Evaluator(scenario, mode, power, quadrature)
    if quadrature.check:
        ev.check(alloc)
    return ev.report(alloc)


# --------------------------------------------------------------------------
# exhaustive oracle

def search_space_size(n_irs: int, n_eves: int) -> int:
    return (n_eves + 1) ** n_irs


def _enumerate_chunk(args) -> np.ndarray:
    scenario, mode, power, quadrature, start, stop = args
    ev = Evaluator(scenario, mode, power, quadrature)
    return _evaluate_range(ev, start, stop)


def _evaluate_range(ev: Evaluator, start: int, stop: int) -> np.ndarray:
    base = ev.n_users
    n = ev.n_irs
    out = np.empty(stop - start)
    for i, code in enumerate(range(start, stop)):
        out[i] = ev.objective(_decode(code, base, n))
    return out


def _decode(code: int, base: int, n: int) -> np.ndarray:
    """Lexicographic rank -> allocation (element 0 is the most significant digit)."""
    digits = np.zeros(n, dtype=int)
    for pos in range(n - 1, -1, -1):
        code, digits[pos] = divmod(code, base)
    return digits


def allocation_at(rank: int, n_irs: int, n_eves: int) -> Allocation:
    return Allocation(tuple(_decode(rank, n_eves + 1, n_irs)))


def brute_force(scenario: Scenario, mode="colluding", power: float | None = None, max_size: int = 10 ** 7,
                quadrature: Quadrature = Quadrature(), workers: int = 1) -> tuple[Allocation, float, np.ndarray]:
    """Evaluate every allocation in lexicographic order.

    Returns the argmax (lexicographically smallest among ties), its objective
    value and the full value table indexed by lexicographic rank.
    """
    total = search_space_size(scenario.n_irs, scenario.n_eves)
    if total > max_size:
        raise SearchSpaceTooLarge(f"{scenario.n_eves + 1}^{scenario.n_irs} allocations exceed the cap of {max_size}")
    if workers <= 1 or total < 4096:
        table = _evaluate_range(Evaluator(scenario, mode, power, quadrature), 0, total)
    else:
        bounds = np.linspace(0, total, workers + 1).astype(int)
        jobs = [(scenario, mode, power, quadrature, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            table = np.concatenate(list(pool.map(_enumerate_chunk, jobs)))
    best = int(np.argmax(table))  # first maximum == lexicographically smallest
    alloc = allocation_at(best, scenario.n_irs, scenario.n_eves)
    return alloc, float(table[best]), table


# --------------------------------------------------------------------------
# baselines

BASELINES = ("all-bob", "uniform-random", "greedy")


def greedy_allocation(ev: Evaluator) -> tuple[Allocation, float]:
    assign = np.full(ev.n_irs, UNASSIGNED, dtype=int)
    for n in range(ev.n_irs):
        best_tag, best_val = 0, -np.inf
        for tag in range(ev.n_users):
            assign[n] = tag
            val = ev.objective(assign)
            if val > best_val:  # strict: ties keep the smaller tag
                best_tag, best_val = tag, val
        assign[n] = best_tag
    alloc = Allocation(tuple(assign))
    return alloc, ev.objective(alloc)


def baseline(scenario: Scenario, kind: str, mode="colluding", power: float | None = None, seed: int | None = None,
             quadrature: Quadrature = Quadrature()) -> tuple[Allocation, float]:
    ev = Evaluator(scenario, mode, power, quadrature)
    if kind == "all-bob":
        alloc = Allocation.all_bob(scenario.n_irs)
    elif kind == "uniform-random":
        if seed is None:
            raise ValueError("uniform-random baseline needs a seed")
        rng = np.random.default_rng(seed)
        alloc = Allocation(tuple(rng.integers(0, scenario.n_eves + 1, size=scenario.n_irs)))
    elif kind == "greedy":
        return greedy_allocation(ev)
    else:
        raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINES}")
    return alloc, ev.objective(alloc)


# --------------------------------------------------------------------------
# golden files

def write_golden_csv(path: str | Path, table: np.ndarray, n_irs: int, n_eves: int,
                     comment: str | None = None, flag_argmax: bool = True) -> None:
    best = int(np.argmax(table))
    rows = ((allocation_at(i, n_irs, n_eves).to_string(), repr(float(v)), int(i == best))
            for i, v in enumerate(table))
    header = ["alloc", "objective_bits_per_s"] + (["argmax"] if flag_argmax else [])
    write_csv_atomic(path, header, ([a, v, f] if flag_argmax else [a, v] for a, v, f in rows), comment)


def read_golden_csv(path: str | Path) -> tuple[list[Allocation], np.ndarray]:
    allocs, values = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in reader:
            allocs.append(Allocation.from_string(row["alloc"]))
            values.append(float(row["objective_bits_per_s"]))
    return allocs, np.asarray(values)


def write_csv_atomic(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], comment: str | None = None):
    """Write a CSV via temp file + rename; ``comment`` becomes a leading ``#`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    with open(tmp, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def all_allocations(n_irs: int, n_eves: int) -> Iterable[tuple[int, ...]]:
    return itertools.product(range(n_eves + 1), repeat=n_irs)
