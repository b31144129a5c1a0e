"""Property-based self-checks, usable from the CLI and the test suite.

Each suite draws its cases from a seeded generator and returns a
:class:`SuiteResult`.  ``FAULTS`` lists deliberately broken variants that the
suites must detect.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import Evaluator, baseline, brute_force
from .channel import PathSet, cfr, cfr_power_expanded, lambertian_order, los_path, nlos_path
from .nets import MLP, log_softmax
from .ppo import actor_loss_and_grads, critic_loss_and_grads
from .scene import OpticalParams, Point3, Scenario, build_scenario
from .secrecy import Quadrature, SnrPrefix, rate_exact

FAULTS = ("cross-sign",)
CANONICAL_LED = Point3(2.5, 2.5, 3.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    cases: int
    worst: float  # largest observed error (suite-specific units)
    tolerance: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: cases={self.cases} worst={self.worst:.3e} tol={self.tolerance:.1e}"


def random_pathset(rng: np.random.Generator, n: int) -> PathSet:
    los_delay = rng.uniform(5e-9, 15e-9)
    return PathSet(rng.uniform(1e-6, 2e-5), los_delay,
                   rng.uniform(0, 5e-6, size=n), los_delay + rng.uniform(0, 20e-9, size=n))


def random_physical_pathset(rng: np.random.Generator, n: int, optical: OpticalParams = OpticalParams()) -> PathSet:
    """Paths for a random receiver and ``n`` random points on the x = 0 wall of
    the canonical room.  Unlike :func:`random_pathset` the gains obey the
    geometry, so the NLoS terms stay comparable to or below the LoS term."""
    m = lambertian_order(optical.half_power_semi_angle)
    user = Point3(rng.uniform(0.1, 4.9), rng.uniform(0.1, 4.9), rng.uniform(0.3, 1.2))
    los = los_path(CANONICAL_LED, user, optical, m)
    comps = [nlos_path(CANONICAL_LED, Point3(0.0, rng.uniform(0.1, 4.9), rng.uniform(0.1, 2.9)), user, optical, m)
             for _ in range(n)]
    return PathSet(los.gain, los.delay, np.array([c.gain for c in comps]), np.array([c.delay for c in comps]))


def random_scenario(rng: np.random.Generator, n_eves: int, rows: int = 2, cols: int = 3) -> Scenario:
    """Distinct receivers at random in the canonical room, small IRS, random power."""
    while True:
        pts = np.column_stack([rng.uniform(0.2, 4.8, n_eves + 1), rng.uniform(0.2, 4.8, n_eves + 1),
                               rng.uniform(0.3, 1.2, n_eves + 1)])
        gaps = np.linalg.norm(pts[:, None] - pts[None], axis=-1)[np.triu_indices(n_eves + 1, 1)]
        if gaps.size == 0 or gaps.min() > 1e-3:
            break
    cfg = {"bob": pts[0].tolist(), "eves": pts[1:].tolist(),
           "irs": {"rows": rows, "cols": cols, "pitch_h": 0.6, "pitch_v": 0.6},
           "system": {"optical_power_w": float(rng.uniform(1.0, 10.0))}}
    return build_scenario(cfg)


def expansion_identity(rng: np.random.Generator, cases: int = 1000, freqs: int = 10,
                       tol: float = 1e-12, cross_sign: float = 1.0) -> SuiteResult:
    worst, bad = 0.0, 0
    for _ in range(cases):
        n = int(rng.integers(0, 11))
        ps = random_physical_pathset(rng, n)
        active = np.flatnonzero(rng.random(n) < 0.7)
        f = rng.uniform(0.0, 5e8, size=freqs)
        direct = np.abs(cfr(ps, active, f)) ** 2
        err = np.max(np.abs(cfr_power_expanded(ps, active, f, cross_sign=cross_sign) - direct) / direct)
        worst = max(worst, float(err))
        bad += int(err > tol)
    return SuiteResult("expansion-identity", cases, worst, tol, bad)


def flat_channel(rng: np.random.Generator, cases: int = 100, tol: float = 1e-9) -> SuiteResult:
    worst, bad = 0.0, 0
    for _ in range(cases):
        ps = random_pathset(rng, int(rng.integers(0, 6)))
        pre = SnrPrefix(10 ** rng.uniform(10, 13), 1.0 / (2 * rng.uniform(0.5e-9, 5e-9)))
        expected = pre.f_max * np.log2(1 + pre.scale * ps.los_gain ** 2)
        err = abs(rate_exact(ps, [], pre).rate - expected) / expected
        worst = max(worst, err)
        bad += int(err > tol)
    return SuiteResult("flat-channel", cases, worst, tol, bad)


def _random_report(rng, n_eves, quadrature):
    s = random_scenario(rng, n_eves)
    tags = rng.integers(0, n_eves + 1, size=s.n_irs)
    col = Evaluator(s, "colluding", quadrature=quadrature).report(tags)
    return col, 2 * quadrature.rtol * max(col.rate_bob, *col.rates_eves)


def mrc_dominance(rng: np.random.Generator, cases: int = 200, quadrature: Quadrature = Quadrature()) -> SuiteResult:
    """Colluding capacity never exceeds non-colluding (up to twice the quadrature tolerance)."""
    worst, bad = -np.inf, 0
    for _ in range(cases):
        rep, tol = _random_report(rng, int(rng.integers(1, 4)), quadrature)
        excess = (rep.cs_colluding - rep.cs_non_colluding) / tol
        worst = max(worst, excess)
        bad += int(excess > 1.0)
    return SuiteResult("mrc-dominance", cases, worst, 1.0, bad)


def single_eve_modes(rng: np.random.Generator, cases: int = 100,
                     quadrature: Quadrature = Quadrature()) -> SuiteResult:
    """With one eavesdropper both modes give the same capacity."""
    worst, bad = 0.0, 0
    for _ in range(cases):
        rep, tol = _random_report(rng, 1, quadrature)
        err = abs(rep.cs_colluding - rep.cs_non_colluding) / tol
        worst = max(worst, err)
        bad += int(err > 1.0)
    return SuiteResult("single-eve-modes", cases, worst, 1.0, bad)


def _kink_free(ratio, clip, margin=1e-3):
    return np.all(np.abs(ratio - (1 - clip)) > margin) and np.all(np.abs(ratio - (1 + clip)) > margin)


def _relative_error(analytic: dict, numeric: dict) -> float:
    worst = 0.0
    for k, a in analytic.items():
        n = numeric[k]
        worst = max(worst, float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-7))))
    return worst


def _numeric_grads(net: MLP, loss_fn, h: float) -> dict:
    out = {}
    for k, p in net.params.items():
        g = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            keep = p[i]
            p[i] = keep + h
            up = loss_fn()
            p[i] = keep - h
            down = loss_fn()
            p[i] = keep
            g[i] = (up - down) / (2 * h)
        out[k] = g
    return out


def gradient_check_case(rng: np.random.Generator, h: float = 1e-5, clip: float = 0.2,
                        entropy_coeff: float = 0.01) -> float:
    """Worst relative error of analytic vs central-difference gradients for
    one random actor/critic pair.  Samples near the clip kinks are redrawn."""
    n_in, hidden, n_out, batch = (int(rng.integers(2, 7)), int(rng.integers(2, 9)),
                                  int(rng.integers(2, 5)), int(rng.integers(2, 9)))
    actor = MLP(n_in, hidden, n_out, rng)
    critic = MLP(n_in, hidden, 1, rng)
    for net in (actor, critic):
        for v in net.params.values():
            v += rng.normal(0, 0.3, size=v.shape)
    x = rng.normal(size=(batch, n_in))
    actions = rng.integers(0, n_out, size=batch)
    adv = rng.normal(size=batch)
    returns = rng.normal(size=batch)
    base = log_softmax(actor(x))[np.arange(batch), actions]
    while True:
        old = base + rng.normal(0, 0.3, size=batch)
        if _kink_free(np.exp(base - old), clip):
            break

    def a_loss():
        return actor_loss_and_grads(actor, x, actions, old, adv, clip, entropy_coeff)[0]

    def c_loss():
        return critic_loss_and_grads(critic, x, returns)[0]

    _, a_grads, _ = actor_loss_and_grads(actor, x, actions, old, adv, clip, entropy_coeff)
    _, c_grads = critic_loss_and_grads(critic, x, returns)
    return max(_relative_error(a_grads, _numeric_grads(actor, a_loss, h)),
               _relative_error(c_grads, _numeric_grads(critic, c_loss, h)))


def gradient_check(rng: np.random.Generator, cases: int = 50, tol: float = 1e-4) -> SuiteResult:
    errs = [gradient_check_case(rng) for _ in range(cases)]
    return SuiteResult("gradient-check", cases, max(errs), tol, sum(e > tol for e in errs))


def oracle_dominance(rng: np.random.Generator, cases: int = 6) -> SuiteResult:
    """Exhaustive search is never beaten by a baseline (exact comparison)."""
    worst, bad = -np.inf, 0
    q = Quadrature(panels=1024, check=False)
    for _ in range(cases):
        s = random_scenario(rng, int(rng.integers(1, 3)), rows=2, cols=2)
        mode = ("colluding", "non-colluding")[int(rng.integers(0, 2))]
        _, best, _ = brute_force(s, mode, quadrature=q)
        for kind in ("all-bob", "greedy", "uniform-random"):
            _, val = baseline(s, kind, mode, seed=int(rng.integers(0, 2 ** 31)), quadrature=q)
            worst = max(worst, val - best)
            bad += int(val > best)
    return SuiteResult("oracle-dominance", cases, worst, 0.0, bad)


def run_all(seed: int = 0, inject_fault: str | None = None, scale: float = 1.0) -> list[SuiteResult]:
    """Run every suite; ``scale`` shrinks case counts for quick runs."""
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; choose from {FAULTS}")
    rng = np.random.default_rng(seed)
    n = lambda c: max(1, int(round(c * scale)))  # noqa: E731
    sign = -1.0 if inject_fault == "cross-sign" else 1.0
    return [
        expansion_identity(rng, n(1000), cross_sign=sign),
        flat_channel(rng, n(100)),
        mrc_dominance(rng, n(200)),
        single_eve_modes(rng, n(100)),
        gradient_check(rng, n(50)),
        oracle_dominance(rng, n(6)),
    ]
