"""SNR, achievable rates and secrecy capacities.

Rates integrate ``log2(1 + Lambda |Q(f)|^2)`` over ``[0, 1/(2 T_s)]`` with a
composite Simpson rule on a uniform grid.  A closed-form approximation of the
rate (sinc-weighted delay corrections) is available for analysis, but all
optimisation objectives use the exact integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import PathSet, _active_index, cfr
from .errors import EmptyEveSet, IntegrationNotConverged
from .scene import OpticalParams, SystemParams


@dataclass(frozen=True)
class SnrPrefix:
    scale: float  # Lambda, dimensionless
    f_max: float  # Hz

    def __post_init__(self):
        if not (self.scale > 0 and self.f_max > 0):
            raise ValueError("SNR prefix and bandwidth must be positive")


def snr_prefix(system: SystemParams, optical: OpticalParams, power: float | None = None) -> SnrPrefix:
    p = system.optical_power if power is None else float(power)
    ts = system.symbol_period
    scale = (2.0 * ts * p * p * optical.pd_responsivity ** 2
             / (system.gap_linear * system.modulation_scale ** 2 * system.noise_psd))
    return SnrPrefix(scale, 1.0 / (2.0 * ts))


def snr_at(f, cfr_power, prefix: SnrPrefix):
    """Per-frequency SNR with a flat power allocation ``E(f) = 1``."""
    return prefix.scale * np.asarray(cfr_power, dtype=float)


@dataclass(frozen=True)
class Quadrature:
    panels: int = 4096
    rtol: float = 1e-6
    check: bool = True

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2:
            raise ValueError(f"Simpson needs an even panel count >= 2, got {self.panels}")

    def doubled(self) -> "Quadrature":
        return Quadrature(self.panels * 2, self.rtol, False)


def frequency_grid(f_max: float, panels: int) -> np.ndarray:
    return np.linspace(0.0, f_max, panels + 1)


def simpson_weights(f_max: float, panels: int) -> np.ndarray:
    h = f_max / panels
    w = np.empty(panels + 1)
    w[0::2] = 2.0
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def integrate(samples: np.ndarray, weights: np.ndarray) -> float:
    # np.sum is pairwise in a fixed, grid-index-determined order
    return float(np.sum(weights * samples))


def check_convergence(coarse: float, fine: float, scale: float, rtol: float, what: str) -> None:
    ref = max(abs(fine), abs(scale))
    if ref > 0 and abs(coarse - fine) > rtol * ref:
        raise IntegrationNotConverged(
            f"{what}: doubling panels moved the integral from {coarse:.10g} to {fine:.10g} "
            f"(relative change {abs(coarse - fine) / ref:.3g} > {rtol:g})")


@dataclass(frozen=True)
class RateResult:
    rate: float  # bit/s
    integrand_samples: int
    mode: str  # "exact-integral" | "closed-form-approx"


def _rate_integral(paths: PathSet, idx: np.ndarray, prefix: SnrPrefix, panels: int) -> tuple[float, int]:
    f = frequency_grid(prefix.f_max, panels)
    power = np.abs(cfr(paths, idx, f)) ** 2
    vals = np.log2(1.0 + snr_at(f, power, prefix))
    return integrate(vals, simpson_weights(prefix.f_max, panels)), f.size


def rate_exact(paths: PathSet, active, prefix: SnrPrefix, quadrature: Quadrature = Quadrature()) -> RateResult:
    idx = _active_index(active, len(paths))
    rate, n = _rate_integral(paths, idx, prefix, quadrature.panels)
    if quadrature.check:
        fine, _ = _rate_integral(paths, idx, prefix, quadrature.panels * 2)
        check_convergence(rate, fine, fine, quadrature.rtol, "rate integral")
    return RateResult(max(rate, 0.0), n, "exact-integral")


def _one_minus_sinc(dt: np.ndarray, ts: float) -> np.ndarray:
    # np.sinc(x) = sin(pi x)/(pi x) with sinc(0) = 1
    return 1.0 - np.sinc(dt / ts)


def rate_approx(paths: PathSet, active, prefix: SnrPrefix) -> RateResult:
    """Closed-form rate: flat part ``f_max log2(D)`` plus sinc-weighted
    corrections for the LoS/NLoS and NLoS/NLoS delay differences."""
    idx = _active_index(active, len(paths))
    ts = 1.0 / (2.0 * prefix.f_max)
    lam = prefix.scale
    g0 = paths.los_gain
    g = paths.gains[idx]
    tau = paths.delays[idx]
    d = 1.0 + lam * (g0 * g0 + float(np.sum(g * g)))
    flat = prefix.f_max * math.log2(d)
    if idx.size == 0:
        return RateResult(flat, 0, "closed-form-approx")
    los_term = (g0 / ts) * float(np.sum(g * _one_minus_sinc(tau - paths.los_delay, ts)))
    iu, ii = np.triu_indices(idx.size, k=1)
    pair_term = (1.0 / ts) * float(np.sum(g[iu] * g[ii] * _one_minus_sinc(tau[iu] - tau[ii], ts)))
    return RateResult(flat + lam / (d * math.log(2.0)) * (los_term + pair_term), 0, "closed-form-approx")


def secrecy_non_colluding(rate_bob: float, rates_eves: Sequence[float]) -> float:
    if len(rates_eves) == 0:
        raise EmptyEveSet("secrecy capacity needs at least one eavesdropper")
    return max(0.0, rate_bob - max(rates_eves))


def _colluding_integral(paths_bob, paths_eves, actives, prefix, panels) -> tuple[float, float]:
    f = frequency_grid(prefix.f_max, panels)
    w = simpson_weights(prefix.f_max, panels)
    p_bob = np.abs(cfr(paths_bob, actives[0], f)) ** 2
    p_eve = np.zeros_like(f)
    for paths, act in zip(paths_eves, actives[1:]):
        p_eve = p_eve + np.abs(cfr(paths, act, f)) ** 2
    vals = np.log2((1.0 + prefix.scale * p_bob) / (1.0 + prefix.scale * p_eve))
    return integrate(vals, w), integrate(np.abs(vals), w)


def colluding_integral(paths_bob: PathSet, paths_eves: Sequence[PathSet], actives: Sequence,
                       prefix: SnrPrefix, quadrature: Quadrature = Quadrature()) -> float:
    """Signed (pre-clamp) secrecy integral against MRC-combined eavesdroppers.

    ``actives`` lists the active element sets in tag order: Bob first, then
    one per eavesdropper.
    """
    if len(paths_eves) == 0:
        raise EmptyEveSet("colluding secrecy needs at least one eavesdropper")
    if len(actives) != len(paths_eves) + 1:
        raise ValueError("need one active set per user (Bob first)")
    value, _ = _colluding_integral(paths_bob, paths_eves, actives, prefix, quadrature.panels)
    if quadrature.check:
        fine, scale = _colluding_integral(paths_bob, paths_eves, actives, prefix, quadrature.panels * 2)
        check_convergence(value, fine, scale, quadrature.rtol, "colluding secrecy integral")
    return value


def secrecy_colluding(paths_bob: PathSet, paths_eves: Sequence[PathSet], actives: Sequence,
                      prefix: SnrPrefix, quadrature: Quadrature = Quadrature()) -> float:
    return max(0.0, colluding_integral(paths_bob, paths_eves, actives, prefix, quadrature))


@dataclass(frozen=True)
class SecrecyReport:
    rate_bob: float
    rates_eves: tuple[float, ...]
    rate_eve_colluding: float
    signed_non_colluding: float
    signed_colluding: float
    mode: str = "colluding"

    @property
    def cs_non_colluding(self) -> float:
        return max(0.0, self.signed_non_colluding)

    @property
    def cs_colluding(self) -> float:
        return max(0.0, self.signed_colluding)

    @property
    def objective(self) -> float:
        """Pre-clamp secrecy value for the report's mode (the optimisation target)."""
        return self.signed_colluding if self.mode == "colluding" else self.signed_non_colluding

    @property
    def capacity(self) -> float:
        return max(0.0, self.objective)
