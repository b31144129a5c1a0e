"""Optical path gains, propagation delays and the channel frequency response.

Gains follow the generalized Lambertian model with a hard field-of-view
cutoff.  Each receiver sees one LoS path plus one specular path per IRS
element; the CFR is the Fourier transform of the resulting sum of delayed
impulses.  Irradiance angles are measured from the LED's downward normal and
incidence angles from the photodiode's upward normal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGeometry, DomainError
from .scene import SPEED_OF_LIGHT, OpticalParams, Point3, Scenario

_DOWN = np.array([0.0, 0.0, -1.0])
_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PathComponent:
    gain: float
    delay: float  # s


@dataclass(frozen=True, eq=False)
class PathSet:
    """LoS gain/delay and per-element NLoS gains/delays for one receiver."""

    los_gain: float
    los_delay: float
    gains: np.ndarray  # (N_irs,)
    delays: np.ndarray  # (N_irs,)

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float).reshape(-1)
        delays = np.asarray(self.delays, dtype=float).reshape(-1)
        if gains.shape != delays.shape:
            raise ValueError("gains and delays must have the same length")
        gains.flags.writeable = False
        delays.flags.writeable = False
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "delays", delays)

    @property
    def los(self) -> PathComponent:
        return PathComponent(self.los_gain, self.los_delay)

    @property
    def nlos(self) -> list[PathComponent]:
        return [PathComponent(float(g), float(t)) for g, t in zip(self.gains, self.delays)]

    def __len__(self) -> int:
        return self.gains.size


def lambertian_order(half_angle: float) -> float:
    """Lambertian order ``m = -1 / log2(cos(half_angle))`` (angle in degrees)."""
    if not 0.0 < half_angle < 90.0:
        raise DomainError(f"half-power semi-angle must lie in (0, 90) deg, got {half_angle}")
    return -1.0 / math.log2(math.cos(math.radians(half_angle)))


def concentrator_gain(refractive_index: float, incidence: float, fov: float) -> float:
    """Non-imaging concentrator gain; zero outside the field of view.  Angles in degrees."""
    if refractive_index < 1.0:
        raise DomainError("refractive index must be >= 1")
    if not 0.0 < fov <= 90.0:
        raise DomainError(f"fov must lie in (0, 90] deg, got {fov}")
    if 0.0 <= incidence <= fov:
        return refractive_index ** 2 / math.sin(math.radians(fov)) ** 2
    return 0.0


def _angle_deg(vec: np.ndarray, normal: np.ndarray, length: float) -> float:
    cosine = float(np.clip(np.dot(vec, normal) / length, -1.0, 1.0))
    return math.degrees(math.acos(cosine))


def _receiver_factor(incidence: float, optical: OpticalParams) -> float:
    """cos(psi) * G_f * G_c, or 0 beyond the field of view."""
    if incidence > optical.fov:
        return 0.0
    gc = concentrator_gain(optical.refractive_index, incidence, optical.fov)
    return math.cos(math.radians(incidence)) * optical.filter_gain * gc


def los_path(led: Point3, user: Point3, optical: OpticalParams, m: float) -> PathComponent:
    led_v = np.asarray(led, dtype=float)
    ray = np.asarray(user, dtype=float) - led_v
    d = float(np.linalg.norm(ray))
    if d == 0.0:
        raise DegenerateGeometry("receiver coincides with the LED")
    phi = _angle_deg(ray, _DOWN, d)
    psi = _angle_deg(-ray, _UP, d)
    rx = _receiver_factor(psi, optical)
    gain = 0.0
    if rx > 0.0:
        gain = (m + 1) * optical.pd_area / (2 * math.pi * d * d) * math.cos(math.radians(phi)) ** m * rx
    return PathComponent(max(gain, 0.0), d / SPEED_OF_LIGHT)


def nlos_path(led: Point3, element: Point3, user: Point3, optical: OpticalParams, m: float) -> PathComponent:
    """Specular path LED -> IRS element -> receiver.

    Only the LED irradiance angle toward the element and the receiver
    incidence angle from the element enter the gain.
    """
    elem = np.asarray(element, dtype=float)
    leg1 = elem - np.asarray(led, dtype=float)
    leg2 = np.asarray(user, dtype=float) - elem
    d1 = float(np.linalg.norm(leg1))
    d2 = float(np.linalg.norm(leg2))
    if d1 == 0.0 or d2 == 0.0:
        raise DegenerateGeometry("IRS element coincides with the LED or the receiver")
    phi = _angle_deg(leg1, _DOWN, d1)
    psi = _angle_deg(-leg2, _UP, d2)
    rx = _receiver_factor(psi, optical)
    gain = 0.0
    if rx > 0.0:
        cos_phi = max(math.cos(math.radians(phi)), 0.0)
        gain = (optical.reflectivity * (m + 1) * optical.pd_area / (2 * math.pi * (d1 + d2) ** 2)
                * cos_phi ** m * rx)
    return PathComponent(max(gain, 0.0), (d1 + d2) / SPEED_OF_LIGHT)


def path_set(scenario: Scenario, user: Point3) -> PathSet:
    m = lambertian_order(scenario.optical.half_power_semi_angle)
    los = los_path(scenario.led, user, scenario.optical, m)
    comps = [nlos_path(scenario.led, el, user, scenario.optical, m) for el in scenario.irs_elements]
    return PathSet(los.gain, los.delay,
                   np.array([c.gain for c in comps], dtype=float),
                   np.array([c.delay for c in comps], dtype=float))


def scenario_paths(scenario: Scenario) -> list[PathSet]:
    """PathSets for every receiver in tag order (Bob, E_1, ..., E_K)."""
    return [path_set(scenario, u) for u in scenario.users]


def _active_index(active: Iterable[int] | np.ndarray | None, n: int) -> np.ndarray:
    if active is None:
        return np.arange(0)
    arr = np.asarray(active)
    if arr.dtype == bool:
        if arr.size != n:
            raise ValueError(f"active mask has length {arr.size}, expected {n}")
        return np.flatnonzero(arr)
    idx = np.unique(arr.astype(int).reshape(-1))
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"active indices must lie in [0, {n})")
    return idx


def cfr(paths: PathSet, active, f) -> np.ndarray | complex:
    """Q(f) restricted to the LoS path plus the ``active`` elements (0-based)."""
    idx = _active_index(active, len(paths))
    f_arr = np.asarray(f, dtype=float)
    q = paths.los_gain * np.exp(-2j * np.pi * f_arr * paths.los_delay)
    for n in idx:
        q = q + paths.gains[n] * np.exp(-2j * np.pi * f_arr * paths.delays[n])
    return q[()] if q.ndim == 0 else q


def cfr_power_expanded(paths: PathSet, active, f, *, cross_sign: float = 1.0) -> np.ndarray | float:
    """|Q(f)|^2 via the real four-term expansion (LoS power, LoS x NLoS
    cosines, NLoS powers, pairwise NLoS cosines).

    ``cross_sign`` exists only so the validation suite can inject a fault;
    leave it at 1.
    """
    idx = _active_index(active, len(paths))
    f_arr = np.asarray(f, dtype=float)
    g0 = paths.los_gain
    g = paths.gains[idx]
    tau = paths.delays[idx]
    out = np.full(f_arr.shape, g0 * g0)
    if idx.size:
        w = 2 * np.pi * f_arr[..., None]
        dt = tau - paths.los_delay
        out = out + 2 * g0 * np.sum(g * cross_sign * np.cos(w * dt), axis=-1)
        out = out + np.sum(g * g)
        iu, ii = np.triu_indices(idx.size, k=1)
        if iu.size:
            pair_dt = tau[iu] - tau[ii]
            out = out + np.sum(2 * g[iu] * g[ii] * np.cos(w * pair_dt), axis=-1)
    return out[()] if out.ndim == 0 else out


def phasor_table(paths: PathSet, freqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """LoS phasor ``(F,)`` and per-element NLoS phasors ``(N, F)`` on a frequency grid."""
    freqs = np.asarray(freqs, dtype=float)
    los = paths.los_gain * np.exp(-2j * np.pi * freqs * paths.los_delay)
    nlos = paths.gains[:, None] * np.exp(-2j * np.pi * np.outer(paths.delays, freqs))
    return los, nlos


def active_from_tags(tags: Sequence[int], user: int) -> np.ndarray:
    return np.flatnonzero(np.asarray(tags) == user)
