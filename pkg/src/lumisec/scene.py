"""Room geometry, optical front-end and system constants.

A :class:`Scenario` is the immutable world handed to the channel model: one
ceiling LED, a legitimate receiver (Bob), ``K`` eavesdroppers and a planar
IRS lattice on the wall ``x = 0``.  Scenarios are built from JSON documents
(see :func:`load_scenario`) or from the canonical presets.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import GeometryError, GridDoesNotFit, MalformedConfig

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class OpticalParams:
    half_power_semi_angle: float = 60.0  # deg
    pd_area: float = 1e-4  # m^2
    pd_responsivity: float = 0.6  # A/W
    fov: float = 90.0  # deg
    refractive_index: float = 1.5
    filter_gain: float = 1.0
    reflectivity: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.half_power_semi_angle < 90.0:
            raise MalformedConfig(f"half_power_semi_angle must be in (0, 90) deg, got {self.half_power_semi_angle}")
        if not 0.0 < self.fov <= 90.0:
            raise MalformedConfig(f"fov must be in (0, 90] deg, got {self.fov}")
        if self.refractive_index < 1.0:
            raise MalformedConfig("refractive_index must be >= 1")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise MalformedConfig("reflectivity must lie in [0, 1]")
        if self.pd_area <= 0.0:
            raise MalformedConfig("pd_area must be positive")
        if self.pd_responsivity <= 0.0 or self.filter_gain < 0.0:
            raise MalformedConfig("pd_responsivity must be positive and filter_gain non-negative")


@dataclass(frozen=True)
class SystemParams:
    symbol_period: float = 1e-9  # s
    optical_power: float = 6.0  # W
    noise_psd: float = 1e-21  # A^2/Hz
    gap_db: float = 2.0
    modulation_scale: float = 3.2

    def __post_init__(self):
        for name in ("symbol_period", "optical_power", "noise_psd", "modulation_scale"):
            if not getattr(self, name) > 0.0:
                raise MalformedConfig(f"{name} must be positive")

    @property
    def gap_linear(self) -> float:
        return 10.0 ** (self.gap_db / 10.0)

    def with_power(self, power: float) -> "SystemParams":
        d = asdict(self)
        d["optical_power"] = float(power)
        return SystemParams(**d)


@dataclass(frozen=True)
class Scenario:
    room: tuple[float, float, float]
    led: Point3
    bob: Point3
    eves: tuple[Point3, ...]
    irs_elements: tuple[Point3, ...]
    optical: OpticalParams = field(default_factory=OpticalParams)
    system: SystemParams = field(default_factory=SystemParams)

    def __post_init__(self):
        lx, ly, lz = self.room
        if min(self.room) <= 0:
            raise GeometryError(f"room dimensions must be positive, got {self.room}")
        named = [("led", self.led), ("bob", self.bob)]
        named += [(f"eve{j + 1}", e) for j, e in enumerate(self.eves)]
        named += [(f"irs element {n}", p) for n, p in enumerate(self.irs_elements)]
        for name, p in named:
            if not (0 <= p.x <= lx and 0 <= p.y <= ly and 0 <= p.z <= lz):
                raise GeometryError(f"{name} {tuple(p)} lies outside the room {self.room}")
        for n, p in enumerate(self.irs_elements):
            if p.x != 0.0:
                raise GeometryError(f"irs element {n} is off the x = 0 wall: {tuple(p)}")
        if len(set(self.irs_elements)) != len(self.irs_elements):
            raise GeometryError("irs element positions must be pairwise distinct")
        receivers = (self.bob, *self.eves)
        if len(set(receivers)) != len(receivers):
            raise GeometryError("bob and eavesdropper positions must be pairwise distinct")

    @property
    def n_irs(self) -> int:
        return len(self.irs_elements)

    @property
    def n_eves(self) -> int:
        return len(self.eves)

    @property
    def users(self) -> tuple[Point3, ...]:
        """Receivers in tag order: Bob first, then E_1..E_K."""
        return (self.bob, *self.eves)

    def elements_array(self) -> np.ndarray:
        return np.asarray(self.irs_elements, dtype=float).reshape(-1, 3)

    def with_power(self, power: float) -> "Scenario":
        return Scenario(self.room, self.led, self.bob, self.eves, self.irs_elements,
                        self.optical, self.system.with_power(power))


def irs_grid(rows: int, cols: int, pitch_horizontal: float, pitch_vertical: float,
             room: Sequence[float] = (5.0, 5.0, 3.0), wall: str = "x0") -> list[Point3]:
    """Centered ``rows x cols`` lattice on the wall ``x = 0``.

    Row-major order: row index runs along z (bottom to top), column index
    along y.  The returned order is the canonical element index used by every
    allocation vector.
    """
    if wall != "x0":
        raise GeometryError(f"only the x = 0 wall is supported, got {wall!r}")
    if rows < 1 or cols < 1:
        raise GeometryError("rows and cols must be >= 1")
    if pitch_horizontal <= 0 or pitch_vertical <= 0:
        raise GeometryError("pitches must be positive")
    _, ly, lz = room
    span_y = (cols - 1) * pitch_horizontal
    span_z = (rows - 1) * pitch_vertical
    if span_y > ly or span_z > lz:
        raise GridDoesNotFit(
            f"{rows}x{cols} grid spans {span_y:.4g} m x {span_z:.4g} m, wall is {ly:.4g} m x {lz:.4g} m")
    y0 = ly / 2 - span_y / 2
    z0 = lz / 2 - span_z / 2
    # clamp guards against round-off pushing edge elements a hair outside the wall
    return [Point3(0.0, min(max(y0 + c * pitch_horizontal, 0.0), ly), min(max(z0 + r * pitch_vertical, 0.0), lz))
            for r in range(rows) for c in range(cols)]


# --------------------------------------------------------------------------
# config documents

DEFAULT_ROOM = (5.0, 5.0, 3.0)
DEFAULT_LED = (2.5, 2.5, 3.0)

PRESETS: dict[str, dict[str, Any]] = {
    "best": {"bob": [2.5, 2.5, 0.75], "eves": [[4.5, 4.5, 0.75], [4.0, 4.0, 0.75]]},
    "worst": {"bob": [4.5, 4.5, 0.75], "eves": [[2.5, 2.5, 0.75], [2.0, 2.0, 0.75]]},
}

_OPTICAL_KEYS = {
    "half_power_semi_angle_deg": ("half_power_semi_angle", 1.0),
    "pd_area_cm2": ("pd_area", 1e-4),
    "pd_responsivity_a_per_w": ("pd_responsivity", 1.0),
    "fov_deg": ("fov", 1.0),
    "refractive_index": ("refractive_index", 1.0),
    "filter_gain": ("filter_gain", 1.0),
    "reflectivity": ("reflectivity", 1.0),
}
_SYSTEM_KEYS = {
    "symbol_period_ns": ("symbol_period", 1e-9),
    "optical_power_w": ("optical_power", 1.0),
    "noise_psd_a2_per_hz": ("noise_psd", 1.0),
    "gap_db": ("gap_db", 1.0),
    "modulation_scale": ("modulation_scale", 1.0),
}
_IRS_KEYS = {"rows", "cols", "pitch_h", "pitch_v"}
_TOP_KEYS = {"room", "led", "bob", "eves", "irs", "optical", "system"}


def _point(value: Any, name: str) -> Point3:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise MalformedConfig(f"{name} must be a list of three numbers, got {value!r}") from exc
    return Point3(x, y, z)


def _check_keys(section: Any, allowed: set[str], where: str) -> Mapping[str, Any]:
    if not isinstance(section, Mapping):
        raise MalformedConfig(f"{where} must be an object")
    unknown = set(section) - allowed
    if unknown:
        raise MalformedConfig(f"unknown keys in {where}: {sorted(unknown)}")
    return section


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedConfig(f"{name} must be a number, got {value!r}")
    return float(value)


def build_scenario(config: Mapping[str, Any]) -> Scenario:
    """Validate a config mapping and build the :class:`Scenario`.

    Missing keys take the canonical defaults (5x5x3 m room, ceiling-centre
    LED, best-case users, 15x15 IRS).  Unknown keys raise
    :class:`MalformedConfig`; positions outside the room raise
    :class:`GeometryError`.
    """
    cfg = _check_keys(config, _TOP_KEYS, "config")

    room_raw = cfg.get("room", DEFAULT_ROOM)
    room = tuple(_point(room_raw, "room"))
    led = _point(cfg.get("led", DEFAULT_LED), "led")
    bob = _point(cfg.get("bob", PRESETS["best"]["bob"]), "bob")
    eves_raw = cfg.get("eves", PRESETS["best"]["eves"])
    if not isinstance(eves_raw, list):
        raise MalformedConfig("eves must be a list of points")
    eves = tuple(_point(e, f"eves[{j}]") for j, e in enumerate(eves_raw))

    irs = _check_keys(cfg.get("irs", {}), _IRS_KEYS, "irs")
    try:
        rows = int(irs.get("rows", 15))
        cols = int(irs.get("cols", 15))
    except (TypeError, ValueError) as exc:
        raise MalformedConfig("irs rows/cols must be integers") from exc
    pitch_h = _number(irs.get("pitch_h", 0.30), "irs.pitch_h")
    pitch_v = irs.get("pitch_v")
    pitch_v = room[2] / (rows + 1) if pitch_v is None else _number(pitch_v, "irs.pitch_v")
    elements = tuple(irs_grid(rows, cols, pitch_h, pitch_v, room)) if rows * cols > 0 else ()

    optical_cfg = _check_keys(cfg.get("optical", {}), set(_OPTICAL_KEYS), "optical")
    optical = OpticalParams(**{attr: _number(optical_cfg[k], f"optical.{k}") * scale
                               for k, (attr, scale) in _OPTICAL_KEYS.items() if k in optical_cfg})
    system_cfg = _check_keys(cfg.get("system", {}), set(_SYSTEM_KEYS), "system")
    system = SystemParams(**{attr: _number(system_cfg[k], f"system.{k}") * scale
                             for k, (attr, scale) in _SYSTEM_KEYS.items() if k in system_cfg})
    return Scenario(room, led, bob, eves, elements, optical, system)


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedConfig(f"{path}: not valid JSON ({exc})") from exc
    return build_scenario(config)


def preset_config(case: str, rows: int = 15, cols: int = 15, power: float = 6.0) -> dict[str, Any]:
    """Canonical config document for the best/worst-case layouts."""
    if case not in PRESETS:
        raise MalformedConfig(f"unknown preset {case!r}; choose from {sorted(PRESETS)}")
    return {
        "room": list(DEFAULT_ROOM),
        "led": list(DEFAULT_LED),
        **PRESETS[case],
        "irs": {"rows": rows, "cols": cols, "pitch_h": 0.30, "pitch_v": DEFAULT_ROOM[2] / (rows + 1)},
        "optical": {"half_power_semi_angle_deg": 60.0, "pd_area_cm2": 1.0, "pd_responsivity_a_per_w": 0.6,
                    "fov_deg": 90.0, "refractive_index": 1.5, "filter_gain": 1.0, "reflectivity": 1.0},
        "system": {"symbol_period_ns": 1.0, "optical_power_w": power, "noise_psd_a2_per_hz": 1e-21,
                   "gap_db": 2.0, "modulation_scale": 3.2},
    }


def preset(case: str, rows: int = 15, cols: int = 15, power: float = 6.0) -> Scenario:
    return build_scenario(preset_config(case, rows, cols, power))


def config_hash(config: Mapping[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]

