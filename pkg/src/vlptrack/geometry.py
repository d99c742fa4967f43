"""Room, access point, and LED-cluster geometry.

Coordinates are metric. x spans the room width, y the depth, z points up
with the floor at z = 0, so the four access points sit in the ceiling
corners. All orientation vectors are unit length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

UP = np.array([0.0, 0.0, 1.0])
X_AXIS = np.array([1.0, 0.0, 0.0])

# ceiling corners in perimeter order; opposite indices differ by 2
_CORNER_AZIMUTHS = (0.25 * math.pi, 0.75 * math.pi, 1.25 * math.pi, 1.75 * math.pi)

MIN_LEDS = 3
MAX_LEDS = 20


def vec3(x, y, z) -> np.ndarray:
    """Build a float (3,) vector, rejecting non-finite components."""
    v = np.array([float(x), float(y), float(z)])
    if not np.all(np.isfinite(v)):
        raise DomainError(f"non-finite vector component in {v!r}")
    return v


def unit(v) -> np.ndarray:
    """Return v scaled to unit length."""
    v = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(v))
    if not math.isfinite(n) or n < 1e-12:
        raise DomainError("cannot normalize a zero-length vector")
    return v / n


def _as_unit(v, what: str) -> np.ndarray:
    v = vec3(*np.asarray(v, dtype=float))
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise DomainError(f"{what} must be unit length, got norm {np.linalg.norm(v)!r}")
    return v


def angle_between(a, b) -> float:
    """Angle in radians between two unit vectors, in [0, pi]."""
    c = float(np.dot(a, b))
    return math.acos(max(-1.0, min(1.0, c)))


@dataclass(frozen=True)
class LedSource:
    """A single LED: its position, beam axis, and Lambertian order."""

    position: np.ndarray
    orientation: np.ndarray
    lambertian_order: float

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(*self.position))
        object.__setattr__(self, "orientation", _as_unit(self.orientation, "LED orientation"))
        if not (math.isfinite(self.lambertian_order) and self.lambertian_order >= 1.0):
            raise ConfigError(f"lambertian_order must be >= 1, got {self.lambertian_order!r}")


@dataclass(frozen=True)
class Receiver:
    """Photodiode pose and optics: position, normal, area, field of view."""

    position: np.ndarray
    orientation: np.ndarray
    area_m2: float = 1e-4
    fov_rad: float = math.radians(25.0)

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(*self.position))
        object.__setattr__(self, "orientation", _as_unit(self.orientation, "receiver orientation"))
        if not (math.isfinite(self.area_m2) and self.area_m2 > 0.0):
            raise ConfigError(f"receiver area must be positive, got {self.area_m2!r}")
        if not 0.0 < self.fov_rad <= 0.5 * math.pi:
            raise ConfigError(f"field of view must lie in (0, pi/2], got {self.fov_rad!r}")


@dataclass(frozen=True)
class AccessPoint:
    """One ceiling unit: a cluster of co-located LEDs fanned around a center axis."""

    index: int
    position: np.ndarray
    orientation: np.ndarray
    leds: tuple[LedSource, ...]
    # stacked per-LED arrays, derived once since the channel math is hot
    led_axes: np.ndarray = field(init=False, repr=False, compare=False)
    led_orders: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(*self.position))
        object.__setattr__(self, "orientation", _as_unit(self.orientation, "AP orientation"))
        object.__setattr__(self, "leds", tuple(self.leds))
        if not MIN_LEDS <= len(self.leds) <= MAX_LEDS:
            raise ConfigError(f"AP needs {MIN_LEDS}..{MAX_LEDS} LEDs, got {len(self.leds)}")
        for led in self.leds:
            if float(np.linalg.norm(led.position - self.position)) > 1e-9:
                raise ConfigError("all LEDs of an AP must be co-located at its position")
        object.__setattr__(self, "led_axes",
                           np.stack([led.orientation for led in self.leds]))
        object.__setattr__(self, "led_orders",
                           np.array([led.lambertian_order for led in self.leds]))

    @property
    def n_leds(self) -> int:
        return len(self.leds)


@dataclass(frozen=True)
class RoomConfig:
    """Room dimensions plus the AP hardware shared by all four corners."""

    width_m: float = 6.0
    depth_m: float = 6.0
    height_m: float = 3.0
    leds_per_ap: int = 7
    ap_tilt_rad: float = math.radians(45.0)
    ring_tilt_rad: float = math.radians(25.0)
    outer_ring_extra_tilt_rad: float = math.radians(10.0)
    lambertian_order: float = 10.0

    def __post_init__(self):
        for name in ("width_m", "depth_m", "height_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if not MIN_LEDS <= self.leds_per_ap <= MAX_LEDS:
            raise ConfigError(f"leds_per_ap must lie in [{MIN_LEDS}, {MAX_LEDS}]")
        for name in ("ap_tilt_rad", "ring_tilt_rad", "outer_ring_extra_tilt_rad"):
            v = getattr(self, name)
            if not 0.0 < v < 0.5 * math.pi:
                raise ConfigError(f"{name} must lie in (0, pi/2), got {v!r}")
        if not (math.isfinite(self.lambertian_order) and self.lambertian_order >= 1.0):
            raise ConfigError(f"lambertian_order must be >= 1, got {self.lambertian_order!r}")


def _tangent_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # orthonormal pair spanning the plane normal to axis; e1 follows world
    # up (or x when axis is vertical) so ring azimuth 0 is reproducible
    ref = UP if abs(float(np.dot(UP, axis))) < 1.0 - 1e-9 else X_AXIS
    e1 = unit(ref - float(np.dot(ref, axis)) * axis)
    e2 = np.cross(axis, e1)
    return e1, e2


def build_led_layout(center: np.ndarray, n_leds: int, ring_tilt_rad: float,
                     outer_extra_tilt_rad: float) -> list[np.ndarray]:
    """Beam axes for one AP cluster, fanned around the center axis.

    3 LEDs form a bare ring tilted by ``ring_tilt_rad`` off the center
    axis. 4 to 7 LEDs put one on the axis and the rest on that ring.
    Above 7 a filled inner ring of six is kept and the remainder goes on
    a second ring tilted by an additional ``outer_extra_tilt_rad``. Rings
    are evenly spaced in azimuth starting at the frame reference.
    """
    if not MIN_LEDS <= n_leds <= MAX_LEDS:
        raise ConfigError(f"n_leds must lie in [{MIN_LEDS}, {MAX_LEDS}], got {n_leds}")
    c = _as_unit(center, "cluster center axis")
    e1, e2 = _tangent_frame(c)

    def ring(tilt: float, count: int) -> list[np.ndarray]:
        out = []
        for k in range(count):
            az = 2.0 * math.pi * k / count
            radial = math.cos(az) * e1 + math.sin(az) * e2
            out.append(unit(math.cos(tilt) * c + math.sin(tilt) * radial))
        return out

    if n_leds == 3:
        return ring(ring_tilt_rad, 3)
    if n_leds <= 7:
        return [c.copy()] + ring(ring_tilt_rad, n_leds - 1)
    return ([c.copy()] + ring(ring_tilt_rad, 6)
            + ring(ring_tilt_rad + outer_extra_tilt_rad, n_leds - 7))


def build_room(cfg: RoomConfig) -> list[AccessPoint]:
    """The four corner APs, each aimed down into the room at the AP tilt.

    Azimuths point along the floor diagonals, so AP k faces the room
    center; index order walks the perimeter and opposite corners differ
    by two.
    """
    corners = [
        (0.0, 0.0),
        (cfg.width_m, 0.0),
        (cfg.width_m, cfg.depth_m),
        (0.0, cfg.depth_m),
    ]
    cos_t, sin_t = math.cos(cfg.ap_tilt_rad), math.sin(cfg.ap_tilt_rad)
    aps = []
    for k, ((cx, cy), az) in enumerate(zip(corners, _CORNER_AZIMUTHS)):
        pos = vec3(cx, cy, cfg.height_m)
        axis = unit(vec3(cos_t * math.cos(az), cos_t * math.sin(az), -sin_t))
        beams = build_led_layout(axis, cfg.leds_per_ap, cfg.ring_tilt_rad,
                                 cfg.outer_ring_extra_tilt_rad)
        leds = tuple(LedSource(pos, b, cfg.lambertian_order) for b in beams)
        aps.append(AccessPoint(k, pos, axis, leds))
    return aps


def room_bounds(aps) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned (lo, hi) box spanned by the APs, floor at z = 0."""
    if not aps:
        raise DomainError("room_bounds needs at least one AP")
    pts = np.stack([ap.position for ap in aps])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    lo[2] = 0.0
    return lo, hi
