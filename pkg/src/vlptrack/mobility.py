"""Random-waypoint routes through the room and the track error metric.

A route starts on a strip along one wall, then hops between uniformly
drawn waypoints inside an inset footprint, with the walking height drawn
per waypoint. Hard turns are rejected: the horizontal heading may change
by at most a quarter turn at each waypoint. The walk is resampled at a
fixed step length, and every waypoint leg is snapped to a whole number
of steps so step points land exactly on the polyline corners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import RoomConfig


@dataclass(frozen=True)
class MobilityConfig:
    """Random-waypoint parameters; defaults walk 30 m in 0.1 m steps."""

    max_length_m: float = 30.0
    step_m: float = 0.1
    height_range_m: tuple[float, float] = (0.7, 1.1)
    max_turn_rad: float = 0.5 * math.pi
    footprint_margin_m: float = 0.5
    max_rejections: int = 100
    turn_in_3d: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.step_m) and self.step_m > 0.0):
            raise ConfigError(f"step_m must be positive, got {self.step_m!r}")
        if not (math.isfinite(self.max_length_m) and self.max_length_m >= self.step_m):
            raise ConfigError("max_length_m must cover at least one step")
        zlo, zhi = self.height_range_m
        if not (math.isfinite(zlo) and math.isfinite(zhi) and 0.0 < zlo <= zhi):
            raise ConfigError(f"bad height range {self.height_range_m!r}")
        if not 0.0 < self.max_turn_rad <= math.pi:
            raise ConfigError(f"max_turn_rad must lie in (0, pi], got {self.max_turn_rad!r}")
        if not (math.isfinite(self.footprint_margin_m) and self.footprint_margin_m >= 0.0):
            raise ConfigError("footprint_margin_m must be >= 0")
        if self.max_rejections < 1:
            raise ConfigError("max_rejections must be >= 1")


@dataclass(frozen=True)
class Route:
    """A resampled walk: corner waypoints plus the equally spaced step points."""

    waypoints: np.ndarray     # (W, 3), W >= 2
    step_points: np.ndarray   # (T, 3), excludes the start point
    length_m: float

    def __post_init__(self):
        object.__setattr__(self, "waypoints", np.asarray(self.waypoints, dtype=float))
        object.__setattr__(self, "step_points", np.asarray(self.step_points, dtype=float))
        if self.waypoints.ndim != 2 or self.waypoints.shape[0] < 2:
            raise DomainError("a route needs at least two waypoints")

    @property
    def n_steps(self) -> int:
        return len(self.step_points)


def generate_route(room: RoomConfig, cfg: MobilityConfig, rng) -> Route:
    """Draw one random-waypoint route inside the room footprint.

    The start point sits on the inset strip along the y = margin wall.
    Each candidate waypoint is drawn uniformly over the inset footprint
    with an independent height; it is rejected when the leg is shorter
    than one step or bends the horizontal heading by more than the turn
    limit. After max_rejections consecutive rejections, or when the
    length budget runs out, the route ends. Legs are truncated to whole
    steps, so consecutive step points are exactly step_m apart.
    """
    lo = cfg.footprint_margin_m
    hi_x = room.width_m - cfg.footprint_margin_m
    hi_y = room.depth_m - cfg.footprint_margin_m
    if hi_x <= lo or hi_y <= lo:
        raise ConfigError("footprint margin leaves no walkable area")
    zlo, zhi = cfg.height_range_m

    start = np.array([rng.uniform(lo, hi_x), lo, rng.uniform(zlo, zhi)])
    waypoints = [start]
    headings = []            # per-leg direction, horizontal or 3-D per config
    steps_left = int(round(cfg.max_length_m / cfg.step_m))
    segments = []            # (step count, full 3-D unit direction)
    rejections = 0
    while steps_left > 0:
        cand = np.array([rng.uniform(lo, hi_x), rng.uniform(lo, hi_y),
                         rng.uniform(zlo, zhi)])
        leg = cand - waypoints[-1]
        leg_len = float(np.linalg.norm(leg))
        n_steps = int(leg_len / cfg.step_m)
        horiz = float(np.hypot(leg[0], leg[1]))
        ok = n_steps >= 1 and horiz > 1e-9
        if ok and headings:
            if cfg.turn_in_3d:
                turn = _angle(headings[-1], leg / leg_len)
            else:
                turn = _angle(headings[-1], leg[:2] / horiz)
            ok = turn <= cfg.max_turn_rad + 1e-12
        if not ok:
            if not headings:
                rejections += 1
                if rejections >= 10_000:
                    # footprint too tight to fit even one step
                    raise ConfigError("could not place the first route leg")
                continue
            rejections += 1
            if rejections >= cfg.max_rejections:
                break
            continue
        rejections = 0
        n_steps = min(n_steps, steps_left)
        direction = leg / leg_len
        waypoints.append(waypoints[-1] + direction * (n_steps * cfg.step_m))
        headings.append(direction if cfg.turn_in_3d else leg[:2] / horiz)
        segments.append((n_steps, direction))
        steps_left -= n_steps

    points = []
    base = waypoints[0]
    for n_steps, direction in segments:
        for i in range(1, n_steps + 1):
            points.append(base + direction * (i * cfg.step_m))
        base = points[-1]
    total = cfg.step_m * len(points)
    return Route(np.stack(waypoints), np.stack(points), total)


def _angle(u, v) -> float:
    c = float(np.dot(u, v))
    return math.acos(max(-1.0, min(1.0, c)))


def route_rmse(estimates, truth) -> float:
    """Root mean squared Euclidean error of a track against ground truth."""
    est = np.asarray(estimates, dtype=float)
    ref = np.asarray(truth, dtype=float)
    if est.shape != ref.shape or est.ndim != 2 or est.shape[1] != 3:
        raise DomainError(f"track shapes must match as (T, 3), got {est.shape} vs {ref.shape}")
    if len(est) == 0:
        raise DomainError("cannot compute RMSE of an empty track")
    d = est - ref
    return float(np.sqrt(np.mean(np.einsum("ij,ij->i", d, d))))
