"""Monte Carlo experiment driver: routes, sweeps, and result emission.

Every route gets its own random stream derived from (master seed, sweep
index, route index), so results never depend on execution order or
worker count and paired scheme comparisons see identical measurements.
Pooled RMSE per sweep cell is computed from summed squared errors in
route-index order, which keeps single-process and multi-process runs
byte-identical after formatting.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .availability import BlockingConfig, LayoutClass, draw_blocked
from .calibration import (CalibrationTable, asymptotic_coefficients,
                          calibrated_coefficients, fixed_coefficients)
from .channel import NoiseModel, snapshot
from .errors import ConfigError, DomainError
from .geometry import MAX_LEDS, MIN_LEDS, UP, Receiver, RoomConfig, build_room
from .localization import ReceiverHeightPrior, localize
from .mobility import MobilityConfig, Route, generate_route
from .tracking import CoefficientScheme, FilterConfig, init_filter, track_route

SCHEME_NAMES = ("none", "conventional", "fixed", "calibrated", "asymptotic")

DEFAULT_BLOCK_PROBS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_LED_COUNTS = tuple(range(MIN_LEDS, MAX_LEDS + 1))

RESULT_HEADER = ("sweep_value", "scheme", "rmse_m", "routes", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs, bundled for worker processes."""

    room: RoomConfig = field(default_factory=RoomConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    tracking: FilterConfig = field(default_factory=FilterConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    blocking: BlockingConfig = field(default_factory=lambda: BlockingConfig(0.25))
    schemes: tuple = ("none", "conventional", "fixed", "calibrated")
    routes: int = 200
    master_seed: int = 2024
    block_probs: tuple = DEFAULT_BLOCK_PROBS
    led_counts: tuple = DEFAULT_LED_COUNTS
    height_prior_m: float = 0.9
    rx_area_m2: float = 1e-4
    rx_fov_rad: float = math.radians(25.0)
    apply_receiver_fov: bool = False

    def __post_init__(self):
        if self.routes < 1:
            raise ConfigError(f"routes must be >= 1, got {self.routes}")
        if not self.block_probs or not self.led_counts:
            raise ConfigError("sweep lists must be nonempty")
        for name in self.schemes:
            if name not in SCHEME_NAMES:
                raise ConfigError(f"unknown scheme {name!r}, expected one of {SCHEME_NAMES}")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")


@dataclass(frozen=True)
class ResultRow:
    """One pooled RMSE figure for one scheme at one sweep value."""

    sweep_value: float
    scheme: str
    rmse_m: float
    routes: int
    seed: int

    def __post_init__(self):
        if not (math.isfinite(self.rmse_m) and self.rmse_m >= 0.0):
            raise DomainError(f"rmse_m must be >= 0, got {self.rmse_m!r}")


@dataclass(frozen=True)
class RouteTrace:
    """Per-step record of one simulated route, for inspection and plots."""

    route: Route
    layouts: np.ndarray            # (T,) layout class per step
    measured: np.ndarray           # (T, 3) raw fixes, NaN where invalid
    estimates: dict                # scheme name -> (T, 3) track
    stats: dict                    # scheme name -> (sse, step count)


def default_config(**overrides) -> ExperimentConfig:
    return replace(ExperimentConfig(), **overrides) if overrides else ExperimentConfig()


def room_center(cfg: ExperimentConfig) -> np.ndarray:
    return np.array([0.5 * cfg.room.width_m, 0.5 * cfg.room.depth_m,
                     cfg.height_prior_m])


def build_schemes(names, table: CalibrationTable | None, n_leds: int) -> list:
    """Resolve scheme names to coefficient schemes; None marks unfiltered."""
    out = []
    for name in names:
        if name == "none":
            out.append((name, None))
        elif name == "conventional":
            out.append((name, CoefficientScheme.conventional()))
        elif name == "fixed":
            out.append((name, fixed_coefficients()))
        elif name == "calibrated":
            if table is None:
                raise ConfigError("scheme 'calibrated' needs a calibration table")
            out.append((name, calibrated_coefficients(table, n_leds)))
        elif name == "asymptotic":
            if table is None:
                raise ConfigError("scheme 'asymptotic' needs a calibration table")
            out.append((name, asymptotic_coefficients(table)))
        else:
            raise ConfigError(f"unknown scheme {name!r}")
    return out


def simulate_route(cfg: ExperimentConfig, schemes, seed_parts) -> dict:
    """Run one route under every scheme on identical measurements.

    seed_parts is the entropy tuple for this route's random stream,
    conventionally (master_seed, sweep_index, route_index). Returns
    scheme name -> (summed squared error, contributing step count);
    unfiltered schemes contribute only steps with a valid fix.
    """
    trace = trace_route(cfg, schemes, seed_parts)
    return trace.stats


def trace_route(cfg: ExperimentConfig, schemes, seed_parts) -> RouteTrace:
    """Like simulate_route but keeps every intermediate step record."""
    rng = np.random.default_rng(np.random.SeedSequence(seed_parts))
    aps = build_room(cfg.room)
    prior = ReceiverHeightPrior(cfg.height_prior_m)
    route = generate_route(cfg.room, cfg.mobility, rng)
    truth = route.step_points

    fixes = []
    for pos in truth:
        rx = Receiver(pos, UP, cfg.rx_area_m2, cfg.rx_fov_rad)
        blocked = draw_blocked(cfg.blocking, rng)
        snap = snapshot(aps, rx, blocked, cfg.noise, rng,
                        apply_receiver_fov=cfg.apply_receiver_fov)
        fixes.append(localize(snap, aps, prior, UP, area_m2=cfg.rx_area_m2))

    layouts = np.array([int(m.layout) for m in fixes])
    measured = np.stack([m.position for m in fixes])

    # all filters share one initialization so scheme comparisons stay paired
    start = fixes[0].position if fixes[0].valid else room_center(cfg)
    init = init_filter(start, cfg.tracking)

    estimates = {}
    stats = {}
    for name, scheme in schemes:
        if scheme is None:
            valid = np.array([m.valid for m in fixes])
            err2 = np.einsum("ij,ij->i", measured[valid] - truth[valid],
                             measured[valid] - truth[valid])
            estimates[name] = np.where(valid[:, None], measured, np.nan)
            stats[name] = (float(err2.sum()), int(valid.sum()))
        else:
            tail = track_route(fixes[1:], layouts[1:], cfg.tracking, scheme, init)
            track = np.vstack([start[None, :], tail]) if len(tail) else start[None, :]
            d = track - truth
            stats[name] = (float(np.einsum("ij,ij->i", d, d).sum()), len(truth))
            estimates[name] = track
    return RouteTrace(route, layouts, measured, estimates, stats)


def _pooled_rows(per_route, schemes, sweep_value, routes, seed) -> list:
    """Reduce per-route stats into ResultRows, fixed route order."""
    rows = []
    for name, _ in schemes:
        sse = 0.0
        count = 0
        for stats in per_route:
            s, n = stats[name]
            sse += s
            count += n
        if count == 0:
            continue      # nothing to pool (e.g. unfiltered under full blockage)
        rows.append(ResultRow(sweep_value, name, math.sqrt(sse / count), routes, seed))
    return rows


def _run_routes(cfg: ExperimentConfig, schemes, sweep_index: int, jobs: int) -> list:
    seeds = [(cfg.master_seed, sweep_index, r) for r in range(cfg.routes)]
    if jobs <= 1:
        return [simulate_route(cfg, schemes, s) for s in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(simulate_route, cfg, schemes, s) for s in seeds]
        return [f.result() for f in futures]


def sweep_blocking(cfg: ExperimentConfig, probs=None, table=None, jobs: int = 1) -> list:
    """Pooled RMSE per scheme across blocking probabilities."""
    probs = tuple(cfg.block_probs if probs is None else probs)
    if not probs:
        raise ConfigError("blocking sweep needs at least one probability")
    schemes = build_schemes(cfg.schemes, table, cfg.room.leds_per_ap)
    rows = []
    for si, p in enumerate(probs):
        cfg_p = replace(cfg, blocking=BlockingConfig(p))
        per_route = _run_routes(cfg_p, schemes, si, jobs)
        rows.extend(_pooled_rows(per_route, schemes, float(p), cfg.routes,
                                 cfg.master_seed))
    return rows


def sweep_leds(cfg: ExperimentConfig, counts=None, table=None, jobs: int = 1) -> list:
    """Pooled RMSE per scheme across LED counts at the configured blocking."""
    counts = tuple(int(n) for n in (cfg.led_counts if counts is None else counts))
    if not counts:
        raise ConfigError("LED sweep needs at least one count")
    rows = []
    for si, n in enumerate(counts):
        cfg_n = replace(cfg, room=replace(cfg.room, leds_per_ap=n))
        schemes = build_schemes(cfg.schemes, table, n)
        per_route = _run_routes(cfg_n, schemes, si, jobs)
        rows.extend(_pooled_rows(per_route, schemes, float(n), cfg.routes,
                                 cfg.master_seed))
    return rows


def _format_float(v: float) -> str:
    return f"{v:.6g}"


def emit_results(rows, path, fmt: str = "csv") -> None:
    """Write result rows as CSV or JSON; '-' is not special here.

    Floats are rendered at 6 significant digits in both formats so the
    two are value-equivalent.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    if hasattr(path, "write"):
        _emit_to(path, rows, fmt)
        return
    with open(path, "w", newline="") as fh:
        _emit_to(fh, rows, fmt)


def _emit_to(fh, rows, fmt: str) -> None:
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_HEADER)
        for r in rows:
            writer.writerow([_format_float(r.sweep_value), r.scheme,
                             _format_float(r.rmse_m), r.routes, r.seed])
    else:
        payload = [{"sweep_value": float(_format_float(r.sweep_value)),
                    "scheme": r.scheme,
                    "rmse_m": float(_format_float(r.rmse_m)),
                    "routes": r.routes,
                    "seed": r.seed} for r in rows]
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_results(path) -> list:
    """Read rows written by emit_results in CSV form."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RESULT_HEADER:
            raise ConfigError(f"unexpected result header in {path}: {header}")
        for row in reader:
            if not row:
                continue
            sv, scheme, rmse, routes, seed = row
            rows.append(ResultRow(float(sv), scheme, float(rmse), int(routes), int(seed)))
    return rows


def render_results_csv(rows) -> str:
    """The exact CSV text emit_results would write, for byte comparisons."""
    buf = io.StringIO()
    _emit_to(buf, rows, "csv")
    return buf.getvalue()


# -- configuration files -----------------------------------------------------

_TRUE_WORDS = ("1", "true", "yes", "on")
_FALSE_WORDS = ("0", "false", "no", "off")


def _parse_bool(raw: str) -> bool:
    w = raw.strip().lower()
    if w in _TRUE_WORDS:
        return True
    if w in _FALSE_WORDS:
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def load_config_file(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    mapping = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = text.split("=", 1)
            mapping[key.strip().lower()] = value.strip()
    return mapping


def apply_config(cfg: ExperimentConfig, mapping: dict) -> ExperimentConfig:
    """Overlay raw config keys onto an ExperimentConfig.

    Keys mirror the standard parameter table: gamma, alpha_deg, beta_deg,
    fov_deg, area_cm2, room (WxDxH), nu_m, sigma_x, sigma_v,
    channel_noise_sigma, apply_receiver_fov, plus noise_kind, ap_tilt_deg,
    routes, seed, leds, block_prob, and schemes.
    """
    room = cfg.room
    tracking = cfg.tracking
    noise = cfg.noise
    blocking = cfg.blocking
    out = {}
    try:
        for key, raw in mapping.items():
            if key == "gamma":
                room = replace(room, lambertian_order=float(raw))
            elif key == "alpha_deg":
                room = replace(room, ring_tilt_rad=math.radians(float(raw)))
            elif key == "beta_deg":
                room = replace(room, outer_ring_extra_tilt_rad=math.radians(float(raw)))
            elif key == "ap_tilt_deg":
                room = replace(room, ap_tilt_rad=math.radians(float(raw)))
            elif key == "fov_deg":
                out["rx_fov_rad"] = math.radians(float(raw))
            elif key == "area_cm2":
                out["rx_area_m2"] = float(raw) * 1e-4
            elif key == "room":
                dims = [float(v) for v in raw.lower().split("x")]
                if len(dims) != 3:
                    raise ConfigError(f"room must be WxDxH, got {raw!r}")
                room = replace(room, width_m=dims[0], depth_m=dims[1], height_m=dims[2])
            elif key == "nu_m":
                out["height_prior_m"] = float(raw)
            elif key == "sigma_x":
                tracking = replace(tracking, process_noise_std=float(raw))
            elif key == "sigma_v":
                tracking = replace(tracking, measurement_noise_std=float(raw))
            elif key == "channel_noise_sigma":
                noise = replace(noise, sigma=float(raw))
            elif key == "noise_kind":
                noise = replace(noise, kind=raw)
            elif key == "apply_receiver_fov":
                out["apply_receiver_fov"] = _parse_bool(raw)
            elif key == "routes":
                out["routes"] = int(raw)
            elif key == "seed":
                out["master_seed"] = int(raw)
            elif key == "leds":
                room = replace(room, leds_per_ap=int(raw))
            elif key == "block_prob":
                blocking = BlockingConfig(float(raw))
            elif key == "schemes":
                out["schemes"] = tuple(s.strip() for s in raw.split(",") if s.strip())
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return replace(cfg, room=room, tracking=tracking, noise=noise,
                   blocking=blocking, **out)
