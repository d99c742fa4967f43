"""Mean-error calibration of the measurement trust coefficients.

For each layout class and LED count, the mean localization error is
estimated over a receiver grid with repeated noise draws. Trust is then
the full-visibility mean error divided by the class mean error, so a
class that localizes twice as badly gets half the trust. The no-fix
class has no measurable error and gets half the smallest derived trust,
which is immaterial because its update is a mean no-op anyway.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .availability import LayoutClass
from .channel import NoiseModel, snapshot
from .errors import ConfigError, DomainError
from .geometry import MAX_LEDS, MIN_LEDS, UP, Receiver, RoomConfig, build_room
from .localization import ReceiverHeightPrior, localize
from .tracking import FIXED_TRUST, CoefficientScheme

# every AP subset in each layout class, corner indices in perimeter order
CLASS_SUBSETS = {
    LayoutClass.SINGLE: ({0}, {1}, {2}, {3}),
    LayoutClass.SIDE_PAIR: ({0, 1}, {1, 2}, {2, 3}, {0, 3}),
    LayoutClass.DIAGONAL_PAIR: ({0, 2}, {1, 3}),
    LayoutClass.TRIPLE: ({0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}),
    LayoutClass.FULL: ({0, 1, 2, 3},),
}

# largest supported cluster, used as the saturation stand-in
SATURATION_LEDS = MAX_LEDS

CSV_HEADER = ("model", "n_leds", "omega_m", "draws", "grid_spacing")


@dataclass(frozen=True)
class CalibrationTable:
    """Mean localization error per (layout class, LED count) cell."""

    mean_error_m: dict          # (model j in 1..5, n_leds) -> meters
    draws_per_cell: int
    grid_spacing_m: float

    def __post_init__(self):
        table = {(int(j), int(n)): float(v) for (j, n), v in dict(self.mean_error_m).items()}
        for (j, n), v in table.items():
            if not 1 <= j <= 5:
                raise ConfigError(f"model class must lie in 1..5, got {j}")
            if not MIN_LEDS <= n <= MAX_LEDS:
                raise ConfigError(f"LED count must lie in [{MIN_LEDS}, {MAX_LEDS}], got {n}")
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"mean error for ({j}, {n}) must be positive, got {v!r}")
        object.__setattr__(self, "mean_error_m", table)
        if self.draws_per_cell < 1:
            raise ConfigError("draws_per_cell must be >= 1")
        if not (math.isfinite(self.grid_spacing_m) and self.grid_spacing_m > 0.0):
            raise ConfigError("grid_spacing_m must be positive")

    def led_counts(self) -> list[int]:
        return sorted({n for _, n in self.mean_error_m})

    def covers(self, n_leds: int) -> bool:
        return all((j, n_leds) in self.mean_error_m for j in range(1, 6))


def calibrate_mean_errors(room: RoomConfig, led_counts, noise: NoiseModel,
                          grid_spacing_m: float, draws: int, rng,
                          height_m: float = 0.9, margin_m: float = 0.5,
                          rx_area_m2: float = 1e-4,
                          rx_fov_rad: float = math.radians(25.0),
                          apply_receiver_fov: bool = False) -> CalibrationTable:
    """Estimate the mean localization error table by grid simulation.

    For each LED count and each layout class, every AP subset of the
    class is evaluated at every point of a square grid (inset by
    margin_m, at the walking height) with `draws` independent noise
    realizations, and the Euclidean errors are averaged into one cell.
    Loop order is fixed and a single rng is threaded through, so the
    table is a deterministic function of configuration and seed.
    """
    if not (math.isfinite(grid_spacing_m) and grid_spacing_m > 0.0):
        raise ConfigError(f"grid_spacing_m must be positive, got {grid_spacing_m!r}")
    if draws < 1:
        raise ConfigError(f"draws must be >= 1, got {draws}")
    led_counts = [int(n) for n in led_counts]
    for n in led_counts:
        if not MIN_LEDS <= n <= MAX_LEDS:
            raise ConfigError(f"LED count must lie in [{MIN_LEDS}, {MAX_LEDS}], got {n}")

    xs = np.arange(margin_m, room.width_m - margin_m + 1e-9, grid_spacing_m)
    ys = np.arange(margin_m, room.depth_m - margin_m + 1e-9, grid_spacing_m)
    if len(xs) == 0 or len(ys) == 0:
        raise ConfigError("grid margin leaves no sample points")
    prior = ReceiverHeightPrior(height_m)

    table = {}
    for n_leds in led_counts:
        aps = build_room(replace(room, leds_per_ap=n_leds))
        for model in (LayoutClass.SINGLE, LayoutClass.SIDE_PAIR,
                      LayoutClass.DIAGONAL_PAIR, LayoutClass.TRIPLE, LayoutClass.FULL):
            errors = []
            for subset in CLASS_SUBSETS[model]:
                blocked = frozenset(range(4)) - frozenset(subset)
                for x in xs:
                    for y in ys:
                        rx = Receiver((x, y, height_m), UP, rx_area_m2, rx_fov_rad)
                        for _ in range(draws):
                            snap = snapshot(aps, rx, blocked, noise, rng,
                                            apply_receiver_fov=apply_receiver_fov)
                            fix = localize(snap, aps, prior, UP, area_m2=rx_area_m2)
                            if fix.valid:
                                err = float(np.linalg.norm(fix.position - rx.position))
                                errors.append(err)
            if not errors:
                raise DomainError(f"no valid fixes for model {int(model)} with {n_leds} LEDs")
            table[(int(model), n_leds)] = float(np.mean(errors))
    return CalibrationTable(table, draws, grid_spacing_m)


def fixed_coefficients() -> CoefficientScheme:
    """The hand-set doubling ladder."""
    return CoefficientScheme("fixed", dict(FIXED_TRUST))


def calibrated_coefficients(table: CalibrationTable, n_leds: int) -> CoefficientScheme:
    """Trust from the mean-error table at one LED count.

    Trust of class j is the ratio of the full-visibility mean error to
    the class-j mean error, which lands full visibility at exactly 1.
    The no-fix class takes half the smallest derived trust.
    """
    if not table.covers(n_leds):
        raise ConfigError(f"calibration table does not cover {n_leds} LEDs")
    full = table.mean_error_m[(int(LayoutClass.FULL), n_leds)]
    trust = {j: full / table.mean_error_m[(j, n_leds)] for j in range(1, 6)}
    trust[0] = min(trust.values()) / 2.0
    return CoefficientScheme("calibrated", trust, n_leds=n_leds)


def asymptotic_coefficients(table: CalibrationTable) -> CoefficientScheme:
    """Trust at the largest supported cluster, standing in for saturation."""
    if not table.covers(SATURATION_LEDS):
        raise ConfigError(f"calibration table does not cover {SATURATION_LEDS} LEDs")
    base = calibrated_coefficients(table, SATURATION_LEDS)
    return CoefficientScheme("asymptotic", dict(base.trust))


def save_calibration_table(table: CalibrationTable, path) -> None:
    """Write the table as CSV, one row per (model, LED count) cell."""
    if hasattr(path, "write"):
        _write_table(table, path)
        return
    with open(path, "w", newline="") as fh:
        _write_table(table, fh)


def _write_table(table: CalibrationTable, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for (j, n) in sorted(table.mean_error_m):
        writer.writerow([j, n, f"{table.mean_error_m[(j, n)]:.12g}",
                         table.draws_per_cell, f"{table.grid_spacing_m:.12g}"])


def load_calibration_table(path) -> CalibrationTable:
    """Read a table written by save_calibration_table."""
    mean_error = {}
    draws = None
    spacing = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ConfigError(f"unexpected calibration header in {path}: {header}")
        for row in reader:
            if not row:
                continue
            j, n, omega, d, s = row
            mean_error[(int(j), int(n))] = float(omega)
            draws = int(d) if draws is None else draws
            spacing = float(s) if spacing is None else spacing
    if not mean_error:
        raise ConfigError(f"calibration table {path} holds no cells")
    return CalibrationTable(mean_error, draws, spacing)
