"""Per-step position fixes from one snapshot of LED gains.

Strategy depends on how many APs got through: a single AP yields a
weighted bearing intersected with the known receiver height plane; two
or more APs yield a closed-form least-squares bearing intersection that
seeds a damped Gauss-Newton refinement against the raw gain model. No
visible AP yields an invalid measurement for the filter to coast over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .availability import LayoutClass, classify_layout
from .errors import (ConfigError, DegenerateGeometryError, DomainError,
                     GeometryError, NoSignalError)
from .geometry import AccessPoint, Receiver, room_bounds, unit, vec3, _as_unit

# damped Gauss-Newton controls for the gain refinement
MAX_REFINE_ITERS = 100
STEP_TOL_M = 1e-6
_LAMBDA_INIT = 1e-3
_LAMBDA_LIMIT = 1e12
_DIAG_FLOOR = 1e-300


@dataclass(frozen=True)
class AoaEstimate:
    """Bearing from one AP toward the receiver, recovered from LED gains."""

    ap_index: int
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "direction", _as_unit(self.direction, "AOA direction"))
        if self.ap_index < 0:
            raise DomainError(f"ap_index must be >= 0, got {self.ap_index}")


@dataclass(frozen=True)
class ReceiverHeightPrior:
    """Known receiver plane height used to resolve single-AP fixes."""

    height_m: float

    def __post_init__(self):
        if not (math.isfinite(self.height_m) and self.height_m > 0.0):
            raise ConfigError(f"height prior must be positive, got {self.height_m!r}")


@dataclass(frozen=True)
class PositionMeasurement:
    """One step's position fix; invalid exactly when no AP was usable."""

    position: np.ndarray
    layout: LayoutClass
    valid: bool

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "layout", LayoutClass(self.layout))
        if self.valid != (self.layout != LayoutClass.NONE):
            raise DomainError("a measurement is valid exactly when some AP was usable")
        if self.valid and not np.all(np.isfinite(self.position)):
            raise DomainError("valid measurement with non-finite position")

    @classmethod
    def invalid(cls) -> "PositionMeasurement":
        return cls(np.full(3, np.nan), LayoutClass.NONE, False)


def estimate_aoa(ap: AccessPoint, gains) -> AoaEstimate:
    """Gain-weighted mean of the LED beam axes, normalized to a bearing.

    LEDs seeing the receiver near their beam axis dominate the sum, so
    the result points from the AP roughly at the receiver. Raises
    NoSignalError when every gain is zero.
    """
    w = np.asarray(gains, dtype=float)
    if w.shape != (ap.n_leds,):
        raise DomainError(f"expected {ap.n_leds} gains, got shape {w.shape}")
    if np.any(w < 0.0):
        raise DomainError("gains must be nonnegative")
    if float(w.max()) <= 0.0:
        raise NoSignalError(f"AP {ap.index} delivered no signal")
    return AoaEstimate(ap.index, unit(w @ ap.led_axes))


def locate_single_ap(ap: AccessPoint, aoa: AoaEstimate, prior: ReceiverHeightPrior,
                     bounds=None) -> np.ndarray:
    """Intersect one bearing with the horizontal receiver plane.

    The ray from the AP along the bearing must descend to reach the
    plane z = prior height below the ceiling; otherwise GeometryError.
    With bounds given, the x-y fix is clamped into the room footprint.
    """
    p = aoa.direction
    drop = prior.height_m - float(ap.position[2])
    if drop >= 0.0:
        raise GeometryError("receiver plane is not below the AP")
    if p[2] >= -1e-12:
        raise GeometryError("bearing does not descend toward the receiver plane")
    t = drop / float(p[2])
    pos = ap.position + t * p
    if bounds is not None:
        lo, hi = bounds
        pos[0] = min(max(pos[0], lo[0]), hi[0])
        pos[1] = min(max(pos[1], lo[1]), hi[1])
    return pos


def locate_aoa_multilateration(aoas, aps, bounds=None) -> np.ndarray:
    """Closed-form least-squares intersection of two or more bearings.

    Minimizes the summed squared distance from the point to each ray via
    the normal equations sum(I - p p^T) r = sum(I - p p^T) r_ap. Raises
    DegenerateGeometryError when the bearings are near parallel and the
    system loses rank.
    """
    aoas = list(aoas)
    if len(aoas) < 2:
        raise DomainError("bearing intersection needs at least two AOA estimates")
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for aoa in aoas:
        p = aoa.direction
        proj = np.eye(3) - np.outer(p, p)
        A += proj
        b += proj @ aps[aoa.ap_index].position
    if float(np.linalg.eigvalsh(A)[0]) < 1e-9:
        raise DegenerateGeometryError("bearings are near parallel")
    pos = np.linalg.solve(A, b)
    if bounds is not None:
        lo, hi = bounds
        pos = np.clip(pos, lo, hi)
    return pos


def _stack_leds(aps, available):
    order = sorted(int(k) for k in available)
    pos = np.concatenate([np.broadcast_to(aps[k].position, (aps[k].n_leds, 3))
                          for k in order])
    ori = np.concatenate([aps[k].led_axes for k in order])
    orders = np.concatenate([aps[k].led_orders for k in order])
    return order, pos, ori, orders


def gain_model(point, led_positions, led_orientations, lambertian_orders,
               rx_orientation, area_m2) -> np.ndarray:
    """Smooth Lambertian gains at a trial point, without the FOV rectangle.

    Negative source or receiver cosines clamp the gain to zero so the
    model stays defined over the whole room during refinement.
    """
    d = np.asarray(point, dtype=float)[None, :] - led_positions
    r2 = np.einsum("ij,ij->i", d, d)
    a = np.maximum(np.einsum("ij,ij->i", led_orientations, d), 0.0)  # r cos(phi)
    b = np.maximum(-(d @ rx_orientation), 0.0)                        # r cos(theta)
    m = lambertian_orders
    ok = r2 > 1e-24
    r = np.sqrt(np.where(ok, r2, 1.0))
    g = (m + 1.0) / (2.0 * math.pi) * area_m2 * a ** m * b / r ** (m + 3.0)
    return np.where(ok, g, 0.0)


def gain_jacobian(point, led_positions, led_orientations, lambertian_orders,
                  rx_orientation, area_m2) -> np.ndarray:
    """Analytic derivative of gain_model with respect to the trial point."""
    return _gains_and_jacobian(point, led_positions, led_orientations,
                               lambertian_orders, rx_orientation, area_m2)[1]


def _gains_and_jacobian(point, led_positions, led_orientations, lambertian_orders,
                        rx_orientation, area_m2):
    # shares the cosine and power terms between value and derivative
    d = np.asarray(point, dtype=float)[None, :] - led_positions
    r2 = np.einsum("ij,ij->i", d, d)
    a = np.einsum("ij,ij->i", led_orientations, d)
    b = -(d @ rx_orientation)
    m = lambertian_orders
    mask = (a > 0.0) & (b > 0.0) & (r2 > 1e-24)
    am = np.where(mask, a, 1.0)     # placeholder base; masked rows zeroed via scale
    bm = np.where(mask, b, 0.0)
    r2s = np.where(mask, r2, 1.0)
    apow1 = am ** (m - 1.0)         # cos^(m-1) term reused by value and slope
    apow = apow1 * am
    scale = np.where(mask,
                     (m + 1.0) / (2.0 * math.pi) * area_m2 / np.sqrt(r2s) ** (m + 3.0),
                     0.0)
    g = scale * apow * bm
    J = ((scale * m * apow1 * bm)[:, None] * led_orientations
         - (scale * apow)[:, None] * rx_orientation[None, :]
         - (scale * (m + 3.0) * apow * bm / r2s)[:, None] * d)
    return g, J


def refine_objective(point, snapshot, aps, rx_orientation, area_m2=1e-4):
    """Sum of squared gain residuals at a point, with its analytic gradient."""
    if not snapshot.available:
        raise NoSignalError("no available AP in snapshot")
    order, pos, ori, orders = _stack_leds(aps, snapshot.available)
    measured = np.concatenate([snapshot.gains[k] for k in order])
    g, J = _gains_and_jacobian(point, pos, ori, orders, rx_orientation, area_m2)
    e = g - measured
    return float(e @ e), 2.0 * (J.T @ e)


def _solve3(M, rhs) -> np.ndarray:
    # adjugate solve for the 3x3 normal equations; LAPACK overhead dominates
    # at this size
    a, b, c = M[0]
    d, e, f = M[1]
    g, h, i = M[2]
    co0 = e * i - f * h
    co1 = f * g - d * i
    co2 = d * h - e * g
    det = a * co0 + b * co1 + c * co2
    if det == 0.0 or not math.isfinite(det):
        raise np.linalg.LinAlgError("singular 3x3 system")
    x, y, z = rhs
    return np.array([
        (x * co0 + y * (c * h - b * i) + z * (b * f - c * e)) / det,
        (x * co1 + y * (a * i - c * g) + z * (c * d - a * f)) / det,
        (x * co2 + y * (b * g - a * h) + z * (a * e - b * d)) / det,
    ])


def locate_hybrid(snapshot, aps, rx_orientation, init, area_m2=1e-4) -> np.ndarray:
    """Refine a coarse fix against raw gains by damped Gauss-Newton.

    Minimizes the squared residual between measured and modeled gains
    over every LED of every available AP. The damping factor grows until
    a step reduces the residual; if damping saturates the initial point
    is returned, and the final result is clamped to the room volume.
    """
    if not snapshot.available:
        raise NoSignalError("no available AP in snapshot")
    rx_orientation = _as_unit(rx_orientation, "receiver orientation")
    order, led_pos, led_ori, orders = _stack_leds(aps, snapshot.available)
    measured = np.concatenate([snapshot.gains[k] for k in order])
    lo, hi = room_bounds(aps)
    x = np.clip(np.asarray(init, dtype=float), lo, hi)
    start = x.copy()

    def residual(p):
        return gain_model(p, led_pos, led_ori, orders, rx_orientation, area_m2) - measured

    g, J = _gains_and_jacobian(x, led_pos, led_ori, orders, rx_orientation, area_m2)
    f = g - measured
    cost = float(f @ f)
    lam = _LAMBDA_INIT
    for _ in range(MAX_REFINE_ITERS):
        H = J.T @ J
        grad = J.T @ f
        damp = np.maximum(np.diag(H), _DIAG_FLOOR)
        accepted = False
        while lam <= _LAMBDA_LIMIT:
            try:
                delta = _solve3(H + lam * np.diag(damp), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if not np.all(np.isfinite(delta)):
                lam *= 10.0
                continue
            f_new = residual(x + delta)
            cost_new = float(f_new @ f_new)
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            return np.clip(start, lo, hi)
        x = x + delta
        lam = max(lam * 0.1, 1e-12)
        if math.sqrt(float(delta @ delta)) < STEP_TOL_M:
            break
        g, J = _gains_and_jacobian(x, led_pos, led_ori, orders, rx_orientation, area_m2)
        f = g - measured
        cost = float(f @ f)
    return np.clip(x, lo, hi)


def localize(snapshot, aps, prior: ReceiverHeightPrior, rx_orientation,
             area_m2=1e-4) -> PositionMeasurement:
    """One snapshot in, one position fix out.

    Dispatches on the layout class of the available APs. Any failure in
    the underlying geometry (no signal, non-descending bearing, rank
    deficiency) demotes the step to an invalid measurement rather than
    raising, since the tracker treats those the same as total blockage.
    """
    layout = classify_layout(snapshot.available)
    if layout == LayoutClass.NONE:
        return PositionMeasurement.invalid()
    try:
        if layout == LayoutClass.SINGLE:
            (k,) = snapshot.available
            aoa = estimate_aoa(aps[k], snapshot.gains[k])
            pos = locate_single_ap(aps[k], aoa, prior, bounds=room_bounds(aps))
        else:
            aoas = [estimate_aoa(aps[k], snapshot.gains[k])
                    for k in sorted(snapshot.available)]
            init = locate_aoa_multilateration(aoas, aps, bounds=room_bounds(aps))
            pos = locate_hybrid(snapshot, aps, rx_orientation, init, area_m2=area_m2)
    except DomainError:
        return PositionMeasurement.invalid()
    return PositionMeasurement(pos, layout, True)
