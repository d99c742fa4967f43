"""Line-of-sight optical channel between LED clusters and the photodiode.

The link gain follows the generalized Lambertian model: the source term
cos^m(phi) for emission angle phi and order m, the receiver term
cos(theta) scaled by the active area over squared distance, and hard
cutoffs at the source hemisphere and (optionally) the receiver field of
view. Channel gain is dimensionless; a gain of zero means no signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import AccessPoint, LedSource, Receiver, vec3

SPEED_OF_LIGHT_M_S = 299_792_458.0

NOISE_KINDS = ("none", "multiplicative-gaussian", "additive-gaussian")


@dataclass(frozen=True)
class ChannelSample:
    """One LED-to-receiver link: gain, time of flight, and gating outcome."""

    gain: float
    delay_s: float
    in_view: bool


@dataclass(frozen=True)
class NoiseModel:
    """Perturbation applied to clean gains; only nonzero gains see noise."""

    kind: str = "multiplicative-gaussian"
    sigma: float = 0.05

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ConfigError(f"noise sigma must be >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class MeasurementSnapshot:
    """All gains seen in one step plus which APs actually reached the receiver."""

    gains: np.ndarray              # (n_aps, n_leds), zero where gated or blocked
    available: frozenset[int]      # APs that are unblocked and delivered signal
    true_position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=float))
        object.__setattr__(self, "available", frozenset(int(k) for k in self.available))
        object.__setattr__(self, "true_position", vec3(*self.true_position))
        if self.gains.ndim != 2:
            raise DomainError("snapshot gains must be a 2-D (AP, LED) array")


def los_gain(src: LedSource, rx: Receiver, apply_receiver_fov: bool = True) -> ChannelSample:
    """Gain of a single line-of-sight link.

    Parameters
    ----------
    src, rx : the LED and the photodiode.
    apply_receiver_fov : when True, links arriving outside the receiver
        field of view are gated to zero; the source hemisphere cutoff
        always applies.

    Returns
    -------
    ChannelSample with nonnegative gain, propagation delay in seconds,
    and whether the link passed all gates.
    """
    d = rx.position - src.position
    r2 = float(d @ d)
    if r2 < 1e-24:
        raise DomainError("source and receiver are co-located")
    r = math.sqrt(r2)
    cos_phi = float(src.orientation @ d) / r
    cos_theta = -float(rx.orientation @ d) / r
    delay = r / SPEED_OF_LIGHT_M_S
    in_view = cos_phi > 0.0 and cos_theta > 0.0
    if apply_receiver_fov:
        in_view = in_view and cos_theta >= math.cos(rx.fov_rad)
    if not in_view:
        return ChannelSample(0.0, delay, False)
    m = src.lambertian_order
    gain = (m + 1.0) / (2.0 * math.pi) * cos_phi ** m * cos_theta * rx.area_m2 / r2
    return ChannelSample(gain, delay, True)


def led_gains(ap: AccessPoint, rx: Receiver, apply_receiver_fov: bool = True) -> np.ndarray:
    """Clean gains from every LED of one AP, vectorized over the cluster.

    All LEDs of an AP share its position, so distance and arrival angle
    are common to the cluster; only the emission cosine varies per LED.
    """
    d = rx.position - ap.position
    r2 = float(d @ d)
    if r2 < 1e-24:
        raise DomainError("source and receiver are co-located")
    r = math.sqrt(r2)
    cos_theta = -float(rx.orientation @ d) / r
    if cos_theta <= 0.0:
        return np.zeros(ap.n_leds)
    if apply_receiver_fov and cos_theta < math.cos(rx.fov_rad):
        return np.zeros(ap.n_leds)
    cos_phi = np.maximum((ap.led_axes @ d) / r, 0.0)   # hemisphere gate
    scale = (ap.led_orders + 1.0) / (2.0 * math.pi) * cos_theta * rx.area_m2 / r2
    return scale * cos_phi ** ap.led_orders


def apply_noise(gains: np.ndarray, noise: NoiseModel, rng) -> np.ndarray:
    """Perturb a gain array in place-safe fashion.

    The full noise matrix is drawn regardless of which entries are zero,
    so the rng stream advances identically for any blocking pattern.
    Zero gains stay zero and perturbed gains are clamped at zero.
    """
    gains = np.asarray(gains, dtype=float)
    if noise.kind == "none":
        return gains.copy()
    eps = rng.standard_normal(gains.shape) * noise.sigma
    if noise.kind == "multiplicative-gaussian":
        out = gains * (1.0 + eps)
    else:
        out = gains + eps
    out = np.where(gains > 0.0, out, 0.0)
    np.maximum(out, 0.0, out=out)
    return out


def snapshot(aps, rx: Receiver, blocked, noise: NoiseModel, rng,
             apply_receiver_fov: bool = False) -> MeasurementSnapshot:
    """Measure every LED of every AP at the receiver for one time step.

    Blocked APs contribute zero gain. An AP counts as available when it
    is unblocked and at least one of its LEDs produced a positive noisy
    gain. The receiver FOV gate is off by default so that steep arrival
    angles still register; pass apply_receiver_fov=True for strict optics.
    """
    blocked = frozenset(int(k) for k in blocked)
    n_aps = len(aps)
    n_leds = aps[0].n_leds
    clean = np.zeros((n_aps, n_leds))
    for k, ap in enumerate(aps):
        if ap.n_leds != n_leds:
            raise DomainError("all APs in a snapshot must have equal LED counts")
        if k in blocked:
            continue
        clean[k] = led_gains(ap, rx, apply_receiver_fov)
    noisy = apply_noise(clean, noise, rng)
    available = frozenset(k for k in range(n_aps)
                          if k not in blocked and float(noisy[k].max()) > 0.0)
    return MeasurementSnapshot(noisy, available, rx.position.copy())
