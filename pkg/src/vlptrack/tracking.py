"""Constant-velocity Kalman tracking with layout-dependent measurement trust.

State is position and velocity stacked into six entries. The observation
is the per-step position fix. The trust coefficient scales the
measurement noise covariance up or down per layout class, so sparse-AP
fixes pull the filter less than full-visibility fixes. A step with no
fix at all feeds the predicted position back as a pseudo-measurement,
which leaves the mean untouched while the covariance follows the usual
update, keeping every scheme on identical machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .errors import ConfigError, DomainError, NumericalError

N_LAYOUTS = 6

# trust ladder doubling from worst layout to full visibility
FIXED_TRUST = MappingProxyType({
    0: 1.0 / 32.0,
    1: 1.0 / 16.0,
    2: 1.0 / 8.0,
    3: 1.0 / 4.0,
    4: 1.0 / 2.0,
    5: 1.0,
})


@dataclass(frozen=True)
class FilterConfig:
    """Step period and the two noise scales of the tracking model."""

    dt_s: float = 1.0
    process_noise_std: float = 0.005
    measurement_noise_std: float = 0.05
    init_speed_std: float = 0.1

    def __post_init__(self):
        for name in ("dt_s", "process_noise_std", "measurement_noise_std", "init_speed_std"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class FilterState:
    """Gaussian belief over stacked position and velocity."""

    mean: np.ndarray          # (6,)
    covariance: np.ndarray    # (6, 6)

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).copy())
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float).copy())
        if self.mean.shape != (6,) or self.covariance.shape != (6, 6):
            raise DomainError("filter state must be 6-dimensional")

    @property
    def position(self) -> np.ndarray:
        return self.mean[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[3:]


@dataclass(frozen=True)
class CoefficientScheme:
    """Named map from layout class to measurement trust.

    "conventional" pins every class to trust 1, reproducing a plain
    Kalman filter. "fixed" uses the doubling ladder above. "calibrated"
    and "asymptotic" carry trust derived from simulated mean errors; the
    former is tied to a specific LED count.
    """

    kind: str
    trust: dict
    n_leds: int | None = None

    def __post_init__(self):
        trust = {int(j): float(v) for j, v in dict(self.trust).items()}
        if set(trust) != set(range(N_LAYOUTS)):
            raise ConfigError(f"trust must cover layout classes 0..{N_LAYOUTS - 1}")
        for j, v in trust.items():
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"trust[{j}] must be positive, got {v!r}")
        if self.kind == "conventional" and any(v != 1.0 for v in trust.values()):
            raise ConfigError("conventional scheme must have unit trust everywhere")
        if self.kind == "fixed" and trust != dict(FIXED_TRUST):
            raise ConfigError("fixed scheme must use the standard trust ladder")
        object.__setattr__(self, "trust", trust)

    @classmethod
    def conventional(cls) -> "CoefficientScheme":
        return cls("conventional", {j: 1.0 for j in range(N_LAYOUTS)})


def transition_matrix(dt_s: float) -> np.ndarray:
    B = np.eye(6)
    B[0, 3] = B[1, 4] = B[2, 5] = dt_s
    return B


def observation_matrix() -> np.ndarray:
    return np.hstack([np.eye(3), np.zeros((3, 3))])


def init_filter(position, cfg: FilterConfig) -> FilterState:
    """Start at a known fix with zero velocity and diagonal uncertainty."""
    mean = np.concatenate([np.asarray(position, dtype=float), np.zeros(3)])
    var = [cfg.measurement_noise_std ** 2] * 3 + [cfg.init_speed_std ** 2] * 3
    return FilterState(mean, np.diag(var))


_I6 = np.eye(6)


def kf_predict(state: FilterState, cfg: FilterConfig) -> FilterState:
    """Advance the belief one step under the constant-velocity model."""
    B = transition_matrix(cfg.dt_s)
    mean = B @ state.mean
    cov = B @ state.covariance @ B.T + cfg.process_noise_std ** 2 * _I6
    return FilterState(mean, cov)


_I3 = np.eye(3)


def kf_update(state: FilterState, measurement, cfg: FilterConfig,
              trust: float) -> FilterState:
    """Fold one position fix into the belief.

    The measurement covariance is the base measurement noise divided by
    the trust coefficient, so low trust inflates the assumed noise. An
    invalid measurement becomes a pseudo-fix at the predicted position:
    the mean is unchanged and only the covariance contracts.
    """
    if not (math.isfinite(trust) and trust > 0.0):
        raise DomainError(f"trust must be positive, got {trust!r}")
    z = measurement.position if measurement.valid else state.mean[:3]
    P = state.covariance
    S = P[:3, :3] + (cfg.measurement_noise_std ** 2 / trust) * _I3
    try:
        # K = P C^T S^-1, exploiting P's symmetry to solve on the left
        K = np.linalg.solve(S, P[:3, :]).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is singular") from exc
    mean = state.mean + K @ (np.asarray(z, dtype=float) - state.mean[:3])
    cov = P - K @ P[:3, :]      # (I - K C) P with C picking the position block
    cov = 0.5 * (cov + cov.T)
    return FilterState(mean, cov)


def track_route(measurements, layouts, cfg: FilterConfig,
                scheme: CoefficientScheme, init: FilterState) -> np.ndarray:
    """Run predict/update over a route, returning the position track.

    measurements and layouts run in lockstep, one entry per step after
    the initialization step.
    """
    measurements = list(measurements)
    layouts = list(layouts)
    if len(measurements) != len(layouts):
        raise DomainError("measurements and layouts must have equal length")
    state = init
    track = np.empty((len(measurements), 3))
    for i, (meas, layout) in enumerate(zip(measurements, layouts)):
        state = kf_predict(state, cfg)
        state = kf_update(state, meas, cfg, scheme.trust[int(layout)])
        track[i] = state.position
    return track
