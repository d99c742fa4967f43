"""AP availability: random blocking and layout classification.

Each time step every AP is independently shadowed with probability p.
The set of APs still visible falls into one of six layout classes that
drive both the localization strategy and the filter's measurement trust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .errors import ConfigError, DomainError

N_APS = 4


class LayoutClass(IntEnum):
    """Which APs survive blocking, up to the room's corner symmetry."""

    NONE = 0
    SINGLE = 1
    SIDE_PAIR = 2        # two APs sharing a wall
    DIAGONAL_PAIR = 3    # two APs across the room diagonal
    TRIPLE = 4
    FULL = 5


@dataclass(frozen=True)
class BlockingConfig:
    """Per-step, per-AP independent blocking probability."""

    block_probability: float = 0.0

    def __post_init__(self):
        p = self.block_probability
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ConfigError(f"block_probability must lie in [0, 1], got {p!r}")


def draw_blocked(cfg: BlockingConfig, rng) -> frozenset[int]:
    """Indices of APs blocked this step; always consumes 4 uniform draws."""
    u = rng.random(N_APS)
    return frozenset(k for k in range(N_APS) if u[k] < cfg.block_probability)


def classify_layout(available) -> LayoutClass:
    """Map a set of visible AP indices to its layout class.

    Corner indices walk the room perimeter, so two APs are diagonal
    exactly when their indices differ by 2.
    """
    avail = frozenset(int(k) for k in available)
    if not avail <= frozenset(range(N_APS)):
        raise DomainError(f"AP indices must lie in 0..{N_APS - 1}, got {sorted(avail)}")
    n = len(avail)
    if n == 0:
        return LayoutClass.NONE
    if n == 1:
        return LayoutClass.SINGLE
    if n == 3:
        return LayoutClass.TRIPLE
    if n == 4:
        return LayoutClass.FULL
    a, b = sorted(avail)
    return LayoutClass.DIAGONAL_PAIR if b - a == 2 else LayoutClass.SIDE_PAIR
