"""Spectral step coefficients and the safeguarded, damped step scale.

The spectral (Barzilai-Borwein) coefficient ||s||^2 / (s'y) is computed
from the iterate step s and gradient difference y; its inverse is a
Rayleigh quotient of the subsampled Hessian when both gradients come
from the same batch.  At batch-redraw iterations the solvers anchor the
coefficient at 1/||g|| instead, since a gradient difference across
batches carries no curvature information.  The raw coefficient is then
clipped into [gamma_min, gamma_max] and divided by the iteration count
(or a higher power of it) to produce the diminishing step scale.

Degenerate measurements yield sentinels rather than exceptions:
``bb_coefficient`` returns ``inf`` for zero curvature (s'y == 0, which
the clip projects to gamma_max) and ``None`` when s vanishes or the
inputs are non-finite; ``anchor_coefficient`` returns ``None`` for a
(numerically) stationary gradient.  Callers decide what to do with
``None``.
"""

from dataclasses import dataclass

import numpy as np

STATIONARY_NORM = 1e-14

STANDARD = "standard"
MODIFIED = "modified"
UNDAMPED = "undamped"


@dataclass
class SpectralState:
    """Previous iterate and gradient, kept for the next BB ratio."""

    prev_x: np.ndarray = None
    prev_g: np.ndarray = None
    valid: bool = False

    def update(self, x, g):
        self.prev_x = np.array(x, dtype=np.float64, copy=True)
        self.prev_g = np.array(g, dtype=np.float64, copy=True)
        self.valid = True


@dataclass
class DampingPolicy:
    """Clip bounds, damping exponent and mode for the step scale."""

    gamma_min: float = 1e-8
    gamma_max: float = 1e8
    exponent: float = 1.0
    mode: str = STANDARD

    def __post_init__(self):
        if not 0 < self.gamma_min <= 1 <= self.gamma_max:
            raise ValueError("need 0 < gamma_min <= 1 <= gamma_max")
        if self.exponent < 1:
            raise ValueError("damping exponent must be >= 1")
        if self.mode not in (STANDARD, MODIFIED, UNDAMPED):
            raise ValueError(f"unknown damping mode {self.mode!r}")


def bb_coefficient(s, y):
    """Spectral coefficient ||s||^2 / (s'y), or a sentinel.

    Returns ``inf`` when s'y == 0 and ``None`` when ||s|| == 0 or any
    input is non-finite.  Negative curvature gives a negative value;
    the damping clip maps it to gamma_min.
    """
    ss = float(np.dot(s, s))
    if not np.isfinite(ss) or ss == 0.0:
        return None
    sy = float(np.dot(s, y))
    if not np.isfinite(sy):
        return None
    if sy == 0.0:
        return np.inf
    return ss / sy


def anchor_coefficient(g):
    """Gradient-norm anchor 1/||g||, or ``None`` when stationary."""
    gn = float(np.linalg.norm(g))
    if not np.isfinite(gn) or gn <= STATIONARY_NORM:
        return None
    return 1.0 / gn


def damp(c, k, policy):
    """Clip the coefficient and divide by max(k, 1)**exponent.

    ``inf`` clips to gamma_max, negative values to gamma_min.  The
    ``undamped`` mode skips the division and returns the clipped value.
    """
    if np.isnan(c):
        c = np.inf
    clipped = min(policy.gamma_max, max(policy.gamma_min, c))
    if policy.mode == UNDAMPED:
        return clipped
    return clipped / max(k, 1) ** policy.exponent
