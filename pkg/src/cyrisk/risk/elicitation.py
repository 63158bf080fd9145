"""PNP beta distributions from security evaluation curves of ML defences."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..stochastic import Beta

__all__ = ["curve_to_pnp", "pnp_mode"]


def _curve(curve):
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ConfigurationError("curve needs at least two (intensity, accuracy) points")
    pts = pts[np.argsort(pts[:, 0], kind="stable")]
    if np.any(np.diff(pts[:, 0]) <= 0):
        raise ConfigurationError("curve intensities must be distinct")
    if np.any((pts[:, 1] < 0) | (pts[:, 1] > 1)):
        raise ConfigurationError("curve accuracies must lie in [0, 1]")
    return pts


def pnp_mode(curve, intensity):
    """``1 - accuracy`` interpolated linearly at ``intensity`` (no extrapolation)."""
    pts = _curve(curve)
    if not pts[0, 0] <= intensity <= pts[-1, 0]:
        raise ConfigurationError(
            f"intensity {intensity} outside the curve range [{pts[0, 0]}, {pts[-1, 0]}]")
    return float(1.0 - np.interp(intensity, pts[:, 0], pts[:, 1]))


def curve_to_pnp(curve, intensity, k):
    """Beta PNP with mode ``1 - accuracy(intensity)`` and concentration ``k > 2``."""
    if not k > 2:
        raise ConfigurationError("concentration k must be > 2")
    q = pnp_mode(curve, intensity)
    return Beta(q * (k - 2) + 1, (1 - q) * (k - 2) + 1)
