import numpy as np
import pytest

from hzreach import HybridZonotope, Zonotope, lift_zonotope


def interval(lo: float, hi: float) -> HybridZonotope:
    """1-D interval [lo, hi] as a hybrid zonotope."""
    return lift_zonotope(Zonotope([0.5 * (lo + hi)], [[0.5 * (hi - lo)]]))


def box(center, halfwidth) -> HybridZonotope:
    center = np.asarray(center, dtype=float)
    halfwidth = np.broadcast_to(np.asarray(halfwidth, dtype=float), center.shape)
    return lift_zonotope(Zonotope(center, np.diag(halfwidth)))


def directions_2d(count: int = 16) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


@pytest.fixture
def unit_box_2d() -> HybridZonotope:
    return box([0.0, 0.0], 1.0)
