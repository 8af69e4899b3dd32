"""Broadcast channel: transmit radius plus a distance-dependent packet error
rate, with an optional flat interference-loss overlay.

The overlay follows the success-rate scaling rule: the effective success
probability at distance d is (1 - base_loss) * (1 - per(d)).
"""

from __future__ import annotations

import random

from .model import ChannelSpec, NodeId, Position


def default_curve_points() -> list:
    """Synthetic logistic-shaped PER table: lossless to 20 m, certain loss at 60 m.

    Stands in for a measured low-power-radio error curve; replaceable via a
    two-column curve file.
    """
    import math

    def logistic(d):
        return 1.0 / (1.0 + math.exp(-(d - 40.0) / 5.0))

    lo, hi = logistic(20.0), logistic(60.0)
    # rescale so the table hits exactly 0 at 20 m and 1 at 60 m
    return [(float(d), (logistic(d) - lo) / (hi - lo)) for d in range(20, 65, 5)]


def load_curve_file(path: str) -> list:
    """Read a two-column (distance_m, per) curve file; '#' starts a comment."""
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            d, p = line.split()
            pts.append((float(d), float(p)))
    return pts


def _curve_per(points: list, d: float) -> float:
    """Piecewise-linear interpolation, clamped flat beyond the endpoints."""
    if d <= points[0][0]:
        return points[0][1]
    if d >= points[-1][0]:
        return points[-1][1]
    for (d0, p0), (d1, p1) in zip(points, points[1:]):
        if d <= d1:
            frac = (d - d0) / (d1 - d0)
            return p0 + frac * (p1 - p0)
    return points[-1][1]


def per_at(spec: ChannelSpec, d: float) -> float:
    """Packet error rate at distance d, including the base-loss overlay."""
    if d > spec.tx_radius:
        return 1.0
    if spec.flat_per is not None:
        per = spec.flat_per
    elif spec.curve_points:
        per = _curve_per(spec.curve_points, d)
    else:
        per = 0.0
    return 1.0 - (1.0 - spec.base_loss) * (1.0 - per)


def broadcast(spec: ChannelSpec, sender_pos: Position, receivers, rng: random.Random):
    """Sample which receivers hear one transmission.

    receivers: iterable of (NodeId, Position).  Draws are made independently
    per receiver in NodeId order so the stream is reproducible.
    """
    delivered = set()
    for node, pos in sorted(receivers, key=lambda item: item[0]):
        per = per_at(spec, sender_pos.distance_to(pos))
        if per >= 1.0:
            continue
        if per <= 0.0 or rng.random() >= per:
            delivered.add(node)
    return delivered
