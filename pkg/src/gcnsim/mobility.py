"""Node motion: static placement and random waypoint inside a disk."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import MobilitySpec, Position, uniform_disk_point


@dataclass
class MotionState:
    position: Position
    waypoint: Position
    speed: float = 0.0
    pause_until: float = 0.0


def init_motion(spec: MobilitySpec, position: Position, now: float,
                rng: random.Random, region_radius: float) -> MotionState:
    state = MotionState(position=position, waypoint=position)
    if spec.kind == "random_waypoint":
        _pick_waypoint(spec, state, now, rng, region_radius)
    return state


def _pick_waypoint(spec: MobilitySpec, state: MotionState, now: float,
                   rng: random.Random, region_radius: float) -> None:
    state.pause_until = now + rng.uniform(spec.pause_min, spec.pause_max)
    state.waypoint = uniform_disk_point(rng, region_radius)
    state.speed = rng.uniform(spec.speed_min, spec.speed_max)


def advance(spec: MobilitySpec, state: MotionState, now: float, dt: float,
            rng: random.Random, region_radius: float) -> MotionState:
    """Advance one tick of piecewise-linear motion toward the waypoint.

    Mutates and returns `state`.  Static nodes never move.  A random-waypoint
    node pauses on arrival, then draws a fresh uniform-disk waypoint and a
    fresh uniform speed.
    """
    if spec.kind != "random_waypoint":
        return state
    remaining = dt
    t = now
    while remaining > 1e-12:
        if t < state.pause_until:
            wait = min(remaining, state.pause_until - t)
            t += wait
            remaining -= wait
            continue
        if state.speed <= 0.0:
            # degenerate zero-speed draw: the node never reaches its waypoint
            return state
        dx = state.waypoint.x - state.position.x
        dy = state.waypoint.y - state.position.y
        dist = (dx * dx + dy * dy) ** 0.5
        if dist <= 1e-12:
            state.position = state.waypoint
            _pick_waypoint(spec, state, t, rng, region_radius)
            continue
        travel_time = dist / state.speed
        if travel_time <= remaining:
            state.position = state.waypoint
            t += travel_time
            remaining -= travel_time
            _pick_waypoint(spec, state, t, rng, region_radius)
        else:
            frac = (state.speed * remaining) / dist
            state.position = Position(state.position.x + dx * frac,
                                      state.position.y + dy * frac)
            remaining = 0.0
    return state
