"""Flooding baseline: TTL-scoped rebroadcast with duplicate detection, and
the oracle that picks the fair minimum TTL for group-wide reach.
"""

from __future__ import annotations

import random
import warnings
from collections import deque

from .model import NodeId
from .packets import Packet
from .protocol import Deliver, Transmit


class SmfNode:
    """Every node floods: first copy of a message is rebroadcast if its TTL
    permits; duplicates are dropped.  Members (or explicit destinations)
    deliver on first reception."""

    def __init__(self, node_id: NodeId, is_member: bool, rng: random.Random,
                 forward_jitter_max: float = 0.001):
        self.node_id = node_id
        self.is_member = is_member
        self.rng = rng
        self.forward_jitter_max = forward_jitter_max
        self.seq = 0
        self.dup_cache: set = set()

    def _next_msg_id(self):
        self.seq += 1
        return (self.node_id, self.seq)

    def send_flood(self, ttl: int, payload_bytes: int, destinations=()) -> list:
        pkt = Packet(kind="data", group=0, origin=self.node_id, hop_counter=0,
                     msg_id=self._next_msg_id(),
                     destinations=[(d, 0) for d in destinations],
                     payload_bytes=payload_bytes, smf_ttl=ttl)
        self.dup_cache.add(pkt.msg_id)
        return [Transmit(pkt, self.rng.uniform(0.0, self.forward_jitter_max))]

    def on_data(self, pkt: Packet, sender: NodeId, now: float) -> list:
        if pkt.msg_id in self.dup_cache:
            return []
        self.dup_cache.add(pkt.msg_id)
        actions = []
        is_dest = any(d == self.node_id for d, _ in pkt.destinations)
        if is_dest or (not pkt.destinations and self.is_member):
            actions.append(Deliver(pkt.msg_id))
        if pkt.smf_ttl > 0:
            out = Packet(kind="data", group=pkt.group, origin=pkt.origin,
                         hop_counter=pkt.hop_counter + 1, msg_id=pkt.msg_id,
                         destinations=pkt.destinations,
                         payload_bytes=pkt.payload_bytes, smf_ttl=pkt.smf_ttl - 1)
            actions.append(Transmit(out, self.rng.uniform(0.0, self.forward_jitter_max)))
        return actions

    def handle(self, pkt: Packet, sender: NodeId, now: float) -> list:
        return self.on_data(pkt, sender, now)


# --- fair-TTL oracle ------------------------------------------------------

def unit_disk_adjacency(positions: dict, tx_radius: float) -> dict:
    """positions: NodeId -> Position.  Returns NodeId -> list of neighbors."""
    ids = sorted(positions)
    adj = {i: [] for i in ids}
    r2 = tx_radius * tx_radius
    for idx, i in enumerate(ids):
        pi = positions[i]
        for j in ids[idx + 1:]:
            pj = positions[j]
            dx = pi.x - pj.x
            dy = pi.y - pj.y
            if dx * dx + dy * dy <= r2:
                adj[i].append(j)
                adj[j].append(i)
    return adj


def bfs_hops(adj: dict, start: NodeId) -> dict:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def min_ttl_oracle(positions: dict, tx_radius: float, group: set,
                   source: NodeId = None) -> int:
    """Smallest TTL letting a flood from `source` reach every group member.

    With `source` None the worst case over all member senders is returned,
    which on the loss-free unit-disk graph is the group's hop diameter.
    If part of the group is unreachable, the TTL covering the largest
    reachable subset is returned with a warning.
    """
    if not group:
        raise ValueError("empty group")
    adj = unit_disk_adjacency(positions, tx_radius)
    senders = [source] if source is not None else sorted(group)
    best = 0
    disconnected = False
    for s in senders:
        dist = bfs_hops(adj, s)
        reachable = [dist[m] for m in group if m in dist]
        if len(reachable) < len(group):
            disconnected = True
        if reachable:
            best = max(best, max(reachable))
    if disconnected:
        warnings.warn("group is not connected on the unit-disk graph; "
                      "returning TTL for the largest reachable subset")
    return best
