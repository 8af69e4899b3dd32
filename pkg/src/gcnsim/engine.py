"""Deterministic discrete-event loop binding nodes, channel, mobility, and
traffic into one simulation run.

All randomness is drawn from named per-(seed, subsystem, node) streams, and
simultaneous events are ordered by a monotone sequence number, so a run is a
pure function of (scenario, seed): repeating it yields bit-identical traces
and metrics.
"""

from __future__ import annotations

import hashlib
import heapq

from . import channel as channel_mod
from .analytics import MetricsReport, build_world, connectivity_sample
from .mobility import advance, init_motion
from .model import (STREAM_CHANNEL, STREAM_MOBILITY, STREAM_PROTOCOL,
                    ConfigurationError, Scenario, make_rng, validate_scenario)
from .protocol import (BecomeRelay, Deliver, GcnNode, NoRouteError, SendAck,
                       Transmit)
from .smf import SmfNode, bfs_hops, min_ttl_oracle, unit_disk_adjacency

MOBILITY_TICK = 0.1
SAMPLE_PERIOD = 1.0

# event kinds, ordered only by (time, seq)
_RX, _TX, _ACK_DUE, _TRAFFIC, _MOB, _SAMPLE, _DISCOVER, _REFRESH = range(8)


def trace_hash(trace: list) -> str:
    h = hashlib.sha256()
    for rec in trace:
        h.update(repr(rec).encode())
    return h.hexdigest()


class Run:
    """One simulation of one scenario under one seed."""

    def __init__(self, scenario: Scenario, seed: int, collect_trace: bool = True):
        violations = validate_scenario(scenario)
        if violations:
            raise ConfigurationError("; ".join(violations))
        self.sc = scenario
        self.seed = seed
        self.collect_trace = collect_trace
        self.trace: list = []
        self.now = 0.0
        self._seq = 0
        self._heap: list = []

        nodes, self.source = build_world(scenario, seed)
        self.positions = {nid: pos for nid, pos, _ in nodes}
        self.members = {nid for nid, _, flag in nodes if flag}
        self.node_ids = sorted(self.positions)
        self.channel_rng = make_rng(seed, STREAM_CHANNEL)

        tm = scenario.timing
        if scenario.protocol == "gcn":
            self.nodes = {
                nid: GcnNode(nid, nid in self.members, 0, scenario.source_ttl,
                             scenario.desired_relays,
                             make_rng(seed, STREAM_PROTOCOL, nid),
                             ack_delay_max=tm.ack_delay_max,
                             neighbor_count_window=tm.neighbor_count_window,
                             forward_jitter_max=tm.forward_jitter_max,
                             members_forward_data=scenario.members_forward_data)
                for nid in self.node_ids}
        else:
            self.nodes = {
                nid: SmfNode(nid, nid in self.members,
                             make_rng(seed, STREAM_PROTOCOL, nid),
                             forward_jitter_max=tm.forward_jitter_max)
                for nid in self.node_ids}

        self._mobile = scenario.mobility.kind == "random_waypoint"
        placement_radius = (scenario.outer_radius if scenario.outer_radius is not None
                            else scenario.region_radius)
        if self._mobile:
            self._motion_rng = {nid: make_rng(seed, STREAM_MOBILITY, nid)
                                for nid in self.node_ids}
            self.motion = {
                nid: init_motion(scenario.mobility, self.positions[nid], 0.0,
                                 self._motion_rng[nid], placement_radius)
                for nid in self.node_ids}
        else:
            self._neighbor_cache = self._build_neighbor_cache()

        self.report = MetricsReport(seed=seed, protocol=scenario.protocol,
                                    num_members=len(self.members), source=self.source)
        # msg_id -> (flow index, intended recipients, already-counted recipients)
        self._intended: dict = {}
        self._flow_counts = [[0, 0] for _ in scenario.traffic.flows]
        self._discovered_members: set = set()  # epoch-0 members that heard discovery
        self._epoch = 0
        self._smf_ttl_by_sender: dict = {}
        self._done = False

    # -- setup -------------------------------------------------------------

    def _build_neighbor_cache(self) -> dict:
        cache = {}
        spec = self.sc.channel
        for nid in self.node_ids:
            pos = self.positions[nid]
            entries = []
            for other in self.node_ids:
                if other == nid:
                    continue
                per = channel_mod.per_at(spec, pos.distance_to(self.positions[other]))
                if per < 1.0:
                    entries.append((other, per))
            cache[nid] = entries
        return cache

    def _push(self, time: float, kind: int, a=None, b=None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time, self._seq, kind, a, b))

    def _schedule_all(self) -> None:
        sc = self.sc
        if sc.protocol == "gcn":
            self._push(0.0, _DISCOVER, 0)
            period = sc.timing.rediscovery_period
            if period:
                epoch = 1
                t = period
                while t < sc.duration:
                    self._push(t, _DISCOVER, epoch)
                    epoch += 1
                    t += period
            refresh = sc.timing.distance_refresh_period
            if refresh:
                t = refresh
                while t < sc.duration:
                    self._push(t, _REFRESH)
                    t += refresh
        # SMF per-sender TTLs are computed lazily at send time
        for flow_idx, flow in enumerate(sc.traffic.flows):
            senders = ([self.source] if flow.senders == "source"
                       else sorted(self.members))
            if flow.dests == "source":
                senders = [s for s in senders if s != self.source]
            for sender in senders:
                k = 0
                while True:
                    t = flow.start + k / flow.rate
                    if t >= flow.stop:
                        break
                    self._push(t, _TRAFFIC, flow_idx, sender)
                    k += 1
        if self._mobile:
            t = MOBILITY_TICK
            while t <= sc.duration:
                self._push(t, _MOB)
                t += MOBILITY_TICK
        t = SAMPLE_PERIOD
        while t <= sc.duration:
            self._push(t, _SAMPLE)
            t += SAMPLE_PERIOD

    # -- trace / metrics helpers ------------------------------------------

    def _record(self, node, event, msg_id=None, info=None, nbytes=0) -> None:
        if self.collect_trace:
            self.trace.append((round(self.now, 9), node, event, msg_id, info, nbytes))

    def _resolve_dests(self, flow, sender) -> list:
        if flow.dests == "source":
            return [self.source]
        if flow.dests == "all":
            return sorted(self.members - {sender})
        return list(flow.dests)

    # -- event execution ---------------------------------------------------

    def _apply_actions(self, node_id: int, actions: list) -> None:
        for act in actions:
            if isinstance(act, Transmit):
                self._push(self.now + act.delay, _TX, node_id, act.packet)
            elif isinstance(act, SendAck):
                self._push(self.now + act.delay, _ACK_DUE, node_id)
            elif isinstance(act, BecomeRelay):
                self._record(node_id, "relay", info=self._epoch)
            elif isinstance(act, Deliver):
                self._count_delivery(node_id, act.msg_id)

    def _count_delivery(self, node_id: int, msg_id) -> None:
        entry = self._intended.get(msg_id)
        if entry is None:
            return  # distance-refresh or otherwise unmetered packet
        flow_idx, intended, counted = entry
        if node_id in intended and node_id not in counted:
            counted.add(node_id)
            self._flow_counts[flow_idx][0] += 1
            self._record(node_id, "deliver", msg_id)

    def _transmit(self, sender: int, pkt) -> None:
        nbytes = pkt.wire_bytes()
        if pkt.kind in ("discovery", "ack"):
            self.report.bytes_control += nbytes
        else:
            self.report.bytes_data += nbytes
        info = pkt.ttl if pkt.kind == "discovery" else (
            pkt.smf_ttl if pkt.smf_ttl is not None else
            [m for _, m in pkt.destinations])
        self._record(sender, "tx:" + pkt.kind, pkt.msg_id, info, nbytes)
        spec = self.sc.channel
        pos = self.positions[sender]
        rng = self.channel_rng
        if self._mobile:
            for other in self.node_ids:
                if other == sender:
                    continue
                per = channel_mod.per_at(spec, pos.distance_to(self.positions[other]))
                if per >= 1.0:
                    continue
                if per <= 0.0 or rng.random() >= per:
                    self._push(self.now, _RX, other, (pkt, sender))
        else:
            for other, per in self._neighbor_cache[sender]:
                if per <= 0.0 or rng.random() >= per:
                    self._push(self.now, _RX, other, (pkt, sender))

    def _receive(self, node_id: int, pkt, sender: int) -> None:
        if (pkt.kind == "discovery" and pkt.epoch == 0
                and node_id in self.members):
            self._discovered_members.add(node_id)
        actions = self.nodes[node_id].handle(pkt, sender, self.now)
        self._apply_actions(node_id, actions)

    def _smf_ttl_for(self, sender: int) -> int:
        """Fair flood TTL for this sender: the minimum reaching every member.

        Static runs cache the value; mobile runs track a per-sender running
        maximum refreshed at every sample tick so the flood keeps covering
        the group as it spreads out.
        """
        ttl = self._smf_ttl_by_sender.get(sender)
        if ttl is None:
            ttl = min_ttl_oracle(self.positions, self.sc.tx_radius,
                                 self.members, source=sender)
            self._smf_ttl_by_sender[sender] = ttl
        if ttl > self.report.smf_ttl:
            self.report.smf_ttl = ttl
        return ttl

    def _do_traffic(self, flow_idx: int, sender: int) -> None:
        flow = self.sc.traffic.flows[flow_idx]
        node = self.nodes[sender]
        if flow.pattern == "one_to_all":
            intended = self.members - {sender}
            if self.sc.protocol == "gcn":
                actions = node.send_one_to_all(flow.payload_bytes)
            else:
                actions = node.send_flood(self._smf_ttl_for(sender),
                                          flow.payload_bytes)
        else:
            dests = self._resolve_dests(flow, sender)
            intended = set(dests)
            if self.sc.protocol == "gcn":
                try:
                    actions = node.send_targeted(dests, self.sc.mrd_offset,
                                                 flow.payload_bytes)
                except NoRouteError:
                    self.report.no_route_drops += 1
                    self._flow_counts[flow_idx][1] += len(intended)
                    self._record(sender, "noroute", None, dests)
                    return
            else:
                actions = node.send_flood(self._smf_ttl_for(sender),
                                          flow.payload_bytes,
                                          destinations=dests)
        self._flow_counts[flow_idx][1] += len(intended)
        msg_id = actions[0].packet.msg_id
        self._intended[msg_id] = (flow_idx, intended, set())
        self._apply_actions(sender, actions)

    def _do_discover(self, epoch: int) -> None:
        if epoch > 0:
            self._close_epoch()
        self._epoch = epoch
        actions = self.nodes[self.source].initiate_discovery(epoch)
        self._record(self.source, "discover", info=epoch)
        self._apply_actions(self.source, actions)

    def _close_epoch(self) -> None:
        count = sum(1 for n in self.nodes.values()
                    if getattr(n, "is_relay", False))
        self.report.relays_per_epoch[self._epoch] = count

    def _do_refresh(self) -> None:
        payload = max(0, self.sc.timing.refresh_bytes - 4)
        actions = self.nodes[self.source].send_one_to_all(payload)
        self._apply_actions(self.source, actions)

    def _do_mobility(self) -> None:
        mob = self.sc.mobility
        placement_radius = (self.sc.outer_radius if self.sc.outer_radius is not None
                            else self.sc.region_radius)
        for nid in self.node_ids:
            state = advance(mob, self.motion[nid], self.now - MOBILITY_TICK,
                            MOBILITY_TICK, self._motion_rng[nid], placement_radius)
            self.positions[nid] = state.position

    def _do_sample(self) -> None:
        if self.sc.protocol == "gcn":
            active = {nid for nid, node in self.nodes.items()
                      if node.is_relay} | self.members
            frac = connectivity_sample(self.positions, self.sc.tx_radius,
                                       active, self.source, self.members)
            self.report.connectivity_series.append((self.now, frac))
        elif self._mobile:
            adj = unit_disk_adjacency(self.positions, self.sc.tx_radius)
            for s in sorted(self.members):
                dist = bfs_hops(adj, s)
                ecc = max((dist[m] for m in self.members if m in dist), default=0)
                if ecc > self._smf_ttl_by_sender.get(s, 0):
                    self._smf_ttl_by_sender[s] = ecc

    # -- main loop ---------------------------------------------------------

    def run(self):
        if self._done:
            raise RuntimeError("a Run object is single-use")
        self._done = True
        self._schedule_all()
        heap = self._heap
        duration = self.sc.duration
        while heap:
            time, _seq, kind, a, b = heapq.heappop(heap)
            if time > duration:
                break
            if time < self.now - 1e-12:
                raise RuntimeError("event time went backwards")
            self.now = time
            if kind == _RX:
                self._receive(a, b[0], b[1])
            elif kind == _TX:
                self._transmit(a, b)
            elif kind == _ACK_DUE:
                self._apply_actions(a, self.nodes[a].make_ack())
            elif kind == _TRAFFIC:
                self._do_traffic(a, b)
            elif kind == _MOB:
                self._do_mobility()
            elif kind == _SAMPLE:
                self._do_sample()
            elif kind == _DISCOVER:
                self._do_discover(a)
            elif kind == _REFRESH:
                self._do_refresh()
        if self.sc.protocol == "gcn":
            self._close_epoch()
            if self.members:
                self._discovered_members.add(self.source)
                self.report.discovered_fraction = (
                    len(self._discovered_members) / len(self.members))
        self.report.delivery_per_flow = [tuple(c) for c in self._flow_counts]
        return self.trace, self.report


def run_scenario(scenario: Scenario, seed: int, collect_trace: bool = True):
    """Convenience wrapper: one run, returning (trace, MetricsReport)."""
    return Run(scenario, seed, collect_trace=collect_trace).run()
