"""Protocol state machine: discovery regeneration, relay election, ACP math,
distance tables, and MRD corridor forwarding."""

import random

import pytest

from conftest import make_node
from gcnsim.packets import Packet
from gcnsim.protocol import (BecomeRelay, Deliver, GcnNode, NoRouteError,
                             ProtocolError, SendAck, Transmit,
                             compute_ack_fields)


def disc(ttl, origin=99, seq=1, hops=0, epoch=0):
    return Packet(kind="discovery", group=0, origin=origin, hop_counter=hops,
                  msg_id=(origin, seq), epoch=epoch, ttl=ttl)


def ack(obligate, acp, origin=50, seq=1, epoch=0):
    return Packet(kind="ack", group=0, origin=origin, hop_counter=0,
                  msg_id=(origin, seq), epoch=epoch, obligate=obligate, acp=acp)


def data(origin=7, seq=1, dests=(), hops=0, payload=100):
    return Packet(kind="data", group=0, origin=origin, hop_counter=hops,
                  msg_id=(origin, seq), destinations=list(dests),
                  payload_bytes=payload)


def transmits(actions):
    return [a for a in actions if isinstance(a, Transmit)]


# --- ACP arithmetic -------------------------------------------------------

def test_acp_examples():
    assert compute_ack_fields(1, 5, 3).acp == pytest.approx(0.5)
    assert compute_ack_fields(1, 9, 5).acp == pytest.approx(0.5)
    assert compute_ack_fields(1, 3, 2).acp == pytest.approx(0.5)


def test_acp_r1_disables_self_selection():
    assert compute_ack_fields(1, 10, 1).acp == 0.0


def test_acp_single_neighbor_disables_self_selection():
    assert compute_ack_fields(1, 1, 5).acp == 0.0
    assert compute_ack_fields(1, 0, 5).acp == 0.0


def test_acp_clamped_to_one():
    assert compute_ack_fields(1, 3, 9).acp == 1.0


def test_ack_without_upstream_raises():
    with pytest.raises(ProtocolError):
        compute_ack_fields(None, 5, 3)


# --- discovery ------------------------------------------------------------

def test_initiate_requires_member():
    with pytest.raises(ProtocolError):
        make_node(is_member=False).initiate_discovery(0)


def test_initiate_uses_source_ttl_once_per_epoch():
    node = make_node(is_member=True, source_ttl=3)
    out = transmits(node.initiate_discovery(0))
    assert len(out) == 1 and out[0].packet.ttl == 3
    assert node.initiate_discovery(0) == []


def test_member_regenerates_full_ttl_once():
    node = make_node(node_id=5, is_member=True, source_ttl=3)
    out = node.on_discovery(disc(ttl=1, hops=4), sender=2, now=0.0)
    txs = transmits(out)
    assert len(txs) == 1
    assert txs[0].packet.ttl == 3            # regenerated, not decremented
    assert txs[0].packet.hop_counter == 5    # hop counter still advances
    assert any(isinstance(a, SendAck) for a in out)
    # a second copy triggers neither a retransmission nor another ACK
    again = node.on_discovery(disc(ttl=2), sender=3, now=0.01)
    assert transmits(again) == [] and not any(isinstance(a, SendAck) for a in again)


def test_nonmember_decrements_ttl():
    node = make_node(node_id=5, is_member=False)
    txs = transmits(node.on_discovery(disc(ttl=2), sender=2, now=0.0))
    assert len(txs) == 1 and txs[0].packet.ttl == 1


def test_nonmember_drops_ttl_zero():
    node = make_node(node_id=5, is_member=False)
    assert transmits(node.on_discovery(disc(ttl=0), sender=2, now=0.0)) == []
    # it still learned its upstream from the zero-TTL copy
    assert node.upstream == 2


def test_nonmember_budget_improvement_refires():
    node = make_node(node_id=5, is_member=False)
    first = transmits(node.on_discovery(disc(ttl=1), sender=2, now=0.0))
    assert first[0].packet.ttl == 0
    # a later copy of the same message with a bigger budget goes out again
    better = transmits(node.on_discovery(disc(ttl=3), sender=3, now=0.1))
    assert better[0].packet.ttl == 2
    # an equal-or-worse budget does not
    assert transmits(node.on_discovery(disc(ttl=3), sender=4, now=0.2)) == []
    assert transmits(node.on_discovery(disc(ttl=2), sender=4, now=0.2)) == []


def test_upstream_is_first_sender_and_neighbor_window():
    node = make_node(node_id=5, is_member=False, neighbor_count_window=0.05)
    node.on_discovery(disc(ttl=2, seq=1), 2, now=1.00)
    node.on_discovery(disc(ttl=2, seq=2, origin=98), 3, now=1.04)
    node.on_discovery(disc(ttl=2, seq=3, origin=97), 4, now=1.10)  # late
    assert node.upstream == 2
    assert node.neighbor_senders == {2, 3}


# --- relay election -------------------------------------------------------

def activated(node, pkt):
    return any(isinstance(a, BecomeRelay) for a in node.on_ack(pkt, 50, 0.0))


def test_obligate_becomes_relay_only_if_it_transmitted():
    node = make_node(node_id=5, is_member=False)
    assert not activated(node, ack(obligate=5, acp=0.0))
    node.on_discovery(disc(ttl=2), 2, now=0.0)   # now it has transmitted
    assert activated(node, ack(obligate=5, acp=0.0, seq=2))
    assert node.is_relay


def test_member_obligate_becomes_relay_too():
    node = make_node(node_id=5, is_member=True, source_ttl=2)
    node.on_discovery(disc(ttl=2), 2, now=0.0)
    assert activated(node, ack(obligate=5, acp=0.0))
    assert node.is_relay


def test_new_relay_cascades_one_ack():
    node = make_node(node_id=5, is_member=False)
    node.on_discovery(disc(ttl=2), 2, now=0.0)
    out = node.on_ack(ack(obligate=5, acp=0.0), 50, 0.0)
    assert any(isinstance(a, SendAck) for a in out)
    # an already-acked node (e.g. a member) does not ack again on activation
    member = make_node(node_id=6, is_member=True)
    member.on_discovery(disc(ttl=2), 2, now=0.0)  # ACK scheduled here
    out = member.on_ack(ack(obligate=6, acp=0.0), 50, 0.0)
    assert not any(isinstance(a, SendAck) for a in out)


def test_relay_ignores_further_acks():
    node = make_node(node_id=5, is_member=False)
    node.on_discovery(disc(ttl=2), 2, now=0.0)
    assert activated(node, ack(obligate=5, acp=0.0, seq=1))
    assert node.on_ack(ack(obligate=5, acp=1.0, seq=2), 51, 0.1) == []


def test_self_selection_attempted_once_per_epoch():
    hits = 0
    for seed in range(400):
        node = make_node(node_id=5, is_member=False, seed=seed)
        node.on_discovery(disc(ttl=2), 2, now=0.0)
        if activated(node, ack(obligate=1, acp=0.5, seq=1)):
            hits += 1
        else:
            # the coin is flipped at most once: a second ACK cannot activate
            assert not activated(node, ack(obligate=1, acp=1.0, seq=2))
    # binomial(400, 0.5) within 3 sigma (= 30)
    assert abs(hits - 200) <= 30


def test_self_selection_requires_positive_acp_and_transmission():
    node = make_node(node_id=5, is_member=False, seed=0)
    node.on_discovery(disc(ttl=2), 2, now=0.0)
    assert not activated(node, ack(obligate=1, acp=0.0))
    silent = make_node(node_id=6, is_member=False, seed=0)
    silent.on_discovery(disc(ttl=0), 2, now=0.0)  # heard but never transmitted
    assert not activated(silent, ack(obligate=1, acp=1.0))


def test_acp_relay_count_within_three_sigma():
    # 2000 independent hearers of one ACK with ACP 0.3
    p, n = 0.3, 2000
    count = 0
    for i in range(n):
        node = make_node(node_id=5, is_member=False, seed=i)
        node.on_discovery(disc(ttl=2), 2, now=0.0)
        if activated(node, ack(obligate=1, acp=p)):
            count += 1
    sigma = (n * p * (1 - p)) ** 0.5
    assert abs(count - n * p) <= 3 * sigma


def test_stale_epoch_ack_is_ignored():
    node = make_node(node_id=5, is_member=False)
    node.on_discovery(disc(ttl=2, epoch=1), 2, now=0.0)
    assert node.on_ack(ack(obligate=5, acp=0.0, epoch=0), 50, 0.0) == []


def test_relay_persists_across_epochs_but_election_state_resets():
    node = make_node(node_id=5, is_member=False)
    node.on_discovery(disc(ttl=2, epoch=0), 2, now=0.0)
    assert activated(node, ack(obligate=5, acp=0.0, epoch=0))
    node.on_discovery(disc(ttl=2, seq=2, epoch=1), 3, now=100.0)
    assert node.is_relay                  # no teardown between rounds
    assert node.upstream == 3             # per-epoch fields started fresh
    assert not node.acked


# --- distance table -------------------------------------------------------

def test_distance_minimum_within_message():
    node = make_node(node_id=5)
    node.update_distance(data(origin=7, seq=1, hops=4))
    node.update_distance(data(origin=7, seq=1, hops=2))
    node.update_distance(data(origin=7, seq=1, hops=3))
    assert node.distance_to(7) == 3  # hops+1, minimum over copies of seq 1


def test_distance_fresher_message_overwrites():
    node = make_node(node_id=5)
    node.update_distance(data(origin=7, seq=1, hops=1))
    node.update_distance(data(origin=7, seq=2, hops=6))
    assert node.distance_to(7) == 7  # newer sequence wins even if farther
    node.update_distance(data(origin=7, seq=1, hops=0))
    assert node.distance_to(7) == 7  # stale sequence ignored


def test_distance_ignores_own_packets():
    node = make_node(node_id=7)
    node.update_distance(data(origin=7, seq=1, hops=3))
    assert node.distance_to(7) is None


# --- targeted sends and MRD forwarding ------------------------------------

def test_send_targeted_sets_mrd_from_distance():
    node = make_node(node_id=1, is_member=True)
    node.distance[9] = (1, 3)
    for offset, want in ((-1, 2), (0, 3), (1, 4)):
        pkt = transmits(node.send_targeted([9], offset, 100))[0].packet
        assert pkt.destinations == [(9, want)]


def test_send_targeted_mrd_floored_at_zero():
    node = make_node(node_id=1, is_member=True)
    node.distance[9] = (1, 1)
    pkt = transmits(node.send_targeted([9], -1, 100))[0].packet
    assert pkt.destinations == [(9, 0)]


def test_send_targeted_without_route_raises():
    node = make_node(node_id=1, is_member=True)
    with pytest.raises(NoRouteError):
        node.send_targeted([9], 0, 100)


def test_mrd_forward_rewrites_to_distance_minus_one():
    node = make_node(node_id=5, is_member=True)
    node.distance[9] = (10, 2)
    out = node.on_data(data(dests=[(9, 2)]), 2, 0.0)
    assert transmits(out)[0].packet.destinations == [(9, 1)]


def test_mrd_below_distance_drops_without_poisoning_dup_cache():
    node = make_node(node_id=5, is_member=True)
    node.distance[9] = (10, 4)
    assert transmits(node.on_data(data(dests=[(9, 2)]), 2, 0.0)) == []
    # a later, better copy of the same message still goes out
    out = transmits(node.on_data(data(dests=[(9, 4)]), 3, 0.1))
    assert out and out[0].packet.destinations == [(9, 3)]
    # ... and only once
    assert transmits(node.on_data(data(dests=[(9, 4)]), 4, 0.2)) == []


def test_mrd_multi_destination_chain():
    # pairs (j:1, k:2) forwarded as (j:0, k:1); next hop keeps only k
    a = make_node(node_id=5, is_member=True)
    a.distance.update({8: (10, 1), 9: (10, 2)})
    out_a = transmits(a.on_data(data(dests=[(8, 1), (9, 2)]), 2, 0.0))[0].packet
    assert out_a.destinations == [(8, 0), (9, 1)]
    b = make_node(node_id=6, is_member=True)
    b.distance.update({8: (10, 1), 9: (10, 1)})
    out_b = transmits(b.on_data(out_a, 5, 0.1))[0].packet
    assert out_b.destinations == [(9, 0)]


def test_targeted_forwarding_needs_relay_or_member():
    plain = make_node(node_id=5, is_member=False)
    plain.distance[9] = (10, 1)
    assert transmits(plain.on_data(data(dests=[(9, 3)]), 2, 0.0)) == []
    relay = make_node(node_id=6, is_member=False)
    relay.is_relay = True
    relay.distance[9] = (10, 1)
    assert transmits(relay.on_data(data(dests=[(9, 3)]), 2, 0.0))


def test_destination_delivers_and_does_not_retransmit_own_pair():
    node = make_node(node_id=9, is_member=True)
    out = node.on_data(data(dests=[(9, 1)]), 2, 0.0)
    assert any(isinstance(a, Deliver) for a in out)
    assert transmits(out) == []
    # delivery is counted once even if more copies arrive
    again = node.on_data(data(dests=[(9, 1)]), 3, 0.1)
    assert not any(isinstance(a, Deliver) for a in again)


def test_destination_forwards_remaining_pairs():
    node = make_node(node_id=9, is_member=True)
    node.distance[8] = (10, 2)
    out = node.on_data(data(dests=[(9, 1), (8, 2)]), 2, 0.0)
    assert any(isinstance(a, Deliver) for a in out)
    assert transmits(out)[0].packet.destinations == [(8, 1)]


# --- one-to-all data ------------------------------------------------------

def test_one_to_all_member_delivers_once():
    node = make_node(node_id=5, is_member=True, members_forward_data=False)
    out = node.on_data(data(), 2, 0.0)
    assert any(isinstance(a, Deliver) for a in out)
    assert not any(isinstance(a, Deliver) for a in node.on_data(data(), 3, 0.1))


def test_one_to_all_forwarders():
    plain = make_node(node_id=5, is_member=False)
    assert transmits(plain.on_data(data(), 2, 0.0)) == []
    relay = make_node(node_id=6, is_member=False)
    relay.is_relay = True
    assert transmits(relay.on_data(data(), 2, 0.0))
    member = make_node(node_id=7, is_member=True, members_forward_data=True)
    assert transmits(member.on_data(data(), 2, 0.0))
    quiet = make_node(node_id=8, is_member=True, members_forward_data=False)
    assert transmits(quiet.on_data(data(), 2, 0.0)) == []


def test_one_to_all_forwarded_at_most_once():
    relay = make_node(node_id=6, is_member=False)
    relay.is_relay = True
    assert transmits(relay.on_data(data(), 2, 0.0))
    assert transmits(relay.on_data(data(), 3, 0.1)) == []


def test_sender_does_not_echo_its_own_message():
    node = make_node(node_id=5, is_member=True)
    pkt = transmits(node.send_one_to_all(100))[0].packet
    assert transmits(node.on_data(pkt, 2, 0.0)) == []


def test_handle_rejects_unknown_kind():
    node = make_node()
    with pytest.raises(ProtocolError):
        node.handle(Packet(kind="beacon", group=0, origin=1, hop_counter=0,
                           msg_id=(1, 1)), 2, 0.0)
