"""Wire messages and their over-the-air byte accounting.

These are not real codecs: byte sizes are fixed accounting constants so that
over-the-air totals can be compared across protocols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .model import GroupId, NodeId

DISCOVERY_BYTES = 14
ACK_BYTES = 20
DATA_BASE_HEADER_BYTES = 4
DEST_PAIR_BYTES = 3
SMF_TTL_HEADER_BYTES = 2

MsgId = tuple  # (origin NodeId, per-origin sequence number)


@dataclass
class Packet:
    kind: str                 # "discovery" | "ack" | "data"
    group: GroupId
    origin: NodeId
    hop_counter: int          # hops this copy has traveled so far
    msg_id: MsgId             # stable across retransmissions
    epoch: int = 0
    # discovery
    ttl: int = 0              # remaining hops after this transmission
    # ack
    obligate: Optional[NodeId] = None
    acp: float = 0.0
    # data
    destinations: list = field(default_factory=list)  # [(dest, mrd)]; [] = one-to-all
    payload_bytes: int = 0
    smf_ttl: Optional[int] = None  # set only on SMF-flooded data

    def wire_bytes(self) -> int:
        if self.kind == "discovery":
            return DISCOVERY_BYTES
        if self.kind == "ack":
            return ACK_BYTES
        if self.smf_ttl is not None:
            return self.payload_bytes + SMF_TTL_HEADER_BYTES
        return (self.payload_bytes + DATA_BASE_HEADER_BYTES
                + DEST_PAIR_BYTES * len(self.destinations))
