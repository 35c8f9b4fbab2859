"""Bottleneck link model: FIFO byte queue, drop-tail or RED admission, per-flow accounting."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

MSS = 1500  # fixed segment size in bytes (standard Ethernet payload)

DROP_TAIL = "tail"
DROP_RED = "red"


class Segment:
    """One wire transmission of an MSS-sized byte range.

    Each transmission has a unique seg_id (ACKs reference it) and carries the
    snapshots needed for delivery-rate sampling at the sender.
    """

    __slots__ = (
        "flow_id", "lo", "hi", "size", "sent_at", "delivered_snapshot",
        "delivered_stamp", "tx_window_start", "is_retransmit", "app_limited",
        "seg_id", "order", "sacked_above",
    )

    def __init__(self, flow_id, lo, size, sent_at, delivered_snapshot,
                 delivered_stamp, tx_window_start, is_retransmit, app_limited,
                 seg_id, order):
        self.flow_id = flow_id
        self.lo = lo
        self.hi = lo + size
        self.size = size
        self.sent_at = sent_at
        self.delivered_snapshot = delivered_snapshot
        # Time of the delivery-counter update captured at send. The matching
        # ack span (ack time - this) measures how long the delivered delta
        # took, free of per-segment quantization jitter.
        self.delivered_stamp = delivered_stamp
        # Send time of the most recently ACKed segment as of this send. The
        # send span (sent_at - this) bounds the rate sample by the pace the
        # window was actually sent at, so a delivery lull cannot mint a
        # phantom bandwidth spike.
        self.tx_window_start = tx_window_start
        self.is_retransmit = is_retransmit
        self.app_limited = app_limited
        self.seg_id = seg_id
        self.order = order
        self.sacked_above = 0


@dataclass
class RedParams:
    """Classic (count-corrected, non-gentle) RED parameters."""

    min_thresh_bytes: int
    max_thresh_bytes: int
    max_prob: float
    ewma_weight: float = 0.002

    def validate(self, capacity_bytes: int) -> None:
        if not 0 < self.min_thresh_bytes < self.max_thresh_bytes <= capacity_bytes:
            raise ValueError(
                "RED thresholds must satisfy 0 < min < max <= capacity, got "
                f"min={self.min_thresh_bytes} max={self.max_thresh_bytes} "
                f"capacity={capacity_bytes}"
            )
        if not 0 < self.max_prob <= 1:
            raise ValueError(f"RED max_prob must be in (0, 1], got {self.max_prob}")
        if not 0 < self.ewma_weight <= 1:
            raise ValueError(f"RED ewma_weight must be in (0, 1], got {self.ewma_weight}")


def red_linear_prob(params: RedParams, avg_bytes: float) -> float:
    """Marginal drop probability p_b before count correction."""
    if avg_bytes < params.min_thresh_bytes:
        return 0.0
    if avg_bytes >= params.max_thresh_bytes:
        return 1.0
    span = params.max_thresh_bytes - params.min_thresh_bytes
    return params.max_prob * (avg_bytes - params.min_thresh_bytes) / span


def red_drop_decision(params: RedParams, avg_bytes: float,
                      count_since_drop: int, rng) -> tuple[bool, int]:
    """One RED admission decision.

    ``count_since_drop`` is the number of consecutive linear-region passes
    since the last drop (0 right after a drop or outside the linear region).
    The effective probability is p_a = p_b / (1 - count * p_b), which spaces
    drops roughly uniformly instead of geometrically. Returns
    ``(dropped, updated_count)``. Below min_thresh packets always pass; at or
    above max_thresh they are always dropped.
    """
    if avg_bytes < params.min_thresh_bytes:
        return False, 0
    if avg_bytes >= params.max_thresh_bytes:
        return True, 0
    p_b = red_linear_prob(params, avg_bytes)
    denom = 1.0 - count_since_drop * p_b
    p_a = 1.0 if denom <= 0 else min(1.0, p_b / denom)
    if rng.random() < p_a:
        return True, 0
    return False, count_since_drop + 1


@dataclass
class LinkPath:
    """Per-flow propagation delays; extra_ack_delay is the receiver cheating knob."""

    flow_id: int
    fwd_delay_ns: int
    rev_delay_ns: int
    extra_ack_delay_ns: int = 0

    @property
    def base_rtt_ns(self) -> int:
        return self.fwd_delay_ns + self.rev_delay_ns


class BottleneckQueue:
    """FIFO byte queue in front of a fixed-rate link.

    Owns per-flow backlog and drop accounting and schedules its own service
    completions on the event loop; ``on_depart(segment)`` fires when a
    segment finishes transmission. The head segment occupies buffer space
    until fully serialized, and the link never idles while the queue is
    non-empty.
    """

    def __init__(self, loop, link_rate_bps: float, capacity_bytes: int = 2_000_000,
                 red: RedParams | None = None, rng=None, on_depart=None):
        if link_rate_bps <= 0:
            raise ValueError(f"link rate must be positive, got {link_rate_bps}")
        if red is not None:
            red.validate(capacity_bytes)
            if rng is None:
                raise ValueError("RED admission needs an rng")
        self.loop = loop
        self.link_rate_bps = float(link_rate_bps)
        self.capacity_bytes = capacity_bytes
        self.red = red
        self.on_depart = on_depart
        self._rng = rng
        self._fifo: deque[Segment] = deque()
        self.occupancy_bytes = 0
        self.per_flow_backlog: dict[int, int] = {}
        self.ewma_avg_bytes = 0.0
        self._red_count = 0
        self.drop_counts: dict[int, int] = {}
        self.dropped_bytes: dict[int, int] = {}
        self._busy = False

    def tx_ns(self, size_bytes: int) -> int:
        """Serialization time of a segment on the link."""
        return int(round(size_bytes * 8 * 1e9 / self.link_rate_bps))

    def enqueue(self, seg: Segment, now: int) -> str | None:
        """Admit or drop an arriving segment; returns the drop reason or None."""
        if self.red is not None:
            # Average is sampled on arrival, before this segment is added.
            self.ewma_avg_bytes += self.red.ewma_weight * (self.occupancy_bytes - self.ewma_avg_bytes)
            dropped, self._red_count = red_drop_decision(
                self.red, self.ewma_avg_bytes, self._red_count, self._rng)
            if dropped:
                self._count_drop(seg)
                return DROP_RED
        if self.occupancy_bytes + seg.size > self.capacity_bytes:
            self._count_drop(seg)
            return DROP_TAIL
        self._fifo.append(seg)
        self.occupancy_bytes += seg.size
        backlog = self.per_flow_backlog
        backlog[seg.flow_id] = backlog.get(seg.flow_id, 0) + seg.size
        if not self._busy:
            self._busy = True
            self.loop.schedule(now + self.tx_ns(seg.size), self._depart, None)
        return None

    def _count_drop(self, seg: Segment) -> None:
        fid = seg.flow_id
        self.drop_counts[fid] = self.drop_counts.get(fid, 0) + 1
        self.dropped_bytes[fid] = self.dropped_bytes.get(fid, 0) + seg.size

    def _depart(self, _arg) -> None:
        seg = self._fifo.popleft()
        self.occupancy_bytes -= seg.size
        self.per_flow_backlog[seg.flow_id] -= seg.size
        if self._fifo:
            head = self._fifo[0]
            self.loop.schedule(self.loop.now() + self.tx_ns(head.size), self._depart, None)
        else:
            self._busy = False
        self.on_depart(seg)

    def queue_share(self, flow_id: int) -> float:
        """This flow's fraction of the current backlog; 0 when the queue is empty."""
        if self.occupancy_bytes <= 0:
            return 0.0
        return self.per_flow_backlog.get(flow_id, 0) / self.occupancy_bytes
