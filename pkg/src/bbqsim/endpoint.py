"""Paced sender and ACK-generating receiver for one bulk-transfer flow.

The sender emits MSS-sized segments under the congestion controller's pacing
rate and window, samples delivery rate and RTT from each ACK, and recovers
losses with a selective-acknowledgment scoreboard (dup-SACK threshold) plus a
retransmission timeout. The receiver ACKs every arriving segment after the
configured extra delay, which is the latency-cheating knob.
"""

from __future__ import annotations

from collections import deque

from .engine import MS
from .net import MSS, Segment
from .cc import Mode, RateSample

DUP_SACK_THRESH = 3          # higher segments SACKed before a hole counts as lost
RTO_FLOOR_NS = 200 * MS


class Receiver:
    """Tracks received byte ranges; one ACK per arriving segment.

    ACKs leave ``extra_ack_delay_ns`` after arrival and reach the sender one
    reverse propagation delay later. ``delivered_unique_bytes`` counts each
    application byte once, so duplicate deliveries never inflate goodput.
    """

    def __init__(self, loop, flow_id: int, path, sender):
        self.loop = loop
        self.flow_id = flow_id
        self.path = path
        self.sender = sender
        self.cum_ack = 0
        self._ooo: dict[int, int] = {}  # out-of-order ranges, lo -> hi
        self.delivered_unique_bytes = 0
        self.delivered_wire_bytes = 0

    def on_segment(self, seg: Segment) -> None:
        now = self.loop.now()
        self.delivered_wire_bytes += seg.size
        lo = seg.lo
        if lo == self.cum_ack:
            self.cum_ack = seg.hi
            ooo = self._ooo
            while self.cum_ack in ooo:
                self.cum_ack = ooo.pop(self.cum_ack)
            self.delivered_unique_bytes += seg.hi - seg.lo
        elif lo > self.cum_ack and lo not in self._ooo:
            self._ooo[lo] = seg.hi
            self.delivered_unique_bytes += seg.hi - seg.lo
        # else: duplicate data, nothing new delivered
        delay = self.path.extra_ack_delay_ns + self.path.rev_delay_ns
        self.loop.schedule(now + delay, self.sender.on_ack, (seg.seg_id, seg.lo, self.cum_ack))


class Sender:
    """Paced bulk sender with SACK-based loss recovery.

    The source is infinitely backlogged; new data is always available. A
    single pacing timer is live at a time: every send schedules the next
    attempt one pacing interval later, and a window-blocked sender goes idle
    until an ACK restarts it (ACK clocking).
    """

    def __init__(self, loop, flow_id: int, cc, queue, path, mss: int = MSS):
        self.loop = loop
        self.flow_id = flow_id
        self.cc = cc
        self.queue = queue
        self.path = path
        self.mss = mss

        self.outstanding: dict[int, Segment] = {}  # seg_id -> Segment, in send order
        self._retx: deque[int] = deque()
        self._retx_pending: set[int] = set()
        self.next_seq = 0
        self._seg_seq = 0
        self._order = 0
        self._last_send = -(1 << 62)
        self._last_acked_sent_at = 0  # send time of the newest ACKed segment
        self._pacer = None

        self.srtt = 0
        self.rttvar = 0
        self.last_rtt_ns = 0
        self._rto_deadline = 0
        self._rto_timer = None

        self.started = False
        self.stopped = False
        self.sent_segments = 0
        self.retx_segments = 0
        self.lost_marks = 0
        self.wire_sent_bytes = 0

    # -- lifecycle -----------------------------------------------------------

    def start(self, _arg=None) -> None:
        self.started = True
        self.cc.started(self.loop.now())
        self._try_send()

    def stop(self, _arg=None) -> None:
        self.stopped = True
        if self._pacer is not None:
            self.loop.cancel(self._pacer)
            self._pacer = None

    # -- sending -------------------------------------------------------------

    def _interval_ns(self) -> int:
        rate = self.cc.pacing_rate
        if rate <= 0:
            # Model not seeded yet: the initial window goes out back to back.
            return 0
        return int(self.mss * 8e9 / rate)

    def _try_send(self) -> None:
        if self.stopped or not self.started or self._pacer is not None:
            return
        cc = self.cc
        if cc.inflight_bytes + self.mss > cc.cwnd_bytes:
            return  # window-blocked; the next ACK restarts sending
        now = self.loop.now()
        next_ok = self._last_send + self._interval_ns()
        if next_ok > now:
            self._pacer = self.loop.schedule(next_ok, self._pacer_fired, None)
            return
        self._send_one(now)
        self._pacer = self.loop.schedule(now + self._interval_ns(), self._pacer_fired, None)

    def _pacer_fired(self, _arg) -> None:
        self._pacer = None
        self._try_send()

    def _send_one(self, now: int) -> None:
        retx = self._retx
        pending = self._retx_pending
        while retx and retx[0] not in pending:
            retx.popleft()  # stale entry, the original was delivered after all
        if retx:
            lo = retx.popleft()
            pending.discard(lo)
            is_retx = True
        else:
            lo = self.next_seq
            self.next_seq += self.mss
            is_retx = False
        self._seg_seq += 1
        self._order += 1
        cc = self.cc
        had_outstanding = bool(self.outstanding)
        if not had_outstanding:
            self._last_acked_sent_at = now  # flight restart
        seg = Segment(self.flow_id, lo, self.mss, now, cc.delivered_bytes,
                      cc.delivered_stamp, self._last_acked_sent_at, is_retx,
                      cc.mode is Mode.PROBE_RTT, self._seg_seq, self._order)
        self.outstanding[self._seg_seq] = seg
        cc.inflight_bytes += self.mss
        self.sent_segments += 1
        self.wire_sent_bytes += self.mss
        if is_retx:
            self.retx_segments += 1
        self._last_send = now
        self.queue.enqueue(seg, now)
        if not had_outstanding:
            self._rto_deadline = now + self._rto_ns()
        if self._rto_timer is None:
            self._rto_timer = self.loop.schedule(self._rto_deadline, self._rto_fired, None)

    # -- ACK processing ------------------------------------------------------

    def on_ack(self, ack: tuple[int, int, int]) -> None:
        seg_id, lo, _cum = ack
        seg = self.outstanding.pop(seg_id, None)
        if seg is None:
            # Spuriously marked lost, then the original arrived: cancel the
            # queued retransmission. Goodput already counted the bytes once.
            self._retx_pending.discard(lo)
            return
        now = self.loop.now()
        cc = self.cc
        payload = seg.hi - seg.lo
        cc.inflight_bytes -= seg.size
        cc.delivered_bytes += payload
        cc.delivered_stamp = now
        rtt = now - seg.sent_at
        self.last_rtt_ns = rtt
        if self.srtt == 0:
            self.srtt = rtt
            self.rttvar = rtt >> 1
        else:
            err = rtt - self.srtt
            self.rttvar += ((abs(err) - self.rttvar) >> 2)
            self.srtt += (err >> 3)
        self._rto_deadline = now + self._rto_ns()

        if self.outstanding:
            self._sack_holes(seg.order)

        # Delivery rate over the longer of the ack span and the send span;
        # the send-side bound keeps delivery lulls from reading as spikes.
        ack_span = now - seg.delivered_stamp
        send_span = seg.sent_at - seg.tx_window_start
        interval = ack_span if ack_span >= send_span else send_span
        rate = (cc.delivered_bytes - seg.delivered_snapshot) * 8e9 / max(interval, 1)
        if seg.sent_at > self._last_acked_sent_at:
            self._last_acked_sent_at = seg.sent_at
        cc.on_ack(RateSample(rate, rtt, seg.app_limited), seg.delivered_snapshot, now)
        self._try_send()

    def _sack_holes(self, acked_order: int) -> None:
        """Bump the dup-SACK count of every hole sent before the ACKed segment."""
        lost = None
        for other in self.outstanding.values():
            if other.order >= acked_order:
                break
            other.sacked_above += 1
            if other.sacked_above >= DUP_SACK_THRESH:
                if lost is None:
                    lost = []
                lost.append(other)
        if lost:
            for seg in lost:
                self._mark_lost(seg)
            self._try_send()

    def _mark_lost(self, seg: Segment) -> None:
        self.outstanding.pop(seg.seg_id, None)
        self.cc.inflight_bytes -= seg.size
        self.lost_marks += 1
        lo = seg.lo
        if lo not in self._retx_pending:
            self._retx_pending.add(lo)
            self._retx.append(lo)

    # -- retransmission timeout ----------------------------------------------

    def _rto_ns(self) -> int:
        return max(self.srtt + 4 * self.rttvar, RTO_FLOOR_NS)

    def _rto_fired(self, _arg) -> None:
        self._rto_timer = None
        if self.stopped or not self.outstanding:
            return  # re-armed by the next send
        now = self.loop.now()
        if now < self._rto_deadline:
            self._rto_timer = self.loop.schedule(self._rto_deadline, self._rto_fired, None)
            return
        earliest = next(iter(self.outstanding.values()))
        self._mark_lost(earliest)
        self._rto_deadline = now + self._rto_ns()
        self._rto_timer = self.loop.schedule(self._rto_deadline, self._rto_fired, None)
        self._try_send()
