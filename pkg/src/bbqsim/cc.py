"""Model-based congestion control: BBR, a strict-drain variant, and BBQ.

All three variants share one state machine. They estimate the path with a
windowed-max delivery-rate filter and a windowed-min RTT filter, pace at a
gain times the bandwidth estimate, and bound inflight with a congestion
window of twice the bandwidth-delay product. The variants differ only in how
the ProbeBw drain phase ends and, for BBQ, in how long the probe phase may
last while a persistent queue is detected.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .engine import MS, SEC
from .net import MSS

STARTUP_GAIN = 2 / math.log(2)  # exponential search while the delivery rate grows
DRAIN_MODE_GAIN = 1 / STARTUP_GAIN
GAIN_CYCLE = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
# Pacing is shaved by 1% so cruising bleeds off estimator overshoot instead of
# holding a standing queue; the max filter otherwise locks onto transient
# delivery spikes and cruise would pace above the sustainable share forever.
PACING_MARGIN = 0.01
CWND_GAIN = 2
MIN_CWND_SEGMENTS = 4
INITIAL_CWND_SEGMENTS = 10
BW_WINDOW_ROUNDS = 10           # max filter horizon, in round trips
RTT_WINDOW_NS = 10 * SEC        # min filter horizon
PROBE_RTT_DWELL_NS = 200 * MS
STARTUP_GROWTH = 1.25           # keep startup while rate grows >= 25% per round
STARTUP_FULL_ROUNDS = 3         # rounds without growth before declaring the pipe full


class Mode(Enum):
    STARTUP = "startup"
    DRAIN = "drain"
    PROBE_BW = "probe_bw"
    PROBE_RTT = "probe_rtt"


class Variant(Enum):
    BBR = "bbr"
    BBR_STRICT_DRAIN = "bbr-strict-drain"
    BBQ = "bbq"


@dataclass
class BbqParams:
    """BBQ knobs: probe-period cap and underutilization slack."""

    alpha_ns: float = 3 * MS
    beta: float = 0.01

    def validate(self) -> None:
        if not self.alpha_ns > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha_ns}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")


@dataclass
class RateSample:
    """Per-ACK observation: delivery rate in bits/s and application-level RTT."""

    delivery_rate: float
    rtt_ns: int
    is_app_limited: bool


def compute_bdp(max_bw_bps: float, min_rtt_ns: int) -> int:
    """Bandwidth-delay product in whole bytes."""
    if min_rtt_ns <= 0:
        raise ValueError("RTT filter not seeded, cannot compute a BDP")
    if max_bw_bps < 0:
        raise ValueError(f"bandwidth must be nonnegative, got {max_bw_bps}")
    return int(max_bw_bps * min_rtt_ns / 8e9)


def is_cwnd_bounded(current_rtt_ns: int, min_rtt_ns: int) -> bool:
    """Inflight is pinned by the window iff queueing delay exceeds the propagation RTT.

    With a 2x BDP window this reduces to current RTT strictly above twice the
    minimum RTT.
    """
    return current_rtt_ns > 2 * min_rtt_ns


def detect_queue(sample_rtt_ns: int, min_rtt_ns: int, beta_ppm: int) -> bool:
    """True when a persistent queue is present.

    The pipe counts as underutilized iff rtt < (1 + beta) * min RTT, with beta
    expressed in parts per million so the boundary compares exactly in integer
    arithmetic (an RTT of exactly (1 + beta) * min means queue present).
    """
    return (sample_rtt_ns - min_rtt_ns) * 1_000_000 >= beta_ppm * min_rtt_ns


class BwFilter:
    """Windowed maximum of delivery-rate samples over the last N round trips.

    Keeps a deque of (round, rate) with strictly decreasing rates; dominated
    samples can never become the window max, so the front is always the exact
    maximum over rounds [latest - N + 1, latest].
    """

    __slots__ = ("window", "_samples")

    def __init__(self, window: int = BW_WINDOW_ROUNDS):
        self.window = window
        self._samples: deque[tuple[int, float]] = deque()

    def update(self, round_index: int, rate_bps: float) -> None:
        samples = self._samples
        while samples and samples[-1][1] <= rate_bps:
            samples.pop()
        samples.append((round_index, rate_bps))
        cutoff = round_index - self.window
        while samples[0][0] <= cutoff:
            samples.popleft()

    def current(self) -> float:
        return self._samples[0][1] if self._samples else 0.0


class RttFilter:
    """Windowed minimum of RTT samples over the last 10 seconds.

    Also tracks when the running minimum was last matched or lowered, which
    drives the re-probe schedule: a flow that keeps seeing its minimum never
    needs to re-measure the propagation delay.
    """

    __slots__ = ("window_ns", "_samples", "_last_rtt", "min_stamp")

    def __init__(self, window_ns: int = RTT_WINDOW_NS):
        self.window_ns = window_ns
        self._samples: deque[tuple[int, int]] = deque()
        self._last_rtt = 0
        self.min_stamp = 0

    def update(self, now: int, rtt_ns: int) -> None:
        samples = self._samples
        while samples and samples[-1][1] >= rtt_ns:
            samples.pop()
        samples.append((now, rtt_ns))
        cutoff = now - self.window_ns
        while samples[0][0] < cutoff:
            samples.popleft()
        self._last_rtt = rtt_ns
        if rtt_ns <= samples[0][1]:
            self.min_stamp = now

    def current(self, now: int) -> int:
        """Exact window minimum; falls back to the newest sample after a long gap."""
        samples = self._samples
        if not samples:
            return 0
        cutoff = now - self.window_ns
        while len(samples) > 1 and samples[0][0] < cutoff:
            samples.popleft()
        return samples[0][1]

    def seeded(self) -> bool:
        return self._last_rtt > 0

    def refresh(self, now: int) -> None:
        self.min_stamp = now


class CcState:
    """Per-flow congestion-control state machine.

    Decisions run on ACK arrivals plus ProbeBw phase timers scheduled on the
    event loop. The sender reads ``pacing_rate`` (bits/s) and ``cwnd_bytes``
    after every ACK and enforces them at send time. ``transitions`` logs
    (time, mode, pacing gain, queue detected) at every change for offline
    analysis.
    """

    def __init__(self, loop, variant: Variant = Variant.BBR,
                 bbq: BbqParams | None = None, rng=None, mss: int = MSS):
        self.loop = loop
        self.variant = variant
        self.bbq = bbq if bbq is not None else BbqParams()
        self._beta_ppm = round(self.bbq.beta * 1e6)
        self.rng = rng if rng is not None else random.Random(0)
        self.mss = mss

        self.bw_filter = BwFilter()
        self.rtt_filter = RttFilter()
        self.mode = Mode.STARTUP
        self.pacing_gain = STARTUP_GAIN
        self.cycle_index = 0
        self.phase_started_at = 0
        self.pacing_rate = 0.0  # bits/s; 0 until the first rate sample seeds the model
        self.cwnd_bytes = INITIAL_CWND_SEGMENTS * mss
        self.inflight_bytes = 0
        self.delivered_bytes = 0
        self.delivered_stamp = 0  # time of the last delivered_bytes update

        self.round_count = 0
        self._next_round_delivered = 0
        self._full_bw = 0.0
        self._stale_rounds = 0
        self.full_pipe = False
        self.queue_detected = False
        self.probe_rtt_done_at: int | None = None
        self._phase_timer = None
        self._phase_end = 0
        self.transitions: list[tuple[int, str, float, bool]] = []

    def started(self, now: int) -> None:
        self.phase_started_at = now
        self.delivered_stamp = now
        self.transitions.append((now, self.mode.value, self.pacing_gain, self.queue_detected))

    # -- per-ACK entry point -------------------------------------------------

    def on_ack(self, sample: RateSample, delivered_snapshot: int, now: int) -> None:
        # A round ends when an ACK arrives for data sent after the previous
        # round ended. App-limited rounds (ProbeRtt) do not advance the
        # filter clock: a deliberate inflight reduction carries no bandwidth
        # information and must not silently age out the window, which would
        # penalize short-RTT flows (they pass many more rounds per dwell).
        if delivered_snapshot >= self._next_round_delivered:
            if not sample.is_app_limited:
                self.round_count += 1
            self._next_round_delivered = self.delivered_bytes
            round_start = True
        else:
            round_start = False

        if not sample.is_app_limited:
            self.bw_filter.update(self.round_count, sample.delivery_rate)
        # Expiry is judged against the stamp before this sample lands: once
        # the window min has aged out, a sample merely matching the new
        # (higher) floor must not cancel the re-probe.
        rtt_filter = self.rtt_filter
        min_expired = rtt_filter.seeded() and now > rtt_filter.min_stamp + rtt_filter.window_ns
        rtt_filter.update(now, sample.rtt_ns)
        min_rtt = rtt_filter.current(now)
        self.queue_detected = detect_queue(sample.rtt_ns, min_rtt, self._beta_ppm)

        mode = self.mode
        if mode is Mode.STARTUP:
            if round_start:
                self._check_full_pipe()
                if self.full_pipe:
                    self._enter_drain(now)
        elif mode is Mode.DRAIN:
            if self._drain_done(now, min_rtt):
                self._enter_probe_bw(now)
        elif mode is Mode.PROBE_BW:
            self._check_phase(now, min_rtt)

        if min_expired and self.mode is not Mode.PROBE_RTT:
            self._enter_probe_rtt(now)
        if self.mode is Mode.PROBE_RTT:
            self._probe_rtt_step(now, min_rtt)

        self._update_rates(min_rtt)

    # -- startup / drain -----------------------------------------------------

    def _check_full_pipe(self) -> None:
        bw = self.bw_filter.current()
        if bw >= self._full_bw * STARTUP_GROWTH:
            self._full_bw = bw
            self._stale_rounds = 0
            return
        self._stale_rounds += 1
        if self._stale_rounds >= STARTUP_FULL_ROUNDS:
            self.full_pipe = True

    def _enter_startup(self, now: int) -> None:
        self.mode = Mode.STARTUP
        self.pacing_gain = STARTUP_GAIN
        self.phase_started_at = now
        self.transitions.append((now, Mode.STARTUP.value, self.pacing_gain, self.queue_detected))

    def _enter_drain(self, now: int) -> None:
        self.mode = Mode.DRAIN
        self.pacing_gain = DRAIN_MODE_GAIN
        self.phase_started_at = now
        self.transitions.append((now, Mode.DRAIN.value, self.pacing_gain, self.queue_detected))

    def _drain_done(self, now: int, min_rtt: int) -> bool:
        """Drain ends at one BDP of inflight; BBR and BBQ also cap it at one MinRTT.

        The strict variant keeps draining until inflight is at or below one
        up-to-date BDP estimate, with no time cap.
        """
        if min_rtt <= 0:
            return False
        if self.inflight_bytes <= compute_bdp(self.bw_filter.current(), min_rtt):
            return True
        if self.variant is Variant.BBR_STRICT_DRAIN:
            return False
        return now - self.phase_started_at >= min_rtt

    # -- ProbeBw gain cycling ------------------------------------------------

    def _enter_probe_bw(self, now: int) -> None:
        self.mode = Mode.PROBE_BW
        # One random offset per ProbeBw entry keeps competing flows out of
        # lockstep; real flows never share phase.
        self.cycle_index = self.rng.randrange(len(GAIN_CYCLE))
        self._begin_phase(now)

    def _phase_len(self, min_rtt: int) -> int | None:
        """Planned phase duration; None means no time cap (strict drain)."""
        gain = GAIN_CYCLE[self.cycle_index]
        if gain < 1.0 and self.variant is Variant.BBR_STRICT_DRAIN:
            return None
        if gain > 1.0 and self.variant is Variant.BBQ and self.queue_detected:
            return min(min_rtt, self.bbq.alpha_ns)
        return min_rtt

    def _begin_phase(self, now: int) -> None:
        if self._phase_timer is not None:
            self.loop.cancel(self._phase_timer)
            self._phase_timer = None
        self.phase_started_at = now
        self.pacing_gain = GAIN_CYCLE[self.cycle_index]
        self.transitions.append((now, Mode.PROBE_BW.value, self.pacing_gain, self.queue_detected))
        duration = self._phase_len(self.rtt_filter.current(now))
        if duration is not None:
            self._phase_end = int(now + duration)
            self._phase_timer = self.loop.schedule(self._phase_end, self._phase_timer_fired, None)
        else:
            self._phase_end = 0

    def _advance_phase(self, now: int) -> None:
        self.cycle_index = (self.cycle_index + 1) % len(GAIN_CYCLE)
        self._begin_phase(now)

    def _phase_timer_fired(self, _arg) -> None:
        self._phase_timer = None
        if self.mode is not Mode.PROBE_BW:
            return
        now = self.loop.now()
        self._advance_phase(now)
        self._update_rates(self.rtt_filter.current(now))

    def _check_phase(self, now: int, min_rtt: int) -> None:
        gain = GAIN_CYCLE[self.cycle_index]
        if gain < 1.0:
            # The drain phase ends as soon as the excess above one BDP is gone.
            if min_rtt > 0 and self.inflight_bytes <= compute_bdp(self.bw_filter.current(), min_rtt):
                self._advance_phase(now)
        elif gain > 1.0 and self.variant is Variant.BBQ and self.queue_detected:
            # A queue appeared during the probe: shrink the phase to the cap.
            cap_end = self.phase_started_at + self.bbq.alpha_ns
            if cap_end < self._phase_end:  # false for an infinite cap
                target = int(cap_end)
                if now >= target:
                    self._advance_phase(now)
                else:
                    self.loop.cancel(self._phase_timer)
                    self._phase_end = target
                    self._phase_timer = self.loop.schedule(target, self._phase_timer_fired, None)

    # -- ProbeRtt ------------------------------------------------------------

    def _enter_probe_rtt(self, now: int) -> None:
        self.mode = Mode.PROBE_RTT
        self.pacing_gain = 1.0
        self.probe_rtt_done_at = None
        self.phase_started_at = now
        if self._phase_timer is not None:
            self.loop.cancel(self._phase_timer)
            self._phase_timer = None
        self.transitions.append((now, Mode.PROBE_RTT.value, self.pacing_gain, self.queue_detected))

    def _probe_rtt_step(self, now: int, min_rtt: int) -> None:
        if self.probe_rtt_done_at is None:
            if self.inflight_bytes <= MIN_CWND_SEGMENTS * self.mss:
                self.probe_rtt_done_at = now + max(PROBE_RTT_DWELL_NS, min_rtt)
        elif now >= self.probe_rtt_done_at:
            self.rtt_filter.refresh(now)
            self.probe_rtt_done_at = None
            if self.full_pipe:
                self._enter_probe_bw(now)
            else:
                self._enter_startup(now)

    # -- control outputs -----------------------------------------------------

    def _update_rates(self, min_rtt: int) -> None:
        bw = self.bw_filter.current()
        if bw <= 0 or min_rtt <= 0:
            return
        self.pacing_rate = self.pacing_gain * bw * (1.0 - PACING_MARGIN)
        if self.mode is Mode.PROBE_RTT:
            self.cwnd_bytes = MIN_CWND_SEGMENTS * self.mss
        else:
            self.cwnd_bytes = max(CWND_GAIN * compute_bdp(bw, min_rtt),
                                  MIN_CWND_SEGMENTS * self.mss)
