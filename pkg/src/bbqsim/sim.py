"""Wires one simulation run: flows, bottleneck, metrics sampling, cheat schedule."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .engine import EventLoop, MS, SEC
from .net import BottleneckQueue, LinkPath
from .cc import CcState, Variant, BbqParams, is_cwnd_bounded
from .endpoint import Sender, Receiver


@dataclass
class MetricsSample:
    """One timestamped per-flow observation."""

    t_ns: int
    flow_id: int
    goodput_bps: float   # unique delivered bytes over the last interval
    rtt_ns: int          # latest RTT sample (0 before the first ACK)
    queueing_ns: int     # latest RTT minus the configured RTT, floored at 0
    inflight_bytes: int
    cwnd_bytes: int
    queue_backlog_bytes: int
    queue_share: float
    mode: str
    gain: float
    cwnd_bounded: bool


class FlowRuntime:
    """Sender, receiver and path of one configured flow."""

    def __init__(self, index, config, path, sender, receiver):
        self.index = index
        self.config = config
        self.path = path
        self.sender = sender
        self.receiver = receiver
        self.start_ns = int(round(config.start_s * SEC))
        self.end_ns = self.start_ns + int(round(config.duration_s * SEC))
        self.base_rtt_ns = path.base_rtt_ns
        self._prev_delivered = 0


class Simulation:
    """One deterministic run of a scenario.

    Build, then call :meth:`run`. All randomness comes from per-component
    generators derived from the scenario seed, so identical configs produce
    byte-identical traces.
    """

    def __init__(self, cfg):
        cfg.validate()
        self.cfg = cfg
        self.loop = EventLoop()
        self.samples: list[MetricsSample] = []
        self.cheat_log: list[tuple[int, int, int]] = []  # (t_ns, flow_id, target_rtt_ns)
        self.in_propagation: dict[int, int] = {}

        seed = cfg.seed
        self.queue = BottleneckQueue(
            self.loop,
            link_rate_bps=cfg.rate_mbps * 1e6,
            capacity_bytes=cfg.buffer_bytes,
            red=cfg.red_params(),
            rng=random.Random(seed * 7_919 + 104_729),
            on_depart=self._on_depart,
        )

        self.flows: list[FlowRuntime] = []
        for idx, fc in enumerate(cfg.flows):
            rtt_ns = int(round(fc.rtt_ms * MS))
            path = LinkPath(idx, fwd_delay_ns=rtt_ns // 2, rev_delay_ns=rtt_ns - rtt_ns // 2,
                            extra_ack_delay_ns=int(round(fc.extra_ack_delay_ms * MS)))
            alpha_ns = float("inf") if fc.alpha_ms == float("inf") else int(round(fc.alpha_ms * MS))
            cc = CcState(self.loop, Variant(fc.cc), BbqParams(alpha_ns, fc.beta),
                         rng=random.Random(seed * 1_000_003 + idx))
            sender = Sender(self.loop, idx, cc, self.queue, path)
            receiver = Receiver(self.loop, idx, path, sender)
            flow = FlowRuntime(idx, fc, path, sender, receiver)
            self.flows.append(flow)
            self.in_propagation[idx] = 0
            self.loop.schedule(flow.start_ns, sender.start, None)
            self.loop.schedule(flow.end_ns, sender.stop, None)

        self.end_ns = max(f.end_ns for f in self.flows)
        self.interval_ns = int(round(cfg.metrics_interval_ms * MS))
        self.loop.schedule(self.interval_ns, self._tick, None)

        self._cheaters = [f.index for f in self.flows if f.config.cheat]
        if len(self._cheaters) >= 2:
            turn_ns = int(round(cfg.cheat_turn_s * SEC))
            t = int(round(cfg.cheat_start_s * SEC))
            turn = 0
            while t < self.end_ns:
                self.loop.schedule(t, self._cheat_turn, turn)
                t += turn_ns
                turn += 1

    # -- wire plumbing ---------------------------------------------------------

    def _on_depart(self, seg) -> None:
        flow = self.flows[seg.flow_id]
        self.in_propagation[seg.flow_id] += seg.size
        self.loop.schedule(self.loop.now() + flow.path.fwd_delay_ns,
                           self._arrive, seg)

    def _arrive(self, seg) -> None:
        self.in_propagation[seg.flow_id] -= seg.size
        self.flows[seg.flow_id].receiver.on_segment(seg)

    # -- metrics ---------------------------------------------------------------

    def _tick(self, _arg) -> None:
        now = self.loop.now()
        interval = self.interval_ns
        queue = self.queue
        for flow in self.flows:
            if not (flow.start_ns < now <= flow.end_ns):
                continue
            recv = flow.receiver
            sender = flow.sender
            cc = sender.cc
            delivered = recv.delivered_unique_bytes
            goodput = (delivered - flow._prev_delivered) * 8e9 / interval
            flow._prev_delivered = delivered
            rtt = sender.last_rtt_ns
            queueing = rtt - flow.base_rtt_ns
            if queueing < 0:
                queueing = 0
            min_rtt = cc.rtt_filter.current(now)
            self.samples.append(MetricsSample(
                t_ns=now,
                flow_id=flow.index,
                goodput_bps=goodput,
                rtt_ns=rtt,
                queueing_ns=queueing if rtt else 0,
                inflight_bytes=cc.inflight_bytes,
                cwnd_bytes=cc.cwnd_bytes,
                queue_backlog_bytes=queue.per_flow_backlog.get(flow.index, 0),
                queue_share=queue.queue_share(flow.index),
                mode=cc.mode.value,
                gain=cc.pacing_gain,
                cwnd_bounded=bool(min_rtt and is_cwnd_bounded(rtt, min_rtt)),
            ))
        if now < self.end_ns:
            self.loop.schedule(now + interval, self._tick, None)

    # -- cheating game -----------------------------------------------------------

    def _cheat_turn(self, turn: int) -> None:
        """Alternating-turn RTT inflation: the cheater targets twice the other's RTT."""
        now = self.loop.now()
        cheaters = self._cheaters
        cheater = self.flows[cheaters[turn % len(cheaters)]]
        others = [self.flows[i] for i in cheaters if i != cheater.index]
        competitor = others[0]
        if self.cfg.cheat_observe == "srtt":
            comp_rtt = competitor.sender.srtt or competitor.base_rtt_ns
        else:  # "nominal": the competitor's configured propagation plus its own inflation
            comp_rtt = competitor.base_rtt_ns + competitor.path.extra_ack_delay_ns
        target = 2 * comp_rtt
        extra = target - cheater.base_rtt_ns
        if extra > cheater.path.extra_ack_delay_ns:
            cheater.path.extra_ack_delay_ns = extra
            self.cheat_log.append((now, cheater.index, target))

    # -- driver ------------------------------------------------------------------

    def run(self) -> None:
        self.loop.run_until(self.end_ns)
