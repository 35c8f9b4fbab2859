"""Declarative experiment harness: configs, scenario files, runs, summaries, sweeps."""

from __future__ import annotations

import copy
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import fmean

from .engine import SEC
from .net import RedParams
from .sim import Simulation, MetricsSample

VARIANTS = ("bbr", "bbr-strict-drain", "bbq")

# Steady-state stats start after the last re-probe synchronization that still
# leaves this much trailing data, and need at least this much window.
_STEADY_TAIL_NS = 3 * SEC
_STEADY_MIN_NS = 2 * SEC


class ScenarioError(ValueError):
    """Invalid scenario configuration or scenario file."""


@dataclass
class FlowConfig:
    rtt_ms: float
    cc: str = "bbr"
    start_s: float = 0.0
    duration_s: float = 120.0
    alpha_ms: float = 3.0
    beta: float = 0.01
    extra_ack_delay_ms: float = 0.0
    cheat: bool = False


@dataclass
class ScenarioConfig:
    rate_mbps: float = 100.0
    buffer_bytes: int = 2_000_000
    aqm: str = "droptail"
    red_min_bytes: int = 170_000
    red_max_bytes: int = 500_000
    red_prob: float = 0.02
    red_ewma_weight: float = 0.002
    flows: list[FlowConfig] = field(default_factory=list)
    seed: int = 1
    metrics_interval_ms: float = 100.0
    cheat_turn_s: float = 15.0
    cheat_start_s: float = 10.0
    cheat_observe: str = "nominal"  # "nominal" | "srtt"

    def red_params(self) -> RedParams | None:
        if self.aqm == "droptail":
            return None
        return RedParams(self.red_min_bytes, self.red_max_bytes,
                         self.red_prob, self.red_ewma_weight)

    @property
    def link_rate_bps(self) -> float:
        return self.rate_mbps * 1e6

    def validate(self) -> None:
        if self.rate_mbps <= 0:
            raise ScenarioError(f"rate_mbps must be positive, got {self.rate_mbps}")
        if self.buffer_bytes <= 0:
            raise ScenarioError(f"buffer_bytes must be positive, got {self.buffer_bytes}")
        if self.aqm not in ("droptail", "red"):
            raise ScenarioError(f'aqm must be "droptail" or "red", got "{self.aqm}"')
        if self.aqm == "red":
            try:
                self.red_params().validate(self.buffer_bytes)
            except ValueError as exc:
                raise ScenarioError(str(exc)) from None
        if not self.flows:
            raise ScenarioError("a scenario needs at least one [[flow]]")
        if self.metrics_interval_ms <= 0:
            raise ScenarioError("metrics_interval_ms must be positive")
        if self.cheat_observe not in ("nominal", "srtt"):
            raise ScenarioError(f'cheat_observe must be "nominal" or "srtt", got "{self.cheat_observe}"')
        for i, fc in enumerate(self.flows):
            loc = f"flow {i}"
            if fc.rtt_ms <= 0:
                raise ScenarioError(f"{loc}: rtt_ms must be positive, got {fc.rtt_ms}")
            if fc.duration_s <= 0:
                raise ScenarioError(f"{loc}: duration_s must be positive, got {fc.duration_s}")
            if fc.start_s < 0:
                raise ScenarioError(f"{loc}: start_s must be nonnegative, got {fc.start_s}")
            if fc.cc not in VARIANTS:
                raise ScenarioError(f"{loc}: cc must be one of {VARIANTS}, got \"{fc.cc}\"")
            if fc.extra_ack_delay_ms < 0:
                raise ScenarioError(f"{loc}: extra_ack_delay_ms must be nonnegative")
            if fc.cc == "bbq":
                if not fc.alpha_ms > 0:
                    raise ScenarioError(f"{loc}: alpha_ms must be positive, got {fc.alpha_ms}")
                if not 0 < fc.beta < 1:
                    raise ScenarioError(f"{loc}: beta must be in (0, 1), got {fc.beta}")


# -- scenario files ----------------------------------------------------------
#
# Restricted key = value format with [link], [aqm] and repeated [[flow]]
# sections (a small TOML subset; the stdlib gained a TOML parser only in
# 3.11). Values are numbers, "quoted strings", true/false or inf.

_TOP_KEYS = {"seed", "metrics_interval_ms", "cheat_turn_s", "cheat_start_s", "cheat_observe"}
_LINK_KEYS = {"rate_mbps", "buffer_bytes"}
_AQM_KEYS = {"aqm", "red.min_bytes", "red.max_bytes", "red.prob", "red.ewma_weight"}
_FLOW_KEYS = {"rtt_ms", "cc", "alpha_ms", "beta", "start_s", "duration_s",
              "extra_ack_delay_ms", "cheat"}
_INT_KEYS = {"seed", "buffer_bytes", "red.min_bytes", "red.max_bytes"}
_STR_KEYS = {"aqm", "cc", "cheat_observe"}
_BOOL_KEYS = {"cheat"}


def _parse_value(key: str, raw: str, where: str):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        value = raw[1:-1]
        if key not in _STR_KEYS:
            raise ScenarioError(f"{where}: {key} must be a number, got {raw}")
        return value
    if key in _STR_KEYS:
        raise ScenarioError(f'{where}: {key} must be a quoted string, got {raw}')
    if raw in ("true", "false"):
        if key not in _BOOL_KEYS:
            raise ScenarioError(f"{where}: {key} must be a number, got {raw}")
        return raw == "true"
    if key in _BOOL_KEYS:
        raise ScenarioError(f"{where}: {key} must be true or false, got {raw}")
    try:
        if key in _INT_KEYS:
            return int(raw)
        if raw == "inf":
            return math.inf
        return float(raw)
    except ValueError:
        raise ScenarioError(f"{where}: cannot parse value for {key}: {raw}") from None


def parse_scenario_text(text: str) -> ScenarioConfig:
    top: dict = {}
    link: dict = {}
    aqm: dict = {}
    flows: list[dict] = []
    section = top
    section_keys = _TOP_KEYS
    section_name = "top level"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split("#", 1)[0].strip()
        if not code:
            continue
        where = f"line {lineno}"
        if code == "[link]":
            section, section_keys, section_name = link, _LINK_KEYS, "[link]"
        elif code == "[aqm]":
            section, section_keys, section_name = aqm, _AQM_KEYS, "[aqm]"
        elif code == "[[flow]]":
            flows.append({})
            section, section_keys, section_name = flows[-1], _FLOW_KEYS, "[[flow]]"
        elif code.startswith("["):
            raise ScenarioError(f"{where}: unknown section {code}")
        else:
            key, sep, raw_value = code.partition("=")
            key = key.strip()
            if not sep:
                raise ScenarioError(f"{where}: expected key = value, got {code!r}")
            if key not in section_keys:
                raise ScenarioError(f"{where}: unknown key {key!r} in {section_name}")
            if key in section:
                raise ScenarioError(f"{where}: duplicate key {key!r} in {section_name}")
            section[key] = _parse_value(key, raw_value, where)

    cfg = ScenarioConfig()
    for key, value in top.items():
        setattr(cfg, key, int(value) if key == "seed" else value)
    if "rate_mbps" in link:
        cfg.rate_mbps = link["rate_mbps"]
    if "buffer_bytes" in link:
        cfg.buffer_bytes = link["buffer_bytes"]
    if "aqm" in aqm:
        cfg.aqm = aqm["aqm"]
    if "red.min_bytes" in aqm:
        cfg.red_min_bytes = aqm["red.min_bytes"]
    if "red.max_bytes" in aqm:
        cfg.red_max_bytes = aqm["red.max_bytes"]
    if "red.prob" in aqm:
        cfg.red_prob = aqm["red.prob"]
    if "red.ewma_weight" in aqm:
        cfg.red_ewma_weight = aqm["red.ewma_weight"]
    for f in flows:
        if "rtt_ms" not in f:
            raise ScenarioError("every [[flow]] needs rtt_ms")
    cfg.flows = [FlowConfig(**f) for f in flows]
    cfg.validate()
    return cfg


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


# -- summary statistics --------------------------------------------------------


@dataclass
class FlowSummary:
    flow_id: int
    cc: str
    rtt_ms: float
    start_s: float
    duration_s: float
    mean_goodput_bps: float       # post-warmup, while the flow is active
    share: float                  # steady-window goodput over link rate
    mean_rtt_ms: float
    mean_queueing_ms: float       # steady window
    drain_fraction: float         # steady time at a draining gain
    cwnd_bounded_fraction: float
    retransmits: int


@dataclass
class SummaryStats:
    flows: list[FlowSummary]
    jain_index: float
    utilization: float            # steady aggregate goodput over link rate
    mean_queueing_ms: float       # across flows, steady window
    convergence_s: float | None   # time to 95% utilization after a departure
    warmup_end_s: float
    steady_start_s: float
    steady_end_s: float
    cheat_log: list[tuple[float, int, float]] = field(default_factory=list)  # (t_s, flow, rtt_ms)


@dataclass
class FlowRunInfo:
    """Raw per-flow outputs that feed the summary."""

    flow_id: int
    config: FlowConfig
    start_ns: int
    end_ns: int
    retransmits: int
    sent_segments: int
    lost_marks: int
    delivered_unique_bytes: int
    transitions: list[tuple[int, str, float, bool]]  # (t, mode, gain, queue seen)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    samples: list[MetricsSample]
    flows: list[FlowRunInfo]
    summary: SummaryStats
    cheat_log: list[tuple[int, int, int]]


def jain_index(throughputs) -> float:
    """(sum x)^2 / (n * sum x^2); 1.0 for an all-zero input."""
    xs = list(throughputs)
    if not xs:
        raise ValueError("jain_index needs at least one throughput")
    if any(x < 0 for x in xs):
        raise ValueError("jain_index needs nonnegative throughputs")
    total = sum(xs)
    if total == 0:
        return 1.0
    return total * total / (len(xs) * sum(x * x for x in xs))


def queueing_delay_series(samples, flow_configs) -> list[tuple[int, int, int]]:
    """(t_ns, flow_id, queueing_ns) from measured RTT minus configured RTT."""
    base = {i: int(round(fc.rtt_ms * 1e6)) for i, fc in enumerate(flow_configs)}
    out = []
    for s in samples:
        if s.rtt_ns <= 0:
            continue
        out.append((s.t_ns, s.flow_id, max(s.rtt_ns - base[s.flow_id], 0)))
    return out


def _gain_time(transitions, t0: int, t1: int, selector) -> int:
    """Time spent in [t0, t1) in states selected by ``selector(mode, gain)``."""
    if t1 <= t0:
        return 0
    total = 0
    for i, (t, mode, gain, _queued) in enumerate(transitions):
        seg_start = max(t, t0)
        seg_end = transitions[i + 1][0] if i + 1 < len(transitions) else t1
        seg_end = min(seg_end, t1)
        if seg_end > seg_start and selector(mode, gain):
            total += seg_end - seg_start
    return total


def _is_draining(mode: str, gain: float) -> bool:
    return mode == "drain" or (mode == "probe_bw" and gain < 1.0)


def summarize(cfg: ScenarioConfig, samples, flow_infos, cheat_log) -> SummaryStats:
    link_rate = cfg.link_rate_bps
    sim_end = max(fi.end_ns for fi in flow_infos)
    overlap_start = max(fi.start_ns for fi in flow_infos)
    overlap_end = min(fi.end_ns for fi in flow_infos)

    # Warmup ends once every flow has left its initial startup/drain ramp.
    warmup_end = overlap_start
    for fi in flow_infos:
        first_steady = next((t for t, mode, *_ in fi.transitions if mode == "probe_bw"),
                            fi.end_ns)
        warmup_end = max(warmup_end, first_steady)

    # Steady state starts after the last re-probe synchronization that leaves
    # a usable tail inside the all-flows-active window.
    steady_start = warmup_end
    for fi in flow_infos:
        prev_mode = None
        for t, mode, *_ in fi.transitions:
            if prev_mode == "probe_rtt" and mode != "probe_rtt" \
                    and warmup_end <= t <= overlap_end - _STEADY_TAIL_NS:
                steady_start = max(steady_start, t)
            prev_mode = mode
    steady_end = overlap_end
    if steady_start > steady_end - _STEADY_MIN_NS:
        steady_start = max(warmup_end, min(steady_start, steady_end - _STEADY_MIN_NS))
    if steady_start >= steady_end:
        steady_start = max(overlap_start, min(warmup_end, steady_end - _STEADY_MIN_NS))

    by_flow: dict[int, list[MetricsSample]] = {fi.flow_id: [] for fi in flow_infos}
    for s in samples:
        by_flow[s.flow_id].append(s)

    flow_summaries = []
    queueing_all = []
    for fi in flow_infos:
        rows = by_flow[fi.flow_id]
        warm = [s for s in rows if s.t_ns > warmup_end]
        steady = [s for s in rows if steady_start < s.t_ns <= steady_end]
        mean_goodput = fmean([s.goodput_bps for s in warm]) if warm else 0.0
        steady_goodput = fmean([s.goodput_bps for s in steady]) if steady else 0.0
        rtts = [s.rtt_ns for s in steady if s.rtt_ns > 0]
        queueing = [s.queueing_ns for s in steady if s.rtt_ns > 0]
        queueing_all.extend(queueing)
        bounded = [s.cwnd_bounded for s in steady]
        span_start = max(steady_start, fi.start_ns)
        span_end = min(steady_end, fi.end_ns)
        drain_ns = _gain_time(fi.transitions, span_start, span_end, _is_draining)
        span = span_end - span_start
        flow_summaries.append(FlowSummary(
            flow_id=fi.flow_id,
            cc=fi.config.cc,
            rtt_ms=fi.config.rtt_ms,
            start_s=fi.config.start_s,
            duration_s=fi.config.duration_s,
            mean_goodput_bps=mean_goodput,
            share=steady_goodput / link_rate,
            mean_rtt_ms=fmean(rtts) / 1e6 if rtts else 0.0,
            mean_queueing_ms=fmean(queueing) / 1e6 if queueing else 0.0,
            drain_fraction=drain_ns / span if span > 0 else 0.0,
            cwnd_bounded_fraction=fmean([1.0 if b else 0.0 for b in bounded]) if bounded else 0.0,
            retransmits=fi.retransmits,
        ))

    shares = [fs.share for fs in flow_summaries]
    convergence = _convergence_s(cfg, samples, flow_infos, sim_end)
    return SummaryStats(
        flows=flow_summaries,
        jain_index=jain_index([max(s, 0.0) for s in shares]),
        utilization=sum(shares),
        mean_queueing_ms=fmean(queueing_all) / 1e6 if queueing_all else 0.0,
        convergence_s=convergence,
        warmup_end_s=warmup_end / SEC,
        steady_start_s=steady_start / SEC,
        steady_end_s=steady_end / SEC,
        cheat_log=[(t / SEC, fid, rtt / 1e6) for t, fid, rtt in cheat_log],
    )


def _convergence_s(cfg, samples, flow_infos, sim_end) -> float | None:
    """Seconds from the last mid-run departure until >= 95% link utilization."""
    departures = [fi.end_ns for fi in flow_infos if fi.end_ns < sim_end]
    if not departures:
        return None
    t_dep = max(departures)
    target = 0.95 * cfg.link_rate_bps
    by_time: dict[int, float] = {}
    for s in samples:
        if s.t_ns > t_dep:
            by_time[s.t_ns] = by_time.get(s.t_ns, 0.0) + s.goodput_bps
    for t in sorted(by_time):
        if by_time[t] >= target:
            return (t - t_dep) / SEC
    return None


# -- running -------------------------------------------------------------------


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Run one scenario to completion and summarize it."""
    cfg.validate()
    sim = Simulation(cfg)
    sim.run()
    flow_infos = []
    for flow in sim.flows:
        sender = flow.sender
        flow_infos.append(FlowRunInfo(
            flow_id=flow.index,
            config=flow.config,
            start_ns=flow.start_ns,
            end_ns=flow.end_ns,
            retransmits=sender.retx_segments,
            sent_segments=sender.sent_segments,
            lost_marks=sender.lost_marks,
            delivered_unique_bytes=flow.receiver.delivered_unique_bytes,
            transitions=list(sender.cc.transitions),
        ))
    summary = summarize(cfg, sim.samples, flow_infos, sim.cheat_log)
    return ScenarioResult(cfg, sim.samples, flow_infos, summary, sim.cheat_log)


def apply_axis(cfg: ScenarioConfig, key: str, value) -> ScenarioConfig:
    """New config with one swept parameter changed.

    Keys: ``rate_mbps``, ``buffer_bytes``, ``seed``, or ``flowN.<field>``
    where N is the flow index (for example ``flow1.rtt_ms``).
    """
    out = replace(cfg, flows=[copy.copy(f) for f in cfg.flows])
    if key in ("rate_mbps", "buffer_bytes", "seed"):
        setattr(out, key, type(getattr(out, key))(value))
        return out
    if key.startswith("flow") and "." in key:
        head, _, fkey = key.partition(".")
        try:
            idx = int(head[4:])
            flow = out.flows[idx]
        except (ValueError, IndexError):
            raise ScenarioError(f"bad sweep axis {key!r}: no such flow") from None
        if not hasattr(flow, fkey) or fkey == "cheat":
            raise ScenarioError(f"bad sweep axis {key!r}: unknown flow field {fkey!r}")
        if fkey == "cc":
            setattr(flow, fkey, str(value))
        else:
            setattr(flow, fkey, float(value))
        return out
    raise ScenarioError(f"bad sweep axis {key!r}")


@dataclass
class SweepPoint:
    value: object
    result: ScenarioResult


def sweep(base: ScenarioConfig, axis_key: str, values, jobs: int = 1) -> list[SweepPoint]:
    """One independent run per axis value; points may run in parallel."""
    values = list(values)
    if not values:
        raise ScenarioError("sweep needs at least one axis value")
    configs = [apply_axis(base, axis_key, v) for v in values]
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_scenario, configs))
    else:
        results = [run_scenario(c) for c in configs]
    return [SweepPoint(v, r) for v, r in zip(values, results)]


# -- CSV output ------------------------------------------------------------------

RUN_CSV_HEADER = ("t_s,flow_id,goodput_mbps,rtt_ms,queueing_ms,inflight_bytes,"
                  "cwnd_bytes,queue_share,mode,gain,cwnd_bounded")

SUMMARY_CSV_HEADER = ("flow_id,cc,rtt_ms,start_s,duration_s,mean_goodput_mbps,share,"
                      "mean_rtt_ms,mean_queueing_ms,drain_fraction,cwnd_bounded_fraction,"
                      "retransmits,jain_index,utilization,mean_queueing_all_ms,"
                      "convergence_s,steady_start_s,steady_end_s")


def run_csv_lines(samples) -> list[str]:
    lines = [RUN_CSV_HEADER]
    for s in samples:
        lines.append(
            f"{s.t_ns / SEC:.3f},{s.flow_id},{s.goodput_bps / 1e6:.4f},"
            f"{s.rtt_ns / 1e6:.4f},{s.queueing_ns / 1e6:.4f},{s.inflight_bytes},"
            f"{s.cwnd_bytes},{s.queue_share:.4f},{s.mode},{s.gain:.4f},"
            f"{1 if s.cwnd_bounded else 0}"
        )
    return lines


def summary_csv_lines(summary: SummaryStats, prefix: str = "", header_prefix: str = "") -> list[str]:
    lines = [header_prefix + SUMMARY_CSV_HEADER]
    conv = "" if summary.convergence_s is None else f"{summary.convergence_s:.3f}"
    for fs in summary.flows:
        lines.append(
            f"{prefix}{fs.flow_id},{fs.cc},{fs.rtt_ms:g},{fs.start_s:g},{fs.duration_s:g},"
            f"{fs.mean_goodput_bps / 1e6:.4f},{fs.share:.4f},{fs.mean_rtt_ms:.4f},"
            f"{fs.mean_queueing_ms:.4f},{fs.drain_fraction:.4f},{fs.cwnd_bounded_fraction:.4f},"
            f"{fs.retransmits},{summary.jain_index:.4f},{summary.utilization:.4f},"
            f"{summary.mean_queueing_ms:.4f},{conv},{summary.steady_start_s:.3f},"
            f"{summary.steady_end_s:.3f}"
        )
    return lines


def write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
