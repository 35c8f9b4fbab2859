"""Built-in benchmark suites.

Each suite is a named, compiled-in list of scenario runs mirroring one of the
RTT-fairness experiments: the two-flow bias example, the bandwidth / RTT /
flow-count sweeps, the RED parameter study, the micro-dynamics traces, the
strict-drain regression, and the capped-probe (bbq) evaluations including the
departure/convergence run and the latency-cheating game.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scenarios import FlowConfig, ScenarioConfig

TABLE1_RED = {
    # scheme: (max_thresh, min_thresh, max_prob)
    "red1": (500_000, 170_000, 0.02),
    "red2": (500_000, 170_000, 0.10),
    "red3": (330_000, 170_000, 0.02),
}


@dataclass
class SuiteRun:
    name: str
    config: ScenarioConfig


@dataclass
class Suite:
    name: str
    description: str
    runs: list[SuiteRun]


def _flow(rtt_ms, cc="bbr", start_s=0.0, duration_s=120.0, **kw) -> FlowConfig:
    return FlowConfig(rtt_ms=rtt_ms, cc=cc, start_s=start_s, duration_s=duration_s, **kw)


def _pair(rtt_a, rtt_b, cc, rate_mbps=100.0, duration_s=120.0, stagger_s=0.0, seed=1) -> ScenarioConfig:
    return ScenarioConfig(
        rate_mbps=rate_mbps,
        flows=[
            _flow(rtt_a, cc, 0.0, duration_s),
            _flow(rtt_b, cc, stagger_s, duration_s - stagger_s),
        ],
        seed=seed,
    )


def fig1() -> Suite:
    cfg = _pair(10, 50, "bbr", stagger_s=10.0)
    return Suite("fig1", "two bbr flows, 10 ms vs 50 ms, 100 Mbps drop-tail: the bias example",
                 [SuiteRun("bbr_10ms_vs_50ms", cfg)])


def fig3() -> Suite:
    runs = [SuiteRun(f"bbr_pair_{int(r)}mbps", _pair(10, 50, "bbr", rate_mbps=r))
            for r in (10, 25, 50, 100, 200, 400, 1000)]
    return Suite("fig3", "bandwidth sweep, bbr pair 10 ms vs 50 ms", runs)


def _rtt_sweep(cc: str) -> list[SuiteRun]:
    return [SuiteRun(f"{cc}_10ms_vs_{b}ms", _pair(10, b, cc))
            for b in (10, 15, 20, 30, 50, 100, 200)]


def fig4a() -> Suite:
    return Suite("fig4a", "RTT-disparity sweep, bbr: 10 ms vs 10..200 ms", _rtt_sweep("bbr"))


def _count_sweep(cc: str, duration_s=120.0) -> list[SuiteRun]:
    runs = []
    for n in (1, 5, 10, 20):
        flows = [_flow(10, cc, 0.0, duration_s) for _ in range(n)]
        flows.append(_flow(50, cc, 0.0, duration_s))
        runs.append(SuiteRun(f"{cc}_{n}x10ms_vs_50ms",
                             ScenarioConfig(rate_mbps=100.0, flows=flows, seed=1)))
    return runs


def fig4b() -> Suite:
    return Suite("fig4b", "flow-count sweep, bbr: n short flows vs one 50 ms flow",
                 _count_sweep("bbr"))


def fig5_8() -> Suite:
    return Suite(
        "fig5_8",
        "micro-dynamics traces: the bias example plus the strict-drain first cut",
        [
            SuiteRun("bbr_10ms_vs_50ms", _pair(10, 50, "bbr", stagger_s=10.0)),
            SuiteRun("strict_drain_10ms_vs_50ms", _pair(10, 50, "bbr-strict-drain", stagger_s=10.0)),
        ],
    )


def fig9() -> Suite:
    bbq = ScenarioConfig(rate_mbps=100.0, flows=[
        _flow(10, "bbq", 0.0, 110.0),
        _flow(50, "bbq", 0.0, 120.0),
    ], seed=1)
    bbr = ScenarioConfig(rate_mbps=100.0, flows=[
        _flow(10, "bbr", 0.0, 110.0),
        _flow(50, "bbr", 0.0, 120.0),
    ], seed=1)
    return Suite("fig9", "bbq overall: fairness, queueing delay and convergence after departure, "
                         "with a bbr baseline",
                 [SuiteRun("bbq_10ms_vs_50ms_departure", bbq),
                  SuiteRun("bbr_10ms_vs_50ms_departure", bbr)])


def fig10() -> Suite:
    return Suite("fig10", "RTT-disparity sweep, bbq vs bbr baseline",
                 _rtt_sweep("bbq") + _rtt_sweep("bbr"))


def fig11() -> Suite:
    return Suite("fig11", "flow-count sweep, bbq vs bbr baseline",
                 _count_sweep("bbq") + _count_sweep("bbr"))


def fig12() -> Suite:
    pairs = [(5, 10), (10, 20), (20, 50), (50, 100), (100, 200), (200, 300)]
    runs = []
    for a, b in pairs:
        for cc in ("bbq", "bbr"):
            runs.append(SuiteRun(f"{cc}_{a}ms_vs_{b}ms", _pair(a, b, cc)))
    return Suite("fig12", "one-size-fits-all probe cap across RTT pairs, bbq vs bbr", runs)


def table1() -> Suite:
    runs = []
    for scheme, (max_t, min_t, prob) in TABLE1_RED.items():
        cfg = _pair(10, 50, "bbr")
        cfg.aqm = "red"
        cfg.red_min_bytes = min_t
        cfg.red_max_bytes = max_t
        cfg.red_prob = prob
        runs.append(SuiteRun(f"bbr_pair_{scheme}", cfg))
    return Suite("table1", "RED parameter study: retransmission counts per scheme", runs)


def strategic() -> Suite:
    cfg = ScenarioConfig(rate_mbps=100.0, flows=[
        _flow(5, "bbr", 0.0, 70.0, cheat=True),
        _flow(5, "bbr", 0.0, 70.0, cheat=True),
    ], seed=1, cheat_turn_s=15.0, cheat_start_s=10.0)
    return Suite("strategic", "latency-cheating game: two 5 ms flows alternately double their RTT",
                 [SuiteRun("bbr_cheaters_5ms", cfg)])


_BUILDERS = (fig1, fig3, fig4a, fig4b, fig5_8, fig9, fig10, fig11, fig12, table1, strategic)


def suite_names() -> list[str]:
    return [b.__name__ for b in _BUILDERS]


def get_suite(name: str) -> Suite:
    for builder in _BUILDERS:
        if builder.__name__ == name:
            return builder()
    raise KeyError(name)
