"""Deterministic discrete-event simulator for BBR-family congestion control.

Implements BBR, a strict-drain variant, and BBQ (BBR with a capped probing
period and queue detection) over a single bottleneck link with drop-tail or
RED queueing, plus a scenario harness that reproduces the RTT-fairness
experiments this package exists to study.
"""

from .engine import EventLoop, RunStats, SimulationError, US, MS, SEC
from .net import MSS, BottleneckQueue, LinkPath, RedParams, Segment, red_drop_decision
from .cc import (BbqParams, BwFilter, CcState, Mode, RateSample, RttFilter, Variant,
                 compute_bdp, detect_queue, is_cwnd_bounded)
from .scenarios import (FlowConfig, ScenarioConfig, ScenarioError, ScenarioResult,
                        SummaryStats, jain_index, load_scenario, parse_scenario_text,
                        queueing_delay_series, run_scenario, sweep)
from .sim import MetricsSample, Simulation

__version__ = "0.1.0"

__all__ = [
    "EventLoop", "RunStats", "SimulationError", "US", "MS", "SEC",
    "MSS", "BottleneckQueue", "LinkPath", "RedParams", "Segment", "red_drop_decision",
    "BbqParams", "BwFilter", "CcState", "Mode", "RateSample", "RttFilter", "Variant",
    "compute_bdp", "detect_queue", "is_cwnd_bounded",
    "FlowConfig", "ScenarioConfig", "ScenarioError", "ScenarioResult", "SummaryStats",
    "jain_index", "load_scenario", "parse_scenario_text", "queueing_delay_series",
    "run_scenario", "sweep",
    "MetricsSample", "Simulation",
    "__version__",
]
