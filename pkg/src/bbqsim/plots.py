"""Render run traces and sweep summaries to PNG files next to the CSV output."""

from __future__ import annotations

from .engine import SEC


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_run(result, path) -> None:
    """Three stacked panels per run: goodput, RTT, and queue share over time."""
    plt = _pyplot()
    fig, (ax_gp, ax_rtt, ax_q) = plt.subplots(3, 1, sharex=True, figsize=(9, 7))
    by_flow: dict[int, list] = {}
    for s in result.samples:
        by_flow.setdefault(s.flow_id, []).append(s)
    for flow_id, rows in sorted(by_flow.items()):
        fc = result.config.flows[flow_id]
        label = f"flow {flow_id} ({fc.cc}, {fc.rtt_ms:g} ms)"
        ts = [s.t_ns / SEC for s in rows]
        ax_gp.plot(ts, [s.goodput_bps / 1e6 for s in rows], label=label, linewidth=0.9)
        ax_rtt.plot(ts, [s.rtt_ns / 1e6 for s in rows], label=label, linewidth=0.9)
        ax_q.plot(ts, [s.queue_share for s in rows], label=label, linewidth=0.9)
    ax_gp.set_ylabel("goodput (Mbps)")
    ax_gp.axhline(result.config.rate_mbps, color="gray", linestyle=":", linewidth=0.8)
    ax_rtt.set_ylabel("RTT (ms)")
    ax_q.set_ylabel("queue share")
    ax_q.set_ylim(-0.02, 1.02)
    ax_q.set_xlabel("time (s)")
    ax_gp.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep(axis_key, points, path) -> None:
    """Per-flow bandwidth share against the swept parameter."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n_flows = max(len(p.result.summary.flows) for p in points)
    xs = list(range(len(points)))
    for flow_id in range(n_flows):
        ys, labels = [], None
        for p in points:
            flows = p.result.summary.flows
            ys.append(flows[flow_id].share if flow_id < len(flows) else float("nan"))
            if labels is None and flow_id < len(flows):
                fc = flows[flow_id]
                labels = f"flow {flow_id} ({fc.cc}, {fc.rtt_ms:g} ms)"
        ax.plot(xs, ys, marker="o", label=labels, linewidth=1.0)
    ax.set_xticks(xs)
    ax.set_xticklabels([str(p.value) for p in points])
    ax.set_xlabel(axis_key)
    ax.set_ylabel("bandwidth share")
    ax.set_ylim(0, 1)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_suite_shares(suite_name, named_results, path) -> None:
    """Grouped per-run share bars, one group per run in the suite."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(max(7, 1.2 * len(named_results)), 4.5))
    width = 0.8
    for i, (name, result) in enumerate(named_results):
        flows = result.summary.flows
        n = len(flows)
        for j, fs in enumerate(flows):
            ax.bar(i - width / 2 + width * (j + 0.5) / n, fs.share, width / n,
                   color=f"C{j % 10}")
    ax.set_xticks(range(len(named_results)))
    ax.set_xticklabels([name for name, _ in named_results], rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("bandwidth share")
    ax.set_title(suite_name)
    ax.set_ylim(0, 1)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
