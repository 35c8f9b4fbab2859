"""Built-in suites: names, config validity, expected shapes."""

import pytest

from bbqsim.suites import get_suite, suite_names, TABLE1_RED


REQUIRED = {"fig1", "fig3", "fig4a", "fig4b", "fig5_8", "fig9", "fig10",
            "fig11", "fig12", "table1"}


def test_required_suite_names_exist():
    assert REQUIRED <= set(suite_names())


def test_unknown_suite_raises():
    with pytest.raises(KeyError):
        get_suite("fig99")


@pytest.mark.parametrize("name", sorted(REQUIRED | {"strategic"}))
def test_every_suite_config_validates(name):
    suite = get_suite(name)
    assert suite.runs
    for run in suite.runs:
        run.config.validate()


def test_fig1_shape():
    suite = get_suite("fig1")
    cfg = suite.runs[0].config
    assert [f.rtt_ms for f in cfg.flows] == [10, 50]
    assert cfg.flows[1].start_s == 10.0
    assert cfg.rate_mbps == 100.0
    assert cfg.buffer_bytes == 2_000_000


def test_fig3_sweeps_bandwidth():
    rates = [run.config.rate_mbps for run in get_suite("fig3").runs]
    assert rates[0] == 10 and rates[-1] == 1000
    assert rates == sorted(rates)


def test_fig4b_flow_counts():
    counts = [len(run.config.flows) for run in get_suite("fig4b").runs]
    assert counts == [2, 6, 11, 21]


def test_fig9_has_departure_and_baseline():
    suite = get_suite("fig9")
    ccs = {run.config.flows[0].cc for run in suite.runs}
    assert ccs == {"bbq", "bbr"}
    bbq = next(r.config for r in suite.runs if r.config.flows[0].cc == "bbq")
    assert bbq.flows[0].duration_s < bbq.flows[1].duration_s


def test_table1_matches_red_schemes():
    suite = get_suite("table1")
    for run in suite.runs:
        scheme = run.name.rsplit("_", 1)[-1]
        max_t, min_t, prob = TABLE1_RED[scheme]
        assert run.config.aqm == "red"
        assert run.config.red_min_bytes == min_t
        assert run.config.red_max_bytes == max_t
        assert run.config.red_prob == prob


def test_strategic_flows_cheat():
    cfg = get_suite("strategic").runs[0].config
    assert all(f.cheat for f in cfg.flows)
    assert all(f.rtt_ms == 5 for f in cfg.flows)
