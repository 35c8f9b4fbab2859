"""Command-line front end: outputs, exit codes, determinism, figures."""

import os

import pytest

from bbqsim.cli import main, EXIT_OK, EXIT_CONFIG, EXIT_UNKNOWN_SUITE, EXIT_OUT_DIR
from bbqsim.scenarios import RUN_CSV_HEADER

SCENARIO = """
seed = 5

[link]
rate_mbps = 100
buffer_bytes = 2000000

[aqm]
aqm = "droptail"

[[flow]]
rtt_ms = 10
cc = "bbr"
duration_s = 6

[[flow]]
rtt_ms = 50
cc = "bbr"
duration_s = 6
"""


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "two_flow.cfg"
    path.write_text(SCENARIO)
    return str(path)


def test_run_writes_csv_and_figure(scenario_file, tmp_path):
    out = str(tmp_path / "out")
    code = main(["run", "--scenario", scenario_file, "--out", out, "--quiet"])
    assert code == EXIT_OK
    run_csv = os.path.join(out, "run.csv")
    assert os.path.exists(run_csv)
    assert os.path.exists(os.path.join(out, "summary.csv"))
    assert os.path.exists(os.path.join(out, "run.png"))
    with open(run_csv) as fh:
        assert fh.readline().strip() == RUN_CSV_HEADER


def test_run_no_plot_skips_figures(scenario_file, tmp_path):
    out = str(tmp_path / "out")
    code = main(["run", "--scenario", scenario_file, "--out", out,
                 "--quiet", "--no-plot"])
    assert code == EXIT_OK
    assert not os.path.exists(os.path.join(out, "run.png"))


def test_identical_invocations_are_byte_identical(scenario_file, tmp_path):
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    for out in (out_a, out_b):
        assert main(["run", "--scenario", scenario_file, "--out", out,
                     "--quiet", "--no-plot"]) == EXIT_OK
    for name in ("run.csv", "summary.csv"):
        with open(os.path.join(out_a, name), "rb") as fa, \
                open(os.path.join(out_b, name), "rb") as fb:
            assert fa.read() == fb.read()


def test_seed_override_changes_trace(scenario_file, tmp_path):
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert main(["run", "--scenario", scenario_file, "--out", out_a,
                 "--quiet", "--no-plot"]) == EXIT_OK
    assert main(["run", "--scenario", scenario_file, "--out", out_b,
                 "--seed", "99", "--quiet", "--no-plot"]) == EXIT_OK
    with open(os.path.join(out_a, "run.csv"), "rb") as fa, \
            open(os.path.join(out_b, "run.csv"), "rb") as fb:
        assert fa.read() != fb.read()


def test_unknown_suite_exits_2_and_lists_names(tmp_path, capsys):
    code = main(["suite", "--name", "bogus", "--out", str(tmp_path / "o"), "--quiet"])
    assert code == EXIT_UNKNOWN_SUITE
    err = capsys.readouterr().err
    assert "fig1" in err and "table1" in err


def test_unwritable_out_dir_exits_3(tmp_path):
    blocker = tmp_path / "not_a_dir"
    blocker.write_text("file in the way")
    code = main(["run", "--scenario", "whatever.cfg",
                 "--out", str(blocker / "sub")])
    assert code == EXIT_OUT_DIR


def test_config_error_exits_nonzero(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[link]\nrate_mbps = -5\n[[flow]]\nrtt_ms = 10\n")
    code = main(["run", "--scenario", str(bad), "--out", str(tmp_path / "o"),
                 "--quiet"])
    assert code == EXIT_CONFIG


def test_missing_scenario_file_exits_nonzero(tmp_path):
    code = main(["run", "--scenario", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "o"), "--quiet"])
    assert code == EXIT_CONFIG


def test_suite_clip_writes_runs_and_summary(tmp_path):
    out = str(tmp_path / "o")
    code = main(["suite", "--name", "fig1", "--out", out, "--quiet",
                 "--clip-s", "4", "--no-plot"])
    assert code == EXIT_OK
    assert os.path.exists(os.path.join(out, "bbr_10ms_vs_50ms.csv"))
    with open(os.path.join(out, "summary.csv")) as fh:
        header = fh.readline().strip()
        assert header.startswith("run,")
        assert fh.readline().startswith("bbr_10ms_vs_50ms,")


def test_sweep_writes_point_csvs_and_summary(scenario_file, tmp_path):
    out = str(tmp_path / "o")
    code = main(["sweep", "--scenario", scenario_file, "--out", out,
                 "--axis", "flow1.rtt_ms=20,40", "--quiet", "--clip-s", "4",
                 "--no-plot"])
    assert code == EXIT_OK
    assert os.path.exists(os.path.join(out, "run_flow1_rtt_ms_20.csv"))
    assert os.path.exists(os.path.join(out, "run_flow1_rtt_ms_40.csv"))
    with open(os.path.join(out, "summary.csv")) as fh:
        assert fh.readline().startswith("flow1.rtt_ms,")


def test_sweep_bad_axis_exits_nonzero(scenario_file, tmp_path):
    code = main(["sweep", "--scenario", scenario_file,
                 "--out", str(tmp_path / "o"), "--axis", "nonsense=1,2",
                 "--quiet", "--clip-s", "2"])
    assert code == EXIT_CONFIG


def test_sweep_figure_rendered(scenario_file, tmp_path):
    out = str(tmp_path / "o")
    code = main(["sweep", "--scenario", scenario_file, "--out", out,
                 "--axis", "rate_mbps=20,40", "--quiet", "--clip-s", "4"])
    assert code == EXIT_OK
    assert os.path.exists(os.path.join(out, "summary.png"))
