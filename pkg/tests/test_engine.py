"""Event loop ordering, cancellation and clock semantics."""

import pytest

from bbqsim.engine import EventLoop, SimulationError, SEC, MS


def test_event_at_now_runs_before_later_events():
    loop = EventLoop()
    order = []
    loop.schedule(1, order.append, "later")
    loop.schedule(0, order.append, "now")
    loop.run_until(SEC)
    assert order == ["now", "later"]


def test_equal_fire_times_run_in_scheduling_order():
    loop = EventLoop()
    order = []
    for tag in range(5):
        loop.schedule(7 * MS, order.append, tag)
    loop.run_until(SEC)
    assert order == [0, 1, 2, 3, 4]


def test_scheduling_in_the_past_is_an_error():
    loop = EventLoop()
    loop.run_until(10)
    with pytest.raises(SimulationError):
        loop.schedule(9, lambda _: None)


def test_cancel_semantics():
    loop = EventLoop()
    fired = []
    handle = loop.schedule(5, fired.append, "rto")
    assert loop.cancel(handle) is True
    assert loop.cancel(handle) is False  # second cancel
    done = loop.schedule(6, fired.append, "tick")
    loop.run_until(10)
    assert fired == ["tick"]
    assert loop.cancel(done) is False  # already fired


def test_run_until_with_empty_queue_advances_clock():
    loop = EventLoop()
    stats = loop.run_until(5 * SEC)
    assert loop.now() == 5 * SEC
    assert stats.events_fired == 0


def test_run_until_counts_fired_events():
    loop = EventLoop()
    loop.schedule(1 * SEC, lambda _: None)
    stats = loop.run_until(2 * SEC)
    assert stats.events_fired == 1
    assert loop.now() == 2 * SEC


def test_cascading_events_within_horizon():
    loop = EventLoop()

    def first(_):
        loop.schedule(int(1.5 * SEC), lambda _: None)

    loop.schedule(1 * SEC, first)
    stats = loop.run_until(2 * SEC)
    assert stats.events_fired == 2


def test_clock_is_monotonic_across_callbacks():
    loop = EventLoop()
    seen = []
    for t in (3, 1, 2, 1, 9):
        loop.schedule(t * MS, lambda _: seen.append(loop.now()))
    loop.run_until(SEC)
    assert seen == sorted(seen)


def test_events_past_horizon_stay_pending():
    loop = EventLoop()
    fired = []
    loop.schedule(3 * SEC, fired.append, "late")
    loop.run_until(2 * SEC)
    assert fired == []
    assert loop.pending() == 1
    loop.run_until(3 * SEC)
    assert fired == ["late"]


def test_identical_schedules_replay_identically():
    def build():
        loop = EventLoop()
        log = []
        for t in (5, 5, 2, 8):
            loop.schedule(t, lambda tag, log=log: log.append((loop.now(), tag)), t)
        loop.run_until(100)
        return log

    assert build() == build()
