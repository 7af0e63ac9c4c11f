import statistics

import pytest

from barrier import build_barrier
from core_model import ParameterError, Point, ProcessState, RngStream, add_point
from harness import radius_from_c
from strategies import (BarrierDefense, GiantMaker, PseudoDangerList, RandomStrategy,
                        decide_barrier_defense, decide_giant_maker, decide_greedy_min_merge,
                        giant_effective_lambda, make_strategy, radius_for_lambda, run_online,
                        target_square)

OUTSIDE = Point(0.2, 0.3)
INSIDE = Point(0.6, 0.3)
LISTED_LOW = Point(0.6, 0.1)
LISTED_HIGH = Point(0.6, 0.6)


@pytest.fixture
def strip():
    return build_barrier(1.5, 4, 1 / 16)


@pytest.fixture
def listed(strip):
    pdlist = PseudoDangerList(4)
    for block in ((2, 0), (2, 2)):
        strip.states[block].dangerous = True
        assert pdlist.admit(block, strip.states)
    return pdlist


def test_outside_point_is_preferred(strip, rng):
    pdlist = PseudoDangerList(4)
    state = ProcessState(1 / 16)
    for points in ((INSIDE, OUTSIDE), (OUTSIDE, INSIDE)):
        choice = decide_barrier_defense(state, strip, pdlist, points, rng)
        assert points[choice.pick] == OUTSIDE
        assert choice.reason == 'outside-barrier'
    choice = decide_barrier_defense(state, strip, pdlist, (OUTSIDE, Point(0.9, 0.9)), rng)
    assert choice.reason == 'outside-barrier'
    assert choice.pick in (0, 1)


def test_unlisted_barrier_point_is_pseudo_safe(strip, listed, rng):
    state = ProcessState(1 / 16)
    choice = decide_barrier_defense(state, strip, listed, (LISTED_LOW, INSIDE), rng)
    assert choice == choice.__class__(1, 'pseudo-safe')
    choice = decide_barrier_defense(state, strip, listed, (INSIDE, INSIDE), rng)
    assert choice.reason == 'pseudo-safe'


def test_least_played_listed_block_is_chosen(strip, listed, rng):
    state = ProcessState(1 / 16)
    points = (LISTED_LOW, LISTED_HIGH)
    first = decide_barrier_defense(state, strip, listed, points, rng)
    second = decide_barrier_defense(state, strip, listed, points, rng)
    assert first.reason == second.reason == 'least-played-list'
    assert {first.pick, second.pick} == {0, 1}
    assert strip.states[(2, 0)].k_counter == 1
    assert strip.states[(2, 2)].k_counter == 1
    assert listed.max_play_count() == 1


def test_list_starts_full_and_replaces_only_safe_blocks(strip):
    states = strip.states
    pdlist = PseudoDangerList(2, strip)
    assert pdlist.slots == [(2, 0), (2, 1)]
    assert states[(2, 0)].in_list == 0
    assert states[(2, 3)].in_list is None

    states[(2, 0)].k_counter = 3
    states[(2, 2)].dangerous = True
    assert pdlist.admit((2, 2), states)
    assert pdlist.slots == [(2, 2), (2, 1)]
    assert states[(2, 0)].in_list is None
    assert states[(2, 0)].k_counter == 0
    assert states[(2, 2)].in_list == 0

    states[(2, 1)].dangerous = True
    assert pdlist.admit((2, 1), states)
    assert pdlist.slots == [(2, 2), (2, 1)]

    states[(2, 3)].dangerous = True
    assert not pdlist.admit((2, 3), states)
    assert pdlist.overflowed
    assert pdlist.slots == [(2, 2), (2, 1)]
    with pytest.raises(ParameterError):
        PseudoDangerList(0)


def test_fresh_list_balances_plays_before_any_block_is_dangerous(strip, rng):
    pdlist = PseudoDangerList(4, strip)
    state = ProcessState(1 / 16)
    first = decide_barrier_defense(state, strip, pdlist, (LISTED_LOW, INSIDE), rng)
    second = decide_barrier_defense(state, strip, pdlist, (LISTED_LOW, INSIDE), rng)
    assert first.reason == second.reason == 'least-played-list'
    assert {first.pick, second.pick} == {0, 1}
    assert pdlist.play_counts[:2] == [1, 1]
    assert not any(s.dangerous for s in strip.states.values())


def test_capacity_beyond_the_barrier_leaves_empty_slots(strip):
    pdlist = PseudoDangerList(6, strip)
    assert pdlist.slots[:4] == sorted(strip.blocks)
    assert pdlist.slots[4:] == [None, None]


def _clusters(radius):
    state = ProcessState(radius)
    for k in range(5):
        add_point(state, Point(0.2 - 0.001 * k, 0.5))
    for k in range(3):
        add_point(state, Point(0.28 + 0.001 * k, 0.5))
    return state


def test_greedy_avoids_the_merging_point():
    state = _clusters(0.05)
    bridge = Point(0.24, 0.5)
    isolated = Point(0.8, 0.8)
    assert decide_greedy_min_merge(state, (bridge, isolated)).pick == 1
    assert decide_greedy_min_merge(state, (isolated, bridge)).pick == 0
    assert decide_greedy_min_merge(state, (isolated, Point(0.8, 0.1))).pick == 0
    with pytest.raises(ParameterError):
        decide_greedy_min_merge(state, (bridge, isolated), radius=0.1)


def test_target_square_geometry():
    square = target_square(0.25)
    assert square.area == pytest.approx(0.25)
    assert square.contains(Point(0.5, 0.5))
    assert square.contains(Point(0.25, 0.75))
    assert not square.contains(Point(0.2, 0.5))
    assert giant_effective_lambda(1.0, 0.1) == pytest.approx(2 * 0.9 * 0.95)
    assert radius_for_lambda(4.0, 100) == pytest.approx(0.2)
    with pytest.raises(ParameterError):
        target_square(0)


def test_giant_maker_prefers_the_target(rng):
    square = target_square(0.25)
    state = ProcessState(0.01)
    choice = decide_giant_maker(state, square, (Point(0.1, 0.1), Point(0.5, 0.5)), rng)
    assert choice.pick == 1 and choice.reason == 'in-target-square'
    choice = decide_giant_maker(state, square, (Point(0.1, 0.1), Point(0.9, 0.9)), rng)
    assert choice.reason == 'random'


def test_giant_maker_in_target_fraction(rng):
    strategy = GiantMaker(0.1)
    run_online(20000, 0.001, strategy, rng)
    assert strategy.report()['in_target_fraction'] == pytest.approx(0.19, abs=0.012)


def test_giant_maker_beats_random_below_threshold():
    n = 20000
    r = radius_for_lambda(1.0, n)
    giant, plain = [], []
    for trial in range(3):
        giant.append(run_online(n, r, GiantMaker(0.1), RngStream(trial)).largest_size)
        plain.append(run_online(n, r, RandomStrategy(), RngStream(trial)).largest_size)
    assert statistics.median(giant) > statistics.median(plain)


def test_run_online_is_reproducible():
    first = run_online(3000, 0.02, make_strategy('greedy', 3000, 0.02), RngStream(4))
    second = run_online(3000, 0.02, make_strategy('greedy', 3000, 0.02), RngStream(4))
    assert first.largest_size == second.largest_size
    assert first.series == second.series
    assert first.series[-1] == (3000, first.largest_size)
    assert first.barrier_crossed is None
    assert first.largest_fraction == pytest.approx(first.largest_size / 3000)


def test_barrier_defense_run_reports_its_state():
    n = 4000
    strategy = make_strategy('barrier', n, 0.02, K=1, h=3, slack=1, danger_mode='exact')
    assert isinstance(strategy, BarrierDefense)
    record = run_online(n, 0.02, strategy, RngStream(12))
    details = record.details
    assert isinstance(record.barrier_crossed, bool)
    assert details['danger_mode'] == 'exact'
    assert details['slack'] == 1
    assert details['psd_rounds'] <= details['barrier_rounds']
    assert details['bad_blocks'] == 0 or record.strategy_failed or details['max_slot_count'] > 0
    pdlist = strategy.pdlist
    assert None not in pdlist.slots[:min(pdlist.capacity, len(strategy.barrier.blocks))]
    for block, block_state in strategy.barrier.states.items():
        if block_state.dangerous and not record.strategy_failed:
            assert block in pdlist
        if block_state.in_list is not None:
            assert pdlist.slots[block_state.in_list] == block


def test_surrogate_mode_is_announced(caplog):
    with caplog.at_level('WARNING', logger='strategies'):
        strategy = make_strategy('barrier', 1000, 0.01, K=1, h=14)
    assert strategy.danger_mode == 'surrogate'
    assert 'surrogate' in caplog.text


def test_unknown_strategy_is_rejected():
    with pytest.raises(ParameterError):
        make_strategy('clever', 100, 0.1)
    with pytest.raises(ParameterError):
        run_online(0, 0.1, RandomStrategy(), RngStream(0))


def test_least_played_slot_gets_the_point(strip, listed, rng):
    listed.play_counts[listed.slot_of[(2, 0)]] = 3
    listed.play_counts[listed.slot_of[(2, 2)]] = 5
    choice = decide_barrier_defense(ProcessState(1 / 16), strip, listed,
                                    (LISTED_HIGH, LISTED_LOW), rng)
    assert choice.pick == 1
    assert listed.play_counts[listed.slot_of[(2, 0)]] == 4


def test_barrier_defense_never_plays_inside_when_outside_is_offered(strip, rng):
    pdlist = PseudoDangerList(4)
    state = ProcessState(1 / 16)
    generator = RngStream(31)
    for _ in range(2000):
        xy = generator.samples.random(4).tolist()
        points = (Point(xy[0], xy[1]), Point(xy[2], xy[3]))
        choice = decide_barrier_defense(state, strip, pdlist, points, rng)
        if any(not strip.contains_point(p) for p in points):
            assert not strip.contains_point(points[choice.pick])


def test_greedy_on_empty_state_takes_the_first_point():
    state = ProcessState(0.1)
    assert decide_greedy_min_merge(state, (Point(0.1, 0.1), Point(0.9, 0.9))).pick == 0


def test_run_online_extremes(rng):
    assert run_online(1, 0.1, RandomStrategy(), rng).largest_size == 1
    assert run_online(1000, 0.0, RandomStrategy(), rng).largest_size == 1
    assert run_online(1000, 2.0, RandomStrategy(), rng).largest_size == 1000


@pytest.mark.slow
def test_dense_online_run_stays_fast():
    n = 50000
    r = radius_from_c('online', 100, n)
    record = run_online(n, r, RandomStrategy(), RngStream(3))
    assert record.largest_fraction > 0.9
    assert record.runtime_ms < 20000
