import math

import numpy as np
import pytest

from barrier import (KING_STEPS, GridTooCoarseError, a_of_K, barrier_crossed, barrier_layout,
                     build_barrier, count_bad_blocks, default_list_capacity, default_slack,
                     is_block_bad, is_block_dangerous, resolve_danger_mode)
from core_model import ParameterError, Point, ProcessState, add_point


def _exhaustive_path(barrier, occupancy, block, h, slack):
    """Enumerate every simple king path of h allowed boxes touching the block"""
    allowed = barrier.allowed_boxes(block)
    home = set(barrier.boxes(block))

    def walk(path, empties):
        if len(path) == h:
            return any(box in home for box in path)
        i, j = path[-1]
        for di, dj in KING_STEPS:
            nxt = (i + di, j + dj)
            if nxt not in allowed or nxt in path:
                continue
            e = empties + (not occupancy[nxt])
            if e <= slack and walk(path + [nxt], e):
                return True
        return False

    return any(walk([box], int(not occupancy[box])) for box in allowed
               if int(not occupancy[box]) <= slack)


def test_a_of_K():
    assert a_of_K(1.5) == pytest.approx(0.5)
    assert a_of_K(3) == pytest.approx(0.25)
    assert a_of_K(1) == pytest.approx(0.75)
    assert a_of_K(0.5) == pytest.approx(1 - 1 / 16)
    with pytest.raises(ParameterError):
        a_of_K(0)


def test_vertical_strip_layout():
    blocks, layout = barrier_layout(2, 9)
    assert layout == 'vertical-strips'
    assert {i for i, _ in blocks} == {3, 6}
    assert len(blocks) == 18


def test_single_strip_barrier_location():
    barrier = build_barrier(1.5, 4, 1 / 16)
    assert barrier.box_count == 16
    assert barrier.block_grid_side == 4
    assert barrier.blocks == frozenset((2, j) for j in range(4))
    assert barrier.box_bounds((2, 1)) == (8, 12, 4, 8)
    assert barrier.contains_point(Point(0.5, 0.3))
    assert barrier.contains_point(Point(0.74, 0.9))
    assert not barrier.contains_point(Point(0.75, 0.9))
    assert not barrier.contains_point(Point(0.49, 0.1))


def test_corner_barrier_pieces():
    barrier = build_barrier(1, 1, 0.1)
    assert barrier.layout == 'corner-square'
    assert len(barrier.blocks) == 11
    assert sorted(barrier.pieces()) == [25, 64]


def test_tiny_budget_leaves_one_piece():
    barrier = build_barrier(0.0001, 1, 0.1)
    assert barrier.blocks == frozenset()
    assert barrier.pieces() == [100]


def test_too_coarse_grid_is_rejected():
    with pytest.raises(GridTooCoarseError):
        build_barrier(1, 4, 0.2)
    with pytest.raises(ParameterError):
        build_barrier(1, 0, 0.1)
    with pytest.raises(ParameterError):
        build_barrier(1, 20, 0.1)


@pytest.mark.parametrize('K', [0.5, 1, 1.5, 2, 3, 5, 7.9])
@pytest.mark.parametrize('z', [9, 20, 50])
def test_largest_piece_respects_budget(K, z):
    barrier = build_barrier(K, 1, 1 / z)
    assert barrier.block_grid_side == z
    assert barrier.largest_piece_blocks() <= (a_of_K(K) + 2 / z) * z * z


def test_default_slack_and_capacity():
    assert default_slack(2 ** 16, 20) == 8
    assert default_slack(2 ** 16, 5) == 4
    assert default_slack(3, 10) == 1
    assert default_list_capacity(4, 10) == 4
    assert default_list_capacity(1, 100) == 50


def test_resolve_danger_mode():
    assert resolve_danger_mode(4) == 'exact'
    assert resolve_danger_mode(13) == 'surrogate'
    assert resolve_danger_mode(13, mode='exact') == 'exact'
    with pytest.raises(ParameterError):
        resolve_danger_mode(4, mode='guess')


def test_dangerous_matches_exhaustive_paths():
    barrier = build_barrier(1.5, 3, 1 / 18)
    assert barrier.blocks == frozenset((3, j) for j in range(6))
    generator = np.random.default_rng(5)
    for _ in range(30):
        occupancy = generator.random((18, 18)) < 0.5
        for block in ((3, 0), (3, 2), (3, 5)):
            previous = False
            for slack in range(4):
                got = is_block_dangerous(barrier, occupancy, block, slack=slack, mode='exact')
                assert got == _exhaustive_path(barrier, occupancy, block, 3, slack)
                assert got or not previous
                previous = got


def test_bad_blocks_are_dangerous():
    barrier = build_barrier(1.5, 3, 1 / 18)
    generator = np.random.default_rng(8)
    for _ in range(30):
        occupancy = generator.random((18, 18)) < 0.4
        for block in sorted(barrier.blocks):
            if is_block_bad(barrier, occupancy, block):
                assert is_block_dangerous(barrier, occupancy, block, slack=0)


def test_full_slack_is_always_dangerous():
    barrier = build_barrier(1.5, 3, 1 / 18)
    empty = np.zeros((18, 18), dtype=bool)
    assert is_block_dangerous(barrier, empty, (3, 2), slack=3)
    assert not is_block_dangerous(barrier, empty, (3, 2), slack=2)
    assert count_bad_blocks(barrier, empty) == 0


def test_vertical_occupied_run_makes_block_bad():
    barrier = build_barrier(1.5, 3, 1 / 18)
    occupancy = np.zeros((18, 18), dtype=bool)
    occupancy[10, 5:8] = True
    assert is_block_bad(barrier, occupancy, (3, 2))
    assert is_block_bad(barrier, occupancy, (3, 1))
    assert not is_block_bad(barrier, occupancy, (3, 4))


def test_dangerous_rejects_bad_arguments():
    barrier = build_barrier(1.5, 3, 1 / 18)
    occupancy = np.zeros((18, 18), dtype=bool)
    with pytest.raises(ParameterError):
        is_block_dangerous(barrier, occupancy, (3, 2), slack=4)
    with pytest.raises(ParameterError):
        is_block_dangerous(barrier, occupancy, (0, 0))


def test_surrogate_counts_occupied_density():
    barrier = build_barrier(1.5, 3, 1 / 18)
    occupancy = np.zeros((18, 18), dtype=bool)
    assert not is_block_dangerous(barrier, occupancy, (3, 2), slack=1, mode='surrogate')
    occupancy[9:12, :] = True
    assert is_block_dangerous(barrier, occupancy, (3, 2), slack=1, mode='surrogate')


def test_barrier_crossed_by_a_bridge():
    barrier = build_barrier(1.5, 4, 1 / 16)
    state = ProcessState(1 / 16)
    add_point(state, Point(0.2, 0.3))
    add_point(state, Point(0.9, 0.3))
    assert not barrier_crossed(state, barrier)
    step = 1 / 16
    for k in range(4, 15):
        add_point(state, Point(k * step + step / 2, 0.3))
    assert barrier_crossed(state, barrier)


def test_single_piece_cannot_be_crossed():
    barrier = build_barrier(0.0001, 1, 0.1)
    state = ProcessState(0.1)
    for k in range(10):
        add_point(state, Point(k / 10 + 0.05, 0.5))
    assert not barrier_crossed(state, barrier)
    assert math.isclose(barrier.r, 0.1)


def test_a_of_K_examples():
    assert a_of_K(2.5) == pytest.approx(1 / 3)
    assert a_of_K(100) == pytest.approx(1 / 101)
    values = [a_of_K(K) for K in (0.1, 0.5, 1, 1.5, 2, 5, 100)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_fully_occupied_block_is_bad():
    barrier = build_barrier(1.5, 3, 1 / 18)
    occupancy = np.zeros((18, 18), dtype=bool)
    assert not is_block_bad(barrier, occupancy, (3, 2))
    occupancy[9:12, 6:9] = True
    assert is_block_bad(barrier, occupancy, (3, 2))


def test_dangerous_stays_dangerous_as_boxes_fill():
    barrier = build_barrier(1.5, 3, 1 / 18)
    generator = np.random.default_rng(31)
    blocks = sorted(barrier.blocks)
    for _ in range(3):
        occupancy = np.zeros((18, 18), dtype=bool)
        seen = {(block, slack): False for block in blocks for slack in (0, 1)}
        for flat in generator.permutation(18 * 18).tolist():
            occupancy[divmod(flat, 18)] = True
            for block, slack in seen:
                now = is_block_dangerous(barrier, occupancy, block, slack=slack, mode='exact')
                assert now or not seen[(block, slack)]
                seen[(block, slack)] = now
        assert all(seen.values())
