import itertools
import random

import networkx as nx
import numpy as np
import pytest

from aux_processes import sample_gnm
from core_model import ParameterError, Point, ProcessState, RngStream, add_point
from offline import (MAX_BLOCK_LOAD, PairSet, brute_force_offline, build_aux_block_graph,
                     orient_indegree_one, sample_pair_set, solve_offline_barrier,
                     solve_offline_random)
from barrier import build_barrier


def _largest(points, r):
    state = ProcessState(r)
    for x, y in np.asarray(points).tolist():
        add_point(state, Point(x, y))
    return state.largest


def _check_orientation(edges, vertices):
    orientation = orient_indegree_one(edges, vertices)
    graph = nx.MultiGraph()
    graph.add_nodes_from(vertices)
    graph.add_edges_from(edges)
    expected_bad = []
    for nodes in nx.connected_components(graph):
        if graph.subgraph(nodes).number_of_edges() > len(nodes):
            expected_bad.append(sorted(nodes))
    assert orientation.success == (not expected_bad)
    assert sorted(orientation.violating) == sorted(expected_bad)

    bad_vertices = {v for comp in expected_bad for v in comp}
    indegree = {}
    for eid, (u, v) in enumerate(edges):
        if u in bad_vertices:
            continue
        head = orientation.heads[eid]
        assert head in (u, v)
        indegree[head] = indegree.get(head, 0) + 1
    assert all(count <= 1 for count in indegree.values())


@pytest.mark.parametrize('edges,success', [
    ([(0, 1), (1, 2), (2, 0)], True),
    ([(0, 1), (1, 2), (2, 0), (0, 2)], False),
    ([(0, 0)], True),
    ([(0, 0), (0, 0)], False),
    ([(0, 1), (0, 1)], True),
    ([(0, 1), (0, 1), (0, 1)], False),
    ([(0, 1), (1, 2), (2, 3), (3, 1), (0, 4)], True),
    ([], True),
    ([(0, 1), (1, 2), (2, 0), (1, 3), (2, 3)], False),
])
def test_orientation_small_cases(edges, success):
    vertices = sorted({v for edge in edges for v in edge} | {0})
    assert orient_indegree_one(edges, vertices).success == success
    _check_orientation(edges, vertices)


def test_orientation_on_random_multigraphs():
    generator = random.Random(17)
    for _ in range(300):
        n = generator.randint(1, 6)
        m = generator.randint(0, 7)
        edges = [(generator.randrange(n), generator.randrange(n)) for _ in range(m)]
        _check_orientation(edges, list(range(n)))


@pytest.mark.slow
def test_orientation_exhaustive_on_five_vertices():
    pairs = [(u, v) for u in range(5) for v in range(u, 5)]
    for m in range(0, 6):
        for edges in itertools.combinations_with_replacement(pairs, m):
            _check_orientation(list(edges), list(range(5)))


@pytest.mark.slow
def test_orientation_exhaustive_on_simple_graphs_with_six_vertices():
    pairs = list(itertools.combinations(range(6), 2))
    for mask in range(1 << len(pairs)):
        edges = [pair for bit, pair in enumerate(pairs) if mask >> bit & 1]
        _check_orientation(edges, list(range(6)))


@pytest.mark.slow
def test_random_graphs_are_orientable_only_below_the_threshold():
    n = 10 ** 4
    sparse = sum(orient_indegree_one(sample_gnm(n, 4500, RngStream(trial))).success
                 for trial in range(100))
    dense = sum(orient_indegree_one(sample_gnm(n, 6000, RngStream(1000 + trial))).success
                for trial in range(100))
    assert sparse >= 90
    assert dense <= 10


def test_pair_set_selection(rng):
    pairs = sample_pair_set(5, rng)
    assert len(pairs) == 5 and pairs.choices == 2
    chosen = pairs.selected([0, 1, 1, 0, 1])
    assert chosen.shape == (5, 2)
    assert tuple(chosen[1]) == (pairs.pairs[1][1].x, pairs.pairs[1][1].y)
    again = PairSet.from_pairs(pairs.pairs)
    assert np.array_equal(again.points, pairs.points)


def test_cross_round_point_goes_to_the_edge_head(rng):
    pairs = PairSet.from_pairs([(Point(0.7, 0.1), Point(0.7, 0.7))])
    barrier = build_barrier(1.5, 1, 0.3)
    graph = build_aux_block_graph(pairs, barrier)
    assert graph.edges == [((2, 0), (2, 2))]
    selection, report = solve_offline_barrier(pairs, 1.5, 0.3, rng, h=1)
    assert selection == [1]
    assert report.cross_rounds == 1
    assert report.barrier_rounds == 1
    assert report.orientable
    assert report.max_points_per_block == 1


def test_outside_point_is_taken_offline(rng):
    pairs = PairSet.from_pairs([(Point(0.7, 0.1), Point(0.1, 0.1)),
                                (Point(0.1, 0.9), Point(0.7, 0.5))])
    selection, report = solve_offline_barrier(pairs, 1.5, 0.3, rng, h=1)
    assert selection == [1, 0]
    assert report.barrier_rounds == 0
    assert report.max_points_per_block == 0


def test_doubly_hit_rounds_are_counted(rng):
    pairs = PairSet.from_pairs([(Point(0.7, 0.1), Point(0.8, 0.2))] * 3)
    barrier = build_barrier(1.5, 1, 0.3)
    graph = build_aux_block_graph(pairs, barrier)
    assert graph.edges == []
    assert graph.doubly_hit == {(2, 0): 3}
    _, report = solve_offline_barrier(pairs, 1.5, 0.3, rng, h=1)
    assert report.doubly_hit_max == 3
    assert report.max_points_per_block == 3
    assert report.max_load_ok == (3 <= MAX_BLOCK_LOAD)


def test_brute_force_matches_exhaustive_search():
    for seed in range(10):
        pairs = sample_pair_set(6, RngStream(seed))
        picks, best = brute_force_offline(pairs, 0.3)
        expected = min(_largest(pairs.selected(selection), 0.3)
                       for selection in itertools.product(range(2), repeat=6))
        assert best == expected
        assert _largest(pairs.selected(picks), 0.3) == best


def test_brute_force_lower_bounds_heuristics():
    for seed in range(50):
        rng = RngStream(seed)
        pairs = sample_pair_set(10, rng)
        _, best = brute_force_offline(pairs, 0.3)
        _, report = solve_offline_barrier(pairs, 1, 0.3, rng, h=1)
        _, random_largest = solve_offline_random(pairs, 0.3, rng)
        assert best <= report.largest
        assert best <= random_largest
        assert 1 <= best <= 10


def test_brute_force_limits():
    with pytest.raises(ParameterError):
        brute_force_offline(sample_pair_set(23, RngStream(0)), 0.1)
    assert brute_force_offline(sample_pair_set(0, RngStream(0)), 0.1) == ([], 0)


def test_offline_barrier_needs_pairs(rng):
    with pytest.raises(ParameterError):
        solve_offline_barrier(sample_pair_set(4, rng, d=3), 1, 0.3, rng, h=1)


def test_single_edge_points_at_its_larger_end():
    orientation = orient_indegree_one([(0, 1)])
    assert orientation.success
    assert orientation.heads == {0: 1}


def test_brute_force_small_instances():
    single = sample_pair_set(1, RngStream(0))
    assert brute_force_offline(single, 0.1)[1] == 1
    close = PairSet.from_pairs([(Point(0.50, 0.50), Point(0.51, 0.50)),
                                (Point(0.50, 0.51), Point(0.51, 0.51))])
    assert brute_force_offline(close, 0.1)[1] == 2


@pytest.mark.slow
def test_offline_barrier_is_usually_orientable():
    n = 10 ** 4
    r = (0.5 / n) ** (1 / 3)
    orientable = 0
    for seed in range(20):
        rng = RngStream(seed)
        _, report = solve_offline_barrier(sample_pair_set(n, rng), 0.5, r, rng, h=2)
        orientable += report.orientable
    assert orientable >= 16
