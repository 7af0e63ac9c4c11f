"""
Choice rules for the online process and the round loop that drives them.

Every strategy sees the d points offered in a round and returns a Choice
naming the index of the point to accept. Randomized tie-breaks draw from the
decision stream of the run's RngStream.
"""
import logging
import math
import time
from dataclasses import dataclass

from core_model import (ParameterError, Point, ProcessState, RunRecord, add_point,
                        sample_rounds)
from barrier import (barrier_crossed, build_barrier, default_list_capacity, default_slack,
                     is_block_bad, is_block_dangerous, resolve_danger_mode, DEFAULT_H_EXACT)

logger = logging.getLogger(__name__)

STRATEGY_NAMES = ('random', 'greedy', 'barrier', 'giant')

ROUND_CHUNK = 1 << 16


@dataclass(frozen=True)
class Choice:
    pick: int
    reason: str


@dataclass(frozen=True)
class TargetSquare:
    """Axis-aligned square A the giant maker plays into"""
    x0: float
    y0: float
    side: float

    @property
    def area(self):
        return self.side * self.side

    def contains(self, p):
        return self.x0 <= p.x <= self.x0 + self.side and self.y0 <= p.y <= self.y0 + self.side


def target_square(eps):
    """Centered square of area eps"""
    if not 0 < eps <= 1:
        raise ParameterError(f"target square area must lie in (0, 1], got {eps}")
    side = math.sqrt(eps)
    corner = (1.0 - side) / 2.0
    return TargetSquare(corner, corner, side)


def giant_effective_lambda(lam, eps):
    """Density parameter of the accepted points inside A, rescaled to the unit square"""
    return 2.0 * (1.0 - eps) * (1.0 - eps / 2.0) * lam


def radius_for_lambda(lam, n):
    if lam < 0 or n < 1:
        raise ParameterError(f"need lam >= 0 and n >= 1, got lam={lam}, n={n}")
    return math.sqrt(lam / n)


class PseudoDangerList:
    """
    Fixed-capacity ordered list L(t) of barrier blocks with per-slot play counts.

    Given a barrier, the slots start filled with its first ``capacity`` blocks
    in sorted order. A block that turns dangerous takes the slot of a listed
    block that is still safe.
    """

    def __init__(self, capacity, barrier=None):
        if capacity < 1:
            raise ParameterError(f"list capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.slots = [None] * capacity
        self.play_counts = [0] * capacity
        self.slot_of = {}
        self.overflowed = False
        if barrier is not None:
            for index, block in enumerate(sorted(barrier.blocks)[:capacity]):
                self.slots[index] = block
                self.slot_of[block] = index
                barrier.states[block].in_list = index

    def __contains__(self, block):
        return block in self.slot_of

    def admit(self, block, states):
        """List a newly dangerous block in place of an empty or safe slot"""
        if block in self.slot_of:
            return True
        for index, current in enumerate(self.slots):
            if current is None or not states[current].dangerous:
                if current is not None:
                    del self.slot_of[current]
                    states[current].in_list = None
                    states[current].k_counter = 0
                self.slots[index] = block
                self.slot_of[block] = index
                states[block].in_list = index
                return True
        self.overflowed = True
        return False

    def max_play_count(self):
        return max(self.play_counts) if self.play_counts else 0


def _random_among(indices, rng, reason):
    return Choice(indices[rng.pick(len(indices))], reason)


def decide_random(points, rng):
    return Choice(rng.pick(len(points)), 'random')


def decide_barrier_defense(state, barrier, pdlist, points, rng):
    """Rules S1 to S4 of the barrier defense for one round"""
    blocks = [barrier.block_of_point(p) for p in points]
    outside = [k for k, block in enumerate(blocks) if block not in barrier.blocks]
    if outside:
        return _random_among(outside, rng, 'outside-barrier')

    safe = [k for k, block in enumerate(blocks) if block not in pdlist]
    if safe:
        return _random_among(safe, rng, 'pseudo-safe')

    slots = [pdlist.slot_of[block] for block in blocks]
    fewest = min(pdlist.play_counts[slot] for slot in slots)
    candidates = [k for k, slot in enumerate(slots) if pdlist.play_counts[slot] == fewest]
    choice = _random_among(candidates, rng, 'least-played-list')
    pdlist.play_counts[slots[choice.pick]] += 1
    barrier.states[blocks[choice.pick]].k_counter += 1
    return Choice(choice.pick, 'least-played-list')


def decide_giant_maker(state, target, points, rng):
    """Play into the target square whenever an offered point lies in it"""
    inside = [k for k, p in enumerate(points) if target.contains(p)]
    if len(inside) == 1:
        return Choice(inside[0], 'in-target-square')
    if inside:
        return _random_among(inside, rng, 'in-target-square')
    return decide_random(points, rng)


def decide_greedy_min_merge(state, points, radius=None):
    """One-step lookahead: the point leaving the smaller largest component"""
    if radius is not None and radius != state.radius:
        raise ParameterError("greedy lookahead must use the radius of the state")
    best_key = None
    best = 0
    for k, p in enumerate(points):
        largest, own = state.probe(p)
        key = (largest, own)
        if best_key is None or key < best_key:
            best_key = key
            best = k
    return Choice(best, 'greedy')


class RandomStrategy:
    name = 'random'
    barrier = None

    def decide(self, state, points, rng):
        return decide_random(points, rng)

    def after_round(self, state, stats):
        pass

    def report(self):
        return {}


class GreedyStrategy(RandomStrategy):
    name = 'greedy'

    def decide(self, state, points, rng):
        return decide_greedy_min_merge(state, points)


class GiantMaker(RandomStrategy):
    name = 'giant'

    def __init__(self, eps):
        self.target = target_square(eps)
        self.in_target = 0
        self.rounds = 0

    def decide(self, state, points, rng):
        choice = decide_giant_maker(state, self.target, points, rng)
        self.rounds += 1
        if self.target.contains(points[choice.pick]):
            self.in_target += 1
        return choice

    def report(self):
        return {
            'target_area': self.target.area,
            'in_target_rounds': self.in_target,
            'in_target_fraction': self.in_target / self.rounds if self.rounds else 0.0,
        }


class BarrierDefense:
    """Keeps the barrier from being crossed by spreading forced plays over dangerous blocks"""
    name = 'barrier'

    def __init__(self, barrier, slack, list_capacity, danger_mode='auto', h_exact=DEFAULT_H_EXACT):
        self.barrier = barrier
        self.slack = slack
        self.danger_mode = resolve_danger_mode(barrier.h, h_exact, danger_mode)
        self.h_exact = h_exact
        self.pdlist = PseudoDangerList(list_capacity, barrier)
        self.failed = False
        self.barrier_rounds = 0
        self.psd_rounds = 0
        if self.danger_mode == 'surrogate':
            logger.warning("Dangerous blocks use the occupancy-density surrogate (h=%d > h_exact=%d)",
                           barrier.h, h_exact)

    def decide(self, state, points, rng):
        choice = decide_barrier_defense(state, self.barrier, self.pdlist, points, rng)
        if choice.reason != 'outside-barrier':
            self.barrier_rounds += 1
        if choice.reason == 'least-played-list':
            self.psd_rounds += 1
        return choice

    def after_round(self, state, stats):
        if not stats.new_box:
            return
        barrier = self.barrier
        block = barrier.block_of_box(*stats.box)
        if block not in barrier.blocks:
            return
        barrier.states[block].occupied_boxes += 1
        for other in barrier.neighbourhood(block):
            block_state = barrier.states[other]
            if block_state.dangerous:
                continue
            if is_block_dangerous(barrier, state.occupancy, other, slack=self.slack,
                                  h_exact=self.h_exact, mode=self.danger_mode):
                block_state.dangerous = True
                if not self.pdlist.admit(other, barrier.states) and not self.failed:
                    self.failed = True
                    logger.warning("Pseudo-dangerous list overflowed at round %d (capacity %d)",
                                   state.round, self.pdlist.capacity)

    def dangerous_blocks(self):
        return sorted(block for block, s in self.barrier.states.items() if s.dangerous)

    def report(self, occupancy=None):
        dangerous = self.dangerous_blocks()
        details = {
            'danger_mode': self.danger_mode,
            'slack': self.slack,
            'list_capacity': self.pdlist.capacity,
            'dangerous_blocks': len(dangerous),
            'max_slot_count': self.pdlist.max_play_count(),
            'overflowed': self.pdlist.overflowed,
            'barrier_rounds': self.barrier_rounds,
            'psd_rounds': self.psd_rounds,
        }
        if occupancy is not None and self.danger_mode == 'exact':
            # Bad blocks are dangerous, so only those need the search.
            details['bad_blocks'] = sum(1 for block in dangerous
                                        if is_block_bad(self.barrier, occupancy, block))
        return details


def make_strategy(name, n, r, K=1.0, h=4, slack=None, list_capacity=None,
                  danger_mode='auto', h_exact=DEFAULT_H_EXACT, target_eps=0.1):
    if name == 'random':
        return RandomStrategy()
    if name == 'greedy':
        return GreedyStrategy()
    if name == 'giant':
        return GiantMaker(target_eps)
    if name == 'barrier':
        barrier = build_barrier(K, h, r)
        if slack is None:
            slack = default_slack(n, h)
        if list_capacity is None:
            list_capacity = default_list_capacity(h, len(barrier.blocks))
        return BarrierDefense(barrier, slack, list_capacity, danger_mode, h_exact)
    raise ParameterError(f"unknown strategy '{name}', expected one of {', '.join(STRATEGY_NAMES)}")


def run_online(n, r, strategy, rng, choices=2, sample_every=None, c=None, seed=None):
    """Play n rounds of the online process and summarize the outcome"""
    if n < 1:
        raise ParameterError(f"need at least one round, got n={n}")
    if r < 0:
        raise ParameterError(f"radius must be non-negative, got {r}")
    if sample_every is None:
        sample_every = max(1, n // 100)

    started = time.perf_counter()
    barrier = getattr(strategy, 'barrier', None)
    state = ProcessState(r, box_side=barrier.r if barrier is not None else None)
    series = []
    played = 0
    while played < n:
        chunk = sample_rounds(rng, min(ROUND_CHUNK, n - played), choices).tolist()
        for offer in chunk:
            points = tuple(Point(x, y) for x, y in offer)
            choice = strategy.decide(state, points, rng)
            stats = add_point(state, points[choice.pick])
            strategy.after_round(state, stats)
            played += 1
            if played % sample_every == 0 or played == n:
                series.append((played, state.largest))

    if isinstance(strategy, BarrierDefense):
        details = strategy.report(state.occupancy)
        crossed = barrier_crossed(state, barrier)
        failed = strategy.failed
    else:
        details = strategy.report()
        crossed = None
        failed = False
    return RunRecord(
        mode='online',
        n=n,
        c=c,
        r=r,
        strategy=strategy.name,
        seed=rng.seed if seed is None else seed,
        largest_size=state.largest,
        largest_fraction=state.largest / n,
        barrier_crossed=crossed,
        strategy_failed=failed,
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        series=series,
        details=details,
    )
