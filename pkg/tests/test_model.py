import math
import random

import pytest

from antmanet.errors import UnknownNodeError
from antmanet.model import (ClusterAddress, NetworkState, NodeAttributes,
                            distance, link_expiration_time)

from helpers import add_node, make_state


class TestDistance:
    def test_identity(self):
        assert distance((0, 0), (0, 0)) == 0.0

    def test_3_4_5(self):
        assert distance((0, 0), (3, 4)) == 5.0

    def test_random_pairs_match_reference(self):
        rng = random.Random(1)
        for _ in range(100):
            a = (rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3))
            b = (rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3))
            ref = math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)
            assert distance(a, b) == pytest.approx(ref, abs=1e-12)
            assert distance(a, b) == distance(b, a)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            distance((math.nan, 0), (0, 0))
        with pytest.raises(ValueError):
            distance((0, 0), (math.inf, 0))


class TestNeighbors:
    def test_within_range_symmetric(self):
        s = make_state()
        add_node(s, 1, (0, 0), tx_range=(50.0,))
        add_node(s, 2, (10, 0), tx_range=(50.0,))
        assert s.neighbors(1, 0) == {2}
        assert s.neighbors(2, 0) == {1}

    def test_out_of_range(self):
        s = make_state()
        add_node(s, 1, (0, 0), tx_range=(50.0,))
        add_node(s, 2, (60, 0), tx_range=(50.0,))
        assert s.neighbors(1, 0) == frozenset()
        assert s.neighbors(2, 0) == frozenset()

    def test_unknown_node(self):
        s = make_state()
        with pytest.raises(UnknownNodeError):
            s.neighbors(42, 0)

    def test_unsupported_level_empty(self):
        s = make_state()
        add_node(s, 1, (0, 0), level=0)
        add_node(s, 2, (1, 0), level=2)
        assert s.neighbors(1, 1) == frozenset()

    def test_matches_brute_force(self):
        rng = random.Random(7)
        s = make_state()
        for i in range(20):
            add_node(s, i, (rng.uniform(0, 300), rng.uniform(0, 300)),
                     level=rng.choice([0, 1, 2]))
        for level in (0, 1, 2):
            for i in s.nodes:
                expected = set()
                a = s.nodes[i]
                if a.supports(level):
                    for j, b in s.nodes.items():
                        if j == i or not b.supports(level):
                            continue
                        r = min(a.range_at(level), b.range_at(level))
                        if distance(a.position, b.position) <= r:
                            expected.add(j)
                assert s.neighbors(i, level) == expected

    def test_symmetry_and_level_monotonicity(self):
        rng = random.Random(11)
        s = make_state()
        for i in range(25):
            add_node(s, i, (rng.uniform(0, 400), rng.uniform(0, 400)),
                     level=rng.choice([0, 0, 1, 2]))
        l0_only = {i for i, a in s.nodes.items() if a.max_level == 0}
        for level in (0, 1, 2):
            for i in s.nodes:
                for j in s.neighbors(i, level):
                    assert i in s.neighbors(j, level)
                    if level > 0:
                        assert j not in l0_only
        # A level-2 link implies level-0/1 links whenever ranges permit.
        for i in s.nodes:
            for j in s.neighbors(i, 2):
                d = distance(s.nodes[i].position, s.nodes[j].position)
                for lvl in (0, 1):
                    r = min(s.nodes[i].range_at(lvl), s.nodes[j].range_at(lvl))
                    assert (j in s.neighbors(i, lvl)) == (d <= r)


def _bisect_let(a, b, range_m, hi=1e7):
    """Independent oracle: bisection on the future-distance function."""
    def dist_at(t):
        pa = (a.position[0] + t * a.velocity[0], a.position[1] + t * a.velocity[1])
        pb = (b.position[0] + t * b.velocity[0], b.position[1] + t * b.velocity[1])
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    if dist_at(hi) <= range_m:
        return math.inf
    lo = 0.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if dist_at(mid) <= range_m:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class TestLinkExpirationTime:
    def test_zero_relative_motion(self):
        a = NodeAttributes(position=(0, 0), velocity=(3, 4))
        b = NodeAttributes(position=(5, 5), velocity=(3, 4))
        assert link_expiration_time(a, b, 10.0) == math.inf

    def test_linear_closure(self):
        a = NodeAttributes(position=(0, 0), velocity=(0, 0))
        b = NodeAttributes(position=(0, 0), velocity=(1, 0))
        assert link_expiration_time(a, b, 10.0) == pytest.approx(10.0)

    def test_out_of_range_rejected(self):
        a = NodeAttributes(position=(0, 0))
        b = NodeAttributes(position=(100, 0))
        with pytest.raises(ValueError):
            link_expiration_time(a, b, 10.0)

    def test_random_kinematics_match_bisection(self):
        rng = random.Random(3)
        for _ in range(50):
            a = NodeAttributes(position=(rng.uniform(-5, 5), rng.uniform(-5, 5)),
                               velocity=(rng.uniform(-2, 2), rng.uniform(-2, 2)))
            b = NodeAttributes(position=(rng.uniform(-5, 5), rng.uniform(-5, 5)),
                               velocity=(rng.uniform(-2, 2), rng.uniform(-2, 2)))
            r = 20.0
            t = link_expiration_time(a, b, r)
            ref = _bisect_let(a, b, r)
            if math.isinf(ref):
                assert math.isinf(t)
            else:
                assert t == pytest.approx(ref, abs=1e-5)

    def test_forward_simulation_lands_on_boundary(self):
        rng = random.Random(9)
        for _ in range(50):
            a = NodeAttributes(position=(0, 0),
                               velocity=(rng.uniform(-3, 3), rng.uniform(-3, 3)))
            b = NodeAttributes(position=(rng.uniform(-8, 8), rng.uniform(-8, 8)),
                               velocity=(rng.uniform(-3, 3), rng.uniform(-3, 3)))
            r = 15.0
            t = link_expiration_time(a, b, r)
            if math.isinf(t):
                continue
            pa = (a.position[0] + t * a.velocity[0],
                  a.position[1] + t * a.velocity[1])
            pb = (b.position[0] + t * b.velocity[0],
                  b.position[1] + t * b.velocity[1])
            assert distance(pa, pb) == pytest.approx(r, abs=1e-6)


def test_cluster_address_rendering():
    assert str(ClusterAddress(0, 7)) == "C0.7"
    assert str(ClusterAddress(2, 13)) == "C2.13"
