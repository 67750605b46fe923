"""Heterogeneous node/link world model.

Nodes live on a 2-D plane and carry up to three radio interfaces (levels
0..2).  A node with max_level L supports every level <= L; transmission
range grows strictly with the level.  Links are never stored: they are
recomputed lazily from current positions, so the link set is always
consistent with the latest mobility update.
"""

import math
import random
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import ConfigError, UnknownNodeError


class Level(IntEnum):
    L0 = 0
    L1 = 1
    L2 = 2


def distance(a, b):
    """Euclidean distance between two 2-D points."""
    ax, ay = a
    bx, by = b
    if not all(math.isfinite(v) for v in (ax, ay, bx, by)):
        raise ValueError("non-finite coordinate")
    return math.hypot(ax - bx, ay - by)


@dataclass
class NodeAttributes:
    position: tuple
    velocity: tuple = (0.0, 0.0)
    energy: float = 100.0
    mobility: float = 0.0  # running-average speed, m/s
    max_level: int = 0
    tx_range: tuple = (100.0,)  # one entry per supported level, increasing
    node_delay: float = 0.001  # processing + queuing delay, seconds
    alive: bool = True

    def __post_init__(self):
        self.position = tuple(float(v) for v in self.position)
        self.velocity = tuple(float(v) for v in self.velocity)
        self.tx_range = tuple(float(v) for v in self.tx_range)
        if self.energy < 0:
            raise ConfigError("energy must be >= 0")
        if len(self.tx_range) != self.max_level + 1:
            raise ConfigError(
                f"tx_range needs {self.max_level + 1} entries, got {len(self.tx_range)}"
            )
        for lo, hi in zip(self.tx_range, self.tx_range[1:]):
            if hi <= lo:
                raise ConfigError("tx_range must increase strictly with level")

    def supports(self, level):
        return level <= self.max_level

    def range_at(self, level):
        return self.tx_range[level]


@dataclass
class LinkAttributes:
    delay: float  # transmission + propagation, seconds
    bandwidth: float  # available, bits/second
    let: float  # link expiration time, seconds


def link_expiration_time(a, b, range_m):
    """Time until two nodes moving at constant velocity drift out of range.

    Solves |dp + t*dv| = range_m for the positive root; returns +inf when
    the relative velocity is zero.  The pair must currently be in range.
    """
    dpx = a.position[0] - b.position[0]
    dpy = a.position[1] - b.position[1]
    dvx = a.velocity[0] - b.velocity[0]
    dvy = a.velocity[1] - b.velocity[1]
    c = dpx * dpx + dpy * dpy - range_m * range_m
    if c > 1e-9:
        raise ValueError("nodes are not currently within range")
    a2 = dvx * dvx + dvy * dvy
    if a2 == 0.0:
        return math.inf
    bq = 2.0 * (dpx * dvx + dpy * dvy)
    disc = bq * bq - 4.0 * a2 * c
    t = (-bq + math.sqrt(disc)) / (2.0 * a2)
    return max(t, 0.0)


# Per-level channel defaults; scenarios override these.
DEFAULT_LINK_DELAY = {0: 0.002, 1: 0.0015, 2: 0.001}
DEFAULT_LINK_BANDWIDTH = {0: 2e6, 1: 5e6, 2: 10e6}


class NetworkState:
    """Mutable world snapshot: nodes plus derived, level-scoped link sets.

    Neighbor sets are memoised per topology version; any position/energy
    mutation must go through ``touch()`` to invalidate the cache.
    """

    def __init__(self, link_delay=None, link_bandwidth=None, link_jitter=0.0, seed=0):
        self.nodes = {}
        self.link_delay = dict(link_delay or DEFAULT_LINK_DELAY)
        self.link_bandwidth = dict(link_bandwidth or DEFAULT_LINK_BANDWIDTH)
        self.link_jitter = float(link_jitter)
        self.seed = seed
        self._overrides = {}  # (lo, hi, level) -> (delay, bandwidth)
        self._jitter_cache = {}
        self._neighbor_cache = {}
        self._version = 0

    def add_node(self, nid, attrs):
        if nid in self.nodes:
            raise ConfigError(f"duplicate node id {nid}")
        self.nodes[int(nid)] = attrs
        self.touch()

    def node(self, nid):
        try:
            return self.nodes[nid]
        except KeyError:
            raise UnknownNodeError(f"unknown node id {nid}") from None

    def touch(self):
        self._version += 1
        self._neighbor_cache.clear()

    def alive_ids(self):
        return [n for n, a in self.nodes.items() if a.alive]

    def set_link_params(self, a, b, level, delay=None, bandwidth=None):
        """Pin explicit delay/bandwidth for one link (crafted scenarios)."""
        lo, hi = (a, b) if a < b else (b, a)
        self._overrides[(lo, hi, level)] = (delay, bandwidth)

    def neighbors(self, nid, level):
        """All peers linked to `nid` at `level`; empty if level unsupported."""
        attrs = self.node(nid)
        if not attrs.supports(level) or not attrs.alive:
            return frozenset()
        key = (nid, level)
        cached = self._neighbor_cache.get(key)
        if cached is not None:
            return cached
        out = set()
        for mid, m in self.nodes.items():
            if mid == nid or not m.alive or not m.supports(level):
                continue
            rng = min(attrs.range_at(level), m.range_at(level))
            if distance(attrs.position, m.position) <= rng:
                out.add(mid)
        result = frozenset(out)
        self._neighbor_cache[key] = result
        return result

    def linked(self, a, b, level):
        na, nb = self.node(a), self.node(b)
        if not (na.alive and nb.alive and na.supports(level) and nb.supports(level)):
            return False
        rng = min(na.range_at(level), nb.range_at(level))
        return distance(na.position, nb.position) <= rng

    def link_level(self, a, b):
        """Lowest level at which a and b are currently linked, else None."""
        for level in (0, 1, 2):
            if self.linked(a, b, level):
                return level
        return None

    def _jitter(self, a, b, level, tag):
        key = (min(a, b), max(a, b), level, tag)
        u = self._jitter_cache.get(key)
        if u is None:
            u = random.Random(f"{self.seed}:{key}").uniform(-1.0, 1.0)
            self._jitter_cache[key] = u
        return 1.0 + self.link_jitter * u

    def link(self, a, b, level=None):
        """LinkAttributes for the (a, b) link, or None if no such link."""
        if level is None:
            level = self.link_level(a, b)
            if level is None:
                return None
        elif not self.linked(a, b, level):
            return None
        lo, hi = (a, b) if a < b else (b, a)
        delay, bandwidth = self._overrides.get((lo, hi, level), (None, None))
        if delay is None:
            delay = self.link_delay[level] * self._jitter(a, b, level, "d")
        if bandwidth is None:
            bandwidth = self.link_bandwidth[level] * self._jitter(a, b, level, "b")
        na, nb = self.node(a), self.node(b)
        rng = min(na.range_at(level), nb.range_at(level))
        return LinkAttributes(delay=delay, bandwidth=bandwidth,
                              let=link_expiration_time(na, nb, rng))


@dataclass(frozen=True)
class ClusterAddress:
    level: int
    head: int

    def __str__(self):
        return f"C{self.level}.{self.head}"


def interface_label(nid, level):
    """Interface naming scheme: node id followed by the level it operates at."""
    return f"{nid}.{level}"
