"""Route-level QoS metric aggregation and pheromone deposit.

A route is an ordered node list.  Delay is additive over links and nodes;
bandwidth, energy and link expiration time are bottleneck (min) metrics;
hop count is the number of nodes on the path.
"""

import math
from dataclasses import dataclass

from .errors import BrokenPathError, DegenerateRouteError


@dataclass
class PathMetrics:
    delay: float  # D(R), seconds
    bandwidth: float  # B(R), bits/second
    energy: float  # E(R), joules
    let: float  # T(R), seconds
    hop_count: int  # HC(R), number of nodes on the path

    @property
    def hop_visibility(self):
        """1 / HC(R): shorter routes look more attractive."""
        return 1.0 / self.hop_count


@dataclass
class DepositParams:
    lambda_b: float = 1.0
    lambda_e: float = 1.0
    lambda_t: float = 1.0
    lambda_d: float = 1.0
    lambda_hc: float = 1.0
    # Reference scales turn raw SI values into dimensionless ratios before
    # exponentiation; defaults leave values unchanged.
    ref_bandwidth: float = 1.0
    ref_energy: float = 1.0
    ref_let: float = 1.0
    ref_delay: float = 1.0
    # Static pairs predict an infinite expiry; cap keeps arithmetic finite.
    let_cap: float = 1e6


def _path_links(route, state, levels=None):
    links = []
    for idx, (a, b) in enumerate(zip(route, route[1:])):
        level = levels[idx] if levels is not None else None
        link = state.link(a, b, level)
        if link is None:
            raise BrokenPathError(f"no link between {a} and {b}")
        links.append(link)
    return links


def path_delay(route, state, levels=None):
    if not route:
        raise BrokenPathError("empty route")
    links = _path_links(route, state, levels)
    return sum(l.delay for l in links) + sum(state.node(n).node_delay for n in route)


def path_bandwidth(route, state, levels=None):
    links = _path_links(route, state, levels)
    if not links:
        raise BrokenPathError("bandwidth undefined for a zero-hop route")
    return min(l.bandwidth for l in links)


def path_let(route, state, levels=None):
    links = _path_links(route, state, levels)
    if not links:
        raise BrokenPathError("link expiration undefined for a zero-hop route")
    return min(l.let for l in links)


def path_energy(route, state):
    if not route:
        raise BrokenPathError("empty route")
    return min(state.node(n).energy for n in route)


def hop_count(route):
    if not route:
        raise BrokenPathError("empty route")
    return len(route)


def path_metrics(route, state, levels=None):
    """All five aggregates in one pass; single-node routes have no links."""
    if not route:
        raise BrokenPathError("empty route")
    if len(route) == 1:
        return PathMetrics(delay=state.node(route[0]).node_delay,
                           bandwidth=math.inf, energy=state.node(route[0]).energy,
                           let=math.inf, hop_count=1)
    return PathMetrics(delay=path_delay(route, state, levels),
                       bandwidth=path_bandwidth(route, state, levels),
                       energy=path_energy(route, state),
                       let=path_let(route, state, levels),
                       hop_count=hop_count(route))


def concatenate(m1, m2, shared_node_delay):
    """Metrics of R1 || R2 where the last node of R1 is the first of R2."""
    return PathMetrics(delay=m1.delay + m2.delay - shared_node_delay,
                       bandwidth=min(m1.bandwidth, m2.bandwidth),
                       energy=min(m1.energy, m2.energy),
                       let=min(m1.let, m2.let),
                       hop_count=m1.hop_count + m2.hop_count - 1)


def pheromone_deposit(m, p=None):
    """Deposit quantity for a completed route.

    (B^lb + E^le + T^lt) / (D^ld + HC^lhc), each value first normalized by
    its reference scale.
    """
    p = p or DepositParams()
    b = m.bandwidth / p.ref_bandwidth
    e = m.energy / p.ref_energy
    t = min(m.let, p.let_cap) / p.ref_let
    d = m.delay / p.ref_delay
    hc = float(m.hop_count)
    if min(b, e, t, d, hc) < 0:
        raise DegenerateRouteError("negative metric value")
    den = d ** p.lambda_d + hc ** p.lambda_hc
    if den == 0.0:
        raise DegenerateRouteError("degenerate route: zero delay and hop count")
    num = b ** p.lambda_b + e ** p.lambda_e + t ** p.lambda_t
    return num / den
