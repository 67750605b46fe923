"""Deterministic discrete-event core.

A single heap-ordered event queue drives elections, beacons, mobility,
pheromone evaporation and traffic.  All randomness comes from one seed,
forked per subsystem by fixed labels so adding draws to one subsystem
never perturbs the others.  Given (config, seed) the trace byte stream is
identical across runs.
"""

import heapq
import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field

from . import clustering
from .errors import NoAdmissibleRouteError, RoutingError
from .maintenance import BeaconState, MaintenanceManager
from .model import NetworkState, NodeAttributes
from .routing import Router


@dataclass
class EnergyCosts:
    tx_packet: float = 0.0
    tx_bit: float = 0.0
    rx_packet: float = 0.0
    rx_bit: float = 0.0
    beacon: float = 0.0


def energy_debit(attrs, action, size_bits, costs):
    """New energy after one radio action; clamps at zero (node death)."""
    if action == "tx":
        cost = costs.tx_packet + costs.tx_bit * size_bits
    elif action == "rx":
        cost = costs.rx_packet + costs.rx_bit * size_bits
    elif action == "beacon":
        cost = costs.beacon
    else:
        raise ValueError(f"unknown action {action}")
    return max(0.0, attrs.energy - cost)


def mobility_update(attrs, waypoint, speed, dt, window=10.0):
    """Advance toward the waypoint at constant speed for dt seconds.

    Returns (new_position, arrived) and refreshes the node's running
    average speed over the configured window.
    """
    px, py = attrs.position
    wx, wy = waypoint
    dist = math.hypot(wx - px, wy - py)
    step = speed * dt
    if dist <= step or dist == 0.0:
        new_pos = (wx, wy)
        arrived = True
    else:
        f = step / dist
        new_pos = (px + (wx - px) * f, py + (wy - py) * f)
        arrived = False
    frac = min(dt / window, 1.0) if window > 0 else 1.0
    attrs.mobility += frac * (speed - attrs.mobility)
    attrs.position = new_pos
    if dist > 0:
        attrs.velocity = ((wx - px) / dist * speed, (wy - py) / dist * speed)
    else:
        attrs.velocity = (0.0, 0.0)
    return new_pos, arrived


class RandomWaypoint:
    """Classic random-waypoint model over a rectangular arena."""

    def __init__(self, arena, speed_min, speed_max, pause, window, rng):
        self.arena = arena
        self.speed_min = speed_min
        self.speed_max = speed_max
        self.pause = pause
        self.window = window
        self.rng = rng
        self.targets = {}  # nid -> (waypoint, speed, pause_until)

    def _draw(self, now):
        wp = (self.rng.uniform(0.0, self.arena[0]),
              self.rng.uniform(0.0, self.arena[1]))
        speed = self.rng.uniform(self.speed_min, self.speed_max)
        return wp, speed, now

    def step(self, nid, attrs, now, dt):
        entry = self.targets.get(nid)
        if entry is None:
            entry = self._draw(now)
            self.targets[nid] = entry
        waypoint, speed, pause_until = entry
        if now < pause_until:
            attrs.velocity = (0.0, 0.0)
            attrs.mobility += (min(dt / self.window, 1.0) if self.window > 0
                               else 1.0) * (0.0 - attrs.mobility)
            return
        _, arrived = mobility_update(attrs, waypoint, speed, dt, self.window)
        if arrived:
            wp, sp, _ = self._draw(now)
            self.targets[nid] = (wp, sp, now + dt + self.pause)


@dataclass
class RunStats:
    packets_sent: int = 0
    packets_delivered: int = 0
    packets_dropped: int = 0
    packets_in_flight: int = 0
    total_delay: float = 0.0
    control_packets: int = 0
    elections: dict = field(default_factory=dict)  # level -> cluster count
    discovery_failures: int = 0
    admission_rejections: int = 0
    deaths: int = 0
    cache_hits: int = 0
    flows: list = field(default_factory=list)

    @property
    def mean_delay(self):
        return self.total_delay / self.packets_delivered \
            if self.packets_delivered else 0.0

    def to_dict(self):
        return {
            "packets_sent": self.packets_sent,
            "packets_delivered": self.packets_delivered,
            "packets_dropped": self.packets_dropped,
            "packets_in_flight": self.packets_in_flight,
            "mean_delay": self.mean_delay,
            "control_packets": self.control_packets,
            "elections": {str(k): v for k, v in sorted(self.elections.items())},
            "discovery_failures": self.discovery_failures,
            "admission_rejections": self.admission_rejections,
            "deaths": self.deaths,
            "cache_hits": self.cache_hits,
            "flows": self.flows,
        }


def format_record(record):
    """Canonical one-line encoding used for golden-trace comparisons."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class Simulator:
    def __init__(self, config, trace=None):
        self.config = config
        self.trace = trace
        seed = config.seed
        self.rng_election = random.Random(f"{seed}:election")
        self.rng_mobility = random.Random(f"{seed}:mobility")
        self.rng_topology = random.Random(f"{seed}:topology")
        self.now = 0.0
        self._seq = 0
        self._queue = []
        self.stats = RunStats()
        self._flow_stats = []
        self.state = self._build_state()
        self.clusters = None
        self.router = None
        self.manager = None
        mob = config.mobility
        self.waypoints = RandomWaypoint(
            (config.arena.width, config.arena.height),
            mob.speed_min, mob.speed_max, mob.pause, mob.window,
            self.rng_mobility) if mob.enabled else None

    # -- construction ----------------------------------------------------

    def _build_state(self):
        cfg = self.config
        state = NetworkState(link_delay=cfg.link.delay,
                             link_bandwidth=cfg.link.bandwidth,
                             link_jitter=cfg.link.jitter, seed=cfg.seed)
        for p in cfg.placements:
            state.add_node(p.id, NodeAttributes(
                position=p.position, velocity=p.velocity, energy=p.energy,
                max_level=p.max_level, tx_range=p.tx_range,
                node_delay=p.node_delay))
        next_id = max((p.id for p in cfg.placements), default=-1) + 1
        for g in cfg.groups:
            for _ in range(g.count):
                pos = (self.rng_topology.uniform(0.0, cfg.arena.width),
                       self.rng_topology.uniform(0.0, cfg.arena.height))
                state.add_node(next_id, NodeAttributes(
                    position=pos, energy=g.energy, max_level=g.max_level,
                    tx_range=g.tx_range, node_delay=g.node_delay))
                next_id += 1
        for lk in cfg.links:
            state.set_link_params(lk["a"], lk["b"], lk["level"],
                                  lk.get("delay"), lk.get("bandwidth"))
        return state

    # -- infrastructure ----------------------------------------------------

    def _emit(self, record):
        if self.trace is not None:
            self.trace(record)

    def schedule(self, t, kind, **payload):
        heapq.heappush(self._queue, (t, self._seq, kind, payload))
        self._seq += 1

    def _apply_energy(self, nid, action, bits=0):
        attrs = self.state.node(nid)
        if not attrs.alive:
            return
        new = energy_debit(attrs, action, bits, self.config.energy_costs)
        if new != attrs.energy:
            attrs.energy = new
            self.state.touch()
        if attrs.energy == 0.0 and attrs.alive:
            attrs.alive = False
            self.state.touch()
            self.stats.deaths += 1
            self.router.purge_node(nid)
            self._emit({"kind": "node_death", "t": self.now, "node": nid})

    # -- handlers -----------------------------------------------------------

    def _initial_clustering(self):
        cfg = self.config
        self.clusters = clustering.select_cluster_heads(
            self.state, 0, cfg.weights, self.rng_election)
        clustering.form_hierarchy(self.state, self.clusters, cfg.weights,
                                  self.rng_election)
        for level in sorted(self.clusters.levels):
            heads = sorted(self.clusters.levels[level])
            self.stats.elections[level] = \
                self.stats.elections.get(level, 0) + len(heads)
            self._emit({"kind": "election", "t": self.now, "level": level,
                        "case": "initial", "heads": heads})

    def _handle_beacon(self, payload):
        self.manager.run_cycle(self.now)

    def _handle_mobility(self, payload):
        dt = payload["dt"]
        for nid in sorted(self.state.nodes):
            attrs = self.state.nodes[nid]
            if attrs.alive:
                self.waypoints.step(nid, attrs, self.now, dt)
        self.state.touch()

    def _handle_evaporate(self, payload):
        self.router.evaporate_all()

    def _handle_packet_send(self, payload):
        flow_idx = payload["flow"]
        flow = self.config.flows[flow_idx]
        fstats = self._flow_stats[flow_idx]
        try:
            path, metrics = self.router.discover_route(
                flow.src, flow.dst, flow.qos, now=self.now, use_cache=True)
        except NoAdmissibleRouteError:
            self.stats.admission_rejections += 1
            fstats["rejected"] += 1
            self._emit({"kind": "admission_rejected", "t": self.now,
                        "flow": flow_idx})
            return
        except RoutingError:
            self.stats.discovery_failures += 1
            fstats["failed"] += 1
            self._emit({"kind": "no_route", "t": self.now, "flow": flow_idx})
            return
        self.stats.packets_sent += 1
        fstats["sent"] += 1
        entry = self.router.caches[flow.src].lookup(flow.dst, self.now, flow.qos)
        levels = entry.levels if entry is not None and list(entry.path) == path \
            else None
        self.schedule(self.now, "packet_at", flow=flow_idx, path=tuple(path),
                      levels=levels, idx=0, sent_at=self.now)

    def _handle_packet_at(self, payload):
        path = payload["path"]
        idx = payload["idx"]
        flow_idx = payload["flow"]
        bits = self.config.packet_size_bits
        if idx == len(path) - 1:
            delay = self.now - payload["sent_at"]
            self.stats.packets_delivered += 1
            self.stats.total_delay += delay
            self._flow_stats[flow_idx]["delivered"] += 1
            self._emit({"kind": "delivered", "t": self.now, "flow": flow_idx,
                        "dst": path[idx], "delay": delay})
            return
        a, b = path[idx], path[idx + 1]
        levels = payload["levels"]
        level = levels[idx] if levels is not None else None
        link = self.state.link(a, b, level) \
            if self.state.node(a).alive and self.state.node(b).alive else None
        if link is None:
            self.stats.packets_dropped += 1
            self._flow_stats[flow_idx]["dropped"] += 1
            self._emit({"kind": "dropped", "t": self.now, "flow": flow_idx,
                        "at": a, "next": b})
            return
        self._apply_energy(a, "tx", bits)
        self._apply_energy(b, "rx", bits)
        arrival = self.now + link.delay + self.state.node(b).node_delay
        self.schedule(arrival, "packet_at", flow=flow_idx, path=path,
                      levels=levels, idx=idx + 1, sent_at=payload["sent_at"])

    # -- run -----------------------------------------------------------------

    def run(self):
        cfg = self.config
        self._emit({"kind": "scenario", "seed": cfg.seed,
                    "duration": cfg.duration,
                    "nodes": len(self.state.nodes), "version": cfg.version})
        self._initial_clustering()
        mgr_stats = {}
        self.manager = MaintenanceManager(
            self.state, self.clusters, None, cfg.weights, self.rng_election,
            beacon=BeaconState(cfg.beacon.interval, cfg.beacon.miss_threshold),
            trace=self._emit, stats=mgr_stats,
            energy_debit=lambda nid, action: self._apply_energy(nid, action))
        self.router = Router(
            self.state, self.clusters, pref=cfg.preference,
            deposit=cfg.deposit, q=cfg.pheromone.q,
            tau_initial=cfg.pheromone.initial,
            cache_capacity=cfg.cache.capacity,
            cache_max_age=cfg.cache.max_age, trace=self._emit)
        self.manager.router = self.router
        self.manager.sync_last_heard(0.0)

        t = cfg.beacon.interval
        while t <= cfg.duration:
            self.schedule(t, "beacon")
            t += cfg.beacon.interval
        t = cfg.pheromone.evaporation_interval
        while t <= cfg.duration:
            self.schedule(t, "evaporate")
            t += cfg.pheromone.evaporation_interval
        if self.waypoints is not None:
            dt = cfg.mobility.update_interval
            t = dt
            while t <= cfg.duration:
                self.schedule(t, "mobility", dt=dt)
                t += dt
        for i, flow in enumerate(cfg.flows):
            self._flow_stats.append({
                "flow": i, "src": flow.src, "dst": flow.dst,
                "sent": 0, "delivered": 0, "dropped": 0,
                "rejected": 0, "failed": 0})
            for k in range(flow.packets):
                st = flow.start + k * flow.interval
                if st <= cfg.duration:
                    self.schedule(st, "packet_send", flow=i)

        handlers = {"beacon": self._handle_beacon,
                    "mobility": self._handle_mobility,
                    "evaporate": self._handle_evaporate,
                    "packet_send": self._handle_packet_send,
                    "packet_at": self._handle_packet_at}
        last_t = 0.0
        while self._queue:
            t, _, kind, payload = heapq.heappop(self._queue)
            if t > cfg.duration:
                break
            assert t >= last_t, "clock moved backwards"
            last_t = t
            self.now = t
            handlers[kind](payload)

        self.stats.packets_in_flight = (self.stats.packets_sent
                                        - self.stats.packets_delivered
                                        - self.stats.packets_dropped)
        self.stats.control_packets = (
            self.router.stats.get("control_packets", 0)
            + mgr_stats.get("control_packets", 0))
        self.stats.cache_hits = self.router.stats.get("cache_hits", 0)
        for level in (0, 1, 2):
            extra = mgr_stats.get(f"elections_l{level}", 0)
            if extra:
                self.stats.elections[level] = \
                    self.stats.elections.get(level, 0) + extra
        self.stats.flows = self._flow_stats
        self._emit({"kind": "summary", "t": cfg.duration,
                    **self.stats.to_dict()})
        return self.stats


def run_scenario(config, trace=None):
    """Convenience wrapper: build a simulator, run it, return RunStats."""
    return Simulator(config, trace=trace).run()
