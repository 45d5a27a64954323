"""Deterministic discrete-event simulation of a DTN running NAME routing.

Connectivity is a unit disk of ``radio_range_km``, optionally masked per node
pair by explicit contact windows.  Every transmission takes ``latency_s``;
bandwidth is unlimited and nothing is lost.  Whenever a link comes up both
ends exchange location beacons, and every received beacon makes the receiver
re-evaluate the bundles it is holding.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable

from .bundle import Bundle, RoutingState, encapsulate
from .errors import EmptyQueue, InvariantViolation, UnknownNode
from .geo import GeoPoint, distance
from .nametree import format_time
from .node import Action, NodeState, Outcome, RoutingDecision, check_eid

__all__ = ["EventKind", "SimEvent", "Metrics", "World"]


class EventKind(enum.IntEnum):
    # value is the tie-break rank for simultaneous events
    BUNDLE_INJECT = 0
    NODE_MOVE = 1
    CONTACT_CHANGE = 2
    BEACON_DUE = 3
    TRANSMIT_COMPLETE = 4
    MAINTENANCE_TICK = 5


@dataclass(frozen=True)
class SimEvent:
    at: float
    kind: EventKind
    subject: str
    data: Any = None


@dataclass
class Metrics:
    created: int = 0
    delivered: int = 0
    expected_deliveries: int = 0
    transmissions: int = 0
    acceptances: int = 0
    duplicates_suppressed: int = 0
    ttl_rejections: int = 0
    drops_ttl: int = 0
    holds: int = 0
    # bundle id -> (latency_s, hops) of its first delivery
    first_delivery: dict[str, tuple[float, int]] = field(default_factory=dict)

    @property
    def delivery_ratio(self) -> float:
        if not self.expected_deliveries:
            return 0.0
        return self.delivered / self.expected_deliveries

    @property
    def avg_hops(self) -> float:
        if not self.first_delivery:
            return 0.0
        return sum(h for _, h in self.first_delivery.values()) / len(self.first_delivery)

    @property
    def avg_latency_s(self) -> float:
        if not self.first_delivery:
            return 0.0
        return sum(t for t, _ in self.first_delivery.values()) / len(self.first_delivery)

    def as_dict(self) -> dict[str, float | int]:
        return {
            "created": self.created,
            "delivered": self.delivered,
            "delivery_ratio": round(self.delivery_ratio, 6),
            "transmissions": self.transmissions,
            "duplicates_suppressed": self.duplicates_suppressed,
            "drops_ttl": self.drops_ttl,
            "holds": self.holds,
            "avg_hops": round(self.avg_hops, 6),
            "avg_latency_s": round(self.avg_latency_s, 6),
        }

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.as_dict().items())


def _lerp(a: GeoPoint, b: GeoPoint, frac: float) -> GeoPoint:
    return GeoPoint(
        a.longitude + (b.longitude - a.longitude) * frac,
        a.latitude + (b.latitude - a.latitude) * frac,
    )


class World:
    def __init__(
        self,
        radio_range_km: float = 1.0,
        latency_s: float = 0.1,
        beacon_period: float = 10.0,
        mobility_tick: float = 1.0,
        maintenance_period: float | None = None,
        seed: int = 0,
        trace_sink: Callable[[str], None] | None = None,
    ):
        if radio_range_km < 0 or latency_s <= 0 or beacon_period <= 0 or mobility_tick <= 0:
            raise ValueError("range must be >= 0; latency, beacon period and tick > 0")
        self.radio_range_km = float(radio_range_km)
        self.latency_s = float(latency_s)
        self.beacon_period = float(beacon_period)
        self.mobility_tick = float(mobility_tick)
        self.maintenance_period = float(maintenance_period or beacon_period)
        self.rng_seed = seed
        self.rng = random.Random(seed)
        self.clock = 0.0
        self.nodes: dict[str, NodeState] = {}
        self.link_schedule: dict[frozenset[str], list[tuple[float, float]]] = {}
        self.waypoints: dict[str, list[tuple[float, GeoPoint]]] = {}
        self.metrics = Metrics()
        self.trace: list[str] = []
        self._trace_sink = trace_sink
        self._queue: list[tuple[float, int, str, int, SimEvent]] = []
        self._seq = itertools.count()
        self._links: set[frozenset[str]] = set()
        self._started = False

    # construction

    def add_node(self, eid: str, location: GeoPoint) -> NodeState:
        check_eid(eid)
        if eid in self.nodes:
            raise ValueError(f"duplicate node {eid}")
        node = NodeState(eid, location, self.beacon_period)
        self.nodes[eid] = node
        self.waypoints[eid] = [(0.0, location)]
        return node

    def node(self, eid: str) -> NodeState:
        try:
            return self.nodes[eid]
        except KeyError:
            raise UnknownNode(f"unknown node {eid!r}") from None

    def add_waypoint(self, eid: str, t: float, location: GeoPoint) -> None:
        self.node(eid)
        if t < 0:
            raise ValueError("waypoint time must be >= 0")
        points = self.waypoints[eid]
        if t == 0:
            points[:] = [(0.0, location)] + [p for p in points if p[0] > 0]
            self.nodes[eid].location = location
        else:
            points.append((float(t), location))
            points.sort(key=lambda p: p[0])

    def add_contact(self, a: str, b: str, t_open: float, t_close: float) -> None:
        self.node(a), self.node(b)
        if not t_open < t_close:
            raise ValueError("contact window must open before it closes")
        key = frozenset((a, b))
        self.link_schedule.setdefault(key, []).append((float(t_open), float(t_close)))
        self.schedule(SimEvent(t_open, EventKind.CONTACT_CHANGE, min(a, b), key))
        self.schedule(SimEvent(t_close, EventKind.CONTACT_CHANGE, min(a, b), key))

    def register(self, eid: str, app_eid: str, ns, lifetime: float) -> int:
        return self.node(eid).register(app_eid, ns, lifetime, self.clock)

    def inject(self, bundle: Bundle, source: str, at: float, via: str | None = None) -> None:
        self.node(source)
        if via is not None:
            self.node(via)
        self.schedule(SimEvent(at, EventKind.BUNDLE_INJECT, source, (bundle, via)))

    def schedule(self, ev: SimEvent) -> None:
        if ev.at < self.clock:
            raise InvariantViolation(f"event scheduled in the past: {ev}")
        heapq.heappush(self._queue, (ev.at, int(ev.kind), ev.subject, next(self._seq), ev))

    def _start(self) -> None:
        self._started = True
        if not self.nodes:
            return
        self.schedule(SimEvent(0.0, EventKind.CONTACT_CHANGE, "*", None))
        for eid in sorted(self.nodes):
            phase = self.rng.uniform(0.0, self.beacon_period)
            self.schedule(SimEvent(phase, EventKind.BEACON_DUE, eid))
            points = self.waypoints[eid]
            if len(points) > 1:
                self.schedule(SimEvent(min(self.mobility_tick, points[-1][0]), EventKind.NODE_MOVE, eid))
        self.schedule(SimEvent(self.maintenance_period, EventKind.MAINTENANCE_TICK, "*"))

    # connectivity

    def connected(self, a: str, b: str) -> bool:
        if a == b:
            return False
        na, nb = self.node(a), self.node(b)
        if distance(na.location, nb.location) > self.radio_range_km:
            return False
        windows = self.link_schedule.get(frozenset((a, b)))
        if windows is None:
            return True
        return any(lo <= self.clock < hi for lo, hi in windows)

    def neighbors(self, eid: str) -> list[tuple[str, GeoPoint]]:
        """Nodes linked to ``eid`` right now, with their true positions, sorted by EID."""
        self.node(eid)
        return [
            (other, self.nodes[other].location)
            for other in sorted(self.nodes)
            if self.connected(eid, other)
        ]

    def known_neighbors(self, eid: str) -> list[tuple[str, GeoPoint]]:
        """Current neighbours paired with the location ``eid`` has heard for them."""
        table = self.nodes[eid].node_table
        return [(e, table[e].location) for e, _ in self.neighbors(eid) if e in table]

    def position_at(self, eid: str, t: float) -> GeoPoint:
        points = self.waypoints[eid]
        if t >= points[-1][0]:
            return points[-1][1]
        for (t0, p0), (t1, p1) in zip(points, points[1:]):
            if t0 <= t < t1:
                return _lerp(p0, p1, (t - t0) / (t1 - t0))
        return points[0][1]

    def _refresh_links(self, pairs) -> None:
        for key in pairs:
            a, b = sorted(key)
            up = self.connected(a, b)
            if up and key not in self._links:
                self._links.add(key)
                self._send_beacon(a, (b,))
                self._send_beacon(b, (a,))
            elif not up:
                self._links.discard(key)

    def _pairs_of(self, eid: str):
        return [frozenset((eid, o)) for o in sorted(self.nodes) if o != eid]

    # tracing

    def _emit(self, kind: str, node: str, bundle: str | None = None, **detail) -> None:
        text = ",".join(f"{k}={v}" for k, v in detail.items())
        line = (
            f"t={format_time(self.clock)} ev={kind} node={node} "
            f"bundle={bundle or '-'} detail={text}"
        )
        self.trace.append(line)
        if self._trace_sink is not None:
            self._trace_sink(line)

    # main loop

    def pending_events(self) -> int:
        return len(self._queue)

    def step(self) -> SimEvent:
        if not self._started:
            self._start()
        if not self._queue:
            raise EmptyQueue("no events left")
        ev = heapq.heappop(self._queue)[-1]
        if ev.at < self.clock:
            raise InvariantViolation(f"clock would go back from {self.clock} to {ev.at}")
        self.clock = ev.at
        handler = {
            EventKind.BUNDLE_INJECT: self._on_inject,
            EventKind.NODE_MOVE: self._on_move,
            EventKind.CONTACT_CHANGE: self._on_contact,
            EventKind.BEACON_DUE: self._on_beacon_due,
            EventKind.TRANSMIT_COMPLETE: self._on_transmit,
            EventKind.MAINTENANCE_TICK: self._on_maintenance,
        }[ev.kind]
        handler(ev)
        return ev

    def run(self, until: float) -> Metrics:
        if until < self.clock:
            raise ValueError("cannot run backwards")
        if not self._started:
            self._start()
        while self._queue and self._queue[0][0] <= until:
            self.step()
        return self.metrics

    # handlers

    def _on_inject(self, ev: SimEvent) -> None:
        bundle, via = ev.data
        node = self.nodes[ev.subject]
        bundle = bundle.copy()
        m = self.metrics
        m.created += 1
        m.expected_deliveries += self._expected_deliveries(bundle, via or ev.subject)
        scope = bundle.meb.scope_predicate
        detail = {
            "dst": str(bundle.destination_specifier).replace(" ", ""),
            "scope": "-" if scope is None else
            f"{scope.center.longitude:.6f}/{scope.center.latitude:.6f}/{scope.radius_km:g}",
        }
        if via is not None and via != ev.subject:
            envelope = encapsulate(bundle, via, self.clock)
            node.seen_ids.add(bundle.bundle_id)
            detail["envelope"] = envelope.bundle_id
            self._emit("CREATE", ev.subject, bundle.bundle_id, **detail)
            node.originate(envelope)
            self._route(node, envelope.bundle_id)
        else:
            self._emit("CREATE", ev.subject, bundle.bundle_id, **detail)
            node.originate(bundle)
            self._route(node, bundle.bundle_id)

    def _expected_deliveries(self, b: Bundle, consumer: str) -> int:
        pred = b.meb.scope_predicate
        if pred is None:
            return len(self.nodes[consumer].local_matches(b.destination_specifier, self.clock))
        return sum(
            len(n.local_matches(b.destination_specifier, self.clock))
            for _, n in sorted(self.nodes.items())
            if pred.contains(n.location)
        )

    def _on_move(self, ev: SimEvent) -> None:
        eid = ev.subject
        node = self.nodes[eid]
        new = self.position_at(eid, self.clock)
        if new != node.location:
            node.location = new
            self._emit("MOVE", eid, lon=f"{new.longitude:.6f}", lat=f"{new.latitude:.6f}")
            self._refresh_links(self._pairs_of(eid))
        end = self.waypoints[eid][-1][0]
        if self.clock < end:
            self.schedule(SimEvent(min(self.clock + self.mobility_tick, end), EventKind.NODE_MOVE, eid))

    def _on_contact(self, ev: SimEvent) -> None:
        if ev.data is None:
            pairs = [frozenset(p) for p in itertools.combinations(sorted(self.nodes), 2)]
        else:
            pairs = [ev.data]
        self._refresh_links(pairs)

    def _send_beacon(self, eid: str, receivers) -> None:
        node = self.nodes[eid]
        around = [e for e, _ in self.neighbors(eid)]
        beacon = node.make_beacon(self.clock, around)
        self._emit("BEACON", eid, beacon.bundle_id, to=";".join(receivers) or "-")
        for r in receivers:
            self.schedule(SimEvent(
                self.clock + self.latency_s, EventKind.TRANSMIT_COMPLETE, r, (beacon.copy(), eid)
            ))

    def _on_beacon_due(self, ev: SimEvent) -> None:
        receivers = tuple(e for e, _ in self.neighbors(ev.subject))
        self._send_beacon(ev.subject, receivers)
        self.schedule(SimEvent(self.clock + self.beacon_period, EventKind.BEACON_DUE, ev.subject))

    def _on_transmit(self, ev: SimEvent) -> None:
        bundle, sender = ev.data
        node = self.nodes[ev.subject]
        result = node.accept_bundle(bundle, sender, self.clock)
        m = self.metrics
        if result.outcome is Outcome.BEACON:
            self._retry(node)
            return
        for bid in result.admitted[:-1]:
            self._emit("RECV", node.canonical_eid, bid, **{"from": sender, "unwrapped": "yes"})
        if result.outcome is Outcome.ACCEPTED:
            m.acceptances += 1
            entry = node.pending[result.bundle_id]
            self._emit(
                "RECV", node.canonical_eid, result.bundle_id,
                **{"from": sender, "hops": entry.bundle.hop_count},
            )
            self._route(node, result.bundle_id)
        elif result.outcome is Outcome.DUPLICATE:
            m.duplicates_suppressed += 1
            self._emit("DUP", node.canonical_eid, bundle.bundle_id, **{"from": sender})
        else:
            m.ttl_rejections += 1
            m.drops_ttl += 1
            self._emit("DROP_TTL", node.canonical_eid, bundle.bundle_id, reason="on-arrival")

    def _on_maintenance(self, ev: SimEvent) -> None:
        for eid in sorted(self.nodes):
            for b in self.nodes[eid].expire(self.clock):
                self.metrics.drops_ttl += 1
                self._emit("DROP_TTL", eid, b.bundle_id, reason="maintenance")
        self.schedule(SimEvent(self.clock + self.maintenance_period, EventKind.MAINTENANCE_TICK, "*"))

    def _retry(self, node: NodeState) -> None:
        for bid in list(node.pending):
            if bid in node.pending:
                self._route(node, bid)

    def _route(self, node: NodeState, bid: str) -> None:
        entry = node.pending[bid]
        b = entry.bundle
        before = b.routing_state
        if b.meb.next_resolver_eid is None and b.meb.scope_predicate is None:
            decision = node.consume_locally(b, self.clock)
        else:
            decision = node.route_bundle(b, self.known_neighbors(node.canonical_eid), self.clock)
        eid = node.canonical_eid
        if (
            decision.state in (RoutingState.STEM, RoutingState.FLOOD)
            and before is not decision.state
        ):
            self._emit(
                "STATE", eid, bid, **{"from": before, "to": decision.state,
                                      "dist": f"{decision.distance_km:.6f}"}
            )
        self._check(node, b, decision)
        newly_held = node.apply_decision(b, decision, self.clock)
        m = self.metrics
        for app in decision.deliver:
            m.delivered += 1
            first = bid not in m.first_delivery
            if first:
                m.first_delivery[bid] = (self.clock - b.created_at, b.hop_count)
            self._emit("DELIVER", eid, bid, app=app, hops=b.hop_count,
                       latency=format_time(self.clock - b.created_at))
        if decision.action is Action.HOLD:
            if newly_held:
                m.holds += 1
                self._emit("HOLD", eid, bid, state=decision.state, reason=decision.reason)
        elif decision.action is Action.DROP:
            m.drops_ttl += 1
            self._emit("DROP_TTL", eid, bid, reason=decision.reason)
        for target in decision.targets:
            m.transmissions += 1
            detail = {"to": target, "state": decision.state}
            if decision.distance_km is not None:
                detail["dist"] = f"{decision.distance_km:.6f}"
            if decision.action is Action.POINT_TO_POINT:
                detail["resolver"] = decision.reason
            self._emit("SEND", eid, bid, **detail)
            self.schedule(SimEvent(
                self.clock + self.latency_s, EventKind.TRANSMIT_COMPLETE, target, (b.copy(), eid)
            ))

    def _check(self, node: NodeState, b: Bundle, decision: RoutingDecision) -> None:
        pred = b.meb.scope_predicate
        table = node.node_table
        if decision.action is Action.FORWARD:
            (target,) = decision.targets
            if not distance(table[target].location, pred.center) < decision.distance_km:
                raise InvariantViolation(f"STEM hop {node.canonical_eid}->{target} makes no progress")
        elif decision.action is Action.FLOOD:
            for target in decision.targets:
                if not pred.contains(table[target].location):
                    raise InvariantViolation(f"FLOOD to {target} outside the scope of {b.bundle_id}")
