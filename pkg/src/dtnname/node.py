"""Per-node bundle agent: registrations, location beacons, acceptance and routing.

Routing follows the STEM/FLOOD scheme.  While the custodian is outside the
bundle's ``within`` region the bundle is in STEM state and travels greedily
to the neighbour closest to the region centre.  Once inside, it switches to
FLOOD: it goes to every neighbour known to be in the region and is handed to
local applications whose registered specifier it matches.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .bundle import (
    Bundle,
    MetadataExtensionBlock,
    RoutingState,
    decapsulate,
    is_expired,
)
from .errors import MalformedBeacon, MissingPredicate
from .geo import GeoPoint, distance
from .nametree import NameRecord, NameTree
from .specifier import AvPair, NameSpecifier, parse

__all__ = [
    "BEACON_SPECIFIER",
    "Action",
    "Outcome",
    "Acceptance",
    "RoutingDecision",
    "NodeTableEntry",
    "NodeState",
    "eid_specifier",
    "check_eid",
]

BEACON_SPECIFIER = parse("[beacon=location-update]")
DEFAULT_BEACON_PERIOD = 10.0
# neighbour hints in the KB outlive this many beacon periods
HINT_LIFETIME_PERIODS = 3

_EID = re.compile(r"^[^\s\[\]=;,]+$")


def check_eid(eid: str) -> str:
    if not isinstance(eid, str) or not _EID.match(eid):
        raise ValueError(f"invalid EID {eid!r}")
    return eid


def eid_specifier(eid: str) -> NameSpecifier:
    return NameSpecifier((AvPair("eid", eid),))


class Action(enum.Enum):
    FORWARD = "forward"
    FLOOD = "flood"
    POINT_TO_POINT = "point-to-point"
    HOLD = "hold"
    DROP = "drop"
    CONSUME = "consume"


@dataclass(frozen=True)
class RoutingDecision:
    """What to do with one bundle right now.

    ``targets`` are the next-hop EIDs to transmit to; ``deliver`` lists local
    application EIDs that should receive the bundle.  Delivery only happens
    together with FLOOD (or CONSUME for bundles that carry no scope).
    """

    action: Action
    state: RoutingState | None = None
    targets: tuple[str, ...] = ()
    deliver: tuple[str, ...] = ()
    distance_km: float | None = None
    reason: str = ""


class Outcome(enum.Enum):
    ACCEPTED = "accepted"
    DUPLICATE = "duplicate"
    EXPIRED = "expired"
    BEACON = "beacon"


@dataclass(frozen=True)
class Acceptance:
    outcome: Outcome
    # ids newly admitted to seen_ids, envelope first when one was unwrapped
    admitted: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.outcome is Outcome.ACCEPTED

    @property
    def bundle_id(self) -> str | None:
        return self.admitted[-1] if self.admitted else None


@dataclass(frozen=True)
class NodeTableEntry:
    eid: str
    location: GeoPoint
    updated_at: float


@dataclass
class PendingEntry:
    bundle: Bundle
    arrived_from: str | None
    sent_to: set[str] = field(default_factory=set)
    held: bool = False


@dataclass(frozen=True)
class Registration:
    app_eid: str
    specifier: NameSpecifier
    record_id: int


@dataclass(frozen=True)
class BeaconInfo:
    eid: str
    location: GeoPoint
    sent_at: float
    neighbors: tuple[str, ...]


def _encode_beacon_payload(eid: str, loc: GeoPoint, now: float, neighbors) -> bytes:
    return (
        f"eid={eid} lon={loc.longitude!r} lat={loc.latitude!r} t={float(now)!r} "
        f"nbrs={','.join(neighbors)}"
    ).encode("utf-8")


def parse_beacon(b: Bundle) -> BeaconInfo:
    if b.destination_specifier != BEACON_SPECIFIER:
        raise MalformedBeacon(f"{b.bundle_id} is not addressed as a location update")
    try:
        fields = dict(item.split("=", 1) for item in b.payload.decode("utf-8").split(" "))
        nbrs = tuple(n for n in fields.get("nbrs", "").split(",") if n)
        return BeaconInfo(
            eid=check_eid(fields["eid"]),
            location=GeoPoint(float(fields["lon"]), float(fields["lat"])),
            sent_at=float(fields["t"]),
            neighbors=nbrs,
        )
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise MalformedBeacon(f"bad beacon payload in {b.bundle_id}: {exc}") from None


class NodeState:
    """One DTN node: its knowledge base, neighbour table and bundle store."""

    def __init__(
        self,
        canonical_eid: str,
        location: GeoPoint,
        beacon_period: float = DEFAULT_BEACON_PERIOD,
    ):
        self.canonical_eid = check_eid(canonical_eid)
        self.location = location
        self.beacon_period = float(beacon_period)
        self.kb = NameTree()
        self.node_table: dict[str, NodeTableEntry] = {}
        self.pending: dict[str, PendingEntry] = {}
        self.seen_ids: set[str] = set()
        self.registrations: list[Registration] = []
        self.delivered: list[tuple[str, str, float]] = []
        # decoded inner bundles, exactly as they came out of their envelopes
        self.unwrapped: list[Bundle] = []
        self._local_records: dict[int, str] = {}
        self._delivered_keys: set[tuple[str, str]] = set()
        self._beacon_seq = 0

    def __repr__(self) -> str:
        return f"NodeState({self.canonical_eid!r}, {self.location})"

    # registration and resolution

    def register(self, app_eid: str, ns: NameSpecifier, lifetime: float, now: float) -> int:
        check_eid(app_eid)
        record = NameRecord(app_eid, (), now + lifetime)
        rid = self.kb.insert(ns, record, now)
        if rid not in self._local_records:
            self._local_records[rid] = app_eid
            self.registrations.append(Registration(app_eid, ns, rid))
        return rid

    def resolve_local(self, query: NameSpecifier, now: float) -> list[str]:
        """Destination EIDs the local KB binds ``query`` to (early binding).

        Empty means the bundle has to travel by name.
        """
        eids = []
        for record in self.kb.lookup(query, now):
            if record.destination_eid not in eids:
                eids.append(record.destination_eid)
        return eids

    def local_matches(self, query: NameSpecifier, now: float) -> list[str]:
        """Applications registered on this node that ``query`` addresses."""
        apps = {
            self._local_records[rid]
            for rid in self.kb.lookup_ids(query, now)
            if rid in self._local_records
        }
        return sorted(apps)

    # beacons

    def make_beacon(self, now: float, neighbors: tuple[str, ...] | list[str] = ()) -> Bundle:
        self._beacon_seq += 1
        meb = MetadataExtensionBlock(RoutingState.FLOOD, ttl_seconds=self.beacon_period)
        return Bundle(
            bundle_id=f"beacon:{self.canonical_eid}:{self._beacon_seq}",
            source_specifier=eid_specifier(self.canonical_eid),
            destination_specifier=BEACON_SPECIFIER,
            meb=meb,
            payload=_encode_beacon_payload(
                self.canonical_eid, self.location, now, sorted(neighbors)
            ),
            created_at=now,
        )

    def apply_beacon(self, beacon: Bundle, now: float) -> bool:
        """Fold a neighbour's location update into the node table.

        Returns False when the beacon is our own or older than what we hold.
        Beacons are never queued or re-forwarded.
        """
        info = parse_beacon(beacon)
        if info.eid == self.canonical_eid:
            return False
        known = self.node_table.get(info.eid)
        if known is not None and info.sent_at <= known.updated_at:
            return False
        self.node_table[info.eid] = NodeTableEntry(info.eid, info.location, info.sent_at)

        expires = now + HINT_LIFETIME_PERIODS * (beacon.meb.ttl_seconds or self.beacon_period)
        self.kb.insert(eid_specifier(info.eid), NameRecord(info.eid, (info.eid,), expires), now)
        horizon = now - HINT_LIFETIME_PERIODS * self.beacon_period
        for other in info.neighbors:
            if other == self.canonical_eid:
                continue
            direct = self.node_table.get(other)
            if direct is not None and direct.updated_at >= horizon:
                continue
            self.kb.insert(eid_specifier(other), NameRecord(other, (info.eid,), expires), now)
        return True

    # acceptance

    def accept_bundle(self, b: Bundle, from_eid: str | None, now: float) -> Acceptance:
        """Admit an arriving bundle; envelopes addressed to us are unwrapped."""
        if b.destination_specifier == BEACON_SPECIFIER:
            self.apply_beacon(b, now)
            return Acceptance(Outcome.BEACON)
        return self._admit(b.copy(), from_eid, now, admitted=())

    def _admit(self, b: Bundle, from_eid, now, admitted) -> Acceptance:
        if b.bundle_id in self.seen_ids:
            return Acceptance(Outcome.DUPLICATE, admitted)
        if is_expired(b, now):
            return Acceptance(Outcome.EXPIRED, admitted)
        self.seen_ids.add(b.bundle_id)
        admitted = admitted + (b.bundle_id,)
        b.hop_count += 1
        if b.meb.next_resolver_eid == self.canonical_eid:
            inner = decapsulate(b)
            self.unwrapped.append(inner.copy())
            inner.hop_count += b.hop_count - 1
            # the inner bundle has travelled the envelope's hops; _admit adds one more
            return self._admit(inner, from_eid, now, admitted)
        self.pending[b.bundle_id] = PendingEntry(b, from_eid)
        return Acceptance(Outcome.ACCEPTED, admitted)

    def originate(self, b: Bundle) -> None:
        """Place a locally created bundle in the store."""
        self.seen_ids.add(b.bundle_id)
        self.pending[b.bundle_id] = PendingEntry(b, None)

    # routing

    def route_bundle(
        self,
        b: Bundle,
        neighbors: list[tuple[str, GeoPoint]],
        now: float,
        arrived_from: str | None = None,
    ) -> RoutingDecision:
        """Decide how to move ``b`` given the neighbours currently reachable.

        ``neighbors`` pairs each reachable EID with its location as this node
        knows it.  The bundle's routing state is rewritten to the state used.
        """
        if is_expired(b, now):
            return RoutingDecision(Action.DROP, b.routing_state, reason="ttl")
        entry = self.pending.get(b.bundle_id)
        if arrived_from is None and entry is not None:
            arrived_from = entry.arrived_from
        sent = entry.sent_to if entry is not None else set()
        neighbors = [(e, loc) for e, loc in neighbors if e != self.canonical_eid]

        resolver = b.meb.next_resolver_eid
        if resolver:
            via = self._next_hop_towards(resolver, {e for e, _ in neighbors}, now)
            if via is None:
                return RoutingDecision(
                    Action.HOLD, RoutingState.POINT_TO_POINT, reason=f"no-route:{resolver}"
                )
            return RoutingDecision(
                Action.POINT_TO_POINT, RoutingState.POINT_TO_POINT, (via,), reason=resolver
            )

        pred = b.meb.scope_predicate
        if pred is None:
            raise MissingPredicate(f"{b.bundle_id} has no scope predicate")
        here = distance(self.location, pred.center)
        if here > pred.radius_km:
            b.routing_state = RoutingState.STEM
            best: tuple[float, str] | None = None
            for eid, loc in neighbors:
                d = distance(loc, pred.center)
                if d < here and (best is None or (d, eid) < best):
                    best = (d, eid)
            if best is None:
                return RoutingDecision(
                    Action.HOLD, RoutingState.STEM, distance_km=here, reason="local-minimum"
                )
            return RoutingDecision(Action.FORWARD, RoutingState.STEM, (best[1],), distance_km=here)

        b.routing_state = RoutingState.FLOOD
        targets = tuple(sorted(
            eid
            for eid, loc in neighbors
            if eid != arrived_from and eid not in sent and pred.contains(loc)
        ))
        return RoutingDecision(
            Action.FLOOD,
            RoutingState.FLOOD,
            targets,
            self._undelivered(b, now),
            distance_km=here,
        )

    def consume_locally(self, b: Bundle, now: float) -> RoutingDecision:
        """Handle a bundle with no scope: hand it to local matches and retire it."""
        if is_expired(b, now):
            return RoutingDecision(Action.DROP, b.routing_state, reason="ttl")
        return RoutingDecision(Action.CONSUME, b.routing_state, deliver=self._undelivered(b, now))

    def _undelivered(self, b: Bundle, now: float) -> tuple[str, ...]:
        return tuple(
            app
            for app in self.local_matches(b.destination_specifier, now)
            if (b.bundle_id, app) not in self._delivered_keys
        )

    def _next_hop_towards(self, target: str, reachable: set[str], now: float) -> str | None:
        if target in reachable:
            return target
        hops = set()
        for record in self.kb.lookup(eid_specifier(target), now):
            if record.destination_eid == target:
                hops.update(record.next_hop_eids)
        candidates = sorted(hops & reachable)
        return candidates[0] if candidates else None

    def apply_decision(self, b: Bundle, decision: RoutingDecision, now: float) -> bool:
        """Update bookkeeping after ``decision`` was carried out.

        Returns True when the bundle has just entered the held state.
        """
        for app in decision.deliver:
            self._delivered_keys.add((b.bundle_id, app))
            self.delivered.append((b.bundle_id, app, now))
        entry = self.pending.get(b.bundle_id)
        if entry is None:
            return False
        if decision.action is Action.HOLD:
            newly = not entry.held
            entry.held = True
            return newly
        entry.held = False
        if decision.action is Action.FLOOD:
            entry.sent_to.update(decision.targets)
        else:
            del self.pending[b.bundle_id]
        return False

    # maintenance

    def expire(self, now: float) -> list[Bundle]:
        """Expire KB records and drop dead bundles; returns the dropped bundles."""
        self.kb.expire(now)
        live = {rid for rid, _, _ in self.kb.items()}
        for rid in [r for r in self._local_records if r not in live]:
            del self._local_records[rid]
        self.registrations = [r for r in self.registrations if r.record_id in live]
        dropped = [e.bundle for e in self.pending.values() if is_expired(e.bundle, now)]
        for b in dropped:
            del self.pending[b.bundle_id]
        return dropped
