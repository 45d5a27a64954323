"""Bundles, the metadata extension block, and bundle-in-bundle envelopes."""

from __future__ import annotations

import binascii
import enum
import math
import re
from dataclasses import dataclass, replace

from .errors import (
    BadHexPayload,
    EmptyAfterStrip,
    EmptySpecifier,
    InvalidMetadata,
    MalformedHeader,
    MalformedLocationSubtree,
    SpecifierError,
)
from .geo import GeoPoint, WithinPredicate
from .specifier import AvPair, NameSpecifier, parse, serialize

__all__ = [
    "RoutingState",
    "MetadataExtensionBlock",
    "Bundle",
    "extract_predicate",
    "encode",
    "decode",
    "encapsulate",
    "decapsulate",
    "is_expired",
]

LOCATION = "location"


class RoutingState(enum.Enum):
    POINT_TO_POINT = "POINT_TO_POINT"
    STEM = "STEM"
    FLOOD = "FLOOD"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MetadataExtensionBlock:
    routing_state: RoutingState
    next_resolver_eid: str | None = None
    scope_predicate: WithinPredicate | None = None
    ttl_seconds: float | None = None

    def __post_init__(self) -> None:
        has_resolver = bool(self.next_resolver_eid)
        if has_resolver != (self.routing_state is RoutingState.POINT_TO_POINT):
            raise InvalidMetadata(
                "routing state must be POINT_TO_POINT exactly when a next resolver is set"
            )
        if self.next_resolver_eid == "":
            object.__setattr__(self, "next_resolver_eid", None)
        if self.scope_predicate is None and self.ttl_seconds is None:
            raise InvalidMetadata("a bundle needs a scope predicate, a ttl, or both")
        if self.ttl_seconds is not None:
            ttl = float(self.ttl_seconds)
            if not ttl >= 0 or math.isinf(ttl):
                raise InvalidMetadata(f"bad ttl {self.ttl_seconds!r}")
            object.__setattr__(self, "ttl_seconds", ttl)

    def with_state(self, state: RoutingState) -> MetadataExtensionBlock:
        return replace(self, routing_state=state)


_TOKEN = re.compile(r"^\S+$")


@dataclass
class Bundle:
    """A store-and-forward message.

    Everything except ``hop_count`` and ``meb`` is fixed after creation;
    nodes hand each other copies (see :meth:`copy`).
    """

    bundle_id: str
    source_specifier: NameSpecifier
    destination_specifier: NameSpecifier
    meb: MetadataExtensionBlock
    payload: bytes = b""
    created_at: float = 0.0
    hop_count: int = 0

    def __post_init__(self) -> None:
        if not _TOKEN.match(self.bundle_id or ""):
            raise ValueError(f"bundle id must be a non-empty token, got {self.bundle_id!r}")
        if self.destination_specifier.get(LOCATION) is not None:
            raise ValueError("destination specifier still carries a location subtree")
        if self.hop_count < 0:
            raise ValueError("hop_count must be non-negative")
        self.payload = bytes(self.payload)
        self.created_at = float(self.created_at)

    @property
    def routing_state(self) -> RoutingState:
        return self.meb.routing_state

    @routing_state.setter
    def routing_state(self, state: RoutingState) -> None:
        self.meb = self.meb.with_state(state)

    @property
    def is_envelope(self) -> bool:
        return self.meb.next_resolver_eid is not None

    def copy(self) -> Bundle:
        return replace(self)


_NUMBER = r"([+-]?(?:\d+(?:\.\d*)?|\.\d+))"
_UNIT_PATTERNS = {
    "longitude": re.compile(rf"^{_NUMBER} degrees$"),
    "latitude": re.compile(rf"^{_NUMBER} degrees$"),
    "distance": re.compile(rf"^{_NUMBER} km$"),
}


def _location_number(loc: AvPair, attribute: str) -> float:
    pair = loc.child(attribute)
    if pair is None:
        raise MalformedLocationSubtree(f"location subtree lacks {attribute!r}")
    m = _UNIT_PATTERNS[attribute].match(pair.value)
    if m is None:
        raise MalformedLocationSubtree(f"cannot read {attribute} from {pair.value!r}")
    return float(m.group(1))


def extract_predicate(ns: NameSpecifier) -> tuple[NameSpecifier, WithinPredicate | None]:
    """Split a ``location`` subtree off ``ns`` into a within-predicate.

    The subtree must contain ``longitude = <n> degrees``, ``latitude = <n>
    degrees`` and ``distance = <n> km``.
    """
    loc = ns.get(LOCATION)
    if loc is None:
        return ns, None
    lon = _location_number(loc, "longitude")
    lat = _location_number(loc, "latitude")
    radius = _location_number(loc, "distance")
    try:
        pred = WithinPredicate(GeoPoint(lon, lat), radius)
    except ValueError as exc:
        raise MalformedLocationSubtree(str(exc)) from None
    try:
        stripped = ns.without(LOCATION)
    except EmptySpecifier:
        raise EmptyAfterStrip("specifier holds nothing but a location subtree") from None
    return stripped, pred


def is_expired(b: Bundle, now: float) -> bool:
    ttl = b.meb.ttl_seconds
    return ttl is not None and now > b.created_at + ttl


# wire format

_FIELDS = ("id", "src", "dst", "state", "resolver", "scope", "ttl", "created", "hops")


def _num(x: float) -> str:
    return repr(float(x))


def encode(b: Bundle) -> bytes:
    meb = b.meb
    scope = ""
    if meb.scope_predicate is not None:
        p = meb.scope_predicate
        scope = f"{_num(p.center.longitude)} {_num(p.center.latitude)} {_num(p.radius_km)}"
    values = (
        b.bundle_id,
        serialize(b.source_specifier),
        serialize(b.destination_specifier),
        meb.routing_state.value,
        meb.next_resolver_eid or "",
        scope,
        "" if meb.ttl_seconds is None else _num(meb.ttl_seconds),
        _num(b.created_at),
        str(b.hop_count),
    )
    header = "".join(f"{k}:{v}\n" for k, v in zip(_FIELDS, values))
    return (header + "\n" + b.payload.hex()).encode("utf-8")


def decode(data: bytes) -> Bundle:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedHeader(f"not UTF-8: {exc}") from None
    head, sep, body = text.partition("\n\n")
    if not sep:
        raise MalformedHeader("missing blank line after header")
    lines = head.split("\n")
    if len(lines) != len(_FIELDS):
        raise MalformedHeader(f"expected {len(_FIELDS)} header lines, got {len(lines)}")
    fields: dict[str, str] = {}
    for name, line in zip(_FIELDS, lines):
        key, colon, value = line.partition(":")
        if not colon or key != name:
            raise MalformedHeader(f"expected field {name!r}, got {line!r}")
        fields[name] = value

    body = body.rstrip("\n")
    if body and not re.fullmatch(r"(?:[0-9a-f]{2})+", body):
        raise BadHexPayload("payload is not lowercase hexadecimal")
    try:
        payload = binascii.unhexlify(body)
    except binascii.Error as exc:
        raise BadHexPayload(str(exc)) from None

    try:
        state = RoutingState(fields["state"])
        scope = None
        if fields["scope"]:
            lon, lat, radius = (float(x) for x in fields["scope"].split(" "))
            scope = WithinPredicate(GeoPoint(lon, lat), radius)
        meb = MetadataExtensionBlock(
            routing_state=state,
            next_resolver_eid=fields["resolver"] or None,
            scope_predicate=scope,
            ttl_seconds=float(fields["ttl"]) if fields["ttl"] else None,
        )
        return Bundle(
            bundle_id=fields["id"],
            source_specifier=parse(fields["src"]),
            destination_specifier=parse(fields["dst"]),
            meb=meb,
            payload=payload,
            created_at=float(fields["created"]),
            hop_count=int(fields["hops"]),
        )
    except (ValueError, SpecifierError) as exc:
        raise MalformedHeader(str(exc)) from None


# bundle-in-bundle

def envelope_id(inner_id: str, resolver_eid: str) -> str:
    return f"env:{resolver_eid}:{inner_id}"


def encapsulate(inner: Bundle, resolver_eid: str, now: float) -> Bundle:
    """Wrap ``inner`` in an envelope addressed point-to-point to ``resolver_eid``.

    The envelope inherits the inner TTL and scope so its metadata stays valid
    even when the inner bundle carries only one of the two.
    """
    if not resolver_eid:
        raise ValueError("resolver_eid must be non-empty")
    meb = MetadataExtensionBlock(
        routing_state=RoutingState.POINT_TO_POINT,
        next_resolver_eid=resolver_eid,
        scope_predicate=inner.meb.scope_predicate,
        ttl_seconds=inner.meb.ttl_seconds,
    )
    return Bundle(
        bundle_id=envelope_id(inner.bundle_id, resolver_eid),
        source_specifier=inner.source_specifier,
        destination_specifier=NameSpecifier((AvPair("eid", resolver_eid),)),
        meb=meb,
        payload=encode(inner),
        created_at=now,
    )


def decapsulate(envelope: Bundle) -> Bundle:
    if not envelope.is_envelope:
        raise ValueError(f"{envelope.bundle_id} is not an envelope")
    return decode(envelope.payload)
