"""Line-oriented scenario files.

One directive per line, ``#`` starts a comment::

    node <eid> <lon> <lat>
    range <km>
    beacon <seconds>
    latency <seconds>
    seed <int>
    until <seconds>
    register <eid> <app_eid> <lifetime_s> <specifier>
    move <eid> <t> <lon> <lat>
    contact <eidA> <eidB> <t_open> <t_close>
    inject <bundle_id> <src_eid> <t> [ttl <s>] [via <eid>] dst <specifier>

``via`` wraps the bundle in an envelope addressed to that resolver node.
A destination may contain a ``location`` subtree; it becomes the bundle's
scope predicate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .bundle import Bundle, MetadataExtensionBlock, RoutingState, extract_predicate
from .errors import (
    BundleError,
    InvalidCoordinate,
    ScenarioCoordinateError,
    ScenarioSyntaxError,
    SpecifierError,
    UndeclaredNode,
)
from .geo import GeoPoint
from .node import check_eid, eid_specifier
from .simulator import World
from .specifier import NameSpecifier, parse

__all__ = ["Scenario", "load_scenario", "parse_scenario"]


@dataclass(frozen=True)
class Registration:
    node: str
    app_eid: str
    lifetime: float
    specifier: NameSpecifier


@dataclass(frozen=True)
class Move:
    node: str
    t: float
    location: GeoPoint


@dataclass(frozen=True)
class Contact:
    a: str
    b: str
    t_open: float
    t_close: float


@dataclass(frozen=True)
class Injection:
    bundle_id: str
    source: str
    t: float
    destination: NameSpecifier
    ttl: float | None = None
    via: str | None = None

    def build_bundle(self) -> Bundle:
        dst, pred = extract_predicate(self.destination)
        meb = MetadataExtensionBlock(
            routing_state=RoutingState.STEM if pred is not None else RoutingState.FLOOD,
            scope_predicate=pred,
            ttl_seconds=self.ttl,
        )
        return Bundle(
            bundle_id=self.bundle_id,
            source_specifier=eid_specifier(self.source),
            destination_specifier=dst,
            meb=meb,
            created_at=self.t,
        )


@dataclass
class Scenario:
    nodes: dict[str, GeoPoint] = field(default_factory=dict)
    range_km: float = 1.0
    beacon_period: float = 10.0
    latency_s: float = 0.1
    seed: int = 0
    until: float = 100.0
    registrations: list[Registration] = field(default_factory=list)
    moves: list[Move] = field(default_factory=list)
    contacts: list[Contact] = field(default_factory=list)
    injections: list[Injection] = field(default_factory=list)

    def build_world(self, seed: int | None = None, trace_sink=None) -> World:
        world = World(
            radio_range_km=self.range_km,
            latency_s=self.latency_s,
            beacon_period=self.beacon_period,
            seed=self.seed if seed is None else seed,
            trace_sink=trace_sink,
        )
        for eid, loc in self.nodes.items():
            world.add_node(eid, loc)
        for mv in self.moves:
            world.add_waypoint(mv.node, mv.t, mv.location)
        for c in self.contacts:
            world.add_contact(c.a, c.b, c.t_open, c.t_close)
        for r in self.registrations:
            world.register(r.node, r.app_eid, r.specifier, r.lifetime)
        for inj in self.injections:
            world.inject(inj.build_bundle(), inj.source, inj.t, inj.via)
        return world

    def to_text(self) -> str:
        """Canonical scenario text; loading it back yields an equal Scenario."""
        lines = [
            f"range {self.range_km!r}",
            f"beacon {self.beacon_period!r}",
            f"latency {self.latency_s!r}",
            f"seed {self.seed}",
            f"until {self.until!r}",
        ]
        lines += [f"node {e} {p.longitude!r} {p.latitude!r}" for e, p in self.nodes.items()]
        lines += [f"register {r.node} {r.app_eid} {r.lifetime!r} {r.specifier}"
                  for r in self.registrations]
        lines += [f"move {m.node} {m.t!r} {m.location.longitude!r} {m.location.latitude!r}"
                  for m in self.moves]
        lines += [f"contact {c.a} {c.b} {c.t_open!r} {c.t_close!r}" for c in self.contacts]
        for inj in self.injections:
            opts = ""
            if inj.ttl is not None:
                opts += f" ttl {inj.ttl!r}"
            if inj.via is not None:
                opts += f" via {inj.via}"
            lines.append(f"inject {inj.bundle_id} {inj.source} {inj.t!r}{opts} dst {inj.destination}")
        return "\n".join(lines) + "\n"


def _number(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ScenarioSyntaxError(f"{what}: expected a number, got {token!r}", lineno) from None
    if not math.isfinite(value):
        raise ScenarioSyntaxError(f"{what}: {token!r} is not finite", lineno)
    return value


def _nonneg(token: str, lineno: int, what: str) -> float:
    value = _number(token, lineno, what)
    if value < 0:
        raise ScenarioSyntaxError(f"{what} must be >= 0", lineno)
    return value


def _point(lon: str, lat: str, lineno: int) -> GeoPoint:
    try:
        return GeoPoint(_number(lon, lineno, "longitude"), _number(lat, lineno, "latitude"))
    except InvalidCoordinate as exc:
        raise ScenarioCoordinateError(str(exc), lineno) from None


def _spec(text: str, lineno: int) -> NameSpecifier:
    try:
        return parse(text)
    except SpecifierError as exc:
        raise ScenarioSyntaxError(f"bad specifier: {exc}", lineno) from None


def _arity(args: list[str], n: int, directive: str, lineno: int) -> None:
    if len(args) != n:
        raise ScenarioSyntaxError(f"'{directive}' takes {n} arguments, got {len(args)}", lineno)


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()

    def declared(eid: str, lineno: int) -> str:
        if eid not in sc.nodes:
            raise UndeclaredNode(f"node {eid!r} is not declared", lineno)
        return eid

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        directive, *tail = line.split(None, 1)
        rest = tail[0] if tail else ""
        args = rest.split()
        if directive == "node":
            _arity(args, 3, directive, lineno)
            eid = args[0]
            try:
                check_eid(eid)
            except ValueError as exc:
                raise ScenarioSyntaxError(str(exc), lineno) from None
            if eid in sc.nodes:
                raise ScenarioSyntaxError(f"node {eid!r} declared twice", lineno)
            sc.nodes[eid] = _point(args[1], args[2], lineno)
        elif directive in ("range", "beacon", "latency", "until"):
            _arity(args, 1, directive, lineno)
            value = _nonneg(args[0], lineno, directive)
            if directive in ("beacon", "latency") and value == 0:
                raise ScenarioSyntaxError(f"{directive} must be > 0", lineno)
            attr = {"range": "range_km", "beacon": "beacon_period",
                    "latency": "latency_s", "until": "until"}[directive]
            setattr(sc, attr, value)
        elif directive == "seed":
            _arity(args, 1, directive, lineno)
            try:
                sc.seed = int(args[0])
            except ValueError:
                raise ScenarioSyntaxError(f"seed must be an integer, got {args[0]!r}", lineno) from None
        elif directive == "register":
            parts = rest.split(None, 3)
            if len(parts) < 4:
                raise ScenarioSyntaxError("usage: register <eid> <app_eid> <lifetime_s> <specifier>", lineno)
            node, app, lifetime, spec_text = parts
            try:
                check_eid(app)
            except ValueError as exc:
                raise ScenarioSyntaxError(str(exc), lineno) from None
            sc.registrations.append(Registration(
                declared(node, lineno), app, _nonneg(lifetime, lineno, "lifetime"),
                _spec(spec_text, lineno),
            ))
        elif directive == "move":
            _arity(args, 4, directive, lineno)
            sc.moves.append(Move(
                declared(args[0], lineno), _nonneg(args[1], lineno, "time"),
                _point(args[2], args[3], lineno),
            ))
        elif directive == "contact":
            _arity(args, 4, directive, lineno)
            t_open = _nonneg(args[2], lineno, "t_open")
            t_close = _nonneg(args[3], lineno, "t_close")
            if t_close <= t_open:
                raise ScenarioSyntaxError("contact must close after it opens", lineno)
            if args[0] == args[1]:
                raise ScenarioSyntaxError("contact needs two distinct nodes", lineno)
            sc.contacts.append(Contact(
                declared(args[0], lineno), declared(args[1], lineno), t_open, t_close
            ))
        elif directive == "inject":
            inj = _parse_inject(rest, lineno, declared)
            if any(i.bundle_id == inj.bundle_id for i in sc.injections):
                raise ScenarioSyntaxError(f"bundle id {inj.bundle_id!r} injected twice", lineno)
            sc.injections.append(inj)
        else:
            raise ScenarioSyntaxError(f"unknown directive {directive!r}", lineno)
    return sc


def _parse_inject(rest: str, lineno: int, declared) -> Injection:
    found = re.search(r"(?:^|\s)dst(?:\s+|$)", rest)
    if found is None:
        raise ScenarioSyntaxError("inject: missing 'dst <specifier>'", lineno)
    head, spec_text = rest[:found.start()], rest[found.end():]
    args = head.split()
    if len(args) < 3:
        raise ScenarioSyntaxError("usage: inject <bundle_id> <src_eid> <t> [ttl <s>] [via <eid>] dst <specifier>", lineno)
    bundle_id, source, t = args[0], declared(args[1], lineno), _nonneg(args[2], lineno, "time")
    ttl = via = None
    opts = args[3:]
    while opts:
        if len(opts) < 2:
            raise ScenarioSyntaxError(f"inject: option {opts[0]!r} needs a value", lineno)
        key, value, opts = opts[0], opts[1], opts[2:]
        if key == "ttl" and ttl is None:
            ttl = _nonneg(value, lineno, "ttl")
        elif key == "via" and via is None:
            via = declared(value, lineno)
        else:
            raise ScenarioSyntaxError(f"inject: unexpected option {key!r}", lineno)
    inj = Injection(bundle_id, source, t, _spec(spec_text, lineno), ttl, via)
    try:
        inj.build_bundle()
    except (BundleError, ValueError) as exc:
        raise ScenarioSyntaxError(f"inject {bundle_id}: {exc}", lineno) from None
    return inj


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))
