"""Generators, oracles and trace parsing shared by the test modules."""

from __future__ import annotations

import math
import random
import re

from dtnname.specifier import AvPair, NameSpecifier, matches

ATTRIBUTES = ["role", "mission", "unit", "rank", "zone", "sensor", "status", "a", "b-c"]
VALUES = ["general", "soldier", "command", "116 degrees", "x", "alpha beta gamma", "7", "*", "ok"]


def random_pair(rng: random.Random, depth: int, fanout: int) -> AvPair:
    children = []
    if depth > 1:
        for attr in rng.sample(ATTRIBUTES, rng.randint(0, fanout)):
            children.append(_with_attr(rng, attr, depth - 1, fanout))
    return AvPair(rng.choice(ATTRIBUTES), rng.choice(VALUES), tuple(children))


def _with_attr(rng, attr, depth, fanout) -> AvPair:
    p = random_pair(rng, depth, fanout)
    return AvPair(attr, p.value, p.children)


def random_specifier(rng: random.Random, depth: int = 5, fanout: int = 4) -> NameSpecifier:
    attrs = rng.sample(ATTRIBUTES, rng.randint(1, fanout))
    return NameSpecifier(tuple(_with_attr(rng, a, rng.randint(1, depth), fanout) for a in attrs))


def prune(rng: random.Random, ns: NameSpecifier, keep: float = 0.6) -> NameSpecifier:
    """A random generalisation of ``ns`` (drops subtrees), never empty."""

    def cut(pair: AvPair) -> AvPair:
        kids = tuple(cut(c) for c in pair.children if rng.random() < keep)
        return AvPair(pair.attribute, pair.value, kids)

    roots = [cut(p) for p in ns.roots if rng.random() < keep] or [cut(ns.roots[0])]
    return NameSpecifier(tuple(roots))


def brute_lookup(adverts, query, now):
    """Oracle for NameTree.lookup: a filtered list of (specifier, record)."""
    return sorted(
        (r for s, r in adverts if r.expires_at >= now and matches(query, s)),
        key=lambda r: (r.destination_eid, r.expires_at, r.next_hop_eids),
    )


def oracle_distance_km(lon1, lat1, lon2, lat2, radius=6371.0) -> float:
    """Central angle via atan2 of cross and dot products of unit vectors."""

    def vec(lon, lat):
        lo, la = math.radians(lon), math.radians(lat)
        return (math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la))

    ax, ay, az = vec(lon1, lat1)
    bx, by, bz = vec(lon2, lat2)
    cx, cy, cz = ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx
    cross = math.sqrt(cx * cx + cy * cy + cz * cz)
    dot = ax * bx + ay * by + az * bz
    return radius * math.atan2(cross, dot)


_LINE = re.compile(r"^t=(\S+) ev=(\S+) node=(\S+) bundle=(\S+) detail=(.*)$")


def parse_trace(lines):
    events = []
    for line in lines:
        m = _LINE.match(line)
        assert m, f"bad trace line {line!r}"
        t, kind, node, bundle, detail = m.groups()
        fields = dict(kv.split("=", 1) for kv in detail.split(",") if kv) if kind != "CREATE" else {}
        events.append({"t": float(t), "kind": kind, "node": node, "bundle": bundle, "detail": fields})
    return events


def km_offsets(base_lon: float, base_lat: float, east_km: float, north_km: float):
    """Approximate (lon, lat) a given number of km east/north of a base point."""
    deg = 180.0 / (math.pi * 6371.0)
    return (
        base_lon + east_km * deg / math.cos(math.radians(base_lat)),
        base_lat + north_km * deg,
    )
