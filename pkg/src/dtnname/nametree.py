"""Name-tree: the merged store of every name-specifier a node knows about.

Unlike a single specifier, an attribute node in the tree may own several
value nodes.  Each inserted specifier hangs a reference to its
:class:`NameRecord` off every one of its leaf values.  Every value node also
keeps the set of records whose specifier passes through it, which is what
lookup intersects and what pruning consults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .specifier import AvPair, NameSpecifier, serialize

__all__ = ["NameRecord", "NameTree", "format_time"]


def format_time(t: float) -> str:
    text = f"{t:.6f}".rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


@dataclass(frozen=True)
class NameRecord:
    destination_eid: str
    next_hop_eids: tuple[str, ...] = ()
    expires_at: float = float("inf")

    def __post_init__(self) -> None:
        if not self.destination_eid:
            raise ValueError("destination_eid must be non-empty")
        object.__setattr__(self, "next_hop_eids", tuple(self.next_hop_eids))


@dataclass
class _ValueNode:
    attributes: dict[str, _AttributeNode] = field(default_factory=dict)
    leaf_records: set[int] = field(default_factory=set)
    through: set[int] = field(default_factory=set)


@dataclass
class _AttributeNode:
    values: dict[str, _ValueNode] = field(default_factory=dict)


@dataclass
class _Entry:
    specifier: NameSpecifier
    record: NameRecord


class NameTree:
    def __init__(self) -> None:
        self._root: dict[str, _AttributeNode] = {}
        self._entries: dict[int, _Entry] = {}
        self._keys: dict[tuple[str, str], int] = {}
        self._next_id = 1

    def __len__(self) -> int:
        return len(self._entries)

    def insert(self, ns: NameSpecifier, record: NameRecord, now: float) -> int:
        """Merge ``ns`` into the tree and bind its leaves to ``record``.

        Re-inserting the same specifier for the same destination replaces the
        stored record in place and returns the original record id.
        """
        if record.expires_at < now:
            raise ValueError(
                f"record expires at {record.expires_at}, before insertion time {now}"
            )
        key = (serialize(ns), record.destination_eid)
        rid = self._keys.get(key)
        if rid is not None:
            self._entries[rid].record = record
            return rid
        rid = self._next_id
        self._next_id += 1
        self._keys[key] = rid
        self._entries[rid] = _Entry(ns, record)
        for pair in ns.roots:
            self._attach(self._root, pair, rid)
        return rid

    def _attach(self, level: dict[str, _AttributeNode], pair: AvPair, rid: int) -> None:
        attr = level.setdefault(pair.attribute, _AttributeNode())
        node = attr.values.setdefault(pair.value, _ValueNode())
        node.through.add(rid)
        if not pair.children:
            node.leaf_records.add(rid)
        for child in pair.children:
            self._attach(node.attributes, child, rid)

    def _candidates(self, level: dict[str, _AttributeNode], pairs: tuple[AvPair, ...]) -> set[int]:
        result: set[int] | None = None
        for q in pairs:
            attr = level.get(q.attribute)
            node = attr.values.get(q.value) if attr else None
            if node is None:
                return set()
            found = self._candidates(node.attributes, q.children) if q.children else node.through
            result = set(found) if result is None else result & found
            if not result:
                return set()
        return result if result is not None else set()

    def lookup(self, query: NameSpecifier, now: float) -> list[NameRecord]:
        """Live records whose specifier is matched by ``query``, sorted by EID."""
        hits = [
            self._entries[rid].record
            for rid in self._candidates(self._root, query.roots)
            if self._entries[rid].record.expires_at >= now
        ]
        hits.sort(key=lambda r: (r.destination_eid, r.expires_at, r.next_hop_eids))
        return hits

    def lookup_ids(self, query: NameSpecifier, now: float) -> list[int]:
        return sorted(
            rid
            for rid in self._candidates(self._root, query.roots)
            if self._entries[rid].record.expires_at >= now
        )

    def expire(self, now: float) -> int:
        """Drop records that expired strictly before ``now`` and prune empty nodes."""
        dead = [rid for rid, e in self._entries.items() if e.record.expires_at < now]
        for rid in dead:
            self.remove(rid)
        return len(dead)

    def remove(self, rid: int) -> None:
        entry = self._entries.pop(rid)
        del self._keys[(serialize(entry.specifier), entry.record.destination_eid)]
        for pair in entry.specifier.roots:
            self._detach(self._root, pair, rid)

    def _detach(self, level: dict[str, _AttributeNode], pair: AvPair, rid: int) -> None:
        attr = level[pair.attribute]
        node = attr.values[pair.value]
        node.through.discard(rid)
        node.leaf_records.discard(rid)
        for child in pair.children:
            self._detach(node.attributes, child, rid)
        if not node.through:
            del attr.values[pair.value]
            if not attr.values:
                del level[pair.attribute]

    # introspection

    def record(self, rid: int) -> NameRecord:
        return self._entries[rid].record

    def specifier(self, rid: int) -> NameSpecifier:
        return self._entries[rid].specifier

    def items(self) -> Iterator[tuple[int, NameSpecifier, NameRecord]]:
        for rid, e in sorted(self._entries.items()):
            yield rid, e.specifier, e.record

    def _node(self, path: tuple[tuple[str, str], ...]) -> _ValueNode | None:
        level = self._root
        node = None
        for attribute, value in path:
            attr = level.get(attribute)
            node = attr.values.get(value) if attr else None
            if node is None:
                return None
            level = node.attributes
        return node

    def level(self, path: tuple[tuple[str, str], ...] = ()) -> dict[str, list[str]]:
        """Attributes and their values directly below ``path`` of (attr, value) steps."""
        if path:
            node = self._node(path)
            if node is None:
                return {}
            level = node.attributes
        else:
            level = self._root
        return {a: sorted(n.values) for a, n in sorted(level.items())}

    def leaf_records(self, path: tuple[tuple[str, str], ...]) -> set[int]:
        node = self._node(path)
        return set(node.leaf_records) if node else set()

    def node_count(self) -> int:
        def count(level: dict[str, _AttributeNode]) -> int:
            return sum(
                1 + count(v.attributes) for a in level.values() for v in a.values.values()
            )

        return count(self._root)

    def dump(self) -> str:
        """One line per record: ``<eid> <expires_at> <specifier>``, sorted by EID."""
        rows = sorted(
            (e.record.destination_eid, serialize(e.specifier), e.record.expires_at)
            for e in self._entries.values()
        )
        return "".join(f"{eid} {format_time(exp)} {spec}\n" for eid, spec, exp in rows)
