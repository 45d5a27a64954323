"""Attribute-value name-specifiers.

A name-specifier is a forest of av-pairs written with square brackets::

    [role = general [mission = command]]
    [location = known [longitude = 116 degrees] [latitude = 40 degrees]]

Each pair may carry child pairs that refine it.  Siblings describe
independent categories, so they must have distinct attributes and their
order carries no meaning: both ``AvPair`` and ``NameSpecifier`` keep their
children sorted by attribute, which makes ``==`` and ``hash`` order-free.

Values run from ``=`` to the next bracket, so multi-word values such as
``116 degrees`` are allowed.  Whitespace around tokens is ignored and runs
of whitespace inside a value collapse to a single space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import (
    DuplicateSiblingAttribute,
    EmptySpecifier,
    EmptyToken,
    InvalidToken,
    MissingEquals,
    UnbalancedBrackets,
)

_RESERVED = frozenset("[]=")

__all__ = ["AvPair", "NameSpecifier", "parse", "serialize", "matches"]


def _check_attribute(attribute: str) -> None:
    if not attribute:
        raise EmptyToken("empty attribute")
    for ch in attribute:
        if ch in _RESERVED or ch.isspace():
            raise InvalidToken(f"attribute {attribute!r} contains {ch!r}")


def _check_value(value: str) -> None:
    if not value:
        raise EmptyToken("empty value")
    if any(ch in _RESERVED for ch in value):
        raise InvalidToken(f"value {value!r} contains a reserved character")
    if " ".join(value.split()) != value or any(
        ch.isspace() and ch != " " for ch in value
    ):
        raise InvalidToken(f"value {value!r} is not whitespace-normalized")


def _sorted_unique(pairs: Iterable[AvPair]) -> tuple[AvPair, ...]:
    ordered = tuple(sorted(pairs, key=lambda p: p.attribute))
    for left, right in zip(ordered, ordered[1:]):
        if left.attribute == right.attribute:
            raise DuplicateSiblingAttribute(
                f"attribute {left.attribute!r} appears twice among siblings"
            )
    return ordered


@dataclass(frozen=True)
class AvPair:
    """One ``attribute=value`` node together with the pairs that depend on it."""

    attribute: str
    value: str
    children: tuple[AvPair, ...] = field(default=())

    def __post_init__(self) -> None:
        _check_attribute(self.attribute)
        _check_value(self.value)
        object.__setattr__(self, "children", _sorted_unique(self.children))

    def child(self, attribute: str) -> AvPair | None:
        for pair in self.children:
            if pair.attribute == attribute:
                return pair
        return None

    def leaves(self) -> Iterator[tuple[AvPair, ...]]:
        """Yield the path (root first) to every leaf below and including self."""
        if not self.children:
            yield (self,)
            return
        for pair in self.children:
            for path in pair.leaves():
                yield (self, *path)

    def __str__(self) -> str:
        return _render(self)


@dataclass(frozen=True)
class NameSpecifier:
    roots: tuple[AvPair, ...]

    def __post_init__(self) -> None:
        roots = _sorted_unique(self.roots)
        if not roots:
            raise EmptySpecifier("a name-specifier needs at least one av-pair")
        object.__setattr__(self, "roots", roots)

    @classmethod
    def parse(cls, text: str) -> NameSpecifier:
        return parse(text)

    def get(self, attribute: str) -> AvPair | None:
        for pair in self.roots:
            if pair.attribute == attribute:
                return pair
        return None

    def without(self, attribute: str) -> NameSpecifier:
        """Return a copy lacking the root pair ``attribute``.

        Raises EmptySpecifier if nothing would be left.
        """
        return NameSpecifier(tuple(p for p in self.roots if p.attribute != attribute))

    def leaves(self) -> Iterator[tuple[AvPair, ...]]:
        for pair in self.roots:
            yield from pair.leaves()

    def __str__(self) -> str:
        return serialize(self)


def _render(pair: AvPair) -> str:
    inner = "".join(" " + _render(c) for c in pair.children)
    return f"[{pair.attribute}={pair.value}{inner}]"


def serialize(ns: NameSpecifier) -> str:
    """Canonical text for ``ns``; root groups are separated by one space."""
    return " ".join(_render(p) for p in ns.roots)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        text, pos = self.text, self.pos
        while pos < len(text) and text[pos].isspace():
            pos += 1
        self.pos = pos

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def groups(self, closing: bool) -> list[AvPair]:
        """Read consecutive groups until EOF (top level) or ``]`` (nested)."""
        pairs = []
        while True:
            self.skip_ws()
            ch = self.peek()
            if ch == "[":
                pairs.append(self.group())
            elif ch == "]":
                if not closing:
                    raise UnbalancedBrackets("unexpected ']'", self.pos)
                return pairs
            elif ch == "":
                if closing:
                    raise UnbalancedBrackets("missing ']'", self.pos)
                return pairs
            else:
                raise InvalidToken(f"unexpected {ch!r} outside an av-pair", self.pos)

    def group(self) -> AvPair:
        start = self.pos
        self.pos += 1  # '['
        self.skip_ws()
        attr_start = self.pos
        text = self.text
        while self.pos < len(text) and not (
            text[self.pos] in _RESERVED or text[self.pos].isspace()
        ):
            self.pos += 1
        attribute = text[attr_start:self.pos]
        self.skip_ws()
        ch = self.peek()
        if ch == "":
            raise UnbalancedBrackets("missing ']'", start)
        if ch != "=":
            if not attribute:
                raise EmptyToken("empty attribute", attr_start)
            raise MissingEquals(f"expected '=' after {attribute!r}", self.pos)
        if not attribute:
            raise EmptyToken("empty attribute", attr_start)
        self.pos += 1
        value_start = self.pos
        while self.pos < len(text) and text[self.pos] not in "[]":
            self.pos += 1
        if self.pos >= len(text):
            raise UnbalancedBrackets("missing ']'", start)
        value = " ".join(text[value_start:self.pos].split())
        if not value:
            raise EmptyToken(f"empty value for {attribute!r}", value_start)
        children = self.groups(closing=True)
        self.pos += 1  # ']'
        try:
            return AvPair(attribute, value, tuple(children))
        except (InvalidToken, DuplicateSiblingAttribute) as exc:
            raise type(exc)(str(exc), start) from None


def parse(text: str) -> NameSpecifier:
    """Parse bracketed specifier text into its canonical form."""
    parser = _Parser(text)
    roots = parser.groups(closing=False)
    if not roots:
        raise EmptySpecifier("no av-pair groups found")
    try:
        return NameSpecifier(tuple(roots))
    except DuplicateSiblingAttribute as exc:
        raise DuplicateSiblingAttribute(str(exc), 0) from None


def _pairs_match(query: tuple[AvPair, ...], advert: tuple[AvPair, ...]) -> bool:
    by_attr = {p.attribute: p for p in advert}
    for q in query:
        a = by_attr.get(q.attribute)
        if a is None or a.value != q.value:
            return False
        if q.children and not _pairs_match(q.children, a.children):
            return False
    return True


def matches(query: NameSpecifier, advert: NameSpecifier) -> bool:
    """True when every pair of ``query`` appears in ``advert`` along the same path.

    Attributes the query leaves out are "don't care", so a short query
    matches any advert that extends it.
    """
    return _pairs_match(query.roots, advert.roots)
