import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtnname.errors import (
    DuplicateSiblingAttribute,
    EmptySpecifier,
    EmptyToken,
    InvalidToken,
    MissingEquals,
    SpecifierError,
    UnbalancedBrackets,
)
from dtnname.specifier import AvPair, NameSpecifier, matches, parse, serialize

from helpers import prune, random_specifier


def test_role_subtree():
    ns = parse("[role = general [mission = command]]")
    assert ns == NameSpecifier((AvPair("role", "general", (AvPair("mission", "command"),)),))


def test_minimal():
    ns = parse("[a=b]")
    assert ns.roots == (AvPair("a", "b"),)
    assert ns.roots[0].children == ()


def test_multiword_value():
    ns = parse("[ location = known [ longitude = 116 degrees ] [ latitude = 112 degrees ] ]")
    loc = ns.get("location")
    assert loc.value == "known"
    assert [c.attribute for c in loc.children] == ["latitude", "longitude"]
    assert loc.child("longitude").value == "116 degrees"


def test_value_whitespace_collapsed():
    assert parse("[a =  x \t\n  y  ]").roots[0].value == "x y"


def test_siblings_sorted():
    assert parse("[z=1] [a=2]") == parse("[a=2] [z=1]")
    assert serialize(parse("[z=1] [a=2]")) == "[a=2] [z=1]"


@pytest.mark.parametrize(
    "text, error",
    [
        ("[x = 1", UnbalancedBrackets),
        ("[x = 1]]", UnbalancedBrackets),
        ("]", UnbalancedBrackets),
        ("[a=b [c=d]", UnbalancedBrackets),
        ("[x]", MissingEquals),
        ("[a b = c]", MissingEquals),
        ("[=b]", EmptyToken),
        ("[a=]", EmptyToken),
        ("[a=   [c=d]]", EmptyToken),
        ("[a=1] [a=2]", DuplicateSiblingAttribute),
        ("[r=1 [a=1] [a=2]]", DuplicateSiblingAttribute),
        ("", EmptySpecifier),
        ("   \n ", EmptySpecifier),
        ("[a=b=c]", InvalidToken),
        ("junk [a=b]", InvalidToken),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse(text)


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        parse("[")
    assert issubclass(UnbalancedBrackets, SpecifierError)


def test_avpair_validation():
    with pytest.raises(InvalidToken):
        AvPair("has space", "v")
    with pytest.raises(InvalidToken):
        AvPair("a", " padded")
    with pytest.raises(InvalidToken):
        AvPair("a", "two  spaces")
    with pytest.raises(EmptySpecifier):
        NameSpecifier(())


def test_serialize_examples():
    assert serialize(NameSpecifier((AvPair("a", "b"),))) == "[a=b]"
    assert serialize(parse("[role = general [ mission=command ]]")) == "[role=general [mission=command]]"
    assert str(parse("[a=b]")) == "[a=b]"


def test_random_round_trip():
    rng = random.Random(20)
    for _ in range(200):
        ns = random_specifier(rng)
        assert parse(serialize(ns)) == ns


def test_matches_examples():
    general = parse("[role=general]")
    commander = parse("[role=general [mission=command]]")
    assert matches(general, commander)
    assert not matches(commander, general)
    assert not matches(parse("[role=General]"), general)
    assert not matches(parse("[role=general] [unit=x]"), general)


def test_matches_reflexive_random():
    rng = random.Random(21)
    for _ in range(200):
        ns = random_specifier(rng)
        assert matches(ns, ns)


def test_star_is_literal():
    assert not matches(parse("[role=*]"), parse("[role=general]"))
    assert matches(parse("[role=*]"), parse("[role=*]"))


def test_hashable_and_order_free():
    a = parse("[x=1 [b=2] [a=3]] [c=4]")
    b = parse("[c=4] [x=1 [a=3] [b=2]]")
    assert a == b and hash(a) == hash(b)


# property tests

_attr = st.text(alphabet="abcdefgh-_.:", min_size=1, max_size=6)
_word = st.text(alphabet="abcxyz0123*/", min_size=1, max_size=5)
_value = st.lists(_word, min_size=1, max_size=3).map(" ".join)


def _pairs(depth):
    if depth == 0:
        kids = st.just(())
    else:
        kids = st.lists(st.deferred(lambda: _pairs(depth - 1)), max_size=3, unique_by=lambda p: p.attribute).map(tuple)
    return st.builds(AvPair, _attr, _value, kids)


specifiers = st.lists(_pairs(3), min_size=1, max_size=3, unique_by=lambda p: p.attribute).map(
    lambda roots: NameSpecifier(tuple(roots))
)


@given(specifiers)
def test_round_trip_property(ns):
    assert parse(serialize(ns)) == ns


@given(specifiers, st.lists(st.sampled_from([" ", "\t", "\n", "  "]), min_size=64, max_size=64))
def test_whitespace_insensitive(ns, pads):
    text = serialize(ns)
    out, k = [], 0
    for i, ch in enumerate(text):
        if ch in "[]=" or (ch == " " and text[i - 1] == "]"):
            out.append(pads[k % len(pads)])
            k += 1
        out.append(ch)
        if ch in "[]=":
            out.append(pads[k % len(pads)])
            k += 1
    assert parse("".join(out)) == ns


@settings(max_examples=200)
@given(specifiers, st.randoms(use_true_random=False))
def test_transitive_narrowing(ns, rng):
    q2 = prune(rng, ns)
    q1 = prune(rng, q2)
    assert matches(q2, ns)
    assert matches(q1, q2)
    assert matches(q1, ns)


@given(specifiers, st.randoms(use_true_random=False))
def test_monotone_under_removal(ns, rng):
    query = prune(rng, ns, keep=0.8)
    assert matches(query, ns)
    smaller = prune(rng, query, keep=0.5)
    assert matches(smaller, ns)
