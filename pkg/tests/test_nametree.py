import random

import pytest

from dtnname.nametree import NameRecord, NameTree
from dtnname.specifier import parse

from helpers import brute_lookup, prune, random_specifier

FIG6 = (
    "[role = general [mission = command]]"
    " [location = known [longitude = 116 degrees] [latitude = 40 degrees]]"
)


def test_two_roles_share_attribute_node():
    tree = NameTree()
    tree.insert(parse("[role=general]"), NameRecord("A"), 0)
    tree.insert(parse("[role=soldier]"), NameRecord("B"), 0)
    assert tree.level() == {"role": ["general", "soldier"]}
    assert len(tree) == 2
    # brute-force oracle: one distinct (attr, value) per distinct root pair
    distinct = {(p.attribute, p.value) for s in ("[role=general]", "[role=soldier]") for p in parse(s).roots}
    assert tree.node_count() == len(distinct)


def test_refresh_replaces_record():
    tree = NameTree()
    first = tree.insert(parse("[role=general]"), NameRecord("A", (), 10), 0)
    second = tree.insert(parse("[role=general]"), NameRecord("A", ("B",), 20), 5)
    assert first == second
    assert len(tree) == 1
    (rec,) = tree.lookup(parse("[role=general]"), 15)
    assert rec.expires_at == 20 and rec.next_hop_eids == ("B",)


def test_fig6_leaves_point_to_record():
    tree = NameTree()
    rid = tree.insert(parse(FIG6), NameRecord("A"), 0)
    for path in [
        (("role", "general"), ("mission", "command")),
        (("location", "known"), ("longitude", "116 degrees")),
        (("location", "known"), ("latitude", "40 degrees")),
    ]:
        assert tree.leaf_records(path) == {rid}
    assert tree.leaf_records((("role", "general"),)) == set()


def test_lookup_examples():
    tree = NameTree()
    tree.insert(parse("[role=general [mission=command]]"), NameRecord("A"), 0)
    tree.insert(parse("[role=soldier]"), NameRecord("B"), 0)
    assert [r.destination_eid for r in tree.lookup(parse("[role=general]"), 0)] == ["A"]
    assert tree.lookup(parse("[rank=major]"), 0) == []
    assert tree.lookup(parse("[role=general [mission=patrol]]"), 0) == []


def test_lookup_sorted_by_eid():
    tree = NameTree()
    for eid in ["c", "a", "b"]:
        tree.insert(parse(f"[role=general [name={eid}]]"), NameRecord(eid), 0)
    assert [r.destination_eid for r in tree.lookup(parse("[role=general]"), 0)] == ["a", "b", "c"]


def test_expiry_boundary():
    tree = NameTree()
    tree.insert(parse("[a=b]"), NameRecord("A", (), 10), 0)
    assert tree.expire(10) == 0
    assert len(tree.lookup(parse("[a=b]"), 10)) == 1
    assert tree.lookup(parse("[a=b]"), 10.5) == []
    assert tree.expire(11) == 1
    assert tree.level() == {}
    assert tree.node_count() == 0


def test_expire_prunes_only_dead_branches():
    tree = NameTree()
    tree.insert(parse("[role=general [mission=command]]"), NameRecord("A", (), 5), 0)
    tree.insert(parse("[role=general [mission=patrol]]"), NameRecord("B", (), 50), 0)
    tree.expire(6)
    assert tree.level((("role", "general"),)) == {"mission": ["patrol"]}


def test_no_resurrection():
    tree = NameTree()
    tree.insert(parse("[a=b]"), NameRecord("A", (), 1), 0)
    tree.expire(2)
    assert tree.lookup(parse("[a=b]"), 0) == []
    tree.insert(parse("[a=b]"), NameRecord("A", (), 9), 2)
    assert len(tree.lookup(parse("[a=b]"), 2)) == 1


def test_insert_rejects_already_expired():
    with pytest.raises(ValueError):
        NameTree().insert(parse("[a=b]"), NameRecord("A", (), 1), 2)


def test_prefix_sharing():
    tree = NameTree()
    for i in range(10):
        tree.insert(parse(f"[role=general [id=n{i}]]"), NameRecord(f"n{i}"), 0)
    assert tree.level() == {"role": ["general"]}
    assert tree.node_count() == 11


def test_dump_format():
    tree = NameTree()
    tree.insert(parse("[role=soldier]"), NameRecord("B", (), 7.5), 0)
    tree.insert(parse("[role=general [mission=command]]"), NameRecord("A", (), 10), 0)
    assert tree.dump() == (
        "A 10 [role=general [mission=command]]\n"
        "B 7.5 [role=soldier]\n"
    )


def test_random_lookup_matches_brute_force():
    rng = random.Random(3)
    tree = NameTree()
    adverts = []
    for i in range(100):
        s = random_specifier(rng, depth=3, fanout=3)
        r = NameRecord(f"n{i:03d}", (), float("inf"))
        tree.insert(s, r, 0)
        adverts.append((s, r))
    hits = 0
    for _ in range(100):
        q = prune(rng, rng.choice(adverts)[0]) if rng.random() < 0.7 else random_specifier(rng, 2, 2)
        got = tree.lookup(q, 0)
        assert got == brute_lookup(adverts, q, 0)
        hits += bool(got)
    assert hits > 50


def test_random_insert_expire_interleaving():
    rng = random.Random(4)
    tree = NameTree()
    live = {}
    now = 0.0
    for step in range(400):
        now += rng.random()
        op = rng.random()
        if op < 0.5:
            s = random_specifier(rng, depth=2, fanout=2)
            eid = f"n{rng.randrange(30)}"
            rec = NameRecord(eid, (), now + rng.uniform(0, 20))
            tree.insert(s, rec, now)
            live[(str(s), eid)] = (s, rec)
        elif op < 0.7:
            tree.expire(now)
            live = {k: v for k, v in live.items() if v[1].expires_at >= now}
        else:
            q = prune(rng, rng.choice(list(live.values()))[0]) if live else random_specifier(rng, 1, 1)
            assert tree.lookup(q, now) == brute_lookup(live.values(), q, now)
