import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import reachable_markings
from pnltl import models
from pnltl.codec import (
    AFFINE,
    DEFAULT16_MAX,
    Field,
    ModelNotHandled,
    PlanningError,
    Scheme,
    StateStore,
    decode,
    drw_read,
    drw_write,
    encode,
    fire_encoded,
    overflow_check,
    plan_encoding,
    read_field,
    write_field,
)
from pnltl.invariants import compute_invariant_bounds, invariant_basis, semi_positive_invariants
from pnltl.petri import NetBuilder, fire, iter_enabled


def bitvector_read(words, start, length):
    big = sum(w << (32 * i) for i, w in enumerate(words))
    return (big >> start) & ((1 << length) - 1)


def cycle_net(m0=(1, 0)):
    b = NetBuilder()
    b.place("p1", m0[0])
    b.place("p2", m0[1])
    b.transition("go", ["p1"], ["p2"])
    b.transition("back", ["p2"], ["p1"])
    return b.build()


# -- layout -----------------------------------------------------------------------


def test_one_safe_uses_one_bit_per_place():
    b = NetBuilder()
    names = [b.place(f"p{i}", 1 if i == 0 else 0) for i in range(10)]
    for i in range(10):
        b.transition(f"t{i}", [names[i]], [names[(i + 1) % 10]])
    plan = plan_encoding(b.build())
    assert plan.scheme is Scheme.ONE_SAFE
    assert plan.total_bits == 10


def test_unit_of_three_places_takes_two_bits():
    net = models.philosophers(3, nupn=True)
    plan = plan_encoding(net)
    assert plan.scheme is Scheme.NUPN
    assert plan.unit_fields[0].length == 2
    assert plan.unit_fields[3].length == 1  # a lone fork


def test_invariant_bound_one_gives_one_bit():
    plan = plan_encoding(cycle_net(), Scheme.PINVARIANT)
    widths = sorted(plan.place_field(p).length if plan.place_field(p) else 0 for p in range(2))
    assert widths == [0, 1]
    assert plan.bounds == [1, 1]


def test_default16_and_upgrade():
    net = models.source_overflow()
    assert plan_encoding(net).scheme is Scheme.DEFAULT16
    big = NetBuilder()
    big.place("p", 70000)
    big.transition("gen", [], ["p"])
    plan = plan_encoding(big.build())
    assert plan.scheme is Scheme.DEFAULT32
    assert plan.fields[0].length == 32


def test_inapplicable_scheme_is_a_planning_error():
    with pytest.raises(PlanningError):
        plan_encoding(models.drain(3), Scheme.NUPN)
    with pytest.raises(PlanningError):
        plan_encoding(models.drain(3), Scheme.ONE_SAFE)
    with pytest.raises(PlanningError):
        plan_encoding(models.source_overflow(), Scheme.PINVARIANT)


def test_layout_ranges_are_disjoint():
    for net, _ in models.corpus():
        plan = plan_encoding(net)
        ranges = {}
        for p in range(net.num_places):
            f = plan.place_field(p)
            if f is not None and f.length:
                ranges[(f.start, f.length)] = True
        spans = sorted(ranges)
        for (s1, l1), (s2, _) in zip(spans, spans[1:]):
            assert s1 + l1 <= s2
        assert all(s + l <= plan.total_bits for s, l in spans)


def test_layout_tsv_header():
    net = models.drain(3)
    text = plan_encoding(net, Scheme.DEFAULT16).layout_tsv(net)
    assert text.splitlines() == ["place\tstart_pos\tbit_len", "p1\t0\t16", "p2\t16\t16"]


# -- overflow ------------------------------------------------------------------------


def test_overflow_rules():
    net = models.drain(3)
    plan = plan_encoding(net, Scheme.DEFAULT16)
    overflow_check(plan, DEFAULT16_MAX, 0)
    with pytest.raises(ModelNotHandled):
        overflow_check(plan, DEFAULT16_MAX + 1, 0)
    safe = plan_encoding(cycle_net(), Scheme.ONE_SAFE)
    with pytest.raises(ModelNotHandled):
        overflow_check(safe, 2, 0)
    pinv = plan_encoding(cycle_net(), Scheme.PINVARIANT)
    with pytest.raises(AssertionError):
        overflow_check(pinv, 2, 0)


# -- direct read/write ------------------------------------------------------------------


def test_read_within_one_word():
    words = [0b101 << 4]
    assert read_field(words, 4, 3) == 5
    assert read_field(words, 4, 3) == bitvector_read(words, 4, 3)


def test_read_across_two_words():
    value = 0b1011
    words = [(value & 0b11) << 30, value >> 2]
    assert words == [0b11 << 30, 0b10]
    assert read_field(words, 30, 4) == 11


def test_cross_word_masks_by_hand():
    f = Field.at(30, 4)
    assert f.cross and f.index == 0 and f.offset == 30
    assert f.read_low == 0xC0000000
    assert f.zero_low == 0x3FFFFFFF
    assert f.read_high == 0b11
    assert f.zero_high == 0xFFFFFFFC
    words = [0xFFFFFFFF, 0xFFFFFFFF]
    write_field(words, 30, 4, 0)
    assert words == [0x3FFFFFFF, 0xFFFFFFFC]
    write_field(words, 30, 4, 15)
    assert words == [0xFFFFFFFF, 0xFFFFFFFF]


def test_offset_zero_never_crosses():
    for length in range(1, 33):
        assert not Field.at(64, length).cross


def test_write_zero_keeps_neighbours():
    words = [0xFFFFFFFF]
    write_field(words, 4, 3, 5)
    write_field(words, 4, 3, 0)
    assert read_field(words, 4, 3) == 0
    assert words[0] == 0xFFFFFFFF & ~(0b111 << 4)


@settings(max_examples=400, deadline=None)
@given(start=st.integers(0, 95), length=st.integers(1, 32), data=st.data())
def test_write_then_read_any_width(start, length, data):
    words = data.draw(st.lists(st.integers(0, 0xFFFFFFFF), min_size=4, max_size=4))
    value = data.draw(st.integers(0, (1 << length) - 1))
    before = list(words)
    write_field(words, start, length, value)
    assert read_field(words, start, length) == value == bitvector_read(words, start, length)
    mask = ((1 << length) - 1) << start
    big_before = sum(w << (32 * i) for i, w in enumerate(before))
    big_after = sum(w << (32 * i) for i, w in enumerate(words))
    assert (big_before ^ big_after) & ~mask == 0


def test_nupn_marked_place_reads_by_code():
    net = models.philosophers(3, nupn=True)
    plan = plan_encoding(net)
    words = list(encode(plan, net.initial_marking))
    think0, has0 = net.place_index("think0"), net.place_index("hasL0")
    assert drw_read(plan, words, think0) == 1
    assert drw_read(plan, words, has0) == 0
    drw_write(plan, words, think0, 0)
    drw_write(plan, words, has0, 1)
    assert drw_read(plan, words, has0) == 1
    assert decode(plan, words)[has0] == 1 and decode(plan, words)[think0] == 0
    with pytest.raises(ModelNotHandled):
        drw_write(plan, words, think0, 1)


# -- encode / decode ---------------------------------------------------------------------


def all_plans(net):
    plans = [plan_encoding(net, Scheme.DEFAULT16), plan_encoding(net, Scheme.DEFAULT32)]
    for scheme in (Scheme.ONE_SAFE, Scheme.NUPN, Scheme.PINVARIANT):
        try:
            plans.append(plan_encoding(net, scheme))
        except PlanningError:
            pass
    return plans


def test_roundtrip_on_reachable_markings():
    seen = set()
    for net, _ in models.corpus():
        reach = reachable_markings(net)
        for plan in all_plans(net):
            seen.add(plan.scheme)
            for m in reach:
                x = encode(plan, m)
                assert decode(plan, x) == m
                assert encode(plan, decode(plan, x)) == x
                for p in range(net.num_places):
                    assert drw_read(plan, x, p) == m[p]
    assert seen == set(Scheme)


def test_all_zero_marking_encodes_to_zero_words():
    net = models.drain(3)
    for scheme in (Scheme.DEFAULT16, Scheme.DEFAULT32):
        plan = plan_encoding(net, scheme)
        assert set(encode(plan, (0, 0))) == {0}


def test_random_markings_roundtrip_per_scheme():
    rng = random.Random(3)
    net = models.philosophers(4, nupn=True)
    plans = {p.scheme: p for p in all_plans(net)}
    for scheme, plan in plans.items():
        for _ in range(1000):
            if scheme is Scheme.NUPN:
                m = [0] * net.num_places
                for unit in net.units:
                    k = rng.randint(0, len(unit.local_places))
                    if k:
                        m[unit.local_places[k - 1]] = 1
            elif scheme in (Scheme.ONE_SAFE, Scheme.PINVARIANT):
                m = list(rng.choice(sorted(reachable_markings(net))))
            else:
                m = [rng.randint(0, plan.limits[p]) for p in range(net.num_places)]
            m = tuple(m)
            assert decode(plan, encode(plan, m)) == m


def test_fire_encoded_matches_dense_fire():
    for net, _ in models.corpus():
        for plan in all_plans(net):
            for m in reachable_markings(net):
                x = encode(plan, m)
                for t in iter_enabled(net, m):
                    assert decode(plan, fire_encoded(plan, net, x, t)) == fire(net, m, t)


# -- invariants --------------------------------------------------------------------------


def test_two_place_cycle_bounds():
    assert compute_invariant_bounds(cycle_net()) == [1, 1]


def test_source_transition_leaves_place_unbounded():
    b = NetBuilder()
    b.place("p")
    b.place("q", 1)
    b.transition("gen", [], ["p"])
    assert compute_invariant_bounds(b.build()) == [None, 1]


def test_weighted_invariant_bounds():
    b = NetBuilder()
    b.place("p1", 1)
    b.place("p2", 0)
    b.transition("split", {"p1": 1}, {"p2": 2})
    b.transition("join", {"p2": 2}, {"p1": 1})
    assert compute_invariant_bounds(b.build()) == [1, 2]


def test_invariants_annihilate_incidence():
    for net, _ in models.corpus():
        c = net.incidence()
        for y in semi_positive_invariants(c) or []:
            assert all(v >= 0 for v in y)
            for t in range(net.num_transitions):
                assert sum(y[p] * c[p][t] for p in range(net.num_places)) == 0
        basis = invariant_basis(net)
        for y in basis.vectors:
            for t in range(net.num_transitions):
                assert sum(y[p] * c[p][t] for p in range(net.num_places)) == 0


def test_bounds_are_never_exceeded():
    for net, _ in models.corpus():
        bounds = compute_invariant_bounds(net)
        for m in reachable_markings(net):
            assert all(b is None or v <= b for v, b in zip(m, bounds))


def test_redundant_places_are_affine():
    net = models.producer_consumer(3)
    plan = plan_encoding(net, Scheme.PINVARIANT)
    assert any(k == AFFINE for k in plan.kinds)
    for m in reachable_markings(net):
        assert decode(plan, encode(plan, m)) == m


# -- state store ---------------------------------------------------------------------------


def test_intern_idempotent_and_injective():
    store = StateStore(2)
    a, fresh = store.intern((1, 2))
    assert fresh
    assert store.intern((1, 2)) == (a, False)
    b, fresh = store.intern((1, 3))
    assert fresh and b != a
    assert store.lookup((1, 3)) == b
    assert store.lookup((9, 9)) is None


def test_hundred_thousand_distinct_markings():
    rng = random.Random(11)
    store = StateStore(3)
    keys = set()
    while len(keys) < 100_000:
        keys.add(tuple(rng.getrandbits(32) for _ in range(3)))
    ids = {store.intern(k)[0] for k in keys}
    assert len(ids) == len(store) == 100_000
    hist = store.chain_histogram()
    assert sum(hist.values()) >= 100_000 / 0.75
    assert max(hist) <= 12
    assert all(store.lookup(k) is not None for k in list(keys)[:1000])
