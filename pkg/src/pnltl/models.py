"""Parametrised nets for tests, demos and benchmarking.

Every builder returns a :class:`~pnltl.petri.PetriNet`; names follow a
``kind-parameter`` scheme. :func:`corpus` bundles a fixed collection of
small bounded nets, each with a handful of formulas.
"""

from __future__ import annotations

import random
from typing import Optional

from pnltl.petri import NetBuilder, PetriNet


def philosophers(n: int, nupn: bool = False) -> PetriNet:
    """Dining philosophers picking the left fork first (can deadlock)."""
    b = NetBuilder(f"philosophers-{n}{'-nupn' if nupn else ''}")
    for i in range(n):
        b.place(f"think{i}", 1)
        b.place(f"hasL{i}")
        b.place(f"eat{i}")
    for i in range(n):
        b.place(f"fork{i}", 1)
    for i in range(n):
        right = (i + 1) % n
        b.transition(f"takeL{i}", [f"think{i}", f"fork{i}"], [f"hasL{i}"])
        b.transition(f"takeR{i}", [f"hasL{i}", f"fork{right}"], [f"eat{i}"])
        b.transition(f"release{i}", [f"eat{i}"], [f"think{i}", f"fork{i}", f"fork{right}"])
    if nupn:
        for i in range(n):
            b.unit(f"phil{i}", [f"think{i}", f"hasL{i}", f"eat{i}"])
        for i in range(n):
            b.unit(f"f{i}", [f"fork{i}"])
    return b.build(unit_safe=nupn)


def token_ring(n: int) -> PetriNet:
    """A token circulating among ``n`` stations; the holder may enter its
    critical section."""
    b = NetBuilder(f"token-ring-{n}")
    for i in range(n):
        b.place(f"tok{i}", 1 if i == 0 else 0)
        b.place(f"idle{i}", 1)
        b.place(f"cs{i}")
    for i in range(n):
        b.transition(f"pass{i}", [f"tok{i}", f"idle{i}"], [f"tok{(i + 1) % n}", f"idle{i}"])
        b.transition(f"enter{i}", [f"tok{i}", f"idle{i}"], [f"cs{i}"])
        b.transition(f"leave{i}", [f"cs{i}"], [f"tok{i}", f"idle{i}"])
    return b.build()


def producer_consumer(capacity: int, items: Optional[int] = None) -> PetriNet:
    """One producer and one consumer around a bounded buffer. With
    ``items`` set, the producer stops after that many items and the net
    eventually deadlocks."""
    name = f"prodcons-{capacity}" + (f"-{items}" if items is not None else "")
    b = NetBuilder(name)
    b.place("ready_p", 1)
    b.place("produced")
    b.place("buffer")
    b.place("free", capacity)
    b.place("ready_c", 1)
    b.place("consumed")
    if items is not None:
        b.place("stock", items)
        b.transition("produce", ["ready_p", "stock"], ["produced"])
    else:
        b.transition("produce", ["ready_p"], ["produced"])
    b.transition("put", ["produced", "free"], ["buffer", "ready_p"])
    b.transition("get", ["buffer", "ready_c"], ["consumed", "free"])
    b.transition("consume", ["consumed"], ["ready_c"])
    return b.build()


def drain(tokens: int, weight: int = 1) -> PetriNet:
    """Tokens drained out of ``p1`` ``weight`` at a time, then deadlock."""
    b = NetBuilder(f"drain-{tokens}-{weight}")
    b.place("p1", tokens)
    b.place("p2")
    b.transition("t", {"p1": weight}, {"p2": 1})
    return b.build()


def mutex(n: int) -> PetriNet:
    """``n`` processes sharing one semaphore."""
    b = NetBuilder(f"mutex-{n}")
    b.place("sem", 1)
    for i in range(n):
        b.place(f"idle{i}", 1)
        b.place(f"wait{i}")
        b.place(f"crit{i}")
    for i in range(n):
        b.transition(f"req{i}", [f"idle{i}"], [f"wait{i}"])
        b.transition(f"acq{i}", [f"wait{i}", "sem"], [f"crit{i}"])
        b.transition(f"rel{i}", [f"crit{i}"], [f"idle{i}", "sem"])
    return b.build()


def random_conservative(seed: int, places: int = 6, transitions: int = 7, tokens: int = 3) -> PetriNet:
    """A random net whose transitions never create tokens (so it is
    bounded); some of them destroy one, which may lead to deadlocks."""
    rng = random.Random(seed)
    b = NetBuilder(f"random-{seed}")
    names = [f"p{i}" for i in range(places)]
    marking = [0] * places
    for _ in range(tokens):
        marking[rng.randrange(places)] += 1
    for n, m in zip(names, marking):
        b.place(n, m)
    for t in range(transitions):
        k = rng.choice((1, 1, 2))
        ins = rng.sample(names, k)
        outs = rng.sample(names, k - (1 if k > 1 and rng.random() < 0.3 else 0))
        b.transition(f"t{t}", ins, outs)
    return b.build()


def counter_grid(size: int) -> PetriNet:
    """Two independent counters in 0..size, each with an up and a down
    transition: (size + 1)**2 markings."""
    b = NetBuilder(f"grid-{size}")
    b.place("x", 0)
    b.place("xbar", size)
    b.place("y", 0)
    b.place("ybar", size)
    b.transition("incx", ["xbar"], ["x"])
    b.transition("decx", ["x"], ["xbar"])
    b.transition("incy", ["ybar"], ["y"])
    b.transition("decy", ["y"], ["ybar"])
    return b.build()


def switches(n: int) -> PetriNet:
    """``n`` independent on/off switches: 2n transitions, all but n
    enabled in every marking, 2**n markings."""
    b = NetBuilder(f"switches-{n}")
    for i in range(n):
        b.place(f"off{i}", 1)
        b.place(f"on{i}")
    for i in range(n):
        b.transition(f"up{i}", [f"off{i}"], [f"on{i}"])
        b.transition(f"down{i}", [f"on{i}"], [f"off{i}"])
    return b.build()


def wide_counter(places: int, tokens: int = 3) -> PetriNet:
    """A ring of ``places`` places passing tokens clockwise; used for
    read benchmarks on wide markings."""
    b = NetBuilder(f"ring-{places}")
    for i in range(places):
        b.place(f"p{i}", tokens if i % 7 == 0 else 0)
    for i in range(places):
        b.transition(f"t{i}", [f"p{i}"], [f"p{(i + 1) % places}"])
    return b.build()


def source_overflow() -> PetriNet:
    """An unbounded net: a source transition keeps adding tokens."""
    b = NetBuilder("source")
    b.place("p", 0)
    b.transition("gen", [], ["p"])
    return b.build()


def _random_formula(rng: random.Random, atoms: list[str], depth: int) -> str:
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(atoms)
    op = rng.choice(("!", "X", "F", "G", "&&", "||", "U", "R"))
    if op in ("!", "X", "F", "G"):
        return f"{op} ({_random_formula(rng, atoms, depth - 1)})"
    left = _random_formula(rng, atoms, depth - 1)
    right = _random_formula(rng, atoms, depth - 1)
    return f"({left}) {op} ({right})"


def formulas_for(net: PetriNet, seed: int = 0, extra: int = 3) -> list[str]:
    """Template formulas plus ``extra`` random ones over the net's names."""
    rng = random.Random(seed)
    ps = [p.name for p in net.places]
    ts = [t.name for t in net.transitions]
    p0, p1 = ps[0], ps[min(1, len(ps) - 1)]
    t0, tl = ts[0], ts[-1]
    out = [
        f"G (tokens-count({p0}) <= 1)",
        f"F is-fireable({t0})",
        f"G F is-fireable({tl})",
        f"F G (tokens-count({p1}) >= 1)",
        f"(tokens-count({p0}) <= 0) U is-fireable({tl})",
        f"G (is-fireable({t0}) || X is-fireable({tl}))",
    ]
    atoms = [
        f"is-fireable({rng.choice(ts)})",
        f"(tokens-count({rng.choice(ps)}) >= 1)",
        f"(tokens-count({rng.choice(ps)}, {rng.choice(ps)}) <= {rng.randint(0, 2)})",
    ]
    for _ in range(extra):
        out.append(_random_formula(rng, atoms, rng.randint(2, 4)))
    return out


def corpus() -> list[tuple[PetriNet, list[str]]]:
    """Small bounded nets, each paired with at least five formulas."""
    nets = [philosophers(n) for n in (3, 4, 5)]
    nets += [philosophers(n, nupn=True) for n in (3, 4)]
    nets += [token_ring(n) for n in (3, 4, 5)]
    nets += [producer_consumer(k) for k in (1, 2, 3)]
    nets += [producer_consumer(2, items) for items in (2, 3)]
    nets += [drain(k) for k in (1, 3, 5)] + [drain(4, 2)]
    nets += [mutex(n) for n in (2, 3)]
    nets += [switches(3), counter_grid(3)]
    nets += [random_conservative(s) for s in range(10)]
    return [(net, formulas_for(net, seed=i)) for i, net in enumerate(nets)]
