"""On-the-fly product exploration and accepting-cycle search.

The product of the reachability graph with the Büchi automaton of the
negated property is built lazily while a nested depth-first search looks
for a reachable accepting cycle. The outer search is depth bounded; a
round that hits the bound without finding a cycle is repeated from
scratch with a larger bound, while the interned markings are kept.

Edge labels are evaluated on the marking the product step starts from.
Dead markings stutter, so every run is infinite.
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

from pnltl import petri
from pnltl.buchi import (
    DEFAULT_COEFFICIENT,
    BuchiAutomaton,
    build_automaton,
    label_holds,
    ordered_initial,
    ordered_successors,
)
from pnltl.codec import (
    DecodingView,
    DrwView,
    EncodingPlan,
    ModelNotHandled,
    PlanningError,
    Scheme,
    StateStore,
    decode,
    encode,
    fire_encoded,
    plan_encoding,
)
from pnltl.ltl import FALSE, Formula, Not, simplify, to_nnf
from pnltl.petri import PetriNet

GIB = 1 << 30
CHECK_EVERY = 512


@dataclass
class Options:
    encoding: Optional[Scheme] = None
    dyn: bool = True
    drw: bool = True
    hba: bool = True
    coefficient: float = DEFAULT_COEFFICIENT
    bound: int = 10_000
    growth: int = 10
    timeout: Optional[float] = 300.0
    memory_cap: Optional[int] = 16 * GIB
    simplify: bool = True


def bound_schedule(options: Options) -> Iterator[int]:
    """Depth bounds for successive rounds; 0 means unbounded."""
    if options.bound <= 0:
        yield 0
        return
    k = options.bound
    while True:
        yield k
        k *= max(options.growth, 2)


class Step(NamedTuple):
    """One product move: a transition (None for a stutter) and the
    Büchi edge taken alongside it."""

    transition: Optional[int]
    src: int
    dst: int


@dataclass
class CounterexampleRun:
    initial: int
    prefix: list[Step]
    cycle: list[Step]
    accepting: int

    def transitions(self, net: PetriNet) -> tuple[list[str], list[str]]:
        def names(steps):
            return ["-" if s.transition is None else net.transitions[s.transition].name for s in steps]
        return names(self.prefix), names(self.cycle)


class Status(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    CANNOT_HANDLE = "cannot-handle"
    RESOURCE_LIMIT = "resource-limit"


@dataclass
class Stats:
    states: int = 0
    product_states: int = 0
    rounds: int = 0
    peak_bound: int = 0
    wall_seconds: float = 0.0
    peak_bytes: int = 0
    peak_meta_bytes: int = 0
    decode_calls: int = 0
    fireset_calls: int = 0
    buchi_states: int = 0


@dataclass
class Verdict:
    status: Status
    run: Optional[CounterexampleRun] = None
    reason: str = ""
    stats: Stats = field(default_factory=Stats)
    automaton: Optional[BuchiAutomaton] = None

    @property
    def decided(self) -> bool:
        return self.status in (Status.HOLDS, Status.VIOLATED)


class _ResourceLimit(Exception):
    pass


class _Frame:
    __slots__ = ("key", "sid", "b", "succ", "step")

    def __init__(self, key, sid, b, succ, step) -> None:
        self.key = key
        self.sid = sid
        self.b = b
        self.succ = succ
        self.step = step


class ProductExplorer:
    """Lazily generated product of a net and a Büchi automaton."""

    def __init__(self, net: PetriNet, automaton: BuchiAutomaton, plan: EncodingPlan,
                 options: Optional[Options] = None) -> None:
        self.net = net
        self.automaton = automaton
        self.plan = plan
        self.options = options or Options()
        self.store = StateStore(plan.words)
        self.stats = Stats()
        self._decodes = [0]
        self._valuations: dict[int, int] = {}
        self._deadline: Optional[float] = None
        nb = automaton.num_states
        self._nb = max(nb, 1)
        hba = self.options.hba
        # successor groups per Büchi state: (dst, [labels]) in search order
        self._groups: list[list[tuple[int, list]]] = []
        for b in range(nb):
            groups: list[tuple[int, list]] = []
            for label, dst in ordered_successors(automaton, b, hba):
                if groups and groups[-1][0] == dst:
                    groups[-1][1].append(label)
                else:
                    groups.append((dst, [label]))
            self._groups.append(groups)
        self._initial_order = ordered_initial(automaton, hba)
        self.initial_sid, _ = self.store.intern(encode(plan, net.initial_marking))
        if self.options.dyn:
            self.store.set_meta(self.initial_sid, None, 4)

    # -- marking access --------------------------------------------------------

    def view(self, sid: int):
        words = self.store.markings[sid]
        if self.options.drw:
            return DrwView(self.plan, words)
        return DecodingView(self.plan, words, self._decodes)

    def marking(self, sid: int) -> tuple[int, ...]:
        return decode(self.plan, self.store.markings[sid])

    def valuation(self, sid: int) -> int:
        v = self._valuations.get(sid)
        if v is None:
            view = self.view(sid)
            v = 0
            for i, atom in enumerate(self.automaton.atoms):
                if atom.evaluate(self.net, view):
                    v |= 1 << i
            self._valuations[sid] = v
        return v

    def _fire(self, sid: int, t: int) -> int:
        words = self.store.markings[sid]
        if self.options.drw:
            new = fire_encoded(self.plan, self.net, words, t)
        else:
            self._decodes[0] += 1
            new = encode(self.plan, petri.fire(self.net, decode(self.plan, words), t))
        nsid, fresh = self.store.intern(new)
        if fresh and self.options.dyn:
            # room for the last-fired transition of the new state
            self.store.set_meta(nsid, None, 4)
        return nsid

    def _stored_fireset(self, sid: int) -> tuple[int, ...]:
        fs = self.store.meta[sid]
        if fs is None:
            self.stats.fireset_calls += 1
            view = self.view(sid)
            fs = tuple(t for t in range(self.net.num_transitions) if petri.is_enabled(self.net, view, t))
            self.store.set_meta(sid, fs, 4 * (len(fs) + 1))
        return fs

    # -- product successors ----------------------------------------------------

    def successors(self, sid: int, b: int) -> Iterator[tuple[Optional[int], int, int]]:
        """Yield ``(transition, buchi_dst, marking_id)`` for every product
        successor of ``(sid, b)``; a dead marking yields one stutter step
        (transition None) per admissible Büchi edge."""
        val = self.valuation(sid)
        net = self.net
        for dst, labels in self._groups[b]:
            if not any(label_holds(lab, val) for lab in labels):
                continue
            if self.options.dyn:
                view = self.view(sid)
                t = petri.next_enabled(net, view, None)
                if t is None:
                    yield None, dst, sid
                    continue
                while t is not None:
                    yield t, dst, self._fire(sid, t)
                    t = petri.next_enabled(net, view, t)
            else:
                fs = self._stored_fireset(sid)
                if not fs:
                    yield None, dst, sid
                    continue
                for t in fs:
                    yield t, dst, self._fire(sid, t)

    def initial_states(self) -> list[tuple[int, int]]:
        return [(self.initial_sid, b) for b in self._initial_order]

    # -- search ------------------------------------------------------------------

    def _tick(self) -> None:
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise _ResourceLimit("time")
        nbytes = self.store.nbytes
        if nbytes > self.stats.peak_bytes:
            self.stats.peak_bytes = nbytes
        cap = self.options.memory_cap
        if cap is not None and nbytes > cap:
            raise _ResourceLimit("memory")

    def nested_dfs(self, bound: int) -> tuple[Optional[CounterexampleRun], bool]:
        """One search round. Returns the counterexample found, if any, and
        whether the outer search was cut off by ``bound`` (0 = no bound)."""
        nb = self._nb
        acc = self.automaton.accepting
        flags: dict[int, int] = {}
        on_stack: dict[int, int] = {}
        truncated = False
        stats = self.stats
        for sid0, b0 in self.initial_states():
            root = sid0 * nb + b0
            if flags.get(root, 0) & 1:
                continue
            flags[root] = 1
            stack = [_Frame(root, sid0, b0, self.successors(sid0, b0), None)]
            on_stack[root] = 0
            stats.product_states += 1
            while stack:
                frame = stack[-1]
                nxt = next(frame.succ, None)
                if nxt is None:
                    if acc[frame.b]:
                        run = self._inner(frame, stack, on_stack, flags)
                        if run is not None:
                            return run, truncated
                    del on_stack[frame.key]
                    stack.pop()
                    continue
                t, dst, nsid = nxt
                nkey = nsid * nb + dst
                pos = on_stack.get(nkey)
                if pos is not None and (acc[dst] or acc[frame.b]):
                    cycle = [f.step for f in stack[pos + 1:]] + [Step(t, frame.b, dst)]
                    return self._run(stack, pos, cycle), truncated
                if flags.get(nkey, 0) & 1:
                    continue
                if bound and len(stack) >= bound:
                    truncated = True
                    continue
                flags[nkey] = 1
                on_stack[nkey] = len(stack)
                stack.append(_Frame(nkey, nsid, dst, self.successors(nsid, dst), Step(t, frame.b, dst)))
                stats.product_states += 1
                if stats.product_states % CHECK_EVERY == 0:
                    self._tick()
        return None, truncated

    def _inner(self, seed: _Frame, outer: list[_Frame], on_stack: dict[int, int],
               flags: dict[int, int]) -> Optional[CounterexampleRun]:
        nb = self._nb
        stats = self.stats
        flags[seed.key] |= 2
        stack = [_Frame(seed.key, seed.sid, seed.b, self.successors(seed.sid, seed.b), None)]
        while stack:
            frame = stack[-1]
            nxt = next(frame.succ, None)
            if nxt is None:
                stack.pop()
                continue
            t, dst, nsid = nxt
            nkey = nsid * nb + dst
            pos = on_stack.get(nkey)
            if pos is not None:
                cycle = [f.step for f in outer[pos + 1:]]
                cycle += [f.step for f in stack[1:]] + [Step(t, frame.b, dst)]
                return self._run(outer, pos, cycle)
            if flags.get(nkey, 0) & 2:
                continue
            flags[nkey] = flags.get(nkey, 0) | 2
            stack.append(_Frame(nkey, nsid, dst, self.successors(nsid, dst), Step(t, frame.b, dst)))
            stats.product_states += 1
            if stats.product_states % CHECK_EVERY == 0:
                self._tick()
        return None

    def _run(self, outer: list[_Frame], pos: int, cycle: list[Step]) -> CounterexampleRun:
        prefix = [f.step for f in outer[1:pos + 1]]
        acc = self.automaton.accepting
        witness = next(s.src for s in cycle if acc[s.src]) if any(acc[s.src] for s in cycle) else -1
        return CounterexampleRun(outer[0].b, prefix, cycle, witness)

    def search(self, deadline: Optional[float] = None) -> Verdict:
        self._deadline = deadline
        for k in bound_schedule(self.options):
            self.stats.rounds += 1
            self.stats.peak_bound = k
            run, truncated = self.nested_dfs(k)
            if run is not None:
                return Verdict(Status.VIOLATED, run)
            if not truncated:
                return Verdict(Status.HOLDS)
        raise AssertionError("unreachable")


def prepare(formula: Formula, net: Optional[PetriNet], options: Options) -> Formula:
    """Negate, push negations inward and simplify."""
    negated = to_nnf(Not(formula))
    if options.simplify:
        negated = simplify(negated, net)
    return negated


def check(net: PetriNet, formula: Formula, options: Optional[Options] = None) -> Verdict:
    """Decide whether every run of ``net`` satisfies the bound ``formula``."""
    options = options or Options()
    start = time.monotonic()
    negated = prepare(formula, net, options)
    if negated == FALSE:
        return Verdict(Status.HOLDS, stats=Stats(wall_seconds=time.monotonic() - start))
    automaton = build_automaton(negated, options.coefficient, options.simplify)
    return check_automaton(net, automaton, options, start)


def check_automaton(net: PetriNet, automaton: BuchiAutomaton, options: Optional[Options] = None,
                    start: Optional[float] = None) -> Verdict:
    """Search the product of ``net`` with an automaton for the negated
    property. The automaton must carry heuristic annotations."""
    options = options or Options()
    start = time.monotonic() if start is None else start
    deadline = start + options.timeout if options.timeout else None
    stats = Stats(buchi_states=automaton.num_states)
    if not automaton.initial:
        stats.wall_seconds = time.monotonic() - start
        return Verdict(Status.HOLDS, stats=stats, automaton=automaton)
    explorer = None
    try:
        plan = plan_encoding(net, options.encoding)
        explorer = ProductExplorer(net, automaton, plan, options)
        explorer.stats = stats
        verdict = explorer.search(deadline)
    except (ModelNotHandled, PlanningError) as exc:
        verdict = Verdict(Status.CANNOT_HANDLE, reason=str(exc))
    except _ResourceLimit as exc:
        verdict = Verdict(Status.RESOURCE_LIMIT, reason=str(exc))
    verdict.automaton = automaton
    verdict.stats = stats
    if explorer is not None:
        stats.states = len(explorer.store)
        stats.peak_meta_bytes = explorer.store.peak_meta_bytes
        stats.peak_bytes = max(stats.peak_bytes, explorer.store.nbytes)
        stats.decode_calls = explorer._decodes[0]
    stats.wall_seconds = time.monotonic() - start
    return verdict


def verify_counterexample(net: PetriNet, automaton: BuchiAutomaton, run: CounterexampleRun) -> bool:
    """Replay ``run`` on dense markings and check it is an accepting lasso."""
    if run.initial not in automaton.initial or not run.cycle:
        return False
    m = net.initial_marking
    b = run.initial
    start = None
    cycle_sources = []
    for i, step in enumerate(itertools.chain(run.prefix, run.cycle)):
        if i == len(run.prefix):
            start = (m, b)
        if i >= len(run.prefix):
            cycle_sources.append(step.src)
        if step.src != b or not 0 <= step.dst < automaton.num_states:
            return False
        val = 0
        for k, atom in enumerate(automaton.atoms):
            if atom.evaluate(net, m):
                val |= 1 << k
        if not any(d == step.dst and label_holds(lab, val) for lab, d in automaton.edges[b]):
            return False
        if step.transition is None:
            if petri.next_enabled(net, m) is not None:
                return False
        else:
            if not 0 <= step.transition < net.num_transitions:
                return False
            if not petri.is_enabled(net, m, step.transition):
                return False
            m = petri.fire(net, m, step.transition)
        b = step.dst
    if start != (m, b):
        return False
    return any(automaton.accepting[s] for s in cycle_sources)
