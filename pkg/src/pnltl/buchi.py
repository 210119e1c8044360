"""LTL to Büchi automata, with distance heuristics on the states.

The translation goes through a very weak alternating automaton whose
states are the temporal subformulas, then a transition-based generalized
Büchi automaton over sets of those states, then a counter-based
degeneralization into an ordinary state-based Büchi automaton.

Edge labels are conjunctions of literals stored as two bitmasks over the
automaton's atom table: ``(pos, neg)``; the empty conjunction is
``(0, 0)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from pnltl.ltl import (
    And,
    Const,
    Finally,
    Formula,
    Globally,
    Next,
    Not,
    Or,
    Prop,
    Release,
    Until,
    atoms_of,
    is_nnf,
)

Label = tuple[int, int]
TRUE_LABEL: Label = (0, 0)
INF = math.inf
DEFAULT_COEFFICIENT = 0.1


def label_and(a: Label, b: Label) -> Optional[Label]:
    pos, neg = a[0] | b[0], a[1] | b[1]
    if pos & neg:
        return None
    return pos, neg


def label_implies(a: Label, b: Label) -> bool:
    """Every valuation satisfying ``a`` satisfies ``b``."""
    return (b[0] & ~a[0]) == 0 and (b[1] & ~a[1]) == 0


def label_holds(label: Label, valuation: int) -> bool:
    return (valuation & label[0]) == label[0] and (valuation & label[1]) == 0


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass
class BuchiAutomaton:
    atoms: list
    initial: list[int]
    accepting: list[bool]
    edges: list[list[tuple[Label, int]]]
    distance: list[float] = field(default_factory=list)
    toughness: list[float] = field(default_factory=list)

    @property
    def num_states(self) -> int:
        return len(self.edges)

    def accepting_states(self) -> list[int]:
        return [s for s, a in enumerate(self.accepting) if a]

    def atoms_of_state(self, s: int) -> int:
        mask = 0
        for (pos, neg), _ in self.edges[s]:
            mask |= pos | neg
        return mask

    def label_str(self, label: Label) -> str:
        pos, neg = label
        if not pos and not neg:
            return "true"
        parts = []
        for i, atom in enumerate(self.atoms):
            if pos >> i & 1:
                parts.append(str(atom))
            if neg >> i & 1:
                parts.append(f"!{atom}")
        return " & ".join(parts)

    def dump(self) -> str:
        """Line-oriented text form used for debugging and golden files."""
        lines = [f"states {self.num_states}",
                 "initial " + " ".join(map(str, self.initial)),
                 "accepting " + " ".join(map(str, self.accepting_states()))]
        for i, atom in enumerate(self.atoms):
            lines.append(f"atom {i} {atom}")
        for s in range(self.num_states):
            d = self.distance[s] if self.distance else None
            t = self.toughness[s] if self.toughness else None
            d_txt = "inf" if d == INF else ("-" if d is None else str(int(d)))
            t_txt = "-" if t is None else f"{t:g}"
            lines.append(f"state {s} D={d_txt} T={t_txt}")
            for label, dst in self.edges[s]:
                lines.append(f"  -> {dst} [{self.label_str(label)}]")
        return "\n".join(lines) + "\n"


# -- alternating automaton -------------------------------------------------------

Move = tuple[Label, frozenset]


def _product(xs: Iterable[Move], ys: Iterable[Move]) -> set[Move]:
    out = set()
    ys = list(ys)
    for la, ea in xs:
        for lb, eb in ys:
            lab = label_and(la, lb)
            if lab is not None:
                out.add((lab, ea | eb))
    return out


def _prune(moves: set[Move]) -> frozenset:
    """Drop moves another move dominates (weaker label, fewer obligations)."""
    ms = sorted(moves, key=lambda m: (_popcount(m[0][0]) + _popcount(m[0][1]), len(m[1])))
    kept: list[Move] = []
    for lab, e in ms:
        if any(label_implies(lab, kl) and ke <= e for kl, ke in kept):
            continue
        kept.append((lab, e))
    return frozenset(kept)


class _Vwaa:
    def __init__(self, atom_index: dict) -> None:
        self.atom_index = atom_index
        self._delta: dict[Formula, frozenset] = {}

    def dnf(self, f: Formula) -> set[frozenset]:
        if isinstance(f, And):
            return {a | b for a in self.dnf(f.left) for b in self.dnf(f.right)}
        if isinstance(f, Or):
            return self.dnf(f.left) | self.dnf(f.right)
        if isinstance(f, Const):
            return {frozenset()} if f.value else set()
        return {frozenset([f])}

    def delta(self, f: Formula) -> frozenset:
        cached = self._delta.get(f)
        if cached is not None:
            return cached
        moves = self._compute(f)
        result = _prune(moves)
        self._delta[f] = result
        return result

    def _compute(self, f: Formula) -> set[Move]:
        loop = {(TRUE_LABEL, frozenset([f]))}
        if isinstance(f, Const):
            return {(TRUE_LABEL, frozenset())} if f.value else set()
        if isinstance(f, Prop):
            return {((1 << self.atom_index[f.atom], 0), frozenset())}
        if isinstance(f, Not):
            return {((0, 1 << self.atom_index[f.arg.atom]), frozenset())}
        if isinstance(f, And):
            return _product(self.delta(f.left), self.delta(f.right))
        if isinstance(f, Or):
            return set(self.delta(f.left)) | set(self.delta(f.right))
        if isinstance(f, Next):
            return {(TRUE_LABEL, e) for e in self.dnf(f.arg)}
        if isinstance(f, Finally):
            return set(self.delta(f.arg)) | loop
        if isinstance(f, Globally):
            return _product(self.delta(f.arg), loop)
        if isinstance(f, Until):
            return set(self.delta(f.right)) | _product(self.delta(f.left), loop)
        if isinstance(f, Release):
            return _product(self.delta(f.right), set(self.delta(f.left)) | loop)
        raise TypeError(f"unexpected formula {f!r}")


def _key(state: frozenset) -> tuple:
    return tuple(sorted(map(str, state)))


def ltl_to_buchi(f: Formula) -> BuchiAutomaton:
    """Translate an NNF formula into a state-based Büchi automaton."""
    if not is_nnf(f):
        raise ValueError("formula must be in negation normal form")
    atoms = atoms_of(f)
    vwaa = _Vwaa({a: i for i, a in enumerate(atoms)})

    # generalized automaton: states are sets of alternating-automaton states
    initial = sorted(vwaa.dnf(f), key=_key)
    gstates: dict[frozenset, int] = {}
    order: list[frozenset] = []
    queue: deque = deque()
    for s in initial:
        if s not in gstates:
            gstates[s] = len(order)
            order.append(s)
            queue.append(s)
    gedges: dict[frozenset, list[tuple[Label, frozenset]]] = {}
    while queue:
        s = queue.popleft()
        moves = {(TRUE_LABEL, frozenset())}
        for q in sorted(s, key=str):
            moves = _product(moves, vwaa.delta(q))
        out = sorted(moves, key=lambda m: (m[0], _key(m[1])))
        gedges[s] = out
        for _, dst in out:
            if dst not in gstates:
                gstates[dst] = len(order)
                order.append(dst)
                queue.append(dst)

    untils = sorted({q for s in order for q in s if isinstance(q, (Until, Finally))}, key=str)

    def accepts(u: Formula, label: Label, dst: frozenset) -> bool:
        if u not in dst:
            return True
        return any(u not in e and label_implies(label, lab) and e <= dst
                   for lab, e in vwaa.delta(u))

    def acc_mask(label: Label, dst: frozenset) -> int:
        mask = 0
        for j, u in enumerate(untils):
            if accepts(u, label, dst):
                mask |= 1 << j
        return mask

    # drop generalized transitions dominated by a sibling with a weaker
    # label, fewer obligations and at least the same acceptance sets
    pruned: dict[frozenset, list[tuple[Label, frozenset, int]]] = {}
    for s, out in gedges.items():
        annotated = [(lab, dst, acc_mask(lab, dst)) for lab, dst in out]
        pruned[s] = [
            t for t in annotated
            if not any(u != t and label_implies(t[0], u[0]) and u[1] <= t[1] and t[2] & ~u[2] == 0
                       for u in annotated)
        ]

    # degeneralize with a counter over the acceptance sets
    r = len(untils)
    states: dict[tuple[int, int], int] = {}
    bstates: list[tuple[int, int]] = []
    bedges: list[list[tuple[Label, int]]] = []
    work: deque = deque()

    def state_id(key: tuple[int, int]) -> int:
        if key not in states:
            states[key] = len(bstates)
            bstates.append(key)
            bedges.append([])
            work.append(key)
        return states[key]

    binit = [state_id((gstates[s], 0)) for s in initial]
    while work:
        g, j = work.popleft()
        src = states[(g, j)]
        seen = set()
        for lab, dst, acc in pruned[order[g]]:
            if r == 0:
                nj = 0
            else:
                nj = 0 if j == r else j
                while nj < r and acc >> nj & 1:
                    nj += 1
            d = state_id((gstates[dst], nj))
            if (lab, d) not in seen:
                seen.add((lab, d))
                bedges[src].append((lab, d))
    accepting = [j == r for _, j in bstates]
    return BuchiAutomaton(list(atoms), binit, accepting, bedges)


# -- simplification -----------------------------------------------------------------


def _reachable(a: BuchiAutomaton) -> list[bool]:
    seen = [False] * a.num_states
    stack = list(a.initial)
    for s in stack:
        seen[s] = True
    while stack:
        s = stack.pop()
        for _, d in a.edges[s]:
            if not seen[d]:
                seen[d] = True
                stack.append(d)
    return seen


def _sccs(n: int, succ: list[list[int]]) -> list[int]:
    """Tarjan's algorithm, iterative; returns an SCC id per node."""
    index = [-1] * n
    low = [0] * n
    on = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, i = work[-1]
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on[v] = True
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if index[w] == -1:
                    work.append((w, 0))
                elif on[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def live_states(a: BuchiAutomaton) -> list[bool]:
    """States from which some accepting cycle is reachable."""
    n = a.num_states
    succ = [[d for _, d in a.edges[s]] for s in range(n)]
    comp = _sccs(n, succ)
    members: dict[int, list[int]] = {}
    for s, c in enumerate(comp):
        members.setdefault(c, []).append(s)
    good = [False] * n
    for c, ms in members.items():
        cyclic = len(ms) > 1 or ms[0] in succ[ms[0]]
        if cyclic and any(a.accepting[s] for s in ms):
            for s in ms:
                good[s] = True
    pred: list[list[int]] = [[] for _ in range(n)]
    for s in range(n):
        for d in succ[s]:
            pred[d].append(s)
    stack = [s for s in range(n) if good[s]]
    while stack:
        s = stack.pop()
        for p in pred[s]:
            if not good[p]:
                good[p] = True
                stack.append(p)
    return good


def _restrict(a: BuchiAutomaton, keep: list[bool]) -> BuchiAutomaton:
    remap = {}
    for s in range(a.num_states):
        if keep[s]:
            remap[s] = len(remap)
    edges = [[] for _ in remap]
    for s, ns in remap.items():
        edges[ns] = [(lab, remap[d]) for lab, d in a.edges[s] if d in remap]
    initial = [remap[s] for s in a.initial if s in remap]
    accepting = [a.accepting[s] for s in remap]
    return BuchiAutomaton(list(a.atoms), initial, accepting, edges)


def _prune_edges(edges: list[tuple[Label, int]]) -> list[tuple[Label, int]]:
    kept = []
    for i, (lab, d) in enumerate(edges):
        dominated = any(
            d2 == d and label_implies(lab, lab2) and (lab2 != lab or j < i)
            for j, (lab2, d2) in enumerate(edges) if j != i
        )
        if not dominated:
            kept.append((lab, d))
    return kept


def _equivalence_classes(a: BuchiAutomaton) -> list[int]:
    """Coarsest partition where equivalent states share acceptance and
    reach equivalent states under the same labels."""
    cls = [int(x) for x in a.accepting]
    count = len(set(cls))
    while True:
        ids: dict[tuple, int] = {}
        new = []
        for s in range(a.num_states):
            sig = (cls[s], frozenset((lab, cls[d]) for lab, d in a.edges[s]))
            new.append(ids.setdefault(sig, len(ids)))
        if len(ids) == count:
            return new
        cls, count = new, len(ids)


def simplify_buchi(a: BuchiAutomaton) -> BuchiAutomaton:
    """Drop unreachable and dead states, prune subsumed edges, and merge
    equivalent states until nothing changes."""
    a = _restrict(a, _reachable(a))
    a = _restrict(a, live_states(a))
    a = BuchiAutomaton(a.atoms, a.initial, a.accepting, [_prune_edges(e) for e in a.edges])
    while True:
        cls = _equivalence_classes(a)
        first: dict[int, int] = {}
        for s, c in enumerate(cls):
            first.setdefault(c, s)
        rep = [first[c] for c in cls]
        if all(rep[s] == s for s in range(a.num_states)):
            break
        edges = [_prune_edges(sorted({(lab, rep[d]) for lab, d in a.edges[s]}, key=lambda e: (e[1], e[0])))
                 for s in range(a.num_states)]
        initial = list(dict.fromkeys(rep[s] for s in a.initial))
        a = BuchiAutomaton(a.atoms, initial, a.accepting, edges)
        a = _restrict(a, _reachable(a))
    return a


# -- heuristic ----------------------------------------------------------------------


def annotate_heuristic(a: BuchiAutomaton, coefficient: float = DEFAULT_COEFFICIENT) -> BuchiAutomaton:
    """Fill in, per state, the edge distance to the nearest accepting
    state and ``coefficient`` times the number of atoms on its out-edges."""
    n = a.num_states
    pred: list[list[int]] = [[] for _ in range(n)]
    for s in range(n):
        for _, d in a.edges[s]:
            pred[d].append(s)
    dist: list[float] = [INF] * n
    queue = deque()
    for s in range(n):
        if a.accepting[s]:
            dist[s] = 0
            queue.append(s)
    while queue:
        s = queue.popleft()
        for p in pred[s]:
            if dist[p] == INF:
                dist[p] = dist[s] + 1
                queue.append(p)
    a.distance = dist
    a.toughness = [coefficient * _popcount(a.atoms_of_state(s)) for s in range(n)]
    return a


def heuristic_key(a: BuchiAutomaton, s: int) -> float:
    d = a.distance[s]
    return INF if d == INF else d + a.toughness[s]


def ordered_successors(a: BuchiAutomaton, state: int, heuristic: bool = True) -> list[tuple[Label, int]]:
    """Out-edges of ``state``, closest-to-acceptance first when
    ``heuristic`` is set, by destination index otherwise."""
    if heuristic:
        return sorted(a.edges[state], key=lambda e: (heuristic_key(a, e[1]), e[1]))
    return sorted(a.edges[state], key=lambda e: e[1])


def ordered_initial(a: BuchiAutomaton, heuristic: bool = True) -> list[int]:
    if heuristic:
        return sorted(a.initial, key=lambda s: (heuristic_key(a, s), s))
    return sorted(a.initial)


def build_automaton(negated_nnf: Formula, coefficient: float = DEFAULT_COEFFICIENT,
                    simplify: bool = True) -> BuchiAutomaton:
    a = ltl_to_buchi(negated_nnf)
    if simplify:
        a = simplify_buchi(a)
    return annotate_heuristic(a, coefficient)
