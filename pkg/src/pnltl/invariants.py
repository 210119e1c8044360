"""Place invariants over the incidence matrix.

Two computations live here. Semi-positive invariants (all weights >= 0)
come from the Farkas elimination and give place bounds. A basis of the
full invariant space comes from exact Gaussian elimination on C^T and
splits the places into significant ones (pivot columns) and redundant
ones, whose token counts are affine in the significant ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from pnltl.petri import PetriNet

FARKAS_ROW_LIMIT = 4096


def _normalize(row: list[int]) -> list[int]:
    g = 0
    for v in row:
        if v:
            g = gcd(g, v)
    if g > 1:
        return [v // g for v in row]
    return row


# a sparse Farkas row: (incidence part, place weights), both {index: nonzero}
_Row = tuple[dict[int, int], dict[int, int]]


def _combine(r1: _Row, r2: _Row, a: int, b: int) -> _Row:
    parts = []
    for d1, d2 in zip(r1, r2):
        out = {k: a * v for k, v in d1.items()}
        for k, v in d2.items():
            s = out.get(k, 0) + b * v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        parts.append(out)
    g = 0
    for d in parts:
        for v in d.values():
            g = gcd(g, v)
    if g > 1:
        parts = [{k: v // g for k, v in d.items()} for d in parts]
    return parts[0], parts[1]


def semi_positive_invariants(c: list[list[int]], limit: int = FARKAS_ROW_LIMIT) -> Optional[list[list[int]]]:
    """Minimal-support semi-positive vectors y with y^T C = 0.

    ``c`` is the |P| x |T| incidence matrix. Returns None if the
    intermediate matrix grows past ``limit`` rows.
    """
    n_p = len(c)
    n_t = len(c[0]) if c else 0
    rows: list[_Row] = [({t: v for t, v in enumerate(c[p]) if v}, {p: 1}) for p in range(n_p)]
    for j in range(n_t):
        pos = [r for r in rows if r[0].get(j, 0) > 0]
        neg = [r for r in rows if r[0].get(j, 0) < 0]
        if not pos and not neg:
            continue
        keep = [r for r in rows if j not in r[0]]
        fresh = [_combine(r1, r2, -r2[0][j], r1[0][j]) for r1 in pos for r2 in neg]
        rows = _minimal_supports(keep, fresh)
        if len(rows) > limit:
            return None
    out = []
    for _, y in rows:
        vec = [0] * n_p
        for p, v in y.items():
            vec[p] = v
        out.append(vec)
    return out


def _minimal_supports(old: list[_Row], fresh: list[_Row]) -> list[_Row]:
    """Drop rows whose support strictly contains another's (or repeats an
    earlier one). ``old`` is already minimal among itself."""
    if not fresh:
        return old
    rows = old + fresh
    supports = [frozenset(r[1]) for r in rows]
    order = sorted(range(len(old), len(rows)), key=lambda i: len(supports[i]))
    by_place: dict[int, list[int]] = {}
    for i in range(len(old)):
        for p in supports[i]:
            by_place.setdefault(p, []).append(i)
    kept_fresh: list[int] = []
    for i in order:
        s = supports[i]
        hits: dict[int, int] = {}
        dominated = False
        for p in s:
            for k in by_place.get(p, ()):
                hits[k] = hits.get(k, 0) + 1
                if hits[k] == len(supports[k]):
                    dominated = True
                    break
            if dominated:
                break
        if dominated:
            continue
        kept_fresh.append(i)
        for p in s:
            by_place.setdefault(p, []).append(i)
    alive = [i for i in range(len(old))
             if not any(supports[f] < supports[i] for f in kept_fresh)]
    kept_fresh.sort()
    return [rows[i] for i in alive] + [rows[i] for i in kept_fresh]


def compute_invariant_bounds(net: "PetriNet") -> list[Optional[int]]:
    """Upper bound per place from semi-positive invariants, or None.

    For an invariant y with y(p) > 0 the weighted sum y.m is constant, so
    m(p) <= floor(y.m0 / y(p)). The tightest bound over all invariants
    found is kept.
    """
    if net.num_places == 0:
        return []
    invs = semi_positive_invariants(net.incidence())
    if invs is None:
        invs = [y for y in invariant_basis(net).vectors if all(v >= 0 for v in y)]
    m0 = net.initial_marking
    bounds: list[Optional[int]] = [None] * net.num_places
    for y in invs:
        total = sum(w * m for w, m in zip(y, m0))
        for p, w in enumerate(y):
            if w > 0:
                b = total // w
                if bounds[p] is None or b < bounds[p]:
                    bounds[p] = b
    # places no transition touches keep their initial count forever
    touched = {p for t in range(net.num_transitions) for p, _ in net.deltas[t]}
    for p in range(net.num_places):
        if p not in touched and bounds[p] is None:
            bounds[p] = m0[p]
    return bounds


@dataclass(frozen=True)
class InvariantBasis:
    """Integer basis of {y | y^T C = 0} in reduced echelon form.

    ``vectors[i]`` is nonzero on ``redundant[i]`` and otherwise only on
    significant places, so the redundant place's count can be solved
    from the significant ones.
    """

    vectors: tuple[tuple[int, ...], ...]
    redundant: tuple[int, ...]
    significant: tuple[int, ...]


def _rref(a: list[list[int]], n_cols: int) -> tuple[list[list[int]], list[int]]:
    """Fraction-free reduced row echelon form over the integers."""
    rows = [list(r) for r in a]
    pivots: list[int] = []
    r = 0
    for col in range(n_cols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pr = rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f, g = rows[i][col], pr[col]
                rows[i] = _normalize([g * x - f * y for x, y in zip(rows[i], pr)])
        if pr[col] < 0:
            rows[r] = [-x for x in pr]
        rows[r] = _normalize(rows[r])
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def invariant_basis(net: "PetriNet") -> InvariantBasis:
    n_p = net.num_places
    c = net.incidence()
    ct = [[c[p][t] for p in range(n_p)] for t in range(net.num_transitions)]
    rows, pivots = _rref(ct, n_p) if ct else ([], [])
    pivot_set = set(pivots)
    free = [p for p in range(n_p) if p not in pivot_set]
    vectors = []
    for f in free:
        # y[f] = L, y[pivot_i] = -L * rows[i][f] / rows[i][pivot_i]
        lcm = 1
        for i, pc in enumerate(pivots):
            if rows[i][f]:
                d = rows[i][pc] // gcd(rows[i][pc], rows[i][f])
                lcm = lcm * d // gcd(lcm, d)
        y = [0] * n_p
        y[f] = lcm
        for i, pc in enumerate(pivots):
            if rows[i][f]:
                y[pc] = -lcm * rows[i][f] // rows[i][pc]
        vectors.append(tuple(_normalize(y)))
    return InvariantBasis(tuple(vectors), tuple(free), tuple(pivots))
