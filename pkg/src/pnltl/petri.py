"""Place/transition nets: data model, PNML input/output, firing rule.

Markings handed to the functions here are anything indexable by place
index (a tuple, a list, or one of the encoded-marking views from
:mod:`pnltl.codec`), so the same code runs on dense and packed states.
"""

from __future__ import annotations

import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence

logger = logging.getLogger(__name__)

Marking = Sequence[int]

PT_NET_TYPES = (
    "http://www.pnml.org/version-2009/grammar/ptnet",
    "http://www.pnml.org/version-2009/grammar/pnmlcoremodel",
    "ptnet",
    "p/t",
)


class PnmlError(ValueError):
    """Raised when a PNML document cannot be turned into a P/T net."""


@dataclass(frozen=True)
class PlaceInfo:
    name: str
    label: str = ""
    myunit: Optional[int] = None
    # 1-based local code inside the unit; 0 is reserved for "nothing marked"
    myoffset: int = 0


@dataclass(frozen=True)
class TransitionInfo:
    name: str
    label: str = ""


@dataclass(frozen=True)
class UnitInfo:
    name: str
    local_places: tuple[int, ...]

    @property
    def unitlen(self) -> int:
        return math.ceil(math.log2(len(self.local_places) + 1))


class PetriNet:
    """An immutable place/transition net.

    ``pre[t]`` and ``post[t]`` hold ``(place, weight)`` pairs with positive
    weights; a missing pair means weight zero. Transition indices give the
    total order used when enumerating enabled transitions.
    """

    def __init__(
        self,
        places: Sequence[PlaceInfo],
        transitions: Sequence[TransitionInfo],
        pre: Sequence[Sequence[tuple[int, int]]],
        post: Sequence[Sequence[tuple[int, int]]],
        initial_marking: Sequence[int],
        units: Optional[Sequence[UnitInfo]] = None,
        unit_safe: bool = False,
        name: str = "net",
    ) -> None:
        if len(pre) != len(transitions) or len(post) != len(transitions):
            raise ValueError("pre/post must have one entry per transition")
        if len(initial_marking) != len(places):
            raise ValueError("initial marking must have one entry per place")
        if any(v < 0 for v in initial_marking):
            raise ValueError("initial marking must be nonnegative")
        self.name = name
        self.places = tuple(places)
        self.transitions = tuple(transitions)
        self.pre = tuple(_merge_arcs(arcs, len(places)) for arcs in pre)
        self.post = tuple(_merge_arcs(arcs, len(places)) for arcs in post)
        self.initial_marking = tuple(int(v) for v in initial_marking)
        self.units = tuple(units) if units else None
        self.unit_safe = bool(unit_safe and self.units)
        if self.units is not None:
            _check_units(self.units, len(self.places))
            places_with_units = list(self.places)
            for u, unit in enumerate(self.units):
                for k, p in enumerate(unit.local_places, start=1):
                    info = places_with_units[p]
                    places_with_units[p] = PlaceInfo(info.name, info.label, u, k)
            self.places = tuple(places_with_units)
        self._place_index = {p.name: i for i, p in enumerate(self.places)}
        self._transition_index = {t.name: i for i, t in enumerate(self.transitions)}

    def __repr__(self) -> str:
        return f"PetriNet({self.name!r}, |P|={len(self.places)}, |T|={len(self.transitions)})"

    @property
    def num_places(self) -> int:
        return len(self.places)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    def place_index(self, name: str) -> int:
        try:
            return self._place_index[name]
        except KeyError:
            for i, p in enumerate(self.places):
                if p.label == name:
                    return i
            raise KeyError(f"unknown place {name!r}") from None

    def transition_index(self, name: str) -> int:
        try:
            return self._transition_index[name]
        except KeyError:
            for i, t in enumerate(self.transitions):
                if t.label == name:
                    return i
            raise KeyError(f"unknown transition {name!r}") from None

    def weight(self, source: str, target: str) -> int:
        """W(x, y) looked up by names; 0 when there is no arc."""
        if source in self._place_index:
            p, t = self._place_index[source], self.transition_index(target)
            return dict(self.pre[t]).get(p, 0)
        t, p = self.transition_index(source), self.place_index(target)
        return dict(self.post[t]).get(p, 0)

    @cached_property
    def deltas(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per transition, the nonzero token changes; decrements come first."""
        out = []
        for t in range(self.num_transitions):
            change: dict[int, int] = {}
            for p, w in self.pre[t]:
                change[p] = change.get(p, 0) - w
            for p, w in self.post[t]:
                change[p] = change.get(p, 0) + w
            items = [(p, d) for p, d in change.items() if d]
            items.sort(key=lambda pd: (pd[1] > 0, pd[0]))
            out.append(tuple(items))
        return tuple(out)

    def incidence(self) -> list[list[int]]:
        """C[p][t] = W(t, p) - W(p, t)."""
        c = [[0] * self.num_transitions for _ in range(self.num_places)]
        for t in range(self.num_transitions):
            for p, w in self.pre[t]:
                c[p][t] -= w
            for p, w in self.post[t]:
                c[p][t] += w
        return c

    @cached_property
    def invariant_bounds(self) -> list[Optional[int]]:
        from pnltl.invariants import compute_invariant_bounds

        return compute_invariant_bounds(self)

    @cached_property
    def one_safe(self) -> bool:
        """True when every place is provably bounded by one token."""
        if self.unit_safe:
            return True
        return all(b is not None and b <= 1 for b in self.invariant_bounds)


def _merge_arcs(arcs: Sequence[tuple[int, int]], num_places: int) -> tuple[tuple[int, int], ...]:
    merged: dict[int, int] = {}
    for p, w in arcs:
        if not 0 <= p < num_places:
            raise ValueError(f"arc references place index {p} out of range")
        if w <= 0:
            raise ValueError(f"arc weight must be positive, got {w}")
        merged[p] = merged.get(p, 0) + w
    return tuple(sorted(merged.items()))


def _check_units(units: Sequence[UnitInfo], num_places: int) -> None:
    seen = [False] * num_places
    for unit in units:
        for p in unit.local_places:
            if seen[p]:
                raise ValueError(f"place {p} belongs to more than one unit")
            seen[p] = True
    if not all(seen):
        missing = [p for p, s in enumerate(seen) if not s]
        raise ValueError(f"places {missing} belong to no unit")


# -- firing rule ------------------------------------------------------------


def is_enabled(net: PetriNet, marking: Marking, t: int) -> bool:
    for p, w in net.pre[t]:
        if marking[p] < w:
            return False
    return True


def fire(net: PetriNet, marking: Marking, t: int) -> tuple[int, ...]:
    """Return the marking reached by firing ``t``; ``marking`` is untouched."""
    assert is_enabled(net, marking, t), f"transition {t} is not enabled"
    m = list(marking)
    for p, d in net.deltas[t]:
        m[p] += d
    return tuple(m)


def next_enabled(net: PetriNet, marking: Marking, after: Optional[int] = None) -> Optional[int]:
    """Smallest enabled transition index strictly above ``after``.

    Threading the result back in as ``after`` enumerates the fireset in
    index order without ever materialising it.
    """
    pre = net.pre
    start = 0 if after is None else after + 1
    for t in range(start, len(pre)):
        for p, w in pre[t]:
            if marking[p] < w:
                break
        else:
            return t
    return None


def iter_enabled(net: PetriNet, marking: Marking) -> Iterator[int]:
    t = next_enabled(net, marking)
    while t is not None:
        yield t
        t = next_enabled(net, marking, t)


def fireset(net: PetriNet, marking: Marking) -> set[int]:
    return {t for t in range(net.num_transitions) if is_enabled(net, marking, t)}


def eval_atom(net: PetriNet, marking: Marking, atom) -> bool:
    """Evaluate a bound atom (see :mod:`pnltl.ltl`) under ``marking``."""
    return atom.evaluate(net, marking)


# -- PNML -------------------------------------------------------------------


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(elem: ET.Element, name: str) -> list[ET.Element]:
    return [c for c in elem if _local(c.tag) == name]


def _text_of(elem: ET.Element, name: str) -> Optional[str]:
    for c in _children(elem, name):
        for t in c.iter():
            if _local(t.tag) == "text" and t.text is not None:
                return t.text.strip()
    return None


def _walk_pages(elem: ET.Element) -> Iterator[ET.Element]:
    for c in elem:
        if _local(c.tag) == "page":
            yield from _walk_pages(c)
        else:
            yield c


def _parse_count(text: Optional[str], what: str, default: int) -> int:
    if text is None or text == "":
        return default
    try:
        value = int(text)
    except ValueError:
        raise PnmlError(f"{what}: expected an integer, got {text!r}") from None
    return value


def parse_pnml(data: bytes | str) -> PetriNet:
    """Build a :class:`PetriNet` from a PNML P/T document.

    Pages are flattened and graphics ignored. A ``toolspecific`` NUPN
    section is read when present; a structurally invalid one is dropped
    with a warning and the net is kept.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise PnmlError(f"malformed XML: {exc}") from exc
    nets = [e for e in root.iter() if _local(e.tag) == "net"]
    if len(nets) != 1:
        raise PnmlError(f"expected exactly one <net>, found {len(nets)}")
    net_elem = nets[0]
    net_type = net_elem.get("type", "")
    if net_type and not any(net_type.lower().endswith(k) for k in PT_NET_TYPES):
        raise PnmlError(f"unsupported net type {net_type!r}")

    places: list[PlaceInfo] = []
    marking: list[int] = []
    transitions: list[TransitionInfo] = []
    arcs: list[tuple[str, str, int]] = []
    nupn: Optional[ET.Element] = None
    for elem in _walk_pages(net_elem):
        kind = _local(elem.tag)
        if kind == "place":
            pid = elem.get("id")
            if not pid:
                raise PnmlError("place without id")
            places.append(PlaceInfo(pid, _text_of(elem, "name") or ""))
            m = _parse_count(_text_of(elem, "initialMarking"), f"initialMarking of {pid}", 0)
            if m < 0:
                raise PnmlError(f"negative initial marking on place {pid}")
            marking.append(m)
        elif kind == "transition":
            tid = elem.get("id")
            if not tid:
                raise PnmlError("transition without id")
            transitions.append(TransitionInfo(tid, _text_of(elem, "name") or ""))
        elif kind == "arc":
            w = _parse_count(_text_of(elem, "inscription"), f"inscription of arc {elem.get('id')}", 1)
            if w <= 0:
                raise PnmlError(f"arc {elem.get('id')} has non-positive weight {w}")
            arcs.append((elem.get("source", ""), elem.get("target", ""), w))
        elif kind == "toolspecific" and elem.get("tool", "").lower() == "nupn":
            nupn = elem

    p_index = {p.name: i for i, p in enumerate(places)}
    t_index = {t.name: i for i, t in enumerate(transitions)}
    if len(p_index) != len(places) or len(t_index) != len(transitions):
        raise PnmlError("duplicate place or transition id")
    pre: list[list[tuple[int, int]]] = [[] for _ in transitions]
    post: list[list[tuple[int, int]]] = [[] for _ in transitions]
    for src, dst, w in arcs:
        if src in p_index and dst in t_index:
            pre[t_index[dst]].append((p_index[src], w))
        elif src in t_index and dst in p_index:
            post[t_index[src]].append((p_index[dst], w))
        else:
            raise PnmlError(f"arc {src} -> {dst} references an undeclared node")

    units, unit_safe = None, False
    if nupn is not None:
        try:
            units, unit_safe = _parse_nupn(nupn, p_index)
        except PnmlError as exc:
            logger.warning("ignoring NUPN section: %s", exc)
            units, unit_safe = None, False
    return PetriNet(places, transitions, pre, post, marking, units, unit_safe,
                    name=net_elem.get("id", "net"))


def _parse_nupn(elem: ET.Element, p_index: dict[str, int]) -> tuple[list[UnitInfo], bool]:
    structure = next((e for e in elem.iter() if _local(e.tag) == "structure"), None)
    if structure is None:
        raise PnmlError("no <structure> element")
    safe = structure.get("safe", "false").lower() == "true"
    units = []
    owner: dict[int, str] = {}
    for u in structure.iter():
        if _local(u.tag) != "unit":
            continue
        uid = u.get("id", f"u{len(units)}")
        names: list[str] = []
        for c in u:
            if _local(c.tag) == "places" and c.text:
                names.extend(c.text.split())
        members = []
        for n in names:
            if n not in p_index:
                raise PnmlError(f"unit {uid} lists unknown place {n!r}")
            p = p_index[n]
            if p in owner:
                raise PnmlError(f"place {n!r} in units {owner[p]} and {uid}")
            owner[p] = uid
            members.append(p)
        units.append(UnitInfo(uid, tuple(members)))
    if len(owner) != len(p_index):
        raise PnmlError("some places belong to no unit")
    return units, safe


def write_pnml(net: PetriNet) -> str:
    """Serialise ``net`` as a PNML P/T document (NUPN section included)."""
    ns = "http://www.pnml.org/version-2009/grammar/pnml"
    root = ET.Element("pnml", xmlns=ns)
    net_elem = ET.SubElement(root, "net", id=net.name,
                             type="http://www.pnml.org/version-2009/grammar/ptnet")
    page = ET.SubElement(net_elem, "page", id="page0")
    for p, info in enumerate(net.places):
        pe = ET.SubElement(page, "place", id=info.name)
        if info.label:
            ET.SubElement(ET.SubElement(pe, "name"), "text").text = info.label
        if net.initial_marking[p]:
            im = ET.SubElement(pe, "initialMarking")
            ET.SubElement(im, "text").text = str(net.initial_marking[p])
    for info in net.transitions:
        te = ET.SubElement(page, "transition", id=info.name)
        if info.label:
            ET.SubElement(ET.SubElement(te, "name"), "text").text = info.label
    k = 0
    for t, info in enumerate(net.transitions):
        for arcs, outgoing in ((net.pre[t], False), (net.post[t], True)):
            for p, w in arcs:
                pname = net.places[p].name
                src, dst = (info.name, pname) if outgoing else (pname, info.name)
                ae = ET.SubElement(page, "arc", id=f"a{k}", source=src, target=dst)
                k += 1
                if w != 1:
                    ET.SubElement(ET.SubElement(ae, "inscription"), "text").text = str(w)
    if net.units is not None:
        ts = ET.SubElement(net_elem, "toolspecific", tool="nupn", version="1.1")
        st = ET.SubElement(ts, "structure", units=str(len(net.units)),
                           safe="true" if net.unit_safe else "false")
        for unit in net.units:
            ue = ET.SubElement(st, "unit", id=unit.name)
            ET.SubElement(ue, "places").text = " ".join(net.places[p].name for p in unit.local_places)
            ET.SubElement(ue, "subunits")
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


@dataclass
class NetBuilder:
    """Small helper for assembling nets by name in code and tests."""

    name: str = "net"
    _places: list[str] = field(default_factory=list)
    _marking: list[int] = field(default_factory=list)
    _transitions: list[str] = field(default_factory=list)
    _pre: list[list[tuple[int, int]]] = field(default_factory=list)
    _post: list[list[tuple[int, int]]] = field(default_factory=list)
    _units: list[tuple[str, list[str]]] = field(default_factory=list)
    _index: dict[str, int] = field(default_factory=dict)

    def place(self, name: str, tokens: int = 0) -> str:
        self._index[name] = len(self._places)
        self._places.append(name)
        self._marking.append(tokens)
        return name

    def transition(self, name: str, pre: dict[str, int] | Sequence[str] = (),
                   post: dict[str, int] | Sequence[str] = ()) -> str:
        index = self._index

        def arcs(spec):
            items = spec.items() if isinstance(spec, dict) else ((n, 1) for n in spec)
            return [(index[n], w) for n, w in items]

        self._transitions.append(name)
        self._pre.append(arcs(pre))
        self._post.append(arcs(post))
        return name

    def unit(self, name: str, places: Sequence[str]) -> None:
        self._units.append((name, list(places)))

    def build(self, unit_safe: bool = True) -> PetriNet:
        index = self._index
        units = [UnitInfo(n, tuple(index[p] for p in ps)) for n, ps in self._units] or None
        return PetriNet(
            [PlaceInfo(n) for n in self._places],
            [TransitionInfo(n) for n in self._transitions],
            self._pre, self._post, self._marking, units, unit_safe and bool(units), self.name,
        )
