"""Packed marking encodings and direct read/write on them.

A marking is packed into a sequence of 32-bit words, bit 0 of word 0
first. Each place (or, for NUPN nets, each unit) owns a contiguous bit
range. Reading or writing a range touches one word when it fits inside
it and two adjacent words otherwise, using precomputed masks; nothing is
decoded or re-encoded.

The word-level helpers work on Python lists of ints and equally on numpy
``uint32`` arrays indexed by word (``words[i]`` may be a vector), which
is how the exhaustive tests drive them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from pnltl.invariants import invariant_basis
from pnltl.petri import PetriNet

WORD_BITS = 32
WORD_MASK = 0xFFFFFFFF
DEFAULT16_MAX = 65535


class Scheme(enum.Enum):
    DEFAULT16 = "default16"
    DEFAULT32 = "default32"
    ONE_SAFE = "safe"
    NUPN = "nupn"
    PINVARIANT = "pinv"


class PlanningError(ValueError):
    """The requested encoding does not apply to the net."""


class ModelNotHandled(Exception):
    """A token count does not fit the encoding; the run must stop."""

    def __init__(self, place: int, value: int, reason: str = "") -> None:
        self.place = place
        self.value = value
        super().__init__(reason or f"place {place} would hold {value} tokens, beyond the encoding")


@dataclass(frozen=True)
class Field:
    """A bit range with its read/write patterns.

    ``cross`` is set when the range spills from word ``index`` into
    ``index + 1``; the ``*_high`` patterns then address the spill.
    """

    start: int
    length: int
    index: int
    offset: int
    cross: bool
    read_low: int
    read_high: int
    zero_low: int
    zero_high: int
    shift_high: int

    @classmethod
    def at(cls, start: int, length: int) -> "Field":
        index, offset = divmod(start, WORD_BITS)
        ones = (1 << length) - 1
        cross = offset + length > WORD_BITS
        read_low = (ones << offset) & WORD_MASK
        # offset 0 never crosses, so the shift below stays in 1..31
        shift_high = WORD_BITS - offset if cross else 0
        read_high = ones >> shift_high if cross else 0
        return cls(start, length, index, offset, cross, read_low, read_high,
                   ~read_low & WORD_MASK, ~read_high & WORD_MASK, shift_high)


def read_bits(words, f: Field):
    if f.length == 0:
        return 0
    if not f.cross:
        return (words[f.index] & f.read_low) >> f.offset
    return ((words[f.index] & f.read_low) >> f.offset) + ((words[f.index + 1] & f.read_high) << f.shift_high)


def write_bits(words, f: Field, value) -> None:
    if f.length == 0:
        return
    i = f.index
    words[i] = (words[i] & f.zero_low) | ((value << f.offset) & WORD_MASK)
    if f.cross:
        words[i + 1] = (words[i + 1] & f.zero_high) | (value >> f.shift_high)


def read_field(words, start: int, length: int):
    return read_bits(words, Field.at(start, length))


def write_field(words, start: int, length: int, value) -> None:
    write_bits(words, Field.at(start, length), value)


# place access kinds
OWN, UNIT, AFFINE = 0, 1, 2


@dataclass
class EncodingPlan:
    """Bit layout of one net's markings under one scheme."""

    scheme: Scheme
    num_places: int
    fields: list[Optional[Field]]
    limits: list[int]
    total_bits: int
    kinds: list[int] = field(default_factory=list)
    # NUPN: per place its unit and local code, per unit its field
    place_unit: list[Optional[int]] = field(default_factory=list)
    place_code: list[int] = field(default_factory=list)
    unit_fields: list[Field] = field(default_factory=list)
    # P-invariant: redundant place -> (divisor, constant, ((q, coef), ...))
    affine: dict[int, tuple[int, int, tuple[tuple[int, int], ...]]] = field(default_factory=dict)
    bounds: list[Optional[int]] = field(default_factory=list)

    @property
    def words(self) -> int:
        return -(-self.total_bits // WORD_BITS)

    def place_field(self, p: int) -> Optional[Field]:
        """The bit range holding ``p`` (its unit's range for NUPN)."""
        if self.kinds[p] == UNIT:
            return self.unit_fields[self.place_unit[p]]
        return self.fields[p]

    def layout_rows(self, net: PetriNet) -> list[tuple[str, int, int]]:
        rows = []
        for p in range(self.num_places):
            f = self.place_field(p)
            rows.append((net.places[p].name, f.start if f else -1, f.length if f else 0))
        return rows

    def layout_tsv(self, net: PetriNet) -> str:
        lines = ["place\tstart_pos\tbit_len"]
        lines += [f"{n}\t{s}\t{b}" for n, s, b in self.layout_rows(net)]
        return "\n".join(lines) + "\n"


def bits_for(bound: int) -> int:
    return math.ceil(math.log2(bound + 1)) if bound > 0 else 0


def _own_plan(scheme: Scheme, widths: Sequence[int], limits: Sequence[int]) -> EncodingPlan:
    fields, pos = [], 0
    for w in widths:
        fields.append(Field.at(pos, w))
        pos += w
    return EncodingPlan(scheme, len(widths), fields, list(limits), pos, kinds=[OWN] * len(widths))


def plan_encoding(net: PetriNet, requested: Optional[Scheme] = None) -> EncodingPlan:
    """Choose and lay out an encoding for ``net``.

    Without a request the densest applicable scheme wins: NUPN for
    unit-safe NUPN nets, one bit per place for provably 1-safe nets,
    invariant bounds when every place is bounded, else 16 (or 32) bits.
    """
    n = net.num_places
    if requested is None:
        if net.units is not None and net.unit_safe:
            requested = Scheme.NUPN
        elif net.one_safe:
            requested = Scheme.ONE_SAFE
        elif n and all(b is not None for b in net.invariant_bounds):
            requested = Scheme.PINVARIANT
        else:
            requested = Scheme.DEFAULT16

    if requested in (Scheme.DEFAULT16, Scheme.DEFAULT32):
        if requested is Scheme.DEFAULT16 and any(v > DEFAULT16_MAX for v in net.initial_marking):
            requested = Scheme.DEFAULT32
        width = 16 if requested is Scheme.DEFAULT16 else 32
        return _own_plan(requested, [width] * n, [(1 << width) - 1] * n)

    if requested is Scheme.ONE_SAFE:
        if not net.one_safe:
            raise PlanningError("net is not known to be 1-safe")
        return _own_plan(requested, [1] * n, [1] * n)

    if requested is Scheme.NUPN:
        if net.units is None:
            raise PlanningError("net has no NUPN units")
        unit_fields, pos = [], 0
        for unit in net.units:
            unit_fields.append(Field.at(pos, unit.unitlen))
            pos += unit.unitlen
        plan = EncodingPlan(requested, n, [None] * n, [1] * n, pos, kinds=[UNIT] * n)
        plan.place_unit = [p.myunit for p in net.places]
        plan.place_code = [p.myoffset for p in net.places]
        plan.unit_fields = unit_fields
        return plan

    if requested is Scheme.PINVARIANT:
        bounds = net.invariant_bounds
        if not n or any(b is None for b in bounds):
            raise PlanningError("some place is not covered by a semi-positive invariant")
        basis = invariant_basis(net)
        redundant = set(basis.redundant)
        widths = [0 if p in redundant else bits_for(bounds[p]) for p in range(n)]
        plan = _own_plan(requested, widths, bounds)
        plan.bounds = list(bounds)
        m0 = net.initial_marking
        for p, y in zip(basis.redundant, basis.vectors):
            const = sum(w * m for w, m in zip(y, m0))
            terms = tuple((q, w) for q, w in enumerate(y) if w and q != p)
            plan.affine[p] = (y[p], const, terms)
            plan.kinds[p] = AFFINE
            plan.fields[p] = None
        return plan

    raise PlanningError(f"unknown scheme {requested!r}")


def overflow_check(plan: EncodingPlan, value: int, place: int) -> None:
    """Stop the run when ``value`` cannot be stored for ``place``."""
    if 0 <= value <= plan.limits[place]:
        return
    if plan.scheme is Scheme.PINVARIANT:
        raise AssertionError(f"place {place} exceeds its invariant bound {plan.limits[place]} with {value}")
    raise ModelNotHandled(place, value)


def drw_read(plan: EncodingPlan, words, p: int) -> int:
    kind = plan.kinds[p]
    if kind == OWN:
        return read_bits(words, plan.fields[p])
    if kind == UNIT:
        code = read_bits(words, plan.unit_fields[plan.place_unit[p]])
        return 1 if code == plan.place_code[p] else 0
    divisor, const, terms = plan.affine[p]
    acc = const
    for q, w in terms:
        acc -= w * read_bits(words, plan.fields[q])
    return acc // divisor


def drw_write(plan: EncodingPlan, words, p: int, value: int) -> None:
    """Store ``value`` tokens for ``p`` in ``words`` in place."""
    overflow_check(plan, value, p)
    kind = plan.kinds[p]
    if kind == OWN:
        write_bits(words, plan.fields[p], value)
    elif kind == UNIT:
        f = plan.unit_fields[plan.place_unit[p]]
        code = plan.place_code[p]
        current = read_bits(words, f)
        if value:
            if current and current != code:
                raise ModelNotHandled(p, value, f"unit of place {p} already has a marked place")
            write_bits(words, f, code)
        elif current == code:
            write_bits(words, f, 0)
    # redundant places are implied by the others; nothing to store


def read_unit(plan: EncodingPlan, words, unit: int):
    return read_bits(words, plan.unit_fields[unit])


def write_unit(plan: EncodingPlan, words, unit: int, code) -> None:
    write_bits(words, plan.unit_fields[unit], code)


def encode(plan: EncodingPlan, dense: Sequence[int]) -> tuple[int, ...]:
    words = [0] * plan.words
    for p, v in enumerate(dense):
        if plan.kinds[p] == AFFINE:
            continue
        if v or plan.kinds[p] == OWN:
            drw_write(plan, words, p, v)
        else:
            overflow_check(plan, v, p)
    return tuple(words)


def decode(plan: EncodingPlan, words: Sequence[int]) -> tuple[int, ...]:
    """Unpack every place at once through one wide integer."""
    big = 0
    for i, w in enumerate(words):
        big |= w << (WORD_BITS * i)
    out = [0] * plan.num_places
    for p in range(plan.num_places):
        kind = plan.kinds[p]
        if kind == OWN:
            f = plan.fields[p]
            out[p] = (big >> f.start) & ((1 << f.length) - 1)
        elif kind == UNIT:
            f = plan.unit_fields[plan.place_unit[p]]
            out[p] = int((big >> f.start) & ((1 << f.length) - 1) == plan.place_code[p])
    for p, (divisor, const, terms) in plan.affine.items():
        out[p] = (const - sum(w * out[q] for q, w in terms)) // divisor
    return tuple(out)


class DrwView:
    """Index an encoded marking by place without decoding it."""

    __slots__ = ("plan", "words")

    def __init__(self, plan: EncodingPlan, words) -> None:
        self.plan = plan
        self.words = words

    def __getitem__(self, p: int) -> int:
        return drw_read(self.plan, self.words, p)

    def __len__(self) -> int:
        return self.plan.num_places


class DecodingView:
    """Index an encoded marking by decoding it in full on every access."""

    __slots__ = ("plan", "words", "counter")

    def __init__(self, plan: EncodingPlan, words, counter: Optional[list[int]] = None) -> None:
        self.plan = plan
        self.words = words
        self.counter = counter

    def __getitem__(self, p: int) -> int:
        if self.counter is not None:
            self.counter[0] += 1
        return decode(self.plan, self.words)[p]

    def __len__(self) -> int:
        return self.plan.num_places


def fire_encoded(plan: EncodingPlan, net: PetriNet, words: Sequence[int], t: int) -> tuple[int, ...]:
    """Fire ``t`` directly on the packed words, touching only changed places."""
    out = list(words)
    for p, d in net.deltas[t]:
        if plan.kinds[p] == AFFINE:
            continue
        drw_write(plan, out, p, drw_read(plan, out, p) + d)
    return tuple(out)


# -- state store ------------------------------------------------------------

HASH_SEED = 0x9E3779B97F4A7C15
HASH_MULT = 0xFF51AFD7ED558CCD
MASK64 = (1 << 64) - 1
ENTRY_OVERHEAD = 16
BUCKET_BYTES = 8


class StateStore:
    """Chained hash table interning encoded markings as dense ids.

    Buckets are Python lists of ``(words, id)`` pairs. The table starts
    with 2**16 buckets and doubles once the load factor passes 0.75.
    """

    def __init__(self, words_per_state: int, log_buckets: int = 16) -> None:
        self.words_per_state = words_per_state
        self._log = log_buckets
        self._buckets: list[list] = [[] for _ in range(1 << log_buckets)]
        self.markings: list[tuple[int, ...]] = []
        self.meta: list = []
        self.meta_bytes = 0
        self.peak_meta_bytes = 0

    def __len__(self) -> int:
        return len(self.markings)

    def _slot(self, words: Sequence[int]) -> int:
        h = HASH_SEED
        for w in words:
            h = ((h ^ w) * HASH_MULT) & MASK64
        h ^= h >> 29
        h = (h * HASH_MULT) & MASK64
        return h >> (64 - self._log)

    def intern(self, words: tuple[int, ...]) -> tuple[int, bool]:
        bucket = self._buckets[self._slot(words)]
        for stored, sid in bucket:
            if stored == words:
                return sid, False
        sid = len(self.markings)
        bucket.append((words, sid))
        self.markings.append(words)
        self.meta.append(None)
        if len(self.markings) > 0.75 * len(self._buckets):
            self._grow()
        return sid, True

    def lookup(self, words: tuple[int, ...]) -> Optional[int]:
        for stored, sid in self._buckets[self._slot(words)]:
            if stored == words:
                return sid
        return None

    def _grow(self) -> None:
        self._log += 1
        buckets: list[list] = [[] for _ in range(1 << self._log)]
        self._buckets = buckets
        for sid, words in enumerate(self.markings):
            buckets[self._slot(words)].append((words, sid))

    def set_meta(self, sid: int, value, nbytes: int) -> None:
        self.meta[sid] = value
        self.meta_bytes += nbytes
        if self.meta_bytes > self.peak_meta_bytes:
            self.peak_meta_bytes = self.meta_bytes

    def chain_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for b in self._buckets:
            hist[len(b)] = hist.get(len(b), 0) + 1
        return hist

    @property
    def nbytes(self) -> int:
        per_state = 4 * self.words_per_state + ENTRY_OVERHEAD
        return len(self.markings) * per_state + len(self._buckets) * BUCKET_BYTES + self.meta_bytes
