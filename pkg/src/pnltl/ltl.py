"""LTL formulas over Petri net atoms.

Grammar (one formula per line in formula files, ``#`` starts a comment)::

    or     := and ('||' and)*
    and    := until ('&&' until)*
    until  := unary (('U' | 'R') until)?
    unary  := ('!' | 'X' | 'F' | 'G') unary | primary
    primary:= '(' or ')' | 'true' | 'false' | atom
    atom   := 'is-fireable' '(' names ')' | expr cmp expr
    expr   := INT | 'tokens-count' '(' names ')'
    cmp    := '<=' | '<' | '=' | '>=' | '>'

Names are bare words or ``"quoted strings"``. ``=`` becomes a pair of
``<=`` atoms, and a strict comparison against a constant is rewritten
to ``<=`` by shifting the constant by one.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from pnltl.petri import PetriNet, is_enabled


class LtlSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int, line: int = 1) -> None:
        col = pos + 1
        self.line, self.column = line, col
        super().__init__(f"line {line}, column {col}: {message}")


class ResolutionError(ValueError):
    """A formula names a place or transition the net does not have."""


# -- atoms --------------------------------------------------------------------


@dataclass(frozen=True)
class Fireable:
    transitions: tuple

    def evaluate(self, net: PetriNet, marking) -> bool:
        return any(is_enabled(net, marking, t) for t in self.transitions)

    def __str__(self) -> str:
        return f"is-fireable({', '.join(map(_name, self.transitions))})"


@dataclass(frozen=True)
class TokensCount:
    places: tuple

    def value(self, marking) -> int:
        return sum(marking[p] for p in self.places)

    def __str__(self) -> str:
        return f"tokens-count({', '.join(map(_name, self.places))})"


IntExpr = Union[int, TokensCount]


@dataclass(frozen=True)
class Compare:
    lhs: IntExpr
    op: str  # "<=" or "<"
    rhs: IntExpr

    def evaluate(self, net: PetriNet, marking) -> bool:
        a = self.lhs if isinstance(self.lhs, int) else self.lhs.value(marking)
        b = self.rhs if isinstance(self.rhs, int) else self.rhs.value(marking)
        return a <= b if self.op == "<=" else a < b

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


def _name(x) -> str:
    if isinstance(x, str) and not re.fullmatch(r"[A-Za-z0-9_.\-]+", x):
        return '"' + x.replace('"', '\\"') + '"'
    return str(x)


# -- formulas -----------------------------------------------------------------


class Formula:
    __slots__ = ()

    def __invert__(self) -> "Formula":
        return Not(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)


@dataclass(frozen=True)
class Const(Formula):
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Prop(Formula):
    atom: object

    def __str__(self) -> str:
        return str(self.atom)


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def __str__(self) -> str:
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula

    def __str__(self) -> str:
        return f"X {_wrap(self.arg)}"


@dataclass(frozen=True)
class Finally(Formula):
    arg: Formula

    def __str__(self) -> str:
        return f"F {_wrap(self.arg)}"


@dataclass(frozen=True)
class Globally(Formula):
    arg: Formula

    def __str__(self) -> str:
        return f"G {_wrap(self.arg)}"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} && {self.right})"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} || {self.right})"


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} U {self.right})"


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"({self.left} R {self.right})"


UNARY = (Not, Next, Finally, Globally)
BINARY = (And, Or, Until, Release)


def _wrap(f: Formula) -> str:
    if isinstance(f, Prop) and isinstance(f.atom, Compare):
        return f"({f})"
    return str(f)


def atoms_of(f: Formula) -> list:
    """Distinct atoms in left-to-right order of first occurrence."""
    seen: dict = {}

    def walk(g: Formula) -> None:
        if isinstance(g, Prop):
            seen.setdefault(g.atom, None)
        elif isinstance(g, UNARY):
            walk(g.arg)
        elif isinstance(g, BINARY):
            walk(g.left)
            walk(g.right)

    walk(f)
    return list(seen)


def size(f: Formula) -> int:
    if isinstance(f, UNARY):
        return 1 + size(f.arg)
    if isinstance(f, BINARY):
        return 1 + size(f.left) + size(f.right)
    return 1


# -- parser -------------------------------------------------------------------

_WS = re.compile(r"\s+")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")
_INT = re.compile(r"-?\d+")
_BARE_NAME = re.compile(r"[^\s,()\"]+")
_KEYWORDS = {"true", "false", "U", "R", "X", "F", "G", "is-fireable", "tokens-count"}


class _Parser:
    def __init__(self, text: str, line: int, allow_props: bool) -> None:
        self.text = text
        self.pos = 0
        self.line = line
        self.allow_props = allow_props

    def error(self, msg: str, pos: Optional[int] = None) -> LtlSyntaxError:
        return LtlSyntaxError(msg, self.text, self.pos if pos is None else pos, self.line)

    def skip(self) -> None:
        m = _WS.match(self.text, self.pos)
        if m:
            self.pos = m.end()

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def peek_word(self) -> Optional[str]:
        self.skip()
        m = _WORD.match(self.text, self.pos)
        return m.group() if m else None

    def expect(self, s: str) -> None:
        if not self.peek(s):
            raise self.error(f"expected {s!r}")
        self.pos += len(s)

    def parse(self) -> Formula:
        f = self.disjunction()
        self.skip()
        if self.pos != len(self.text):
            raise self.error("unexpected trailing input")
        return f

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek("||"):
            self.pos += 2
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.until()
        while self.peek("&&"):
            self.pos += 2
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        f = self.unary()
        word = self.peek_word()
        if word in ("U", "R"):
            self.pos += 1
            rhs = self.until()
            return Until(f, rhs) if word == "U" else Release(f, rhs)
        return f

    def unary(self) -> Formula:
        if self.peek("!"):
            self.pos += 1
            return Not(self.unary())
        word = self.peek_word()
        if word and set(word) <= set("XFG"):
            self.pos += len(word)
            f = self.unary()
            for op in reversed(word):
                f = {"X": Next, "F": Finally, "G": Globally}[op](f)
            return f
        return self.primary()

    def primary(self) -> Formula:
        self.skip()
        start = self.pos
        if self.peek("("):
            self.pos += 1
            f = self.disjunction()
            self.expect(")")
            return f
        word = self.peek_word()
        if word == "true":
            self.pos += 4
            return TRUE
        if word == "false":
            self.pos += 5
            return FALSE
        if word == "is-fireable":
            self.pos += len(word)
            return Prop(Fireable(self.names()))
        if word == "tokens-count" or _INT.match(self.text, self.pos):
            return self.comparison()
        if self.allow_props and word and word not in _KEYWORDS:
            self.pos += len(word)
            return Prop(word)
        raise self.error("expected an atomic proposition", start)

    def expr(self) -> IntExpr:
        self.skip()
        m = _INT.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return int(m.group())
        if self.peek_word() == "tokens-count":
            self.pos += len("tokens-count")
            return TokensCount(self.names())
        raise self.error("expected an integer or tokens-count(...)")

    def comparison(self) -> Formula:
        lhs = self.expr()
        self.skip()
        for op in ("<=", ">=", "<", ">", "="):
            if self.text.startswith(op, self.pos):
                self.pos += len(op)
                break
        else:
            raise self.error("expected a comparison operator")
        rhs = self.expr()
        return make_comparison(lhs, op, rhs)

    def names(self) -> tuple[str, ...]:
        self.expect("(")
        out = []
        while True:
            self.skip()
            if self.peek('"'):
                end = self.pos + 1
                buf = []
                while end < len(self.text) and self.text[end] != '"':
                    if self.text[end] == "\\" and end + 1 < len(self.text):
                        end += 1
                    buf.append(self.text[end])
                    end += 1
                if end >= len(self.text):
                    raise self.error("unterminated quoted name")
                out.append("".join(buf))
                self.pos = end + 1
            else:
                m = _BARE_NAME.match(self.text, self.pos)
                if not m:
                    raise self.error("expected a name")
                out.append(m.group())
                self.pos = m.end()
            if self.peek(","):
                self.pos += 1
                continue
            self.expect(")")
            return tuple(out)


def make_comparison(lhs: IntExpr, op: str, rhs: IntExpr) -> Formula:
    """Build the atom(s) for ``lhs op rhs`` in the normalised form."""
    if op == ">=":
        lhs, op, rhs = rhs, "<=", lhs
    elif op == ">":
        lhs, op, rhs = rhs, "<", lhs
    if op == "=":
        return And(Prop(Compare(lhs, "<=", rhs)), Prop(Compare(rhs, "<=", lhs)))
    if op == "<":
        if isinstance(lhs, int):
            return Prop(Compare(lhs + 1, "<=", rhs))
        if isinstance(rhs, int):
            return Prop(Compare(lhs, "<=", rhs - 1))
    return Prop(Compare(lhs, op, rhs))


def parse_ltl(text: str, allow_props: bool = False, line: int = 1) -> Formula:
    """Parse one formula. ``allow_props`` admits bare proposition names."""
    return _Parser(text, line, allow_props).parse()


def parse_formula_file(text: str) -> list[tuple[int, Formula]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = _strip_comment(raw)
        if stripped.strip():
            out.append((lineno, parse_ltl(stripped, line=lineno)))
    return out


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


# -- binding --------------------------------------------------------------------


def _resolve(names, lookup, kind: str) -> tuple[int, ...]:
    idx = set()
    for n in names:
        if isinstance(n, int):
            idx.add(n)
            continue
        try:
            idx.add(lookup(n))
        except KeyError:
            raise ResolutionError(f"unknown {kind} {n!r}") from None
    # a name listed twice counts once: the atoms range over sets
    return tuple(sorted(idx))


def bind_atom(atom, net: PetriNet):
    if isinstance(atom, Fireable):
        return Fireable(_resolve(atom.transitions, net.transition_index, "transition"))
    if isinstance(atom, Compare):
        def side(e):
            if isinstance(e, TokensCount):
                return TokensCount(_resolve(e.places, net.place_index, "place"))
            return e
        return Compare(side(atom.lhs), atom.op, side(atom.rhs))
    raise ResolutionError(f"cannot bind atom {atom!r}")


def map_atoms(f: Formula, fn) -> Formula:
    if isinstance(f, Prop):
        return Prop(fn(f.atom))
    if isinstance(f, UNARY):
        return type(f)(map_atoms(f.arg, fn))
    if isinstance(f, BINARY):
        return type(f)(map_atoms(f.left, fn), map_atoms(f.right, fn))
    return f


def bind(f: Formula, net: PetriNet) -> Formula:
    """Resolve place and transition names to indices of ``net``."""
    return map_atoms(f, lambda a: bind_atom(a, net))


# -- negation normal form -------------------------------------------------------


def to_nnf(f: Formula) -> Formula:
    if isinstance(f, Not):
        return _negate(f.arg)
    if isinstance(f, UNARY):
        return type(f)(to_nnf(f.arg))
    if isinstance(f, BINARY):
        return type(f)(to_nnf(f.left), to_nnf(f.right))
    return f


def _negate(f: Formula) -> Formula:
    if isinstance(f, Const):
        return Const(not f.value)
    if isinstance(f, Prop):
        return Not(f)
    if isinstance(f, Not):
        return to_nnf(f.arg)
    if isinstance(f, And):
        return Or(_negate(f.left), _negate(f.right))
    if isinstance(f, Or):
        return And(_negate(f.left), _negate(f.right))
    if isinstance(f, Next):
        return Next(_negate(f.arg))
    if isinstance(f, Finally):
        return Globally(_negate(f.arg))
    if isinstance(f, Globally):
        return Finally(_negate(f.arg))
    if isinstance(f, Until):
        return Release(_negate(f.left), _negate(f.right))
    if isinstance(f, Release):
        return Until(_negate(f.left), _negate(f.right))
    raise TypeError(f"not a formula: {f!r}")


def is_nnf(f: Formula) -> bool:
    if isinstance(f, Not):
        return isinstance(f.arg, Prop)
    if isinstance(f, UNARY):
        return is_nnf(f.arg)
    if isinstance(f, BINARY):
        return is_nnf(f.left) and is_nnf(f.right)
    return True


# -- structural evaluation and simplification -----------------------------------


class Structural(enum.Enum):
    ALWAYS_TRUE = "always-true"
    ALWAYS_FALSE = "always-false"
    UNKNOWN = "unknown"


def _unit_count(net: PetriNet, places) -> int:
    return len({net.places[p].myunit for p in places})


def eval_atom_structurally(net: PetriNet, atom) -> Structural:
    """Decide atoms that hold (or fail) in every marking of ``net``."""
    if not isinstance(atom, Compare) or atom.op != "<=":
        return Structural.UNKNOWN
    lhs, rhs = atom.lhs, atom.rhs
    if isinstance(lhs, int) and isinstance(rhs, int):
        return Structural.ALWAYS_TRUE if lhs <= rhs else Structural.ALWAYS_FALSE
    nupn = net.units is not None and net.unit_safe
    if isinstance(lhs, int) and isinstance(rhs, TokensCount):
        k, places = lhs, rhs.places
        if k <= 0:
            return Structural.ALWAYS_TRUE
        if net.one_safe and k > len(places):
            return Structural.ALWAYS_FALSE
        if nupn and k > _unit_count(net, places):
            return Structural.ALWAYS_FALSE
    elif isinstance(lhs, TokensCount) and isinstance(rhs, int):
        k, places = rhs, lhs.places
        if net.one_safe and k >= len(places):
            return Structural.ALWAYS_TRUE
        if nupn and k >= _unit_count(net, places):
            return Structural.ALWAYS_TRUE
    return Structural.UNKNOWN


def _simplify_once(f: Formula, decide) -> Formula:
    if isinstance(f, Const):
        return f
    if isinstance(f, Prop):
        if decide is not None:
            verdict = decide(f.atom)
            if verdict is Structural.ALWAYS_TRUE:
                return TRUE
            if verdict is Structural.ALWAYS_FALSE:
                return FALSE
        return f
    if isinstance(f, Not):
        arg = _simplify_once(f.arg, decide)
        return Const(not arg.value) if isinstance(arg, Const) else Not(arg)
    if isinstance(f, (Next, Finally, Globally)):
        arg = _simplify_once(f.arg, decide)
        return arg if isinstance(arg, Const) else type(f)(arg)
    left = _simplify_once(f.left, decide)
    right = _simplify_once(f.right, decide)
    if isinstance(f, And):
        if left == FALSE or right == FALSE:
            return FALSE
        if left == TRUE:
            return right
        if right == TRUE or left == right:
            return left
        return And(left, right)
    if isinstance(f, Or):
        if left == TRUE or right == TRUE:
            return TRUE
        if left == FALSE:
            return right
        if right == FALSE or left == right:
            return left
        return Or(left, right)
    if isinstance(f, Until):
        if isinstance(right, Const):
            return right
        if left == FALSE:
            return right
        return Until(left, right)
    if isinstance(f, Release):
        if isinstance(right, Const):
            return right
        if left == TRUE:
            return right
        if left == FALSE:
            return Globally(right)
        return Release(left, right)
    return f


def simplify(f: Formula, net: Optional[PetriNet] = None) -> Formula:
    """Rewrite to a fixpoint, replacing structurally decided atoms when a
    net is given. Semantics are preserved on every run of that net."""
    decide = (lambda a: eval_atom_structurally(net, a)) if net is not None else None
    while True:
        g = _simplify_once(f, decide)
        if g == f:
            return g
        f = g


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, UNARY):
        yield from subformulas(f.arg)
    elif isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
