import random

import pytest

from oracles import lasso_sat, random_formula, random_lasso, reachable_markings
from pnltl import models
from pnltl.ltl import (
    FALSE,
    TRUE,
    And,
    Compare,
    Finally,
    Fireable,
    Globally,
    LtlSyntaxError,
    Next,
    Not,
    Or,
    Prop,
    Release,
    ResolutionError,
    Structural,
    TokensCount,
    Until,
    atoms_of,
    bind,
    eval_atom_structurally,
    is_nnf,
    parse_formula_file,
    parse_ltl,
    simplify,
    to_nnf,
)
from pnltl.petri import NetBuilder

P, Q, R = Prop("p"), Prop("q"), Prop("r")


def props(text):
    return parse_ltl(text, allow_props=True)


# -- parsing -----------------------------------------------------------------------


def test_parse_globally_comparison():
    f = parse_ltl("G (tokens-count(p1) <= 1)")
    assert f == Globally(Prop(Compare(TokensCount(("p1",)), "<=", 1)))


def test_parse_fireable_list():
    assert parse_ltl("F is-fireable(t1, t2)") == Finally(Prop(Fireable(("t1", "t2"))))


def test_until_is_right_associative():
    assert props("p U q U r") == Until(P, Until(Q, R))
    assert props("p R q R r") == Release(P, Release(Q, R))


def test_precedence():
    assert props("p || q && r") == Or(P, And(Q, R))
    assert props("p && q U r") == And(P, Until(Q, R))
    assert props("! p U q") == Until(Not(P), Q)
    assert props("X p && F q || G r") == Or(And(Next(P), Finally(Q)), Globally(R))
    assert props("GF p") == Globally(Finally(P))


def test_comparison_sugar():
    eq = parse_ltl("tokens-count(a) = 2")
    tc = TokensCount(("a",))
    assert eq == And(Prop(Compare(tc, "<=", 2)), Prop(Compare(2, "<=", tc)))
    assert parse_ltl("1 < tokens-count(a)") == Prop(Compare(2, "<=", tc))
    assert parse_ltl("tokens-count(a) > 3") == Prop(Compare(4, "<=", tc))
    assert parse_ltl("tokens-count(a) < 3") == Prop(Compare(tc, "<=", 2))
    assert parse_ltl("tokens-count(a) >= 3") == Prop(Compare(3, "<=", tc))
    both = parse_ltl("tokens-count(a) < tokens-count(b)")
    assert both == Prop(Compare(tc, "<", TokensCount(("b",))))


def test_quoted_names():
    f = parse_ltl('is-fireable("fire now", t2)')
    assert f == Prop(Fireable(("fire now", "t2")))


@pytest.mark.parametrize("text, column", [
    ("G (tokens-count(p1) <= )", 24),
    ("is-fireable(t) &&", 18),
    ("F is-fireable()", 15),
    ("(F is-fireable(t)", 18),
])
def test_syntax_errors_report_position(text, column):
    with pytest.raises(LtlSyntaxError) as err:
        parse_ltl(text)
    assert err.value.line == 1
    assert err.value.column == column


def test_formula_file_lines_and_comments():
    text = "# header\nG is-fireable(t)\n\n  F (tokens-count(p) >= 1)  # trailing\n"
    parsed = parse_formula_file(text)
    assert [n for n, _ in parsed] == [2, 4]
    with pytest.raises(LtlSyntaxError) as err:
        parse_formula_file("G is-fireable(t)\nF (")
    assert err.value.line == 2


def test_printing_reparses():
    rng = random.Random(5)
    for _ in range(200):
        f = random_formula(rng, ["p", "q", "r"], 5)
        assert props(str(f)) == f


def test_binding_resolves_names():
    net = models.drain(3)
    f = bind(parse_ltl("G (tokens-count(p1, p2, p1) <= 3) && F is-fireable(t)"), net)
    atoms = atoms_of(f)
    assert atoms[0] == Compare(TokensCount((0, 1)), "<=", 3)
    assert atoms[1] == Fireable((0,))
    with pytest.raises(ResolutionError):
        bind(parse_ltl("F is-fireable(nope)"), net)


def test_atom_evaluation():
    net = models.drain(3)
    tc = bind(parse_ltl("tokens-count(p1, p2) <= 4"), net)
    assert tc.atom.evaluate(net, (3, 1))
    low = bind(parse_ltl("tokens-count(p1) <= 0"), net)
    assert not low.atom.evaluate(net, (1, 0))
    fireable = bind(parse_ltl("is-fireable(t)"), net)
    assert fireable.atom.evaluate(net, (1, 0))
    assert not fireable.atom.evaluate(net, (0, 3))


# -- normal form ---------------------------------------------------------------------


def test_nnf_examples():
    assert to_nnf(Not(Globally(P))) == Finally(Not(P))
    assert to_nnf(Not(Until(P, Q))) == Release(Not(P), Not(Q))
    assert to_nnf(Not(Not(P))) == P
    assert to_nnf(Not(Next(P))) == Next(Not(P))
    assert to_nnf(Not(And(P, Q))) == Or(Not(P), Not(Q))


def test_nnf_and_simplify_preserve_semantics():
    rng = random.Random(17)
    atoms = ["p", "q", "r", "s"]
    for _ in range(500):
        f = random_formula(rng, atoms, rng.randint(1, 6))
        g = to_nnf(f)
        assert is_nnf(g)
        h = simplify(g)
        for _ in range(200 if _ < 50 else 20):
            letters, loop = random_lasso(rng, atoms)
            want = lasso_sat(f, letters, loop)[0]
            assert lasso_sat(g, letters, loop)[0] == want
            assert lasso_sat(h, letters, loop)[0] == want


# -- structural evaluation -----------------------------------------------------------


def test_structural_rows():
    net = models.philosophers(3)
    nupn = models.philosophers(3, nupn=True)
    tc = lambda *ps: TokensCount(tuple(ps))
    assert eval_atom_structurally(net, Compare(0, "<=", tc(0, 1))) is Structural.ALWAYS_TRUE
    assert eval_atom_structurally(net, Compare(tc(0, 1, 2), "<=", 3)) is Structural.ALWAYS_TRUE
    assert eval_atom_structurally(net, Compare(4, "<=", tc(0, 1, 2))) is Structural.ALWAYS_FALSE
    # think0 and hasL0 share a unit: at most one token between them
    f = bind(parse_ltl("1 < tokens-count(think0, hasL0)"), nupn)
    assert eval_atom_structurally(nupn, f.atom) is Structural.ALWAYS_FALSE
    g = bind(parse_ltl("tokens-count(think0, hasL0, eat0) <= 1"), nupn)
    assert eval_atom_structurally(nupn, g.atom) is Structural.ALWAYS_TRUE
    assert eval_atom_structurally(nupn, Compare(tc(0, 1), "<=", 0)) is Structural.UNKNOWN
    assert eval_atom_structurally(net, Fireable((0,))) is Structural.UNKNOWN


def test_structural_verdicts_hold_on_every_marking():
    tc = lambda ps: TokensCount(tuple(ps))
    for net, _ in models.corpus():
        reach = reachable_markings(net)
        n = net.num_places
        candidates = []
        for k in range(0, 4):
            for ps in ([0], [0, 1 % n], list(range(min(3, n))), list(range(n))):
                ps = sorted(set(ps))
                candidates += [Compare(k, "<=", tc(ps)), Compare(tc(ps), "<=", k)]
        for atom in candidates:
            verdict = eval_atom_structurally(net, atom)
            if verdict is Structural.UNKNOWN:
                continue
            expected = verdict is Structural.ALWAYS_TRUE
            assert all(atom.evaluate(net, m) == expected for m in reach), (net.name, atom)


# -- simplification --------------------------------------------------------------------


def test_table_rules():
    assert simplify(Globally(TRUE)) == TRUE
    assert simplify(Globally(FALSE)) == FALSE
    assert simplify(Finally(TRUE)) == TRUE
    assert simplify(Finally(FALSE)) == FALSE
    assert simplify(Next(TRUE)) == TRUE
    assert simplify(Next(FALSE)) == FALSE
    assert simplify(Until(P, TRUE)) == TRUE
    assert simplify(Until(P, FALSE)) == FALSE
    assert simplify(Or(TRUE, P)) == TRUE
    assert simplify(And(FALSE, P)) == FALSE
    assert simplify(And(TRUE, P)) == P
    assert simplify(Or(FALSE, P)) == P


def test_structural_then_table_rules():
    net = models.drain(2)
    f = bind(parse_ltl("F (0 <= tokens-count(p1))"), net)
    assert simplify(f, net) == TRUE


def test_false_inner_atom_collapses_until():
    b = NetBuilder()
    b.place("p1", 1)
    b.place("p2")
    b.transition("t", ["p1"], ["p2"])
    b.transition("u", ["p2"], ["p1"])
    net = b.build()
    assert net.one_safe
    f = bind(parse_ltl("is-fireable(t) U (is-fireable(u) && 1 < tokens-count(p1, p1))"), net)
    assert simplify(f, net) == FALSE
