"""From property text to the Büchi automaton the search uses."""

from pnltl import bind, build_automaton, ltl_to_buchi, parse_ltl, simplify, to_nnf
from pnltl.ltl import Not
from pnltl.models import philosophers

net = philosophers(3)
text = "G (!is-fireable(takeL0) || F (tokens-count(eat0) >= 1))"
formula = bind(parse_ltl(text), net)
print("property:       ", text)

# once bound, atoms refer to places and transitions by index
negated = to_nnf(Not(formula))
print("negation in NNF:", negated)
reduced = simplify(negated, net)
print("simplified:     ", reduced)

raw = ltl_to_buchi(reduced)
small = build_automaton(reduced)
print(f"\nautomaton: {raw.num_states} states raw, {small.num_states} after merging")
print(small.dump())

# atoms decided by the net's structure disappear before translation
trivial = bind(parse_ltl("G (tokens-count(eat0, hasL0, think0) <= 1) && F is-fireable(takeR1)"), net)
print("\nwith a structurally true conjunct:", simplify(to_nnf(trivial), philosophers(3, nupn=True)))
