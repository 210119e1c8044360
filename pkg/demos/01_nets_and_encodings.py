"""Build a net, round-trip it through PNML and compare the bit layouts
each encoding gives it."""

from pnltl import PetriNet, Scheme, decode, encode, parse_pnml, plan_encoding, write_pnml
from pnltl.codec import PlanningError
from pnltl.models import philosophers

net = parse_pnml(write_pnml(philosophers(3, nupn=True)))
print(net, "units:", [u.name for u in net.units])
print("invariant bounds:", net.invariant_bounds)
print("1-safe:", net.one_safe)

m0 = net.initial_marking
for scheme in Scheme:
    try:
        plan = plan_encoding(net, scheme)
    except PlanningError as exc:
        print(f"{scheme.name:10s} not applicable: {exc}")
        continue
    words = encode(plan, m0)
    assert decode(plan, words) == m0
    print(f"{scheme.name:10s} {plan.total_bits:3d} bits in {plan.words} word(s): "
          + " ".join(f"{w:08x}" for w in words))

auto = plan_encoding(net)
print("\nchosen automatically:", auto.scheme.name)
print(auto.layout_tsv(net))
