"""Check properties and replay the counterexamples that come back."""

from pnltl import Options, Status, bind, check, parse_ltl, verify_counterexample
from pnltl.models import drain, philosophers

cases = [
    (philosophers(3), "G F is-fireable(takeL0)"),            # the philosophers can deadlock
    (philosophers(3), "G (tokens-count(eat0, eat1) <= 1)"),  # neighbours never eat together
    (drain(3), "F G (tokens-count(p2) >= 3)"),               # tokens end up in p2
    (drain(3), "G (1 <= tokens-count(p1))"),                 # ...so p1 empties
]

for net, text in cases:
    verdict = check(net, bind(parse_ltl(text), net), Options())
    s = verdict.stats
    print(f"{net.name:16s} {text:40s} {verdict.status.value:9s} "
          f"{s.product_states} product states, {s.rounds} round(s)")
    if verdict.status is Status.VIOLATED:
        prefix, cycle = verdict.run.transitions(net)
        print(f"{'':16s} prefix {' '.join(prefix) or '(empty)'}; cycle {' '.join(cycle)}  ('-' stutters)")
        assert verify_counterexample(net, verdict.automaton, verdict.run)
