"""The three search optimisations. Each one is switched off while the
other two stay on, on an instance built to show it."""

import time

from pnltl import Options, bind, check, check_automaton, parse_ltl
from pnltl.buchi import TRUE_LABEL, BuchiAutomaton, annotate_heuristic
from pnltl.codec import Scheme, decode, drw_read, encode, plan_encoding
from pnltl.ltl import Fireable
from pnltl.models import counter_grid, switches, wide_counter

# dynamic firesets: one resumable cursor per state instead of a stored list
net = switches(250)
f = bind(parse_ltl("G (tokens-count(on3) <= 0) || G is-fireable(up7)"), net)
full, lazy = check(net, f, Options(dyn=False)), check(net, f, Options(dyn=True))
print(f"fireset metadata on {net.num_transitions} transitions: "
      f"{full.stats.peak_meta_bytes} B stored lists vs {lazy.stats.peak_meta_bytes} B cursors")

# direct reads: mask and shift one field instead of decoding every place
net = wide_counter(200)
plan = plan_encoding(net, Scheme.DEFAULT16)
words = encode(plan, net.initial_marking)
n = 200_000
t = time.perf_counter()
for i in range(n):
    drw_read(plan, words, i % 200)
direct = time.perf_counter() - t
t = time.perf_counter()
for i in range(n // 100):
    decode(plan, words)[i % 200]
full_decode = (time.perf_counter() - t) * 100
print(f"reading one place of 200: direct {direct / n * 1e9:.0f} ns, via decode {full_decode / n * 1e9:.0f} ns")

# heuristic order: the dead branch of the automaton is tried last
net = counter_grid(99)
aut = annotate_heuristic(BuchiAutomaton([Fireable((net.transition_index("incx"),))], [0], [False, False, True],
                                        [[(TRUE_LABEL, 1), ((1, 0), 2)], [(TRUE_LABEL, 1)], [(TRUE_LABEL, 2)]]))
print("distances to acceptance:", aut.distance)
for hba in (False, True):
    v = check_automaton(net, aut, Options(hba=hba))
    print(f"  heuristic {'on ' if hba else 'off'}: {v.status.value}, {v.stats.product_states} product states")
