import random
import time

from oracles import dense_farkas
from pnltl import models
from pnltl.invariants import semi_positive_invariants


def test_sparse_elimination_matches_dense():
    rng = random.Random(1)
    for _ in range(400):
        n_p, n_t = rng.randint(1, 7), rng.randint(1, 7)
        c = [[rng.choice([0, 0, 1, -1, 2, -2]) for _ in range(n_t)] for _ in range(n_p)]
        assert sorted(map(tuple, semi_positive_invariants(c))) == dense_farkas(c)


def test_large_net_bounds_are_quick():
    net = models.switches(250)
    start = time.perf_counter()
    assert net.one_safe
    assert time.perf_counter() - start < 5
