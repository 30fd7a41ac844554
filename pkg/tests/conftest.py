import numpy as np
import pytest

from kronsparse import BipartiteGraph, RbgpChain, complete_graph


def ring_graph(n, d=2):
    """(n, n) biregular graph from d cyclic diagonals; connected for d=2."""
    return BipartiteGraph(
        n, n, tuple(tuple(sorted((u + j) % n for j in range(d))) for u in range(n))
    )


def example_chain():
    """Four-factor chain with 8*2*8*4 = 512 product edges but 22 stored ones.

    Blocking levels are (16,16), (8,8), (2,2); the index compression ratio is
    512/22, just over 23x.
    """
    return RbgpChain(
        (
            ring_graph(4),
            BipartiteGraph(2, 2, ((0,), (1,))),
            ring_graph(4),
            complete_graph(2, 2),
        )
    )


def random_biregular(rng, num_left, num_right, d_left, tries=1000):
    """Uniform-ish simple biregular graph via stub matching with rejection.

    d_left * num_left must be divisible by num_right. Small graphs only.
    """
    total = d_left * num_left
    if total % num_right:
        raise ValueError("degree sequence not realizable")
    d_right = total // num_right
    stubs = np.repeat(np.arange(num_right), d_right)
    for _ in range(tries):
        rng.shuffle(stubs)
        rows = stubs.reshape(num_left, d_left)
        if all(np.unique(r).size == d_left for r in rows):
            return BipartiteGraph(
                num_left,
                num_right,
                tuple(tuple(int(v) for v in np.sort(r)) for r in rows),
            )
    raise RuntimeError(
        f"no simple ({num_left},{num_right},{d_left})-biregular sample in {tries} tries"
    )


class FixedCoins:
    """Stand-in rng whose integers() replays a fixed bit sequence."""

    def __init__(self, bits):
        self.bits = list(bits)

    def integers(self, low, high, size=None, dtype=None):
        assert low == 0 and high == 2
        n = size if size is not None else 1
        if len(self.bits) < n:
            self.bits.extend([0] * (n - len(self.bits)))
        out, self.bits = self.bits[:n], self.bits[n:]
        return np.asarray(out, dtype=dtype or np.uint8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
