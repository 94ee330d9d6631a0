"""Shared test helpers: chi-square with tail bucketing and rigged fixtures
for the distinguishing games."""

from __future__ import annotations

from random import Random

import pytest
from scipy import stats


def chi_square_pvalue(observed: dict, expected_probs: dict,
                      min_expected: float = 5.0) -> float:
    """Goodness-of-fit p-value; cells with small expectation are pooled into
    one bucket.  Any observed outcome with zero expected probability fails
    outright (returns 0)."""
    total = sum(observed.values())
    if any(key not in expected_probs for key in observed):
        return 0.0
    obs, exp = [], []
    pool_obs, pool_exp = 0, 0.0
    for key, p in expected_probs.items():
        e = float(p) * total
        o = observed.get(key, 0)
        if e < min_expected:
            pool_obs += o
            pool_exp += e
        else:
            obs.append(o)
            exp.append(e)
    if pool_exp > 0:
        obs.append(pool_obs)
        exp.append(pool_exp)
    scale = sum(obs) / sum(exp)
    exp = [e * scale for e in exp]
    return float(stats.chisquare(obs, exp).pvalue)


MARKER_DOC = 0


class MarkerStego:
    """Rigged stegosystem whose stegotexts always start with a fixed marker
    document; trivially distinguishable."""

    def __init__(self, message_len: int = 8, doc_len: int = 16,
                 output_len: int = 4):
        self.message_len = message_len
        self.doc_len = doc_len
        self.output_len = output_len

    def gen(self, rng: Random):
        from urnstego import StegoKeyPair, UniversalHash
        f = UniversalHash.random(self.doc_len, 1, rng)
        return StegoKeyPair(public=(0, f), secret=(0, f))

    def enc(self, public, message_bits, channel, hist, rng):
        rest = channel.sample_block(hist, self.output_len - 1, rng)
        return (MARKER_DOC,) + tuple(rest)

    def dec(self, secret, docs, hist=()):
        if len(docs) == self.output_len and docs[0] == MARKER_DOC:
            return "0" * self.message_len
        return None


class MarkerWarden:
    """Perfect distinguisher against MarkerStego."""

    def __init__(self, message_len: int = 8):
        self.message_len = message_len

    def find(self, public, oracle, channel, rng):
        return "0" * self.message_len, (), None

    def guess(self, public, message, hist, state, challenge, oracle, channel, rng):
        return 0 if challenge[0] == MARKER_DOC else 1


@pytest.fixture
def rng():
    return Random(0xC0FFEE)
