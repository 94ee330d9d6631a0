"""Channel models.

A channel maps a history (the documents already sent) to a distribution over
next documents of a fixed bit length.  All channels here are synthetic:
uniform and weighted memoryless channels, the constructed channel that
announces urn parameters and then emits without-replacement draws, explicit
random-subset channels, and pseudorandom channels whose documents are
ciphertexts of the history position.

Channel objects are immutable after construction; all randomness enters
through the ``rng`` argument of ``sample``, so concurrent trials with
independent generators never interact.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from random import Random

from .bitops import int_to_bits, int_to_hex, hex_to_int
from .primitives import FeistelPrp
from .wor import WorParams, wor_pmf, wor_sample

History = tuple[int, ...]


class UnsupportedChannelOperation(NotImplementedError):
    """The channel kind has no tractable implementation of this query."""


class MalformedHistory(ValueError):
    """History does not parse the way the channel requires."""


class Channel:
    kind: str = "abstract"
    doc_len: int
    memoryless: bool = False
    zero_memoryless: bool = False

    def sample(self, hist: History, rng: Random) -> int:
        raise NotImplementedError

    def pmf(self, hist: History, doc: int) -> Fraction:
        raise UnsupportedChannelOperation(self.kind)

    def min_entropy_bound(self) -> float:
        """A lower bound, in bits, on the min-entropy of every per-history
        distribution."""
        raise UnsupportedChannelOperation(self.kind)

    def sample_block(self, hist: History, count: int, rng: Random) -> tuple[int, ...]:
        """Draw ``count`` documents sequentially, feeding each back into the
        history, exactly as the security game's channel arm does."""
        out: list[int] = []
        work = tuple(hist)
        for _ in range(count):
            d = self.sample(work, rng)
            out.append(d)
            work = work + (d,)
        return tuple(out)

    def to_config(self) -> dict:
        raise NotImplementedError


class UniformChannel(Channel):
    kind = "memoryless-uniform"
    memoryless = True
    zero_memoryless = True

    def __init__(self, doc_len: int):
        if doc_len < 1:
            raise ValueError("doc_len must be positive")
        self.doc_len = doc_len

    def sample(self, hist: History, rng: Random) -> int:
        return rng.getrandbits(self.doc_len)

    def pmf(self, hist: History, doc: int) -> Fraction:
        if 0 <= doc < (1 << self.doc_len):
            return Fraction(1, 1 << self.doc_len)
        return Fraction(0)

    def min_entropy_bound(self) -> float:
        return float(self.doc_len)

    def to_config(self) -> dict:
        return {"kind": self.kind, "n": self.doc_len}


class BiasedChannel(Channel):
    """Memoryless channel with explicitly configured document weights."""

    kind = "memoryless-biased"
    memoryless = True
    zero_memoryless = True

    def __init__(self, doc_len: int, weights: dict[int, Fraction]):
        self.doc_len = doc_len
        if not weights:
            raise ValueError("need at least one document")
        for d, w in weights.items():
            if not 0 <= d < (1 << doc_len):
                raise ValueError(f"document {d} does not fit in {doc_len} bits")
            if w <= 0:
                raise ValueError("weights must be positive")
        if sum(weights.values()) != 1:
            raise ValueError("weights must sum to exactly 1")
        self._docs = tuple(sorted(weights))
        self._weights = tuple(weights[d] for d in self._docs)
        # integer cumulative thresholds over the common denominator
        den = math.lcm(*(w.denominator for w in self._weights))
        acc = 0
        cum = []
        for w in self._weights:
            acc += w.numerator * (den // w.denominator)
            cum.append(acc)
        self._den = den
        self._cum = tuple(cum)

    def sample(self, hist: History, rng: Random) -> int:
        r = rng.randrange(self._den)
        for d, threshold in zip(self._docs, self._cum):
            if r < threshold:
                return d
        raise AssertionError("cumulative weights must cover the range")

    def pmf(self, hist: History, doc: int) -> Fraction:
        try:
            return self._weights[self._docs.index(doc)]
        except ValueError:
            return Fraction(0)

    def min_entropy_bound(self) -> float:
        return -math.log2(max(self._weights))

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.doc_len,
            "weights": {int_to_hex(d, self.doc_len): str(w)
                        for d, w in zip(self._docs, self._weights)},
        }


class WorChannel(Channel):
    """The constructed channel with documents of length kappa.

    The first document announces urn parameters (total, zeros) packed as
    binary(total) in the high ceil(kappa/2) bits and binary(zeros) in the low
    floor(kappa/2) bits.  While the accumulated bit-history h is short
    (|h| <= total/8) further documents are without-replacement draws from the
    depleted urn; afterwards they are uniform.  Its min-entropy is at least
    kappa * log2(9/8).
    """

    kind = "cwor"

    def __init__(self, kappa: int):
        if kappa < 14:
            raise ValueError("kappa must be at least 14 so a valid header exists")
        self.kappa = kappa
        self.doc_len = kappa
        self._n_bits = (kappa + 1) // 2          # header bits for total
        self._n0_bits = kappa // 2               # header bits for zeros
        self._total_min = 8 * kappa
        # totals must satisfy total <= 2^floor(kappa/2) and fit the header field
        self._total_max = min(1 << self._n0_bits, (1 << self._n_bits) - 1)
        if self._total_min > self._total_max:
            raise ValueError("no valid urn parameters at this kappa")

    # --- header helpers ---

    def _zeros_range(self, total: int) -> tuple[int, int]:
        low = -(-total // 3)        # ceil(total/3)
        high = (2 * total) // 3
        return low, high

    def header_valid(self, total: int, zeros: int) -> bool:
        if not self._total_min <= total <= self._total_max:
            return False
        low, high = self._zeros_range(total)
        return low <= zeros <= high and zeros < (1 << self._n0_bits)

    def pack_header(self, total: int, zeros: int) -> int:
        if not self.header_valid(total, zeros):
            raise ValueError(f"invalid urn announcement ({total}, {zeros})")
        return (total << self._n0_bits) | zeros

    def parse_header(self, doc: int) -> tuple[int, int]:
        total = doc >> self._n0_bits
        zeros = doc & ((1 << self._n0_bits) - 1)
        if not self.header_valid(total, zeros):
            raise MalformedHistory(
                f"first document does not announce valid urn parameters")
        return total, zeros

    def header_count(self) -> int:
        """Number of valid (total, zeros) announcements, exactly."""
        count = 0
        for total in range(self._total_min, self._total_max + 1):
            low, high = self._zeros_range(total)
            count += high - low + 1
        return count

    # --- channel interface ---

    def _split_history(self, hist: History) -> tuple[int, int, int, int]:
        total, zeros = self.parse_header(hist[0])
        h_bits = self.kappa * (len(hist) - 1)
        h_zeros = sum(self.kappa - d.bit_count() for d in hist[1:])
        return total, zeros, h_bits, h_zeros

    def sample(self, hist: History, rng: Random) -> int:
        if not hist:
            while True:
                total = rng.randrange(self._total_min, self._total_max + 1)
                zeros = rng.randrange(1, (2 * self._total_max) // 3 + 1)
                if self.header_valid(total, zeros):
                    return self.pack_header(total, zeros)
        total, zeros, h_bits, h_zeros = self._split_history(hist)
        if 8 * h_bits <= total:
            params = WorParams(total - h_bits, zeros - h_zeros, self.kappa)
            return int(wor_sample(params, rng).bits, 2)
        return rng.getrandbits(self.kappa)

    def pmf(self, hist: History, doc: int) -> Fraction:
        if not (0 <= doc < (1 << self.kappa)):
            return Fraction(0)
        if not hist:
            try:
                self.parse_header(doc)
            except MalformedHistory:
                return Fraction(0)
            return Fraction(1, self.header_count())
        total, zeros, h_bits, h_zeros = self._split_history(hist)
        if 8 * h_bits <= total:
            params = WorParams(total - h_bits, zeros - h_zeros, self.kappa)
            return wor_pmf(params, int_to_bits(doc, self.kappa))
        return Fraction(1, 1 << self.kappa)

    def min_entropy_bound(self) -> float:
        return self.kappa * math.log2(9 / 8)

    def to_config(self) -> dict:
        return {"kind": self.kind, "n": self.kappa}


class ExplicitRandomChannel(Channel):
    """0-memoryless channel that is uniform on an explicit subset per
    position.  Positions past the configured list wrap around."""

    kind = "explicit-random"
    zero_memoryless = True

    def __init__(self, doc_len: int, subsets: list[set[int]]):
        if not subsets:
            raise ValueError("need at least one subset")
        self.doc_len = doc_len
        cleaned = []
        for i, s in enumerate(subsets):
            if not s:
                raise ValueError(f"subset {i} is empty")
            for d in s:
                if not 0 <= d < (1 << doc_len):
                    raise ValueError(f"document {d} does not fit in {doc_len} bits")
            cleaned.append(tuple(sorted(s)))
        self._subsets = tuple(cleaned)

    def subset_at(self, position: int) -> tuple[int, ...]:
        return self._subsets[position % len(self._subsets)]

    def support_contains(self, position: int, doc: int) -> bool:
        return doc in self.subset_at(position)

    def sample(self, hist: History, rng: Random) -> int:
        return rng.choice(self.subset_at(len(hist)))

    def pmf(self, hist: History, doc: int) -> Fraction:
        subset = self.subset_at(len(hist))
        return Fraction(1, len(subset)) if doc in subset else Fraction(0)

    def min_entropy_bound(self) -> float:
        return min(math.log2(len(s)) for s in self._subsets)

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.doc_len,
            "subsets": [[int_to_hex(d, self.doc_len) for d in s]
                        for s in self._subsets],
        }


def random_subset_channel(doc_len: int, subset_size: int, positions: int,
                          rng: Random) -> ExplicitRandomChannel:
    """Draw an explicit-random channel: each position gets a fresh uniform
    subset of the given size."""
    space = 1 << doc_len
    if subset_size > space:
        raise ValueError("subset larger than the document space")
    subsets = [set(rng.sample(range(space), subset_size)) for _ in range(positions)]
    return ExplicitRandomChannel(doc_len, subsets)


class PrfChannel(Channel):
    """0-memoryless channel whose documents are ciphertexts.

    The document at history length i is an encryption of binary(i) under the
    channel key: a keyed permutation applied to (position || randomness), so
    each position's support has exactly 2^rand_bits documents.  Whoever holds
    the key can test support membership by decrypting; there is no tractable
    pmf or entropy bound without it.
    """

    kind = "prf-channel"
    zero_memoryless = True

    def __init__(self, doc_len: int, rand_bits: int, kappa: int, key_bits: int):
        if not 1 <= rand_bits < doc_len:
            raise ValueError("rand_bits must be in [1, doc_len)")
        self.doc_len = doc_len
        self.rand_bits = rand_bits
        self.position_bits = doc_len - rand_bits
        self.kappa = kappa
        self._key_bits = key_bits
        self._prp = FeistelPrp(key_bits, kappa, doc_len)

    @classmethod
    def random(cls, doc_len: int, rand_bits: int, kappa: int, rng: Random) -> "PrfChannel":
        return cls(doc_len, rand_bits, kappa, rng.getrandbits(kappa))

    def _position_tag(self, position: int) -> int:
        return position % (1 << self.position_bits)

    def sample(self, hist: History, rng: Random) -> int:
        tag = self._position_tag(len(hist))
        r = rng.getrandbits(self.rand_bits)
        return self._prp.evaluate((tag << self.rand_bits) | r)

    def support_contains(self, position: int, doc: int) -> bool:
        """Decrypt and compare against the expected position tag."""
        plain = self._prp.invert(doc)
        return plain >> self.rand_bits == self._position_tag(position)

    def support_at(self, position: int) -> tuple[int, ...]:
        tag = self._position_tag(position)
        return tuple(self._prp.evaluate((tag << self.rand_bits) | r)
                     for r in range(1 << self.rand_bits))

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.doc_len,
            "rand_bits": self.rand_bits,
            "kappa": self.kappa,
            "key": int_to_hex(self._key_bits, self.kappa),
        }


def channel_from_config(config: dict) -> Channel:
    kind = config.get("kind")
    if kind == "memoryless-uniform":
        return UniformChannel(config["n"])
    if kind == "memoryless-biased":
        weights = {hex_to_int(doc): Fraction(weight)
                   for doc, weight in config["weights"].items()}
        return BiasedChannel(config["n"], weights)
    if kind == "cwor":
        return WorChannel(config["n"])
    if kind == "explicit-random":
        subsets = [{hex_to_int(d) for d in s} for s in config["subsets"]]
        return ExplicitRandomChannel(config["n"], subsets)
    if kind == "prf-channel":
        return PrfChannel(config["n"], config["rand_bits"], config["kappa"],
                          hex_to_int(config["key"]))
    raise ValueError(f"unknown channel kind {kind!r}")


def load_channel(path: str) -> Channel:
    with open(path, "r", encoding="utf-8") as fh:
        return channel_from_config(json.load(fh))
