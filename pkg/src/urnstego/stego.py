"""The two stegosystems.

``RejectionStego`` is the classic universal construction: encrypt, then send
one document per ciphertext bit, each found by rejection-sampling the channel
until a document hashes to the wanted bit.  It is the insecure-against-replay
baseline the games module attacks.

``DocumentOrderStego`` is the replay-resistant system for memoryless
channels: sample a set of N documents, encrypt the message together with
fresh permutation keys, a hash key and a hash of the sampled set, shape the
ciphertext like a without-replacement draw string, and transmit the sampled
documents in the deterministic order that carries those bits.  The decoder
re-derives everything and rejects any sequence that is not exactly the
canonical ordering of an honestly hashed set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from random import Random

from .bitops import int_to_bits
from .channels import Channel
from .ordering import OrderingError, lex_bytes, order_documents, order_documents_with_tables
from .primitives import FeistelPrp, KeyedHash, UniversalHash, make_pke
from .wor import WorParams, WorPke, WorString, wor_sample


@dataclass(frozen=True)
class StegoKeyPair:
    """Public half: (encryption key, bit-assignment hash).  Secret half adds
    the decryption key; the hash is shared by both."""

    public: tuple[int, UniversalHash]
    secret: tuple[int, UniversalHash]


def rejection_sample(f: UniversalHash, channel: Channel, bit: int,
                     hist: tuple[int, ...], kappa: int, rng: Random) -> int:
    """Sample the channel until a document hashes to ``bit``; give up and
    return the last sample after ``kappa`` tries."""
    doc = channel.sample(hist, rng)
    for _ in range(kappa - 1):
        if f.evaluate(doc) == bit:
            break
        doc = channel.sample(hist, rng)
    return doc


class RejectionStego:
    """Encrypt-then-embed via rejection sampling (one bit per document).

    History-respecting and channel-oblivious; works on any channel.  The
    inner scheme has sparse support, so random covertexts decode to None.
    """

    def __init__(self, kappa: int, message_len: int, doc_len: int,
                 inner: str = "kem-dem"):
        self.kappa = kappa
        self.message_len = message_len
        self.doc_len = doc_len
        self.inner_kind = inner
        self.pke = make_pke(inner, kappa, message_len)
        self.output_len = self.pke.ciphertext_len

    def gen(self, rng: Random) -> StegoKeyPair:
        keys = self.pke.keygen(rng)
        f = UniversalHash.random(self.doc_len, 1, rng)
        return StegoKeyPair(public=(keys.public, f), secret=(keys.secret, f))

    def enc(self, public: tuple[int, UniversalHash], message_bits: str,
            channel: Channel, hist: tuple[int, ...], rng: Random) -> tuple[int, ...]:
        docs, _ = self.enc_traced(public, message_bits, channel, hist, rng)
        return docs

    def enc_traced(self, public, message_bits, channel, hist, rng):
        """Encode and also return, per position, every document the encoder
        sampled there (the event estimators need the trace)."""
        pk, f = public
        ct_bits = self.pke.encrypt(pk, message_bits, rng)
        docs: list[int] = []
        trace: list[list[int]] = []
        work = tuple(hist)
        for b in ct_bits:
            wanted = int(b)
            seen = [channel.sample(work, rng)]
            while len(seen) < self.kappa and f.evaluate(seen[-1]) != wanted:
                seen.append(channel.sample(work, rng))
            trace.append(seen)
            docs.append(seen[-1])
            work = work + (docs[-1],)
        return tuple(docs), trace

    def dec(self, secret: tuple[int, UniversalHash],
            docs: tuple[int, ...], hist: tuple[int, ...] = ()) -> str | None:
        sk, f = secret
        if len(docs) != self.output_len:
            return None
        if any(d < 0 or d >> self.doc_len for d in docs):
            return None
        bits = "".join(map(str, f.evaluate_many(docs)))
        return self.pke.decrypt(sk, bits)


def pack_fields(values: list[tuple[int, int]]) -> str:
    """Concatenate (value, width) pairs into a bit string."""
    return "".join(int_to_bits(v, w) for v, w in values)


def reliability_bound(set_size: int, min_entropy_bits: float) -> float:
    """Numeric failure-probability bound for the ordering stegosystem:
    3*N^2 * 2^-H + 2*exp(-N/54)."""
    return 3.0 * set_size * set_size * 2.0 ** (-min_entropy_bits) \
        + 2.0 * math.exp(-set_size / 54.0)


class DocumentOrderStego:
    """Replay-resistant stegosystem for memoryless channels."""

    def __init__(self, kappa: int, message_len: int, doc_len: int,
                 inner: str = "kem-dem", hash_bits: int = 64):
        self.kappa = kappa
        self.message_len = message_len
        self.doc_len = doc_len
        self.hash_bits = hash_bits
        self.inner_kind = inner
        # plaintext bundle: message, hash key, two permutation keys, set hash
        self.bundle_len = message_len + 3 * kappa + hash_bits
        self.wor_pke = WorPke(kappa, self.bundle_len, inner)
        self.payload_len = self.wor_pke.ciphertext_len      # bits carried
        self.output_len = 8 * self.payload_len              # documents sent

    def gen(self, rng: Random) -> StegoKeyPair:
        keys = self.wor_pke.keygen(rng)
        f = UniversalHash.random(self.doc_len, 1, rng)
        return StegoKeyPair(public=(keys.public, f), secret=(keys.secret, f))

    # --- encode ---

    def enc(self, public: tuple[int, UniversalHash], message_bits: str,
            channel: Channel, hist: tuple[int, ...] = (),
            rng: Random | None = None) -> tuple[int, ...]:
        docs, _ = self.enc_detailed(public, message_bits, channel, rng=rng)
        return docs

    def enc_detailed(self, public, message_bits, channel: Channel,
                     rng: Random) -> tuple[tuple[int, ...], bool]:
        """Encode; the flag reports whether the sampled set was unusable
        (duplicates or a bad bit split) and was sent raw instead."""
        pk, f = public
        if len(message_bits) != self.message_len:
            raise ValueError("bad message length")
        if not channel.memoryless:
            raise ValueError("this stegosystem requires a memoryless channel")
        n = self.output_len
        samples = [channel.sample((), rng) for _ in range(n)]
        zeros = f.evaluate_many(samples).count(0)
        if len(set(samples)) < n or not n <= 3 * zeros <= 2 * n:
            return tuple(samples), True
        hash_key = KeyedHash.random(self.kappa, rng, self.hash_bits)
        key_payload = FeistelPrp.random(self.kappa, self.doc_len, rng)
        key_tail = FeistelPrp.random(self.kappa, self.doc_len, rng)
        digest = hash_key(lex_bytes(samples, self.doc_len))
        params = self.wor_pke.setup(total=n, zeros=zeros)
        bundle = pack_fields([
            (int(message_bits, 2) if message_bits else 0, self.message_len),
            (hash_key.key_bits, self.kappa),
            (key_payload.key_bits, self.kappa),
            (key_tail.key_bits, self.kappa),
            (digest, self.hash_bits),
        ])
        w = self.wor_pke.encrypt(pk, bundle, params, rng)
        return order_documents(samples, f, w.bits, key_payload, key_tail), False

    # --- decode ---

    def _unpack(self, bundle: str):
        at = 0
        message = bundle[at:at + self.message_len]; at += self.message_len
        hk = int(bundle[at:at + self.kappa], 2); at += self.kappa
        kp = int(bundle[at:at + self.kappa], 2); at += self.kappa
        kt = int(bundle[at:at + self.kappa], 2); at += self.kappa
        digest = int(bundle[at:at + self.hash_bits], 2)
        return message, hk, kp, kt, digest

    def dec(self, secret: tuple[int, UniversalHash],
            docs: tuple[int, ...], hist: tuple[int, ...] = ()) -> str | None:
        """Returns the message only if the sequence is exactly an honest
        encoding: anything else (tampering, replays, covertexts) gives None."""
        sk, f = secret
        n = self.output_len
        if len(docs) != n or any(d < 0 or d >> self.doc_len for d in docs):
            return None
        bits = "".join(map(str, f.evaluate_many(docs)))
        zeros = bits.count("0")
        if len(set(docs)) < n or not n <= 3 * zeros <= 2 * n:
            return None
        try:
            params = self.wor_pke.setup(total=n, zeros=zeros)
            w = WorString(bits[: self.payload_len], params)
        except ValueError:
            return None
        bundle = self.wor_pke.decrypt(sk, w, params)
        if bundle is None:
            return None
        message, hk, kp, kt, digest = self._unpack(bundle)
        hash_key = KeyedHash(hk, self.kappa, self.hash_bits)
        if hash_key(lex_bytes(docs, self.doc_len)) != digest:
            return None
        key_payload = FeistelPrp(kp, self.kappa, self.doc_len)
        key_tail = FeistelPrp(kt, self.kappa, self.doc_len)
        try:
            expected = order_documents(docs, f, w.bits, key_payload, key_tail)
        except OrderingError:
            return None
        if tuple(docs) != expected:
            return None
        return message


class IdealizedOrderStego:
    """The ordering encoder with its keyed parts replaced by ideal ones:
    truly random permutation tables instead of keyed permutations, and draw
    strings sampled straight from the urn distribution instead of ciphertext
    bits.  Its output provably equals independent channel sampling, which the
    distribution tests check; it carries no message and decodes nothing.
    """

    def __init__(self, doc_len: int, set_size: int, message_len: int = 8):
        if set_size % 8:
            raise ValueError("set size must be divisible by 8")
        if doc_len > 12:
            raise ValueError("idealized variant needs a small document space")
        self.doc_len = doc_len
        self.message_len = message_len
        self.output_len = set_size
        self.payload_len = set_size // 8

    def gen(self, rng: Random) -> StegoKeyPair:
        f = UniversalHash.random(self.doc_len, 1, rng)
        return StegoKeyPair(public=(0, f), secret=(0, f))

    def enc(self, public, message_bits: str, channel: Channel,
            hist: tuple[int, ...] = (), rng: Random | None = None) -> tuple[int, ...]:
        _, f = public
        n = self.output_len
        samples = [channel.sample((), rng) for _ in range(n)]
        zeros = sum(1 for d in samples if f.evaluate(d) == 0)
        if len(set(samples)) < n or not n <= 3 * zeros <= 2 * n:
            return tuple(samples)
        space = 1 << self.doc_len
        table_payload = list(range(space))
        table_tail = list(range(space))
        rng.shuffle(table_payload)
        rng.shuffle(table_tail)
        params = WorParams(total=n, zeros=zeros, draws=self.payload_len)
        bits = wor_sample(params, rng).bits
        return order_documents_with_tables(samples, f, bits,
                                           table_payload, table_tail)

    def dec(self, secret, docs, hist: tuple[int, ...] = ()) -> str | None:
        return None
