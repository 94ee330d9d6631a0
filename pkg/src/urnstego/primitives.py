"""Cryptographic building blocks.

All primitives are deterministic given their key material, and all key
generation draws from an explicit ``random.Random`` so that every experiment
is replayable from a seed.  None of this aims at production-grade strength;
key sizes are desk-scale (16 to 128 bits) so that exhaustive checks are
possible where the tests need them.
"""

from __future__ import annotations

import hashlib
import itertools
import threading
from dataclasses import dataclass
from random import Random

import numpy as np

from .bitops import int_to_bits

SUPPORTED_KAPPAS = (16, 32, 64, 128)


class LengthMismatch(ValueError):
    """Input length does not match what the keyed function expects."""


def _check_kappa(kappa: int) -> None:
    if kappa not in SUPPORTED_KAPPAS:
        raise ValueError(f"kappa must be one of {SUPPORTED_KAPPAS}, got {kappa}")


# ---------------------------------------------------------------------------
# Strongly 2-universal hash family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniversalHash:
    """One member of the family x -> (sum_i a_i * x_i + b) mod 2^out_len.

    The input is split into ``in_len / out_len`` blocks of ``out_len`` bits
    (most significant block first).  With ``out_len == 1`` this assigns a
    single bit to each document, which is how the stegosystems use it.
    """

    coeffs: tuple[int, ...]
    offset: int
    in_len: int
    out_len: int

    def __post_init__(self):
        if self.in_len % self.out_len:
            raise ValueError("out_len must divide in_len")
        if len(self.coeffs) != self.in_len // self.out_len:
            raise ValueError("wrong number of coefficients")
        mod = 1 << self.out_len
        if not all(0 <= a < mod for a in self.coeffs) or not 0 <= self.offset < mod:
            raise ValueError("coefficients out of range")

    @classmethod
    def random(cls, in_len: int, out_len: int, rng: Random) -> "UniversalHash":
        blocks = in_len // out_len
        mod = 1 << out_len
        return cls(
            coeffs=tuple(rng.randrange(mod) for _ in range(blocks)),
            offset=rng.randrange(mod),
            in_len=in_len,
            out_len=out_len,
        )

    def evaluate(self, x: int) -> int:
        if x < 0 or x >> self.in_len:
            raise LengthMismatch(f"input does not fit in {self.in_len} bits")
        if self.out_len == 1:
            # blocks are single bits: parity of the masked input, plus offset
            mask = 0
            width = self.in_len
            for i, a in enumerate(self.coeffs):
                if a:
                    mask |= 1 << (width - 1 - i)
            return ((x & mask).bit_count() + self.offset) & 1
        mod = 1 << self.out_len
        acc = self.offset
        shift = self.in_len
        for a in self.coeffs:
            shift -= self.out_len
            acc += a * ((x >> shift) & (mod - 1))
        return acc % mod

    def evaluate_many(self, docs) -> list[int]:
        """Vectorized evaluation over a batch of documents (out_len 1 only,
        documents up to 64 bits); falls back to the scalar path otherwise."""
        docs = list(docs)
        if self.out_len != 1 or self.in_len > 64 or len(docs) < 32:
            return [self.evaluate(d) for d in docs]
        mask = 0
        for i, a in enumerate(self.coeffs):
            if a:
                mask |= 1 << (self.in_len - 1 - i)
        arr = np.array(docs, dtype=np.uint64) & np.uint64(mask)
        bits = (np.bitwise_count(arr) + np.uint64(self.offset)) & np.uint64(1)
        return [int(b) for b in bits]

    def __call__(self, x: int) -> int:
        return self.evaluate(x)


def enumerate_hash_family(in_len: int, out_len: int):
    """Yield every member of the family; only sensible for tiny parameters."""
    blocks = in_len // out_len
    mod = 1 << out_len
    for coeffs in itertools.product(range(mod), repeat=blocks):
        for offset in range(mod):
            yield UniversalHash(coeffs, offset, in_len, out_len)


def hash_family_size(in_len: int, out_len: int) -> int:
    return (1 << out_len) ** (in_len // out_len + 1)


# ---------------------------------------------------------------------------
# Keyed pseudorandom permutation (4-round Feistel, small domains)
# ---------------------------------------------------------------------------

_ROUNDS = 4
_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    # splitmix64 finalizer; good scalar diffusion, cheap in pure Python
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class FeistelPrp:
    """Keyed bijection on {0,1}^domain_bits via an unbalanced 4-round Feistel.

    The raw key is ``kappa`` bits; per-round 64-bit subkeys are derived from
    it with SHA-256 so that reconstructing the key from its bits yields the
    identical permutation.
    """

    key_bits: int
    kappa: int
    domain_bits: int

    def __post_init__(self):
        _check_kappa(self.kappa)
        if self.key_bits >> self.kappa:
            raise ValueError("key does not fit in kappa bits")
        if not 2 <= self.domain_bits <= 128:
            raise ValueError("domain_bits must be in [2, 128]")
        object.__setattr__(self, "_subkeys", self._derive_subkeys())
        left = self.domain_bits // 2
        object.__setattr__(self, "_left_bits", left)
        object.__setattr__(self, "_right_bits", self.domain_bits - left)

    def _derive_subkeys(self) -> tuple[int, ...]:
        raw = self.key_bits.to_bytes(self.kappa // 8, "big")
        subkeys = []
        for r in range(_ROUNDS):
            digest = hashlib.sha256(b"feistel" + bytes([r, self.domain_bits]) + raw).digest()
            subkeys.append(int.from_bytes(digest[:8], "big"))
        return tuple(subkeys)

    @classmethod
    def random(cls, kappa: int, domain_bits: int, rng: Random) -> "FeistelPrp":
        _check_kappa(kappa)
        return cls(rng.getrandbits(kappa), kappa, domain_bits)

    def _round(self, subkey: int, value: int, out_bits: int) -> int:
        return _mix64(value ^ subkey) & ((1 << out_bits) - 1)

    def evaluate(self, x: int) -> int:
        if x < 0 or x >> self.domain_bits:
            raise LengthMismatch(f"input does not fit in {self.domain_bits} bits")
        lb, rb = self._left_bits, self._right_bits
        left, right = x >> rb, x & ((1 << rb) - 1)
        for r in range(_ROUNDS):
            # swap sides each round; odd rounds produce the other width
            left, right = right, left ^ self._round(self._subkeys[r], right, lb)
            lb, rb = rb, lb
        return (left << rb) | right

    def invert(self, y: int) -> int:
        if y < 0 or y >> self.domain_bits:
            raise LengthMismatch(f"input does not fit in {self.domain_bits} bits")
        lb, rb = self._left_bits, self._right_bits
        widths = []
        for _ in range(_ROUNDS):
            widths.append((lb, rb))
            lb, rb = rb, lb
        left, right = y >> rb, y & ((1 << rb) - 1)
        for r in reversed(range(_ROUNDS)):
            lb, rb = widths[r]
            left, right = right ^ self._round(self._subkeys[r], left, lb), left
        return (left << rb) | right

    def rank_values(self, docs):
        """Evaluate on a batch of documents, returning values aligned with
        the input order.  Uses a vectorized path for domains up to 64 bits,
        which matters when the stego encoder ranks thousands of documents per
        message."""
        docs = list(docs)
        if self.domain_bits > 64 or len(docs) < 32:
            return [self.evaluate(d) for d in docs]
        arr = np.array(docs, dtype=np.uint64)
        lb, rb = self._left_bits, self._right_bits
        left = arr >> np.uint64(rb)
        right = arr & np.uint64((1 << rb) - 1)
        c1 = np.uint64(0xBF58476D1CE4E5B9)
        c2 = np.uint64(0x94D049BB133111EB)
        for r in range(_ROUNDS):
            z = right ^ np.uint64(self._subkeys[r])
            z = (z ^ (z >> np.uint64(30))) * c1
            z = (z ^ (z >> np.uint64(27))) * c2
            z = z ^ (z >> np.uint64(31))
            left, right = right, left ^ (z & np.uint64((1 << lb) - 1))
            lb, rb = rb, lb
        return (left << np.uint64(rb)) | right

    def rank_table(self) -> list[int]:
        """Full evaluation table; only for small domains (tests, oracles)."""
        if self.domain_bits > 20:
            raise ValueError("table dump only supported for small domains")
        return [self.evaluate(x) for x in range(1 << self.domain_bits)]

    def __call__(self, x: int) -> int:
        return self.evaluate(x)


# ---------------------------------------------------------------------------
# Keyed collision-resistant hash
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KeyedHash:
    """SHA-256 with the key prepended, truncated to ``out_bits``.

    Accepts arbitrary-length byte input.  ``out_bits=8`` is the deliberately
    breakable variant used to show that the forgery experiment notices weak
    hashing.
    """

    key_bits: int
    kappa: int
    out_bits: int = 64

    def __post_init__(self):
        _check_kappa(self.kappa)
        if self.key_bits >> self.kappa:
            raise ValueError("key does not fit in kappa bits")
        if not 8 <= self.out_bits <= 256:
            raise ValueError("out_bits must be in [8, 256]")

    @classmethod
    def random(cls, kappa: int, rng: Random, out_bits: int = 64) -> "KeyedHash":
        return cls(rng.getrandbits(kappa), kappa, out_bits)

    def digest(self, data: bytes) -> int:
        raw = self.key_bits.to_bytes(self.kappa // 8, "big")
        full = hashlib.sha256(len(raw).to_bytes(2, "big") + raw + data).digest()
        return int.from_bytes(full, "big") >> (256 - self.out_bits)

    def __call__(self, data: bytes) -> int:
        return self.digest(data)


# ---------------------------------------------------------------------------
# Public-key encryption with sparse support
# ---------------------------------------------------------------------------

_TAG_BITS = 64


def _redundancy_tag(message_bits: str) -> str:
    digest = hashlib.sha256(b"ptag" + message_bits.encode()).digest()
    return int_to_bits(int.from_bytes(digest[:8], "big"), _TAG_BITS)


@dataclass(frozen=True)
class PkeKeyPair:
    public: int
    secret: int  # carries the public half implicitly (scheme-dependent)
    scheme: str


class PkeScheme:
    """Interface both instantiations implement.

    ``encrypt`` maps a ``message_len``-bit string to a ``ciphertext_len``-bit
    string; ``decrypt`` returns the message or None.  Support is sparse: a
    random ciphertext decrypts to None except with probability about
    2^-64, which is what the stego layers rely on.
    """

    kappa: int
    message_len: int
    ciphertext_len: int

    def keygen(self, rng: Random) -> PkeKeyPair:
        raise NotImplementedError

    def encrypt(self, public: int, message_bits: str, rng: Random) -> str:
        raise NotImplementedError

    def decrypt(self, secret: int, ct_bits: str) -> str | None:
        raise NotImplementedError


class IdealTablePke(PkeScheme):
    """Idealized scheme: ciphertexts are fresh uniform strings, recorded in a
    table keyed by (public key, ciphertext).  Used where the hybrid argument
    replaces the real scheme by an ideal one."""

    def __init__(self, kappa: int, message_len: int):
        _check_kappa(kappa)
        self.kappa = kappa
        self.message_len = message_len
        self.ciphertext_len = message_len + _TAG_BITS
        self._table: dict[tuple[int, int], str] = {}
        self._lock = threading.Lock()

    def keygen(self, rng: Random) -> PkeKeyPair:
        ident = rng.getrandbits(64)
        return PkeKeyPair(public=ident, secret=ident, scheme="ideal-table")

    def encrypt(self, public: int, message_bits: str, rng: Random) -> str:
        if len(message_bits) != self.message_len:
            raise LengthMismatch("bad message length")
        with self._lock:
            while True:
                ct = rng.getrandbits(self.ciphertext_len)
                if (public, ct) not in self._table:
                    break
            self._table[(public, ct)] = message_bits
        return int_to_bits(ct, self.ciphertext_len)

    def decrypt(self, secret: int, ct_bits: str) -> str | None:
        if len(ct_bits) != self.ciphertext_len:
            return None
        with self._lock:
            return self._table.get((secret, int(ct_bits, 2)))


# Safe primes p = 2q + 1 (q prime) per kappa; the KEM works in the
# prime-order-q subgroup of quadratic residues, generated by g = 4.
_GROUPS = {
    16: 0xFFFFFF2F,
    32: 0xFFFFFFFFFFFFFA43,
    64: 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFC3A7,
    128: 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF72EF,
}
_GENERATOR = 4


class DhKemPke(PkeScheme):
    """Hybrid encryption: Diffie-Hellman KEM over a prime-order group plus a
    one-time XOR stream keyed from the shared secret.  Integrity comes from a
    64-bit redundancy tag inside the plaintext, so any modified ciphertext
    decrypts to None except with probability about 2^-64."""

    def __init__(self, kappa: int, message_len: int):
        _check_kappa(kappa)
        self.kappa = kappa
        self.message_len = message_len
        self._p = _GROUPS[kappa]
        self._q = (self._p - 1) // 2
        self._group_bits = 2 * kappa
        self.ciphertext_len = self._group_bits + message_len + _TAG_BITS

    def keygen(self, rng: Random) -> PkeKeyPair:
        x = rng.randrange(1, self._q)
        public = pow(_GENERATOR, x, self._p)
        # secret packs (x, public) so decrypt is self-contained
        return PkeKeyPair(public=public, secret=(x << self._group_bits) | public,
                          scheme="kem-dem")

    def _keystream(self, shared: int, kem_pub: int, nbits: int) -> int:
        seed = (shared.to_bytes(self._group_bits // 8, "big")
                + kem_pub.to_bytes(self._group_bits // 8, "big"))
        out = b""
        counter = 0
        while len(out) * 8 < nbits:
            out += hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
            counter += 1
        return int.from_bytes(out, "big") >> (len(out) * 8 - nbits)

    def encrypt(self, public: int, message_bits: str, rng: Random) -> str:
        if len(message_bits) != self.message_len:
            raise LengthMismatch("bad message length")
        r = rng.randrange(1, self._q)
        kem_pub = pow(_GENERATOR, r, self._p)
        shared = pow(public, r, self._p)
        plain = message_bits + _redundancy_tag(message_bits)
        body = int(plain, 2) ^ self._keystream(shared, kem_pub, len(plain))
        return int_to_bits(kem_pub, self._group_bits) + int_to_bits(body, len(plain))

    def decrypt(self, secret: int, ct_bits: str) -> str | None:
        if len(ct_bits) != self.ciphertext_len:
            return None
        x = secret >> self._group_bits
        kem_pub = int(ct_bits[: self._group_bits], 2)
        if not 1 < kem_pub < self._p or pow(kem_pub, self._q, self._p) != 1:
            return None  # not a subgroup element: forged
        shared = pow(kem_pub, x, self._p)
        body = int(ct_bits[self._group_bits:], 2)
        nbits = self.message_len + _TAG_BITS
        plain = int_to_bits(body ^ self._keystream(shared, kem_pub, nbits), nbits)
        message, tag = plain[: self.message_len], plain[self.message_len:]
        if tag != _redundancy_tag(message):
            return None
        return message


def make_pke(kind: str, kappa: int, message_len: int) -> PkeScheme:
    if kind == "ideal-table":
        return IdealTablePke(kappa, message_len)
    if kind == "kem-dem":
        return DhKemPke(kappa, message_len)
    raise ValueError(f"unknown PKE kind {kind!r}")
