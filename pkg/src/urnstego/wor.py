"""The without-replacement (WOR) draw distribution and its codec.

An urn holds ``total`` balls, ``zeros`` of them labeled 0 and the rest
labeled 1.  Drawing ``draws`` balls without replacement and writing down the
labels induces a distribution on bit strings:

    Pr[b] = prod_{j<|b|_0} (zeros - j) * prod_{j<|b|_1} (total - zeros - j)
            / prod_{j<draws} (total - j)

whose zero-count marginal is hypergeometric.  Everything here is exact
rational arithmetic; the sampler uses integer draws so results are
replayable from a seed.

The codec (``wor_encode`` / ``wor_decode``) is arithmetic coding over the
sequential urn process with exact integer intervals.  ``wor_encode`` maps a
uniform bit string u to the draw string whose interval contains the center
of u's dyadic interval.  Two regimes matter:

* len(u) <= transcode_budget(params): the output interval nests strictly
  inside u's dyadic interval, so decoding recovers every bit of u.
* len(u) >= draws + 64: the output distribution is within total-variation
  distance 2^-64 of the true draw distribution.

``wor_decode`` returns the longest bit prefix shared by every point of the
received string's interval; composing decode after encode always reproduces
the encoded input on that prefix.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from random import Random

from .bitops import int_to_bits
from .primitives import PkeScheme, PkeKeyPair, make_pke


class InvalidParams(ValueError):
    """Urn parameters violate the basic feasibility constraints."""


@dataclass(frozen=True)
class WorParams:
    """Urn parameters: ``total`` balls, ``zeros`` of them labeled 0,
    ``draws`` taken without replacement."""

    total: int
    zeros: int
    draws: int

    def __post_init__(self):
        if self.total < 0 or not 0 <= self.zeros <= self.total or self.draws < 0:
            raise InvalidParams(f"malformed urn parameters {self}")
        if self.zeros < self.draws or self.total - self.zeros < self.draws:
            raise InvalidParams(
                f"need at least {self.draws} balls of each label, got "
                f"{self.zeros} zeros / {self.total - self.zeros} ones")

    @property
    def ones(self) -> int:
        return self.total - self.zeros


@dataclass(frozen=True)
class WorString:
    """A draw string together with the urn it was drawn from."""

    bits: str
    params: WorParams

    def __post_init__(self):
        if len(self.bits) != self.params.draws:
            raise InvalidParams("bit count must equal the number of draws")
        if self.bits.strip("01"):
            raise InvalidParams("bits must be a 0/1 string")
        if self.bits.count("0") > self.params.zeros:
            raise InvalidParams("more zeros than zero-labeled balls")
        if self.bits.count("1") > self.params.ones:
            raise InvalidParams("more ones than one-labeled balls")


def wor_pmf(params: WorParams, bits: str) -> Fraction:
    """Exact probability of one draw string."""
    if len(bits) != params.draws:
        raise InvalidParams("bit count must equal the number of draws")
    z0 = bits.count("0")
    z1 = len(bits) - z0
    if z0 > params.zeros or z1 > params.ones:
        return Fraction(0)
    num = 1
    for j in range(z0):
        num *= params.zeros - j
    for j in range(z1):
        num *= params.ones - j
    den = 1
    for j in range(params.draws):
        den *= params.total - j
    return Fraction(num, den)


def zero_count_pmf(params: WorParams, count: int) -> Fraction:
    """Hypergeometric marginal: probability that a draw string has exactly
    ``count`` zeros."""
    if not 0 <= count <= params.draws:
        return Fraction(0)
    return Fraction(
        comb(params.zeros, count) * comb(params.ones, params.draws - count),
        comb(params.total, params.draws),
    )


def wor_string_to_json(w: WorString) -> dict:
    """The interchange form: {"N": ..., "N0": ..., "K": ..., "bits": ...}."""
    return {"N": w.params.total, "N0": w.params.zeros,
            "K": w.params.draws, "bits": w.bits}


def wor_string_from_json(blob: dict) -> WorString:
    return WorString(blob["bits"],
                     WorParams(blob["N"], blob["N0"], blob["K"]))


def wor_sample(params: WorParams, rng: Random) -> WorString:
    """Draw per the sequential urn process: Pr[next bit is 0] equals the
    fraction of zero balls still in the urn."""
    zeros_left, total_left = params.zeros, params.total
    out = []
    for _ in range(params.draws):
        if rng.randrange(total_left) < zeros_left:
            out.append("0")
            zeros_left -= 1
        else:
            out.append("1")
        total_left -= 1
    return WorString("".join(out), params)


# ---------------------------------------------------------------------------
# Exact interval walk shared by the codec
# ---------------------------------------------------------------------------

def _walk_point(params: WorParams, payload: str) -> str:
    """Descend the urn tree following the center point of payload's dyadic
    interval; return the draw string of the leaf that contains it."""
    shift = len(payload) + 1
    # x = (2u+1) / 2^shift; we track x * scale, so the comparison
    # x < split/scale becomes an integer compare against split << shift
    x_scaled = 2 * (int(payload, 2) if payload else 0) + 1
    lo, hi = 0, 1
    zeros_left, total_left = params.zeros, params.total
    out = []
    for _ in range(params.draws):
        span = hi - lo
        lo *= total_left
        hi *= total_left
        x_scaled *= total_left
        split = lo + span * zeros_left
        if x_scaled < split << shift:
            hi = split
            zeros_left -= 1
            out.append("0")
        else:
            lo = split
            out.append("1")
        total_left -= 1
    return "".join(out)


def _walk_bits(params: WorParams, bits: str) -> tuple[int, int, int]:
    """Exact leaf interval [lo/scale, hi/scale) of a given draw string."""
    lo, hi, scale = 0, 1, 1
    zeros_left, total_left = params.zeros, params.total
    for b in bits:
        span = hi - lo
        lo *= total_left
        hi *= total_left
        scale *= total_left
        split = lo + span * zeros_left
        if b == "0":
            hi = split
            zeros_left -= 1
        else:
            lo = split
        total_left -= 1
    return lo, hi, scale


def leaf_interval(params: WorParams, bits: str) -> tuple[Fraction, Fraction]:
    """The codec's interval for a draw string; its width is wor_pmf(bits)."""
    WorString(bits, params)  # validate
    lo, hi, scale = _walk_bits(params, bits)
    return Fraction(lo, scale), Fraction(hi, scale)


def max_pmf(params: WorParams) -> Fraction:
    """Largest single-string probability (the mode's mass)."""
    best = Fraction(0)
    q = wor_pmf(params, "1" * params.draws)  # zero zeros
    best = q
    # walk z -> z+1 via the exact ratio to avoid recomputing products
    for z in range(params.draws):
        q = q * (params.zeros - z) / (params.ones - (params.draws - z - 1))
        if q > best:
            best = q
    return best


def floor_log2(x: Fraction) -> int:
    """Largest t with 2^t <= x, for positive rationals."""
    if x <= 0:
        raise ValueError("log of non-positive value")
    num, den = x.numerator, x.denominator
    t = num.bit_length() - den.bit_length()
    # 2^t <= num/den < 2^(t+2); fix up by direct comparison
    while (num >> t if t >= 0 else num << -t) < den:
        t -= 1
    while (num >> (t + 1) if t >= 0 else num << -(t + 1)) >= den:
        t += 1
    return t


def transcode_budget(params: WorParams) -> int:
    """Number of payload bits guaranteed exactly recoverable:
    floor(log2(1 / max_pmf)) - 2, clamped at zero."""
    if params.draws == 0:
        return 0
    mp = max_pmf(params)
    return max(0, floor_log2(Fraction(mp.denominator, mp.numerator)) - 2)


def wor_encode(params: WorParams, payload: str) -> WorString:
    """Map a uniform bit string into a draw string (see module docstring for
    the two length regimes)."""
    if payload.strip("01"):
        raise InvalidParams("payload must be a 0/1 string")
    return WorString(_walk_point(params, payload), params)


def wor_decode(params: WorParams, w: WorString, max_bits: int | None = None) -> str:
    """Longest common bit prefix of the received string's interval.

    Every payload whose encoding produced ``w`` starts with this prefix; a
    payload no longer than ``transcode_budget(params)`` is contained in it
    entirely.
    """
    if w.params != params:
        raise InvalidParams("string was drawn from different parameters")
    lo, hi, scale = _walk_bits(params, w.bits)
    out = []
    while max_bits is None or len(out) < max_bits:
        lo2, hi2 = lo * 2, hi * 2
        if hi2 <= scale:
            lo, hi = lo2, hi2
            out.append("0")
        elif lo2 >= scale:
            lo, hi = lo2 - scale, hi2 - scale
            out.append("1")
        else:
            break
    return "".join(out)


# ---------------------------------------------------------------------------
# Public-key encryption shaped like the draw distribution
# ---------------------------------------------------------------------------

def guaranteed_capacity(draws: int) -> int:
    """Payload bits recoverable for ANY setup-legal urn with this many draws.

    For total >= 8*draws and zeros/total in [1/3, 2/3] every string's
    probability is at most (16/21)^draws, so the budget is at least
    floor(draws * log2(21/16)) - 2.
    """
    if draws <= 0:
        return 0
    return max(0, floor_log2(Fraction(21 ** draws, 16 ** draws)) - 2)


def _min_draws_for(payload_bits: int) -> int:
    draws = max(1, int(payload_bits / 0.39) - 8)
    while guaranteed_capacity(draws) < payload_bits:
        draws += 1
    return draws


class WorPke:
    """Public-key encryption whose ciphertexts are draw strings.

    An inner sparse-support scheme produces pseudorandom ciphertext bits;
    those bits (zero-padded to the guaranteed capacity) are transcoded into a
    draw string of length ``ciphertext_len``.  ``setup`` fixes the urn
    (total, zeros) within the window  8*ciphertext_len <= total <= 2^(kappa/2),
    zeros/total in [1/3, 2/3];  inside that window decryption always recovers
    the inner bits exactly.

    Decryption re-encodes the recovered bits and insists the received string
    is the canonical encoding, so a tweaked ciphertext never decrypts.
    """

    def __init__(self, kappa: int, message_len: int, inner: str = "kem-dem"):
        self.kappa = kappa
        self.message_len = message_len
        self.inner: PkeScheme = make_pke(inner, kappa, message_len)
        self.inner_kind = inner
        self.ciphertext_len = _min_draws_for(self.inner.ciphertext_len)
        self._payload_len = guaranteed_capacity(self.ciphertext_len)

    def keygen(self, rng: Random) -> PkeKeyPair:
        return self.inner.keygen(rng)

    def setup(self, total: int, zeros: int) -> WorParams:
        """Validate and fix the urn parameters for one encryption."""
        draws = self.ciphertext_len
        if not 8 * draws <= total <= 1 << (self.kappa // 2):
            raise InvalidParams(
                f"total must lie in [{8 * draws}, 2^{self.kappa // 2}]")
        if not Fraction(1, 3) <= Fraction(zeros, total) <= Fraction(2, 3):
            raise InvalidParams("zeros/total must lie in [1/3, 2/3]")
        return WorParams(total=total, zeros=zeros, draws=draws)

    def _pad(self, ct_bits: str) -> str:
        return ct_bits + "0" * (self._payload_len - len(ct_bits))

    def encrypt(self, public: int, message_bits: str,
                params: WorParams, rng: Random) -> WorString:
        if params.draws != self.ciphertext_len:
            raise InvalidParams("params not produced by setup")
        ct_bits = self.inner.encrypt(public, message_bits, rng)
        return wor_encode(params, self._pad(ct_bits))

    def decrypt(self, secret: int, w: WorString, params: WorParams) -> str | None:
        if params.draws != self.ciphertext_len or w.params != params:
            return None
        prefix = wor_decode(params, w, max_bits=self._payload_len)
        if len(prefix) < self._payload_len:
            return None
        ct_bits = prefix[: self.inner.ciphertext_len]
        if wor_encode(params, self._pad(ct_bits)).bits != w.bits:
            return None  # not the canonical encoding of any inner ciphertext
        return self.inner.decrypt(secret, ct_bits)
