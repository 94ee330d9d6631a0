"""Security-game harness.

``run_distinguisher_game`` plays one round of the chosen-covertext
distinguishing game: the warden picks a message and history while holding a
full decode oracle, then receives either a stegotext or fresh channel
documents and must say which, now holding a restricted oracle.  Under the
"cca" oracle only the exact challenge is blinded; under "rcca" any sequence
decoding to the chosen message is blinded as well, which is precisely what
makes replay attacks useless there.

Advantage and reliability measurements repeat independent games with fresh
keys and report binomial point estimates with conservative 95% intervals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from random import Random

from .bitops import int_to_bits
from .channels import Channel
from .stego import rejection_sample

log = logging.getLogger(__name__)

DEFAULT_FIND_CAP = 1024


class ProtocolViolation(RuntimeError):
    """The warden broke the game's rules (e.g. exceeded its query budget)."""


class DecodeOracle:
    """Decode oracle handed to wardens; optionally blinds the exact challenge
    ("cca") and additionally any encoding of the challenge message ("rcca").
    """

    def __init__(self, system, secret, cap: int | None = None,
                 blocked_docs: tuple[int, ...] | None = None,
                 blocked_message: str | None = None):
        self._system = system
        self._secret = secret
        self._cap = cap
        self._blocked_docs = blocked_docs
        self._blocked_message = blocked_message
        self.calls = 0

    def __call__(self, docs, hist: tuple[int, ...] = ()) -> str | None:
        if self._cap is not None and self.calls >= self._cap:
            raise ProtocolViolation("oracle query budget exceeded")
        self.calls += 1
        docs = tuple(docs)
        if self._blocked_docs is not None and docs == self._blocked_docs:
            return None
        result = self._system.dec(self._secret, docs, hist)
        if self._blocked_message is not None and result == self._blocked_message:
            return None
        return result


@dataclass
class GameResult:
    challenge_bit: int
    guess: int
    find_calls: int
    guess_calls: int
    valid: bool = True

    @property
    def won(self) -> bool:
        return self.valid and self.challenge_bit == self.guess


def run_distinguisher_game(warden, system, channel: Channel, rng: Random,
                           oracle: str = "cca",
                           find_cap: int = DEFAULT_FIND_CAP) -> GameResult:
    """One round; ``oracle`` selects how the guess-phase oracle is blinded."""
    if oracle not in ("cca", "rcca"):
        raise ValueError("oracle must be 'cca' or 'rcca'")
    keys = system.gen(rng)
    find_oracle = DecodeOracle(system, keys.secret, cap=find_cap)
    try:
        message, hist, state = warden.find(keys.public, find_oracle, channel, rng)
        challenge_bit = rng.getrandbits(1)
        if challenge_bit == 0:
            challenge = tuple(system.enc(keys.public, message, channel, hist, rng))
        else:
            challenge = channel.sample_block(hist, system.output_len, rng)
        guess_oracle = DecodeOracle(
            system, keys.secret,
            blocked_docs=challenge,
            blocked_message=message if oracle == "rcca" else None)
        guess = warden.guess(keys.public, message, hist, state,
                             challenge, guess_oracle, channel, rng)
    except ProtocolViolation as exc:
        log.warning("trial excluded: %s", exc)
        return GameResult(-1, -1, find_oracle.calls, 0, valid=False)
    return GameResult(challenge_bit, int(guess),
                      find_oracle.calls, guess_oracle.calls)


# ---------------------------------------------------------------------------
# Wardens
# ---------------------------------------------------------------------------

class ConstantWarden:
    """Always guesses the same bit; wins exactly half the time."""

    def __init__(self, guess_bit: int = 0, message_len: int | None = None):
        self._bit = guess_bit
        self._message_len = message_len

    def find(self, public, oracle, channel, rng):
        ml = self._message_len or getattr(channel, "doc_len", 8)
        return "0" * ml, (), None

    def guess(self, public, message, hist, state, challenge, oracle, channel, rng):
        return self._bit


class CoinWarden(ConstantWarden):
    """Guesses a fresh coin; the no-information baseline."""

    def guess(self, public, message, hist, state, challenge, oracle, channel, rng):
        return rng.getrandbits(1)


class ReplayWarden:
    """The replay attack on rejection-sampling stegosystems.

    Chooses the all-zero message, then rebuilds the last challenge document
    by rejection-sampling a fresh one with the same assigned bit and asks the
    oracle about the modified sequence.  If the decoded message is all zeros
    the challenge must have been a stegotext.  A "cca" oracle answers the
    modified sequence (it differs from the challenge) so the warden wins; an
    "rcca" oracle blinds it, so the warden learns nothing.
    """

    def __init__(self, message_len: int, kappa: int = 32):
        self.message_len = message_len
        self.kappa = kappa

    def find(self, public, oracle, channel, rng):
        return "0" * self.message_len, (), None

    def guess(self, public, message, hist, state, challenge, oracle, channel, rng):
        _, f = public
        replaced = rejection_sample(f, channel, f.evaluate(challenge[-1]),
                                    tuple(hist) + tuple(challenge[:-1]),
                                    self.kappa, rng)
        probe = tuple(challenge[:-1]) + (replaced,)
        return 0 if oracle(probe, hist) == message else 1


class SwapWarden:
    """Substitution probe against the ordering stegosystem: replaces one
    document with a fresh same-bit channel sample and asks the oracle.  The
    set-hash check makes the decoder reject, so this warden stays blind."""

    def __init__(self, message_len: int, position: int = 0):
        self.message_len = message_len
        self.position = position

    def find(self, public, oracle, channel, rng):
        return "0" * self.message_len, (), None

    def guess(self, public, message, hist, state, challenge, oracle, channel, rng):
        _, f = public
        wanted = f.evaluate(challenge[self.position])
        present = set(challenge)
        for _ in range(64):
            candidate = channel.sample(hist, rng)
            if candidate not in present and f.evaluate(candidate) == wanted:
                probe = list(challenge)
                probe[self.position] = candidate
                return 0 if oracle(tuple(probe), hist) == message else 1
        return 0 if oracle(tuple(challenge), hist) == message else 1


class ReorderWarden:
    """Reordering probe against the ordering stegosystem: swaps the first
    same-bit pair in the tail and asks the oracle.  The deterministic
    ordering check makes the decoder reject, so this warden stays blind."""

    def __init__(self, message_len: int, payload_len: int):
        self.message_len = message_len
        self.payload_len = payload_len

    def find(self, public, oracle, channel, rng):
        return "0" * self.message_len, (), None

    def guess(self, public, message, hist, state, challenge, oracle, channel, rng):
        _, f = public
        probe = list(challenge)
        done = False
        for i in range(self.payload_len, len(probe)):
            if done:
                break
            for j in range(i + 1, len(probe)):
                if f.evaluate(probe[i]) == f.evaluate(probe[j]):
                    probe[i], probe[j] = probe[j], probe[i]
                    done = True
                    break
        return 0 if oracle(tuple(probe), hist) == message else 1


class SupportWarden:
    """Warden holding support-membership advice for its channel.

    Verdict "stego" (guess 0) if any challenge document falls outside the
    channel's support at its position, or if any of q fresh samples of the
    final position's distribution completes the challenge prefix to a
    sequence decoding to the chosen message.  Against honest traffic the
    false-positive rate is at most q / 2^message_len.
    """

    def __init__(self, advice: Channel, message_len: int, q: int = 32,
                 max_history: int = 64):
        if not hasattr(advice, "support_contains"):
            raise ValueError("advice channel has no support membership test")
        self.advice = advice
        self.message_len = message_len
        self.q = q
        self.max_history = max_history

    def find(self, public, oracle, channel, rng):
        eta = rng.randrange(self.max_history + 1)
        hist = channel.sample_block((), eta, rng)
        message = int_to_bits(rng.getrandbits(self.message_len), self.message_len)
        return message, hist, None

    def guess(self, public, message, hist, state, challenge, oracle, channel, rng):
        eta = len(hist)
        for i, doc in enumerate(challenge):
            if not self.advice.support_contains(eta + i, doc):
                return 0
        # the final document was drawn from the distribution at position
        # eta + len(challenge) - 1; look for other documents there that
        # complete the prefix to an encoding of the message
        last_pos_hist = tuple(hist) + tuple(challenge[:-1])
        prefix = tuple(challenge[:-1])
        for _ in range(self.q):
            candidate = channel.sample(last_pos_hist, rng)
            if oracle(prefix + (candidate,), hist) == message:
                return 0
        return 1


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class AdvantageEstimate:
    trials: int
    wins: int
    excluded: int = 0

    @property
    def win_rate(self) -> float:
        return self.wins / self.trials if self.trials else 0.0

    @property
    def advantage(self) -> float:
        return abs(self.win_rate - 0.5)

    @property
    def ci_half_width(self) -> float:
        # conservative binomial half-width at 95%
        return 1.96 * (0.25 / self.trials) ** 0.5 if self.trials else 1.0


def estimate_advantage(warden, system, channel: Channel, game: str,
                       trials: int, rng: Random) -> AdvantageEstimate:
    """Play ``trials`` independent games and estimate the warden's advantage."""
    wins = 0
    excluded = 0
    for _ in range(trials):
        result = run_distinguisher_game(warden, system, channel, rng, oracle=game)
        if not result.valid:
            excluded += 1
        elif result.won:
            wins += 1
    return AdvantageEstimate(trials=trials - excluded, wins=wins, excluded=excluded)


@dataclass
class ReliabilityReport:
    trials: int
    failures: int
    per_probe: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def max_probe_rate(self) -> float:
        rates = [f / t for f, t in self.per_probe.values() if t]
        return max(rates) if rates else 0.0

    @property
    def ci_half_width(self) -> float:
        return 1.96 * (0.25 / self.trials) ** 0.5 if self.trials else 1.0


def probe_messages(message_len: int, rng: Random, extra: int = 32) -> list[str]:
    """The fixed probe set standing in for maximization over messages."""
    probes = ["0" * message_len, "1" * message_len]
    probes += [int_to_bits(rng.getrandbits(message_len), message_len)
               for _ in range(extra)]
    return probes


def measure_reliability(system, channel: Channel, trials: int,
                        rng: Random) -> ReliabilityReport:
    """Round-trip failure rate over the probe set, empty history, fresh keys
    per trial.  Failures at honest encodings lower-bound the unreliability."""
    probes = probe_messages(system.message_len, rng)
    per_probe = {m: [0, 0] for m in probes}
    failures = 0
    done = 0
    i = 0
    while done < trials:
        message = probes[i % len(probes)]
        i += 1
        keys = system.gen(rng)
        docs = system.enc(keys.public, message, channel, (), rng)
        got = system.dec(keys.secret, tuple(docs), ())
        per_probe[message][1] += 1
        if got != message:
            failures += 1
            per_probe[message][0] += 1
        done += 1
    return ReliabilityReport(
        trials=done, failures=failures,
        per_probe={m: (f, t) for m, (f, t) in per_probe.items()})


@dataclass
class EncoderEventRates:
    """Estimated rates of the three encoder events over instrumented runs:
    emitting a never-sampled document, that document landing in the channel
    support anyway, and no last-position sample being able to complete the
    prefix into a decodable stegotext."""

    trials: int
    nonqueried: int
    nonqueried_in_support: int
    unsuitable: int

    @property
    def nonqueried_rate(self) -> float:
        return self.nonqueried / self.trials

    @property
    def in_support_given_nonqueried(self) -> float:
        return (self.nonqueried_in_support / self.nonqueried
                if self.nonqueried else 0.0)

    @property
    def unsuitable_rate(self) -> float:
        return self.unsuitable / self.trials


def estimate_encoder_events(system, channel: Channel, trials: int,
                            rng: Random) -> EncoderEventRates:
    if not hasattr(channel, "support_contains"):
        raise ValueError("channel has no support membership test")
    nonqueried = in_support = unsuitable = 0
    for _ in range(trials):
        keys = system.gen(rng)
        message = int_to_bits(rng.getrandbits(system.message_len),
                              system.message_len)
        eta = rng.randrange(17)
        hist = channel.sample_block((), eta, rng)
        docs, trace = system.enc_traced(keys.public, message, channel, hist, rng)
        sampled = set()
        for position_samples in trace:
            sampled.update(position_samples)
        fresh = [(i, d) for i, d in enumerate(docs) if d not in sampled]
        if fresh:
            nonqueried += 1
            if all(channel.support_contains(eta + i, d) for i, d in fresh):
                in_support += 1
        prefix = tuple(docs[:-1])
        if not any(system.dec(keys.secret, prefix + (cand,), hist) == message
                   for cand in trace[-1]):
            unsuitable += 1
    return EncoderEventRates(trials, nonqueried, in_support, unsuitable)
