"""Tests for the distinguishing-game harness, wardens and estimators."""

from random import Random

import pytest

from urnstego import (CoinWarden, ConstantWarden, DecodeOracle,
                      DocumentOrderStego, IdealizedOrderStego, PrfChannel,
                      RejectionStego, ReorderWarden, ReplayWarden,
                      SupportWarden, SwapWarden, UniformChannel,
                      estimate_advantage, estimate_encoder_events,
                      measure_reliability, random_subset_channel,
                      run_distinguisher_game)
from urnstego.games import ProtocolViolation

from conftest import MarkerStego, MarkerWarden


CH16 = UniformChannel(16)


def _rs_system():
    return RejectionStego(32, 32, 16)


# ---------------------------------------------------------------------------
# Oracle semantics
# ---------------------------------------------------------------------------

def test_oracle_blinds_exact_challenge_only(rng):
    system = _rs_system()
    keys = system.gen(rng)
    message = "01" * 16
    challenge = system.enc(keys.public, message, CH16, (), rng)
    oracle = DecodeOracle(system, keys.secret, blocked_docs=challenge)
    assert oracle(challenge) is None
    other = system.enc(keys.public, message, CH16, (), rng)
    assert other != challenge
    assert oracle(other) == message       # full decode on anything else
    truncated = challenge[:-1] + (challenge[-1] ^ 1,)
    assert oracle(truncated) == system.dec(keys.secret, truncated)


def test_rcca_oracle_blinds_reencodings(rng):
    system = _rs_system()
    keys = system.gen(rng)
    _, f = keys.public
    message = "0" * 32
    challenge = system.enc(keys.public, message, CH16, (), rng)
    oracle = DecodeOracle(system, keys.secret, blocked_docs=challenge,
                          blocked_message=message)
    from urnstego import rejection_sample
    swapped = rejection_sample(f, CH16, f.evaluate(challenge[-1]),
                               challenge[:-1], 32, rng)
    replay = challenge[:-1] + (swapped,)
    assert system.dec(keys.secret, replay) == message
    assert oracle(replay) is None          # blinded despite differing
    other_message = "1" * 32
    other = system.enc(keys.public, other_message, CH16, (), rng)
    assert oracle(other) == other_message  # different plaintext passes


def test_oracle_budget_enforced(rng):
    system = _rs_system()
    keys = system.gen(rng)
    oracle = DecodeOracle(system, keys.secret, cap=3)
    probe = tuple(range(system.output_len))
    for _ in range(3):
        oracle(probe)
    with pytest.raises(ProtocolViolation):
        oracle(probe)


class GreedyWarden(ConstantWarden):
    """Exceeds its find-phase budget; trials must be excluded, not crash."""

    def find(self, public, oracle, channel, rng):
        probe = tuple(range(160))
        for _ in range(10_000):
            oracle(probe)
        return "0" * 32, (), None


def test_protocol_violations_are_excluded(rng):
    estimate = estimate_advantage(GreedyWarden(message_len=32), _rs_system(),
                                  CH16, "cca", 5, rng)
    assert estimate.excluded == 5
    assert estimate.trials == 0


# ---------------------------------------------------------------------------
# Baseline wardens
# ---------------------------------------------------------------------------

def test_constant_and_coin_wardens_are_blind():
    rng = Random(99)
    system = _rs_system()
    for warden in (ConstantWarden(0, message_len=32),
                   CoinWarden(message_len=32)):
        estimate = estimate_advantage(warden, system, CH16, "cca", 400, rng)
        assert estimate.advantage <= 0.08


def test_marker_distinguisher_wins(rng):
    estimate = estimate_advantage(MarkerWarden(), MarkerStego(), CH16,
                                  "cca", 200, rng)
    assert estimate.win_rate >= 0.99


# ---------------------------------------------------------------------------
# Replay warden
# ---------------------------------------------------------------------------

def test_replay_beats_rejection_stego_under_cca():
    rng = Random(7)
    estimate = estimate_advantage(ReplayWarden(32), _rs_system(), CH16,
                                  "cca", 300, rng)
    assert estimate.win_rate >= 0.95


def test_replay_blinded_under_rcca():
    rng = Random(8)
    estimate = estimate_advantage(ReplayWarden(32), _rs_system(), CH16,
                                  "rcca", 300, rng)
    assert estimate.advantage <= 0.08


def test_replay_fails_against_order_stego():
    rng = Random(9)
    system = DocumentOrderStego(32, 32, 32, inner="ideal-table")
    estimate = estimate_advantage(ReplayWarden(32), system,
                                  UniformChannel(32), "cca", 60, rng)
    assert estimate.advantage <= 0.15   # wide CI at 60 trials; near zero


# ---------------------------------------------------------------------------
# Determinism and idealized-hybrid blindness
# ---------------------------------------------------------------------------

def test_games_replay_identically_from_seed():
    def transcript(seed):
        rng = Random(seed)
        out = []
        for _ in range(30):
            r = run_distinguisher_game(ReplayWarden(32), _rs_system(), CH16,
                                       rng, oracle="cca")
            out.append((r.challenge_bit, r.guess, r.find_calls, r.guess_calls))
        return out

    assert transcript(1234) == transcript(1234)
    assert transcript(1234) != transcript(1235)


def test_idealized_system_blinds_every_fixture_warden():
    rng = Random(11)
    system = IdealizedOrderStego(doc_len=3, set_size=8)
    channel = UniformChannel(3)
    for warden in (ConstantWarden(0, message_len=8),
                   CoinWarden(message_len=8), ReplayWarden(8)):
        estimate = estimate_advantage(warden, system, channel, "cca", 2000, rng)
        assert estimate.advantage <= 3 * estimate.ci_half_width


# ---------------------------------------------------------------------------
# Reliability measurement
# ---------------------------------------------------------------------------

def test_measure_reliability_rs(rng):
    report = measure_reliability(_rs_system(), CH16, 120, rng)
    assert report.trials == 120
    assert report.failure_rate <= 0.02
    assert set(len(m) for m in report.per_probe) == {32}


def test_measure_reliability_counts_fallbacks(rng):
    cramped = DocumentOrderStego(32, 32, 3, inner="ideal-table")
    ch = UniformChannel(3)
    report = measure_reliability(cramped, ch, 10, rng)
    assert report.failure_rate == 1.0   # fallback always, decoder refuses
    assert report.max_probe_rate == 1.0


# ---------------------------------------------------------------------------
# Support warden and encoder events
# ---------------------------------------------------------------------------

def test_support_warden_detects_naive_rs_on_prf_channel():
    rng = Random(13)
    channel = PrfChannel.random(16, 6, 32, rng)
    system = _rs_system()
    warden = SupportWarden(channel, 32, q=32)
    estimate = estimate_advantage(warden, system, channel, "cca", 150, rng)
    assert estimate.advantage >= 0.25


def test_support_warden_spares_honest_traffic():
    rng = Random(14)
    channel = PrfChannel.random(16, 6, 32, rng)
    system = _rs_system()
    warden = SupportWarden(channel, 32, q=32)
    cried = 0
    trials = 300
    for _ in range(trials):
        keys = system.gen(rng)
        message, hist, state = warden.find(keys.public, None, channel, rng)
        challenge = channel.sample_block(hist, system.output_len, rng)
        oracle = DecodeOracle(system, keys.secret)
        cried += warden.guess(keys.public, message, hist, state, challenge,
                              oracle, channel, rng) == 0
    assert cried / trials <= 32 * 2 ** -32 + 0.01


def test_support_warden_needs_membership_advice():
    with pytest.raises(ValueError):
        SupportWarden(UniformChannel(16), 32)


def test_encoder_events_for_honest_rs():
    rng = Random(15)
    channel = PrfChannel.random(16, 6, 32, rng)
    rates = estimate_encoder_events(_rs_system(), channel, 40, rng)
    assert rates.nonqueried_rate == 0.0      # only sampled documents are sent
    assert rates.unsuitable_rate <= 0.1      # rejection sampling nearly always lands


class HallucinatingStego(RejectionStego):
    """Test double that emits one document it never sampled."""

    def enc_traced(self, public, message_bits, channel, hist, rng):
        docs, trace = super().enc_traced(public, message_bits, channel,
                                         hist, rng)
        fabricated = rng.getrandbits(self.doc_len)
        return docs[:-1] + (fabricated,), trace


def test_fabricated_documents_rarely_hit_random_supports():
    rng = Random(16)
    channel = random_subset_channel(16, 1 << 8, positions=256, rng=rng)
    system = HallucinatingStego(32, 32, 16)
    trials = 250
    rates = estimate_encoder_events(system, channel, trials, rng)
    assert rates.nonqueried_rate >= 0.95
    ell = system.output_len
    stderr = (0.25 / trials) ** 0.5
    assert rates.in_support_given_nonqueried <= ell * 2 ** -8 + 3 * stderr
