"""Command-line front end.

Every subcommand is a thin shell over the library: channels come from JSON
configs, randomness comes from an explicit 64-bit seed, and reports are CSV
(plus an optional JSON transcript), so any experiment replayed with the same
config produces byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from random import Random

from .bitops import hex_to_int, int_to_hex
from .channels import Channel, PrfChannel, channel_from_config, load_channel
from .games import (AdvantageEstimate, CoinWarden, ReplayWarden, SupportWarden,
                    estimate_advantage, measure_reliability,
                    run_distinguisher_game)
from .ordering import order_documents
from .primitives import FeistelPrp, UniversalHash
from .stego import DocumentOrderStego, RejectionStego, StegoKeyPair, reliability_bound
from .wor import (WorParams, WorString, wor_decode, wor_encode, wor_pmf,
                  wor_sample, wor_string_to_json)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _write_lines(path: str | None, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


# ---------------------------------------------------------------------------
# wor subcommands
# ---------------------------------------------------------------------------

def _wor_params(args) -> WorParams:
    return WorParams(total=args.N, zeros=args.N0, draws=args.K)


def cmd_wor(args) -> int:
    params = _wor_params(args)
    as_json = getattr(args, "json", False)

    def emit(w: WorString) -> None:
        print(json.dumps(wor_string_to_json(w)) if as_json else w.bits)

    if args.wor_op == "pmf":
        print(wor_pmf(params, args.bits))
    elif args.wor_op == "sample":
        rng = Random(args.seed)
        for _ in range(args.count):
            emit(wor_sample(params, rng))
    elif args.wor_op == "encode":
        emit(wor_encode(params, args.payload))
    elif args.wor_op == "decode":
        print(wor_decode(params, WorString(args.bits, params)))
    return 0


# ---------------------------------------------------------------------------
# generate-demo
# ---------------------------------------------------------------------------

def cmd_generate_demo(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    n = spec["n"]
    docs = [hex_to_int(d) for d in spec["docs"]]
    f = UniversalHash(tuple(spec["hash"]["coeffs"]), spec["hash"]["offset"], n, 1)
    kappa = spec.get("kappa", 32)
    key_payload = FeistelPrp(hex_to_int(spec["key_payload"]), kappa, n)
    key_tail = FeistelPrp(hex_to_int(spec["key_tail"]), kappa, n)
    ordered = order_documents(docs, f, spec["bits"], key_payload, key_tail)
    _write_lines(args.out, [int_to_hex(d, n) for d in ordered])
    return 0


# ---------------------------------------------------------------------------
# embed / extract
# ---------------------------------------------------------------------------

def _build_system(kind: str, kappa: int, message_len: int, doc_len: int,
                  inner: str):
    if kind == "pksteg":
        return DocumentOrderStego(kappa, message_len, doc_len, inner=inner)
    if kind == "rs":
        return RejectionStego(kappa, message_len, doc_len, inner=inner)
    raise ConfigError(f"unknown system {kind!r}")


def _keys_to_json(system_kind: str, system, keys: StegoKeyPair) -> dict:
    pk, f = keys.public
    sk, _ = keys.secret
    return {
        "system": system_kind,
        "kappa": system.kappa,
        "message_len": system.message_len,
        "doc_len": system.doc_len,
        "inner": system.inner_kind,
        "public": hex(pk),
        "secret": hex(sk),
        "hash": {"coeffs": list(f.coeffs), "offset": f.offset},
    }


def _keys_from_json(blob: dict):
    f = UniversalHash(tuple(blob["hash"]["coeffs"]), blob["hash"]["offset"],
                      blob["doc_len"], 1)
    keys = StegoKeyPair(public=(int(blob["public"], 16), f),
                        secret=(int(blob["secret"], 16), f))
    inner = blob["inner"]
    system = _build_system(blob["system"], blob["kappa"], blob["message_len"],
                           blob["doc_len"], inner)
    return system, keys


def cmd_embed(args) -> int:
    channel = load_channel(args.channel)
    message_len = 4 * len(args.message_hex)
    rng = Random(args.seed)
    try:
        with open(args.keys, "r", encoding="utf-8") as fh:
            system, keys = _keys_from_json(json.load(fh))
        if system.message_len != message_len:
            raise ConfigError("message length does not match the keys file")
    except FileNotFoundError:
        system = _build_system(args.system, args.kappa, message_len,
                               channel.doc_len, args.inner)
        keys = system.gen(rng)
        with open(args.keys, "w", encoding="utf-8") as fh:
            json.dump(_keys_to_json(args.system, system, keys), fh, indent=1)
    message_bits = format(hex_to_int(args.message_hex), f"0{message_len}b")
    docs = system.enc(keys.public, message_bits, channel, (), rng)
    _write_lines(args.out, [int_to_hex(d, channel.doc_len) for d in docs])
    return 0


def cmd_extract(args) -> int:
    with open(args.keys, "r", encoding="utf-8") as fh:
        system, keys = _keys_from_json(json.load(fh))
    if args.docs:
        with open(args.docs, "r", encoding="utf-8") as fh:
            lines = fh.read().split()
    else:
        lines = sys.stdin.read().split()
    docs = tuple(hex_to_int(line) for line in lines)
    message = system.dec(keys.secret, docs, ())
    if message is None:
        print("DECODE-FAILED", file=sys.stderr)
        return 2
    print(int_to_hex(int(message, 2), len(message)))
    return 0


# ---------------------------------------------------------------------------
# game / reliability / impossibility-demo
# ---------------------------------------------------------------------------

def _build_warden(kind: str, channel: Channel, message_len: int, kappa: int,
                  q: int):
    if kind == "replay":
        return ReplayWarden(message_len, kappa)
    if kind == "coin":
        return CoinWarden(message_len=message_len)
    if kind == "omega":
        return SupportWarden(channel, message_len, q=q)
    raise ConfigError(f"unknown warden {kind!r}")


def _game_rows(estimate: AdvantageEstimate, label: tuple[str, str, str]) -> list[str]:
    system, warden, game = label
    header = "schema_version,system,warden,game,trials,wins,advantage,ci"
    row = (f"{SCHEMA_VERSION},{system},{warden},{game},{estimate.trials},"
           f"{estimate.wins},{_fmt(estimate.advantage)},{_fmt(estimate.ci_half_width)}")
    return [header, row]


def _game_trial_batch(payload) -> list[tuple[int, int, int, int, bool]]:
    """Worker: replay a batch of independently seeded trials.  Module-level
    so process pools can pickle it."""
    (channel_config, system_kind, warden_kind, game, kappa, message_len,
     inner, q, seeds) = payload
    channel = channel_from_config(channel_config)
    system = _build_system(system_kind, kappa, message_len, channel.doc_len,
                           inner)
    warden = _build_warden(warden_kind, channel, message_len, kappa, q)
    out = []
    for seed in seeds:
        r = run_distinguisher_game(warden, system, channel, Random(seed),
                                   oracle=game)
        out.append((r.challenge_bit, r.guess, r.find_calls, r.guess_calls,
                    r.valid))
    return out


def cmd_game(args) -> int:
    with open(args.channel, "r", encoding="utf-8") as fh:
        channel_config = json.load(fh)
    channel_from_config(channel_config)      # validate before spawning work
    # one seed per trial, drawn up front: the report is identical whatever
    # the degree of parallelism
    master = Random(args.seed)
    seeds = [master.getrandbits(64) for _ in range(args.trials)]
    jobs = max(1, args.jobs)
    static = (channel_config, args.system, args.warden, args.game, args.kappa,
              args.message_len, args.inner, args.q)
    if jobs == 1:
        batches = [_game_trial_batch(static + (seeds,))]
    else:
        size = -(-len(seeds) // jobs)
        payloads = [static + (seeds[i:i + size],)
                    for i in range(0, len(seeds), size)]
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_game_trial_batch, payloads))
    results = [r for batch in batches for r in batch]
    wins = sum(1 for bit, guess, _, _, valid in results
               if valid and bit == guess)
    excluded = sum(1 for *_, valid in results if not valid)
    estimate = AdvantageEstimate(trials=args.trials - excluded, wins=wins,
                                 excluded=excluded)
    _write_lines(args.out, _game_rows(estimate, (args.system, args.warden, args.game)))
    if args.transcript:
        transcript = [{"bit": b, "guess": g, "find_calls": fc,
                       "guess_calls": gc, "valid": v}
                      for b, g, fc, gc, v in results]
        with open(args.transcript, "w", encoding="utf-8") as fh:
            json.dump({"seed": args.seed, "trials": transcript}, fh, indent=1)
    return 0


def cmd_reliability(args) -> int:
    channel = load_channel(args.channel)
    system = _build_system(args.system, args.kappa, args.message_len,
                           channel.doc_len, args.inner)
    rng = Random(args.seed)
    report = measure_reliability(system, channel, args.trials, rng)
    try:
        bound = _fmt(reliability_bound(system.output_len,
                                       channel.min_entropy_bound()))
    except NotImplementedError:
        bound = ""
    header = "schema_version,system,trials,failures,failure_rate,max_probe_rate,ci,bound"
    row = (f"{SCHEMA_VERSION},{args.system},{report.trials},{report.failures},"
           f"{_fmt(report.failure_rate)},{_fmt(report.max_probe_rate)},"
           f"{_fmt(report.ci_half_width)},{bound}")
    _write_lines(args.out, [header, row])
    return 0


def cmd_impossibility_demo(args) -> int:
    rng = Random(args.seed)
    channel = PrfChannel.random(args.doc_len, args.rand_bits, args.kappa, rng)
    system = RejectionStego(args.kappa, args.message_len, args.doc_len,
                            inner=args.inner)
    rel = measure_reliability(system, channel, args.rel_trials, rng)
    warden = SupportWarden(channel, args.message_len, q=args.q)
    adv = estimate_advantage(warden, system, channel, "cca", args.trials, rng)
    # honest traffic only: how often does the warden cry stego?
    false_pos = 0
    for _ in range(args.trials):
        keys = system.gen(rng)
        message, hist, state = warden.find(keys.public, lambda d, h=(): None,
                                           channel, rng)
        challenge = channel.sample_block(hist, system.output_len, rng)
        from .games import DecodeOracle
        oracle = DecodeOracle(system, keys.secret)
        if warden.guess(keys.public, message, hist, state, challenge,
                        oracle, channel, rng) == 0:
            false_pos += 1
    header = ("schema_version,unreliability,advantage,adv_ci,"
              "honest_stego_rate,fp_bound,q")
    fp_bound = args.q * 2.0 ** (-args.message_len) + 0.01
    row = (f"{SCHEMA_VERSION},{_fmt(rel.failure_rate)},{_fmt(adv.advantage)},"
           f"{_fmt(adv.ci_half_width)},{_fmt(false_pos / args.trials)},"
           f"{_fmt(fp_bound)},{args.q}")
    _write_lines(args.out, [header, row])
    return 0


def cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    command = config.pop("command", None)
    parser = build_parser()
    argv = [command]
    for key, value in config.items():
        argv.append(f"--{key.replace('_', '-')}")
        if value is not None:
            argv.append(str(value))
    try:
        sub = parser.parse_args(argv)
    except SystemExit:
        raise ConfigError(f"bad config for command {command!r}")
    return sub.func(sub)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="urnstego",
        description="Steganography over synthetic channels: codecs, "
                    "stegosystems and security-game experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    wor = sub.add_parser("wor", help="urn draw distribution and codec")
    wor_sub = wor.add_subparsers(dest="wor_op", required=True)
    for op in ("pmf", "sample", "encode", "decode"):
        p = wor_sub.add_parser(op)
        p.add_argument("--N", type=int, required=True, help="total balls")
        p.add_argument("--N0", type=int, required=True, help="zero-labeled balls")
        p.add_argument("--K", type=int, required=True, help="draw count")
        if op == "pmf" or op == "decode":
            p.add_argument("--bits", required=True)
        if op == "sample":
            p.add_argument("--count", type=int, default=1)
            p.add_argument("--seed", type=int, default=0)
        if op == "encode":
            p.add_argument("--payload", required=True)
        if op in ("sample", "encode"):
            p.add_argument("--json", action="store_true",
                           help="emit the JSON interchange form")
        p.set_defaults(func=cmd_wor)

    demo = sub.add_parser("generate-demo",
                          help="order a document set from a JSON description")
    demo.add_argument("--input", required=True)
    demo.add_argument("--out")
    demo.set_defaults(func=cmd_generate_demo)

    embed = sub.add_parser("embed", help="hide a message in channel documents")
    embed.add_argument("--channel", required=True)
    embed.add_argument("--message-hex", required=True)
    embed.add_argument("--keys", required=True,
                       help="keys file (created if missing)")
    embed.add_argument("--system", choices=("pksteg", "rs"), default="pksteg")
    embed.add_argument("--kappa", type=int, default=32)
    embed.add_argument("--inner", choices=("kem-dem", "ideal-table"),
                       default="kem-dem")
    embed.add_argument("--seed", type=int, default=0)
    embed.add_argument("--out")
    embed.set_defaults(func=cmd_embed)

    extract = sub.add_parser("extract", help="recover a hidden message")
    extract.add_argument("--keys", required=True)
    extract.add_argument("--docs", help="hex document lines (default stdin)")
    extract.set_defaults(func=cmd_extract)

    game = sub.add_parser("game", help="run distinguishing games")
    game.add_argument("--system", choices=("pksteg", "rs"), required=True)
    game.add_argument("--warden", choices=("replay", "omega", "coin"),
                      required=True)
    game.add_argument("--game", choices=("cca", "rcca"), default="cca")
    game.add_argument("--channel", required=True)
    game.add_argument("--trials", type=int, default=1000)
    game.add_argument("--seed", type=int, default=0)
    game.add_argument("--kappa", type=int, default=32)
    game.add_argument("--message-len", type=int, default=32)
    game.add_argument("--inner", choices=("kem-dem", "ideal-table"),
                      default="kem-dem")
    game.add_argument("--q", type=int, default=32,
                      help="query budget of the omega warden")
    game.add_argument("--jobs", type=int, default=1,
                      help="parallel worker processes (trials are "
                           "independently seeded, so the report is the same)")
    game.add_argument("--out")
    game.add_argument("--transcript")
    game.set_defaults(func=cmd_game)

    rel = sub.add_parser("reliability", help="round-trip failure rate")
    rel.add_argument("--system", choices=("pksteg", "rs"), default="pksteg")
    rel.add_argument("--channel", required=True)
    rel.add_argument("--trials", type=int, default=1000)
    rel.add_argument("--seed", type=int, default=0)
    rel.add_argument("--kappa", type=int, default=32)
    rel.add_argument("--message-len", type=int, default=32)
    rel.add_argument("--inner", choices=("kem-dem", "ideal-table"),
                     default="kem-dem")
    rel.add_argument("--out")
    rel.set_defaults(func=cmd_reliability)

    imp = sub.add_parser("impossibility-demo",
                         help="rejection sampling vs the support warden on a "
                              "pseudorandom channel")
    imp.add_argument("--seed", type=int, default=0)
    imp.add_argument("--trials", type=int, default=200)
    imp.add_argument("--rel-trials", type=int, default=100)
    imp.add_argument("--doc-len", type=int, default=16)
    imp.add_argument("--rand-bits", type=int, default=6)
    imp.add_argument("--kappa", type=int, default=32)
    imp.add_argument("--message-len", type=int, default=32)
    imp.add_argument("--inner", choices=("kem-dem", "ideal-table"),
                     default="kem-dem")
    imp.add_argument("--q", type=int, default=32)
    imp.add_argument("--out")
    imp.set_defaults(func=cmd_impossibility_demo)

    run = sub.add_parser("run", help="run a single experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
