"""Deterministic document ordering and the forgery experiment against it.

``order_documents`` arranges a set of N sampled documents so that the first
L of them carry given payload bits under a public bit-assignment hash f,
while the arrangement as a whole is determined by two keyed permutations:
position i <= L takes the remaining f-matching document with the smallest
permutation value under the first key, and the tail is sorted by the second
key.  Reordering or substituting documents therefore breaks either the
deterministic structure or a keyed hash over the document set, which is what
``forgery_experiment`` measures.
"""

from __future__ import annotations

from random import Random
from typing import Callable, Iterable, Sequence

import numpy as np

from .bitops import doc_to_bytes
from .primitives import FeistelPrp, KeyedHash, UniversalHash


class OrderingError(ValueError):
    """Precondition violation: bad set size, bad split, or an emptied pool."""


AttackerFn = Callable[[Sequence[int], UniversalHash, str, KeyedHash], Sequence[int]]


def lex_bytes(docs: Iterable[int], doc_len: int) -> bytes:
    """Serialize a document set for hashing: documents in increasing order,
    each length-prefixed."""
    docs = list(docs)
    width = doc_len.to_bytes(2, "big")
    if doc_len <= 64 and len(docs) >= 32:
        arr = np.sort(np.array(docs, dtype=np.uint64))
        nbytes = max(1, (doc_len + 7) // 8)
        raw = arr.astype(">u8").view(np.uint8).reshape(-1, 8)[:, 8 - nbytes:]
        prefix = np.tile(np.frombuffer(width, dtype=np.uint8), (len(docs), 1))
        return np.hstack([prefix, raw]).tobytes()
    return b"".join(width + doc_to_bytes(d, doc_len) for d in sorted(docs))


def _sorted_indices(values: Sequence[int], total: int) -> list[int]:
    if isinstance(values, np.ndarray):
        if np.unique(values).size != total:
            raise OrderingError("permutation produced tied ranks")
        return np.argsort(values).tolist()
    if len(set(values)) != total:
        raise OrderingError("permutation produced tied ranks")
    return sorted(range(total), key=values.__getitem__)


def _order_core(doc_list: list[int], f: UniversalHash, bits: str,
                vals_payload: Sequence[int],
                vals_tail: Sequence[int]) -> tuple[int, ...]:
    total = len(doc_list)
    if len(set(doc_list)) != total:
        raise OrderingError("document set contains duplicates")
    if len(bits) > total:
        raise OrderingError("more payload bits than documents")
    bit_vals = f.evaluate_many(doc_list)
    zeros = bit_vals.count(0)
    if not total <= 3 * zeros <= 2 * total:
        raise OrderingError(f"bit split {zeros}/{total} outside [1/3, 2/3]")

    by_payload = _sorted_indices(vals_payload, total)
    by_tail = _sorted_indices(vals_tail, total)
    queues: tuple[list[int], list[int]] = ([], [])
    for i in by_payload:
        queues[bit_vals[i]].append(i)

    ordered: list[int] = []
    used = bytearray(total)
    cursors = [0, 0]
    for b in bits:
        v = int(b)
        if cursors[v] >= len(queues[v]):
            raise OrderingError(f"ran out of documents carrying bit {v}")
        i = queues[v][cursors[v]]
        cursors[v] += 1
        used[i] = 1
        ordered.append(doc_list[i])
    ordered.extend(doc_list[i] for i in by_tail if not used[i])
    return tuple(ordered)


def order_documents(docs: Sequence[int], f: UniversalHash, bits: str,
                    key_payload: FeistelPrp, key_tail: FeistelPrp) -> tuple[int, ...]:
    """Order ``docs`` so the first len(bits) documents hash to ``bits``.

    Pure function of its inputs: the same set, hash, bits and keys always
    produce the same sequence.
    """
    doc_list = list(docs)
    return _order_core(doc_list, f, bits,
                       key_payload.rank_values(doc_list),
                       key_tail.rank_values(doc_list))


def _table_values(table, docs: Sequence[int], domain_bits: int) -> list[int]:
    space = 1 << domain_bits
    if isinstance(table, dict):
        lookup = table
        values = sorted(table.values())
    else:
        lookup = list(table)
        values = sorted(lookup)
    if len(values) != space or values != list(range(space)):
        raise OrderingError("table is not a permutation of the document space")
    return [lookup[d] for d in docs]


def order_documents_with_tables(docs: Sequence[int], f: UniversalHash, bits: str,
                                table_payload, table_tail) -> tuple[int, ...]:
    """Same as ``order_documents`` but with explicit permutation tables over
    the whole document space (index -> rank).  Used by the uniformity tests,
    where the keyed permutations are replaced by truly random ones."""
    doc_list = list(docs)
    return _order_core(doc_list, f, bits,
                       _table_values(table_payload, doc_list, f.in_len),
                       _table_values(table_tail, doc_list, f.in_len))


# ---------------------------------------------------------------------------
# Forgery experiment
# ---------------------------------------------------------------------------

def forgery_experiment(attacker: AttackerFn, docs: Sequence[int],
                       f: UniversalHash, bits: str, rng: Random,
                       kappa: int = 32, hash_bits: int = 64) -> int:
    """Run one round of the replay-forgery experiment.

    Fresh permutation keys and a fresh hash key are drawn; the attacker sees
    the ordered sequence, the bit assignment, the payload bits and the hash
    key, and must output a different sequence that still (a) carries the same
    payload bits on the first L positions, (b) is the deterministic ordering
    of its own document set under the hidden permutation keys, and (c) has
    the same keyed hash over the document set.  Returns 1 on success.
    """
    key_payload = FeistelPrp.random(kappa, f.in_len, rng)
    key_tail = FeistelPrp.random(kappa, f.in_len, rng)
    keyed_hash = KeyedHash.random(kappa, rng, hash_bits)
    sequence = order_documents(docs, f, bits, key_payload, key_tail)

    try:
        forged = tuple(attacker(sequence, f, bits, keyed_hash))
    except Exception:
        return 0
    if len(forged) != len(sequence):
        return 0
    if any(not isinstance(d, int) or d < 0 or d >> f.in_len for d in forged):
        return 0
    if any(f.evaluate(forged[i]) != int(bits[i]) for i in range(len(bits))):
        return 0
    try:
        regenerated = order_documents(forged, f, bits, key_payload, key_tail)
    except OrderingError:
        return 0
    if forged != regenerated:
        return 0
    if keyed_hash(lex_bytes(set(forged), f.in_len)) != keyed_hash(lex_bytes(set(docs), f.in_len)):
        return 0
    if forged == sequence:
        return 0
    return 1


def identity_attacker(sequence, f, bits, keyed_hash):
    """Baseline: returns the sequence unchanged, so it can never win."""
    return sequence


def make_swap_attacker(channel, rng: Random, budget: int = 1000) -> AttackerFn:
    """Substitution attack: replace the first payload document with a fresh
    channel document carrying the same bit, searching up to ``budget``
    candidates for one whose substitution preserves the keyed hash of the
    document set.  Against a strong hash the search fails and the sequence is
    returned unchanged; against a truncated hash it usually succeeds."""

    def attack(sequence, f: UniversalHash, bits: str, keyed_hash: KeyedHash):
        if not bits:
            return sequence
        target = sequence[0]
        wanted = int(bits[0])
        present = set(sequence)
        rest = present - {target}
        goal = keyed_hash(lex_bytes(present, f.in_len))
        tested = 0
        for _ in range(8 * budget):   # raw sampling cap; half carry the bit
            if tested >= budget:
                break
            candidate = channel.sample((), rng)
            if candidate in present or f.evaluate(candidate) != wanted:
                continue
            tested += 1
            if keyed_hash(lex_bytes(rest | {candidate}, f.in_len)) == goal:
                return (candidate,) + tuple(sequence[1:])
        return sequence

    return attack


def reorder_attacker(sequence, f: UniversalHash, bits: str, keyed_hash):
    """Reordering attack: swap the first pair of tail documents that carry
    the same bit.  The deterministic tail order makes this fail the
    regeneration check; it exists to demonstrate exactly that."""
    first_tail = len(bits)
    seq = list(sequence)
    for i in range(first_tail, len(seq)):
        for j in range(i + 1, len(seq)):
            if f.evaluate(seq[i]) == f.evaluate(seq[j]):
                seq[i], seq[j] = seq[j], seq[i]
                return tuple(seq)
    return tuple(seq)
