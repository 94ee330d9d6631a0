"""Bit-vector helpers.

Documents are plain ints in [0, 2^n); bit strings are '0'/'1' text. Bit 1 of
a document is its most significant bit, so integer order equals lexicographic
order on the fixed-length bit strings.
"""

from __future__ import annotations


def int_to_bits(value: int, width: int) -> str:
    if value < 0 or value >> width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def int_to_hex(value: int, width_bits: int) -> str:
    nibbles = max(1, (width_bits + 3) // 4)
    return format(value, f"0{nibbles}x")


def hex_to_int(text: str) -> int:
    return int(text, 16)


def doc_to_bytes(doc: int, width_bits: int) -> bytes:
    return doc.to_bytes(max(1, (width_bits + 7) // 8), "big")


def bit_of(value: int, index: int, width: int) -> int:
    """Bit at 1-based position ``index``, counting from the most significant."""
    if not 1 <= index <= width:
        raise ValueError(f"bit index {index} out of range 1..{width}")
    return (value >> (width - index)) & 1


def parity(value: int) -> int:
    return value.bit_count() & 1
