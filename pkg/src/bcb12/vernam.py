"""Binary one-time pad and byte/bit conversion.

Bit strings are 1-d ``uint8`` numpy arrays holding 0/1 values.  Their length
need not be a multiple of 8.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import KeyTooShortError


def as_bits(bits: Iterable[int] | str | np.ndarray) -> np.ndarray:
    """Coerce a '0'/'1' string or an int sequence into a bit array."""
    if isinstance(bits, str):
        return bits_from_str(bits)
    arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    return arr


def bits_from_str(text: str) -> np.ndarray:
    text = text.strip()
    if text and set(text) - {"0", "1"}:
        raise ValueError("bit string may contain only '0' and '1'")
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")


def bits_to_str(bits: np.ndarray) -> str:
    return (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def text_to_bits(data: bytes) -> np.ndarray:
    """Each byte becomes 8 bits, most significant first."""
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_text(bits: np.ndarray) -> bytes:
    bits = as_bits(bits)
    if bits.size % 8:
        raise ValueError(f"bit length {bits.size} is not a multiple of 8")
    return np.packbits(bits).tobytes()


def xor_cipher(x: np.ndarray, key: np.ndarray) -> np.ndarray:
    """XOR ``x`` with the first ``len(x)`` bits of ``key``.

    Encryption and decryption are the same map.
    """
    x, key = as_bits(x), as_bits(key)
    if key.size < x.size:
        raise KeyTooShortError(f"key has {key.size} bits, input has {x.size}")
    return np.bitwise_xor(x, key[: x.size])


encrypt = xor_cipher
decrypt = xor_cipher


def read_bits_file(path) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        return bits_from_str(fh.read())


def write_bits_file(bits: np.ndarray, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(bits_to_str(bits) + "\n")
