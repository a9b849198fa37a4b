"""Hash, KDF and MAC primitives plus the AKA f-function family.

The f-functions are HMAC-SHA-256 keyed with the subscriber key K over a
one-byte domain tag followed by the input, truncated to the usual 3GPP
output sizes:

    tag   byte  bytes   role
    F1    0x01    8     network authentication MAC
    F1S   0x11    8     resynchronisation MAC (MAC*)
    F2    0x02   16     RES / XRES
    F3    0x03   16     CK
    F4    0x04   16     IK
    F5    0x05    6     anonymity key AK
    F5S   0x15    6     resynchronisation anonymity key AK*

MILENAGE cannot be used here because every f-input carries the full
1120-byte masked challenge rather than a 128-bit RAND.
"""

from __future__ import annotations

import hashlib
import hmac
from enum import Enum

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.x963kdf import X963KDF

KEY_LEN = 32
ALLOWED_KEY_LENS = (16, 32)


class FTag(Enum):
    F1 = (0x01, 8)
    F1S = (0x11, 8)
    F2 = (0x02, 16)
    F3 = (0x03, 16)
    F4 = (0x04, 16)
    F5 = (0x05, 6)
    F5S = (0x15, 6)

    @property
    def domain(self) -> int:
        return self.value[0]

    @property
    def out_len(self) -> int:
        return self.value[1]


def sha3_256(data: bytes) -> bytes:
    return hashlib.sha3_256(data).digest()


def shake256(data: bytes, out_len: int) -> bytes:
    return hashlib.shake_256(data).digest(out_len)


def hmac_sha256(key: bytes, data: bytes) -> bytes:
    return hmac.new(key, data, hashlib.sha256).digest()


def kdf_x963(shared_secret: bytes, shared_info: bytes, out_len_bits: int) -> bytes:
    """ANSI X9.63 KDF over SHA-256 (32-bit big-endian counter from 1)."""
    if out_len_bits <= 0 or out_len_bits % 8:
        raise ValueError(f"out_len_bits must be a positive multiple of 8, got {out_len_bits}")
    if not shared_secret:
        raise ValueError("shared_secret must be non-empty")
    kdf = X963KDF(
        algorithm=hashes.SHA256(),
        length=out_len_bits // 8,
        sharedinfo=shared_info or None,
    )
    return kdf.derive(shared_secret)


def kdf_hmac(key: bytes, info: bytes) -> bytes:
    """The HMAC-SHA-256 KDF used for XRES*, K_AUSF and K_SEAF."""
    if not key:
        raise ValueError("KDF key must be non-empty")
    return hmac_sha256(key, info)


def f(tag: FTag, k: bytes, data: bytes) -> bytes:
    if len(k) not in ALLOWED_KEY_LENS:
        raise ValueError(f"long-term key must be 16 or 32 bytes, got {len(k)}")
    if not data:
        raise ValueError("f-function input must be non-empty")
    out = hmac_sha256(k, bytes([tag.domain]) + data)[: tag.out_len]
    assert len(out) == tag.out_len
    return out


def left(n_bits: int, data: bytes) -> bytes:
    """Leftmost ``n_bits`` of ``data``."""
    if n_bits <= 0 or n_bits % 8:
        raise ValueError(f"n_bits must be a positive multiple of 8, got {n_bits}")
    n = n_bits // 8
    if n > len(data):
        raise ValueError(f"cannot take {n} bytes from {len(data)}-byte input")
    return data[:n]


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError(f"xor operands differ in length: {len(a)} != {len(b)}")
    n = len(a)
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(n, "big")


def ct_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(a, b)
