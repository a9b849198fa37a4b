"""X-Wing hybrid KEM (ML-KEM-768 + X25519, SHA3-256 combiner).

Encapsulation has three flavours:

* probabilistic: fresh X25519 ephemeral, ``c2 = DH(ske, G)``;
* ``mode="verbatim"`` with an eseed: ``c2`` is copied from ``eseed[32:64]``
  and ``ss2 = DH(eseed[0:32], pk2)``, so a caller that already owns an
  X25519 pair can reuse it as the ephemeral;
* ``mode="draft"``: the derandomised variant used for interop vectors,
  ``eseed[0:32]`` feeds ML-KEM and ``eseed[32:64]`` is the X25519
  ephemeral scalar.

Decapsulation never fails: ML-KEM implicit rejection produces an
unrelated shared secret and the combiner still runs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from .primitives import sha3_256, shake256
from .providers import MLKEM_CT_LEN, MLKEM_EK_LEN, PrimitiveProvider, get_provider

XWING_LABEL = bytes.fromhex("5c2e2f2f5e5c")
SK_LEN = 32
PK_LEN = MLKEM_EK_LEN + 32  # 1216
CT_LEN = MLKEM_CT_LEN + 32  # 1120
SS_LEN = 32
ESEED_LEN = 64

RandBytes = Callable[[int], bytes]


@dataclass(frozen=True)
class XWingKeyPair:
    sk: bytes
    pk: bytes

    def __post_init__(self):
        if len(self.sk) != SK_LEN or len(self.pk) != PK_LEN:
            raise ValueError(f"X-Wing key pair must be ({SK_LEN}, {PK_LEN}) bytes")

    @property
    def pk1(self) -> bytes:
        return self.pk[:MLKEM_EK_LEN]

    @property
    def pk2(self) -> bytes:
        return self.pk[MLKEM_EK_LEN:]

    def __repr__(self) -> str:
        return f"XWingKeyPair(sk=<redacted>, pk={self.pk[:8].hex()}...)"


@dataclass(frozen=True)
class XWingCiphertext:
    c1: bytes
    c2: bytes

    def __post_init__(self):
        if len(self.c1) != MLKEM_CT_LEN or len(self.c2) != 32:
            raise ValueError("X-Wing ciphertext must be 1088 + 32 bytes")

    @classmethod
    def parse(cls, c: bytes) -> XWingCiphertext:
        if len(c) != CT_LEN:
            raise ValueError(f"X-Wing ciphertext must be {CT_LEN} bytes, got {len(c)}")
        return cls(c[:MLKEM_CT_LEN], c[MLKEM_CT_LEN:])

    def to_bytes(self) -> bytes:
        return self.c1 + self.c2


@dataclass(frozen=True)
class Expanded:
    dk1: bytes
    pk1: bytes
    sk2: bytes
    pk2: bytes


def combine(ss1: bytes, ss2: bytes, c2: bytes, pk2: bytes) -> bytes:
    return sha3_256(ss1 + ss2 + c2 + pk2 + XWING_LABEL)


def expand(sk: bytes, provider: PrimitiveProvider | None = None) -> Expanded:
    if len(sk) != SK_LEN:
        raise ValueError(f"X-Wing sk must be {SK_LEN} bytes, got {len(sk)}")
    provider = provider or get_provider()
    e = shake256(sk, 96)
    dk1, pk1 = provider.mlkem_keygen_internal(e[0:32], e[32:64])
    sk2 = e[64:96]
    pk2 = provider.x25519_dh(sk2, provider.x25519_base_point)
    return Expanded(dk1, pk1, sk2, pk2)


def keygen_from_seed(sk: bytes, provider: PrimitiveProvider | None = None) -> XWingKeyPair:
    ex = expand(sk, provider)
    return XWingKeyPair(bytes(sk), ex.pk1 + ex.pk2)


def keygen(provider: PrimitiveProvider | None = None, rng: RandBytes | None = None) -> XWingKeyPair:
    sk = (rng or os.urandom)(SK_LEN)
    if len(sk) != SK_LEN:
        raise RuntimeError("entropy source returned a short read")
    return keygen_from_seed(sk, provider)


def encapsulate(
    pk: bytes,
    eseed: bytes | None = None,
    provider: PrimitiveProvider | None = None,
    rng: RandBytes | None = None,
    *,
    mode: str = "verbatim",
    mlkem_m: bytes | None = None,
) -> tuple[bytes, bytes]:
    """Return ``(ss, c)`` with ``c = c1 || c2``.

    ``rng`` supplies every random byte (X25519 ephemeral and ML-KEM
    randomness) so seeded callers get reproducible ciphertexts; without it
    the backend's own randomness is used. ``mlkem_m`` pins the ML-KEM
    randomness explicitly.
    """
    if len(pk) != PK_LEN:
        raise ValueError(f"X-Wing pk must be {PK_LEN} bytes, got {len(pk)}")
    if eseed is not None and len(eseed) != ESEED_LEN:
        raise ValueError(f"eseed must be {ESEED_LEN} bytes, got {len(eseed)}")
    provider = provider or get_provider()
    pk1, pk2 = pk[:MLKEM_EK_LEN], pk[MLKEM_EK_LEN:]
    base = provider.x25519_base_point

    if mode == "draft":
        if eseed is None:
            raise ValueError("draft-mode encapsulation needs an eseed")
        mlkem_m = eseed[0:32]
        ske = eseed[32:64]
        c2 = provider.x25519_dh(ske, base)
        ss2 = provider.x25519_dh(ske, pk2)
    elif mode == "verbatim":
        if eseed is not None:
            c2 = eseed[32:64]
            ss2 = provider.x25519_dh(eseed[0:32], pk2)
        else:
            ske = (rng or os.urandom)(32)
            c2 = provider.x25519_dh(ske, base)
            ss2 = provider.x25519_dh(ske, pk2)
    else:
        raise ValueError(f"unknown encapsulation mode {mode!r}")

    if mlkem_m is None and rng is not None:
        mlkem_m = rng(32)
    ss1, c1 = provider.mlkem_encaps(pk1, mlkem_m)
    return combine(ss1, ss2, c2, pk2), c1 + c2


def decapsulate(c: bytes, sk: bytes, provider: PrimitiveProvider | None = None) -> bytes:
    ct = XWingCiphertext.parse(c)
    if len(sk) != SK_LEN:
        raise ValueError(f"X-Wing sk must be {SK_LEN} bytes, got {len(sk)}")
    provider = provider or get_provider()
    ex = expand(sk, provider)
    ss1 = provider.mlkem_decaps(ct.c1, ex.dk1)
    ss2 = provider.x25519_dh(ex.sk2, ct.c2)
    return combine(ss1, ss2, ct.c2, ex.pk2)
