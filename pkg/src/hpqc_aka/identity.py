"""SUPI concealment (UE side) and deconcealment (home network side).

SUCI = (C0, C1, C2):

* C0 -- X-Wing ciphertext to the home network, built with an eseed taken
  from the UE's fresh X-Wing key pair, so ``C0[1088:1120]`` is the UE's
  X25519 public key;
* C1 -- AES-128-CTR of ``SUPI || pk1_UE`` under ``k1`` (key ``k1[0:16]``,
  initial counter block ``k1[16:32]``);
* C2 -- HMAC-SHA-256 of C1 under ``k2``.

``k1 || k2`` is the 512-bit X9.63 expansion of the X-Wing shared secret.
"""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from . import xwing
from .primitives import ct_equal, hmac_sha256, kdf_x963, shake256
from .providers import MLKEM_EK_LEN, PrimitiveProvider, get_provider

SUPI_MIN, SUPI_MAX = 1, 64
DEFAULT_SUPI_LEN = 16
C0_LEN = xwing.CT_LEN
C2_LEN = 32
K_UE_BITS = 512


class DeconcealError(Exception):
    pass


class MacMismatch(DeconcealError):
    """C2 does not authenticate C1 under the recovered k2."""


def check_supi(supi: bytes) -> bytes:
    if not SUPI_MIN <= len(supi) <= SUPI_MAX:
        raise ValueError(f"SUPI must be {SUPI_MIN}-{SUPI_MAX} bytes, got {len(supi)}")
    return bytes(supi)


@dataclass(frozen=True)
class Suci:
    c0: bytes
    c1: bytes
    c2: bytes

    def __post_init__(self):
        if len(self.c0) != C0_LEN:
            raise ValueError(f"C0 must be {C0_LEN} bytes, got {len(self.c0)}")
        if not MLKEM_EK_LEN + SUPI_MIN <= len(self.c1) <= MLKEM_EK_LEN + SUPI_MAX:
            raise ValueError(f"C1 length {len(self.c1)} out of range")
        if len(self.c2) != C2_LEN:
            raise ValueError(f"C2 must be {C2_LEN} bytes, got {len(self.c2)}")

    def to_bytes(self) -> bytes:
        return self.c0 + self.c1 + self.c2

    def __len__(self) -> int:
        return len(self.c0) + len(self.c1) + len(self.c2)


@dataclass(frozen=True)
class ConcealmentResult:
    suci: Suci
    sk_ue: bytes
    pk_ue: bytes

    @property
    def pk1_ue(self) -> bytes:
        return self.pk_ue[:MLKEM_EK_LEN]

    def __repr__(self) -> str:
        return f"ConcealmentResult(suci=<{len(self.suci)} B>, sk_ue=<redacted>)"


def _split_k_ue(ss: bytes) -> tuple[bytes, bytes]:
    k_ue = kdf_x963(ss, b"", K_UE_BITS)
    return k_ue[:32], k_ue[32:]


def _ctr(k1: bytes, data: bytes) -> bytes:
    cipher = Cipher(algorithms.AES(k1[:16]), modes.CTR(k1[16:32]))
    enc = cipher.encryptor()
    return enc.update(data) + enc.finalize()


def ue_eseed(sk_ue: bytes, pk_ue: bytes) -> bytes:
    """eseed = X25519 private scalar of the UE key || its public value."""
    return shake256(sk_ue, 96)[64:96] + pk_ue[MLKEM_EK_LEN:]


def conceal_supi(
    supi: bytes,
    pk_hn: bytes,
    provider: PrimitiveProvider | None = None,
    rng: xwing.RandBytes | None = None,
) -> ConcealmentResult:
    supi = check_supi(supi)
    provider = provider or get_provider()
    pair = xwing.keygen(provider, rng)
    ss_ue, c_ue = xwing.encapsulate(pk_hn, ue_eseed(pair.sk, pair.pk), provider, rng)
    k1, k2 = _split_k_ue(ss_ue)
    c1 = _ctr(k1, supi + pair.pk1)
    suci = Suci(c_ue, c1, hmac_sha256(k2, c1))
    return ConcealmentResult(suci, pair.sk, pair.pk)


def deconceal_suci(
    suci: Suci, sk_hn: bytes, provider: PrimitiveProvider | None = None
) -> tuple[bytes, bytes]:
    """Return ``(supi, pk1_ue)`` or raise :class:`MacMismatch`."""
    ss_ue = xwing.decapsulate(suci.c0, sk_hn, provider or get_provider())
    k1, k2 = _split_k_ue(ss_ue)
    if not ct_equal(hmac_sha256(k2, suci.c1), suci.c2):
        raise MacMismatch("SUCI integrity check failed")
    plain = _ctr(k1, suci.c1)
    return plain[:-MLKEM_EK_LEN], plain[-MLKEM_EK_LEN:]
