"""Challenge-response core: authentication vectors, UE challenge handling,
response checks and SQN resynchronisation.

RAND is the home network's X-Wing ciphertext to the UE. Every f-function
input is masked with HPK, the 1120-byte X9.63 expansion of that
ciphertext's shared secret, so only the holder of the ephemeral sk_UE can
recompute the session keys.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from . import xwing
from .primitives import (
    FTag,
    ct_equal,
    f,
    hmac_sha256,
    kdf_hmac,
    kdf_x963,
    left,
    sha3_256,
    xor_bytes,
)
from .providers import MLKEM_EK_LEN, PrimitiveProvider, get_provider

RAND_LEN = xwing.CT_LEN
HPK_BITS = 8 * RAND_LEN
SQN_LEN = 6
SQN_MAX = 2**48 - 1
AMF_LEN = 2
DEFAULT_AMF = b"\x80\x00"
DEFAULT_DELTA = 2**28
AUTN_LEN = 16
AUTS_LEN = 16
HXRES_LEN = 16
RES_STAR_LEN = 32


class SqnOverflow(Exception):
    """SQN would leave the 48-bit range; the subscriber needs re-provisioning."""


class ResyncRejected(Exception):
    """AUTS failed its MAC* check; subscriber state is unchanged."""


def sqn_bytes(sqn: int) -> bytes:
    if not 0 <= sqn <= SQN_MAX:
        raise SqnOverflow(f"SQN {sqn} outside the 48-bit range")
    return sqn.to_bytes(SQN_LEN, "big")


@dataclass(frozen=True)
class SubscriberRecord:
    supi: bytes
    k: bytes
    sqn_hn: int = 0
    amf: bytes = DEFAULT_AMF

    def __repr__(self) -> str:
        return f"SubscriberRecord(supi={self.supi.hex()}, k=<redacted>, sqn_hn={self.sqn_hn})"


@dataclass(frozen=True)
class Autn:
    conc: bytes
    amf: bytes
    mac: bytes

    def __post_init__(self):
        if (len(self.conc), len(self.amf), len(self.mac)) != (6, 2, 8):
            raise ValueError("AUTN layout is CONC(6) || AMF(2) || MAC(8)")

    def to_bytes(self) -> bytes:
        return self.conc + self.amf + self.mac

    @classmethod
    def from_bytes(cls, data: bytes) -> Autn:
        if len(data) != AUTN_LEN:
            raise ValueError(f"AUTN must be {AUTN_LEN} bytes")
        return cls(data[:6], data[6:8], data[8:])


@dataclass(frozen=True)
class Auts:
    conc_star: bytes
    amf: bytes
    mac_star: bytes

    def __post_init__(self):
        if (len(self.conc_star), len(self.amf), len(self.mac_star)) != (6, 2, 8):
            raise ValueError("AUTS layout is CONC*(6) || AMF(2) || MAC*(8)")

    def to_bytes(self) -> bytes:
        return self.conc_star + self.amf + self.mac_star

    @classmethod
    def from_bytes(cls, data: bytes) -> Auts:
        if len(data) != AUTS_LEN:
            raise ValueError(f"AUTS must be {AUTS_LEN} bytes")
        return cls(data[:6], data[6:8], data[8:])


@dataclass(frozen=True)
class KeyHierarchy:
    hpk: bytes
    mac: bytes
    ak: bytes
    ck: bytes
    ik: bytes
    res_or_xres: bytes
    res_star: bytes
    k_ausf: bytes
    k_seaf: bytes

    def __repr__(self) -> str:
        return "KeyHierarchy(<redacted>)"


@dataclass(frozen=True)
class SeAv:
    rand: bytes
    autn: Autn
    hxres_star: bytes


@dataclass(frozen=True)
class HeAv:
    rand: bytes
    autn: Autn
    xres_star: bytes
    k_ausf: bytes
    # retained by the home network for resync and key release
    hpk: bytes
    sqn: int
    k_seaf: bytes

    def se_av(self) -> SeAv:
        return SeAv(self.rand, self.autn, hxres_star(self.rand, self.xres_star))


@dataclass(frozen=True)
class MacFailure:
    pass


@dataclass(frozen=True)
class SyncFailure:
    auts: Auts


@dataclass(frozen=True)
class Success:
    res_star: bytes
    k_seaf: bytes
    hierarchy: KeyHierarchy


ChallengeOutcome = Union[MacFailure, SyncFailure, Success]


@dataclass
class UeSession:
    """UE-side view of one run. ``sk_ue`` is wiped once a challenge is processed."""

    k: bytes
    sqn_ue: int
    sk_ue: bytearray
    supi: bytes

    def wipe(self) -> None:
        self.sk_ue[:] = bytes(len(self.sk_ue))


def compute_hpk(ss: bytes) -> bytes:
    return kdf_x963(ss, b"", HPK_BITS)


def hxres_star(rand: bytes, res_star: bytes) -> bytes:
    return left(128, sha3_256(rand + res_star))


def derive_hierarchy(
    k: bytes, rand: bytes, hpk: bytes, sqn: bytes, amf: bytes, id_sn: bytes
) -> KeyHierarchy:
    if len(rand) != RAND_LEN or len(hpk) != RAND_LEN:
        raise ValueError(f"rand and hpk must both be {RAND_LEN} bytes")
    if len(sqn) != SQN_LEN or len(amf) != AMF_LEN:
        raise ValueError("sqn must be 6 bytes and amf 2 bytes")
    masked = xor_bytes(rand, hpk)
    mac = f(FTag.F1, k, sqn + amf + masked)
    ak = f(FTag.F5, k, masked)
    ck = f(FTag.F3, k, masked)
    ik = f(FTag.F4, k, masked)
    xres = f(FTag.F2, k, masked)
    xres_star = kdf_hmac(ck + ik, id_sn + rand + xres)
    k_ausf = kdf_hmac(ck + ik, id_sn + xor_bytes(ak, sqn) + hpk)
    k_seaf = kdf_hmac(k_ausf, id_sn)
    return KeyHierarchy(hpk, mac, ak, ck, ik, xres, xres_star, k_ausf, k_seaf)


def generate_av(
    sub: SubscriberRecord,
    suci_c0: bytes,
    pk1_ue: bytes,
    id_sn: bytes,
    provider: PrimitiveProvider | None = None,
    rng: xwing.RandBytes | None = None,
) -> tuple[HeAv, SeAv, SubscriberRecord]:
    if len(suci_c0) != xwing.CT_LEN or len(pk1_ue) != MLKEM_EK_LEN:
        raise ValueError("C0 must be 1120 bytes and pk1_UE 1184 bytes")
    if sub.sqn_hn >= SQN_MAX:
        raise SqnOverflow(f"subscriber {sub.supi.hex()} exhausted its SQN space")
    provider = provider or get_provider()
    pk_ue = pk1_ue + suci_c0[1088:1120]
    ss_hn, rand = xwing.encapsulate(pk_ue, None, provider, rng)
    hpk = compute_hpk(ss_hn)
    sqn = sqn_bytes(sub.sqn_hn)
    h = derive_hierarchy(sub.k, rand, hpk, sqn, sub.amf, id_sn)
    autn = Autn(xor_bytes(h.ak, sqn), sub.amf, h.mac)
    he = HeAv(rand, autn, h.res_star, h.k_ausf, hpk, sub.sqn_hn, h.k_seaf)
    return he, he.se_av(), replace(sub, sqn_hn=sub.sqn_hn + 1)


def sqn_window_check(sqn_ue: int, sqn_hn: int, delta: int = DEFAULT_DELTA) -> bool:
    return sqn_ue < sqn_hn < sqn_ue + delta


def _auts(k: bytes, sqn_ue: int, amf: bytes, masked: bytes) -> Auts:
    sqn = sqn_bytes(sqn_ue)
    ak_star = f(FTag.F5S, k, masked)
    mac_star = f(FTag.F1S, k, sqn + amf + masked)
    return Auts(xor_bytes(ak_star, sqn), amf, mac_star)


def ue_process_challenge(
    state: UeSession,
    rand: bytes,
    autn: Autn,
    id_sn: bytes,
    delta: int = DEFAULT_DELTA,
    provider: PrimitiveProvider | None = None,
) -> tuple[ChallengeOutcome, int]:
    """Run the USIM/ME side of the challenge. Returns ``(outcome, sqn_ue)``."""
    provider = provider or get_provider()
    try:
        ss_hn = xwing.decapsulate(rand, bytes(state.sk_ue), provider)
        hpk = compute_hpk(ss_hn)
        masked = xor_bytes(rand, hpk)
        ak = f(FTag.F5, state.k, masked)
        sqn_hn_b = xor_bytes(ak, autn.conc)
        if not ct_equal(f(FTag.F1, state.k, sqn_hn_b + autn.amf + masked), autn.mac):
            return MacFailure(), state.sqn_ue
        sqn_hn = int.from_bytes(sqn_hn_b, "big")
        if not sqn_window_check(state.sqn_ue, sqn_hn, delta):
            return SyncFailure(_auts(state.k, state.sqn_ue, autn.amf, masked)), state.sqn_ue
        h = derive_hierarchy(state.k, rand, hpk, sqn_hn_b, autn.amf, id_sn)
        return Success(h.res_star, h.k_seaf, h), sqn_hn
    finally:
        state.wipe()


def hn_resync(sub: SubscriberRecord, auts: Auts, rand: bytes, hpk: bytes) -> SubscriberRecord:
    masked = xor_bytes(rand, hpk)
    sqn_ue_b = xor_bytes(auts.conc_star, f(FTag.F5S, sub.k, masked))
    expected = f(FTag.F1S, sub.k, sqn_ue_b + auts.amf + masked)
    if not ct_equal(expected, auts.mac_star):
        raise ResyncRejected("MAC* mismatch")
    sqn_ue = int.from_bytes(sqn_ue_b, "big")
    if sqn_ue + 1 > SQN_MAX:
        raise SqnOverflow("resynchronised SQN leaves the 48-bit range")
    return replace(sub, sqn_hn=sqn_ue + 1)


def sn_verify_response(rand: bytes, res_star: bytes, stored_hxres_star: bytes) -> bool:
    return ct_equal(hxres_star(rand, res_star), stored_hxres_star)


def hn_verify_response(xres_star: bytes, res_star: bytes) -> bool:
    return ct_equal(xres_star, res_star)


def key_confirmation_tag(k_seaf: bytes, nonce: bytes, role: bytes) -> bytes:
    """MAC over a nonce under K_SEAF; ``role`` separates the two directions."""
    return hmac_sha256(k_seaf, b"HPQC-KC" + role + nonce)


def verify_key_confirmation(k_seaf: bytes, nonce: bytes, role: bytes, tag: bytes) -> bool:
    return ct_equal(key_confirmation_tag(k_seaf, nonce, role), tag)
