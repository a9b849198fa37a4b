"""Byte-exact message encoding.

    offset  size  field
    0       4     magic "HPQC"
    4       1     version 0x01
    5       1     message tag
    6       16    session id
    22      ...   fields, each TLV: tag (1) | length (2, big-endian) | value

Fields appear in a fixed order per message kind and every length is
checked against the field's allowed range; trailing bytes are rejected.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from typing import ClassVar

from .aka import AUTN_LEN, AUTS_LEN, HXRES_LEN, RAND_LEN, RES_STAR_LEN, Autn, Auts
from .identity import C0_LEN, C2_LEN, SUPI_MAX, SUPI_MIN, Suci
from .providers import MLKEM_EK_LEN

MAGIC = b"HPQC"
VERSION = 0x01
SESSION_ID_LEN = 16
HEADER_LEN = len(MAGIC) + 1 + 1 + SESSION_ID_LEN
TLV_OVERHEAD = 3
MAX_FIELD = 0xFFFF
ID_SN_MAX = 255
K_SEAF_LEN = 32

# TLV field tags
T_C0, T_C1, T_C2 = 0x01, 0x02, 0x03
T_ID_SN = 0x04
T_RAND = 0x05
T_AUTN = 0x06
T_HXRES = 0x07
T_RES_STAR = 0x08
T_AUTS = 0x09
T_SUPI = 0x0A
T_K_SEAF = 0x0B


class WireError(Exception):
    pass


class EncodeError(WireError):
    pass


class DecodeError(WireError):
    pass


class Truncated(DecodeError):
    pass


class BadMagic(DecodeError):
    pass


class BadTag(DecodeError):
    pass


class BadLength(DecodeError):
    pass


# (tag, min_len, max_len) per TLV slot
_SUCI_SLOTS = (
    (T_C0, C0_LEN, C0_LEN),
    (T_C1, MLKEM_EK_LEN + SUPI_MIN, MLKEM_EK_LEN + SUPI_MAX),
    (T_C2, C2_LEN, C2_LEN),
)
_SLOTS = {
    "suci": _SUCI_SLOTS,
    "id_sn": ((T_ID_SN, 1, ID_SN_MAX),),
    "rand": ((T_RAND, RAND_LEN, RAND_LEN),),
    "autn": ((T_AUTN, AUTN_LEN, AUTN_LEN),),
    "hxres_star": ((T_HXRES, HXRES_LEN, HXRES_LEN),),
    "res_star": ((T_RES_STAR, RES_STAR_LEN, RES_STAR_LEN),),
    "auts": ((T_AUTS, AUTS_LEN, AUTS_LEN),),
    "supi": ((T_SUPI, SUPI_MIN, SUPI_MAX),),
    "k_seaf": ((T_K_SEAF, K_SEAF_LEN, K_SEAF_LEN),),
}


def _to_values(name: str, value) -> list[bytes]:
    if name == "suci":
        return [value.c0, value.c1, value.c2]
    if name in ("autn", "auts"):
        return [value.to_bytes()]
    return [bytes(value)]


def _from_values(name: str, values: list[bytes]):
    if name == "suci":
        return Suci(*values)
    if name == "autn":
        return Autn.from_bytes(values[0])
    if name == "auts":
        return Auts.from_bytes(values[0])
    return values[0]


@dataclass(frozen=True)
class Message:
    session_id: bytes
    TAG: ClassVar[int] = 0

    def field_names(self) -> list[str]:
        return [f.name for f in fields(self) if f.name != "session_id"]

    def summary(self) -> str:
        parts = []
        for name in self.field_names():
            v = getattr(self, name)
            size = sum(len(b) for b in _to_values(name, v))
            parts.append(f"{name}[{size}]")
        return f"{type(self).__name__} sid={self.session_id.hex()[:8]} " + " ".join(parts)


@dataclass(frozen=True)
class Registration(Message):
    suci: Suci
    TAG: ClassVar[int] = 0x01


@dataclass(frozen=True)
class AuthRequest(Message):
    suci: Suci
    id_sn: bytes
    TAG: ClassVar[int] = 0x02


@dataclass(frozen=True)
class SeAvMsg(Message):
    rand: bytes
    autn: Autn
    hxres_star: bytes
    TAG: ClassVar[int] = 0x03


@dataclass(frozen=True)
class Challenge(Message):
    rand: bytes
    autn: Autn
    TAG: ClassVar[int] = 0x04


@dataclass(frozen=True)
class Response(Message):
    res_star: bytes
    TAG: ClassVar[int] = 0x05


@dataclass(frozen=True)
class ResponseFwd(Message):
    res_star: bytes
    TAG: ClassVar[int] = 0x06


@dataclass(frozen=True)
class MacFailureMsg(Message):
    TAG: ClassVar[int] = 0x07


@dataclass(frozen=True)
class SyncFailureMsg(Message):
    auts: Auts
    rand: bytes
    suci: Suci
    TAG: ClassVar[int] = 0x08


@dataclass(frozen=True)
class KeyRelease(Message):
    supi: bytes
    k_seaf: bytes
    TAG: ClassVar[int] = 0x09


MESSAGE_TYPES: dict[int, type[Message]] = {
    cls.TAG: cls
    for cls in (Registration, AuthRequest, SeAvMsg, Challenge, Response, ResponseFwd,
                MacFailureMsg, SyncFailureMsg, KeyRelease)
}


def encode(msg: Message) -> bytes:
    if len(msg.session_id) != SESSION_ID_LEN:
        raise EncodeError(f"session id must be {SESSION_ID_LEN} bytes")
    out = [MAGIC, bytes([VERSION, msg.TAG]), msg.session_id]
    for name in msg.field_names():
        values = _to_values(name, getattr(msg, name))
        for (tag, lo, hi), value in zip(_SLOTS[name], values):
            if len(value) > MAX_FIELD:
                raise EncodeError(f"{name} field of {len(value)} bytes exceeds {MAX_FIELD}")
            if not lo <= len(value) <= hi:
                raise EncodeError(f"{name} field length {len(value)} outside [{lo}, {hi}]")
            out.append(struct.pack(">BH", tag, len(value)))
            out.append(value)
    return b"".join(out)


def decode(data: bytes) -> Message:
    data = bytes(data)
    if len(data) < HEADER_LEN:
        raise Truncated(f"need {HEADER_LEN} header bytes, got {len(data)}")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4].hex()}")
    if data[4] != VERSION:
        raise BadMagic(f"unsupported version {data[4]}")
    cls = MESSAGE_TYPES.get(data[5])
    if cls is None:
        raise BadTag(f"unknown message tag 0x{data[5]:02x}")
    session_id = data[6:HEADER_LEN]
    pos = HEADER_LEN
    kwargs = {}
    for f in fields(cls):
        if f.name == "session_id":
            continue
        values = []
        for tag, lo, hi in _SLOTS[f.name]:
            if pos + TLV_OVERHEAD > len(data):
                raise Truncated(f"field {f.name}: TLV header cut short at offset {pos}")
            got_tag, length = struct.unpack_from(">BH", data, pos)
            if got_tag != tag:
                raise BadTag(f"expected field tag 0x{tag:02x}, got 0x{got_tag:02x} at offset {pos}")
            if not lo <= length <= hi:
                raise BadLength(f"field {f.name} length {length} outside [{lo}, {hi}]")
            pos += TLV_OVERHEAD
            if pos + length > len(data):
                raise Truncated(f"field {f.name}: need {length} bytes, {len(data) - pos} left")
            values.append(data[pos:pos + length])
            pos += length
        kwargs[f.name] = _from_values(f.name, values)
    if pos != len(data):
        raise BadLength(f"{len(data) - pos} trailing bytes after {cls.__name__}")
    return cls(session_id=session_id, **kwargs)


def payload_size(msg: Message) -> int:
    """Bytes of field values, excluding header and TLV framing."""
    return sum(len(v) for name in msg.field_names() for v in _to_values(name, getattr(msg, name)))
