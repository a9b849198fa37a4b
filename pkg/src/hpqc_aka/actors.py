"""UE, SN and HN as pure state machines.

Each ``*_step`` takes the actor's current state plus one input and returns
a :class:`Step` with the next state, outgoing ``(destination, Message)``
pairs and audit events. States are frozen dataclasses; nothing is
mutated in place except the UE's ``sk_ue`` buffer, which is wiped once a
challenge has been processed.

Audit event kinds named after the correspondence properties they feed:

    beginUE_HN_SUPI / endUE_HN_SUPI      (supi, C0, pk_HN)
    beginHN_UE_MAC  / endUE_HN_MAC       (supi, k, rand, sqn)
    beginUE_RES -> middleSN_RES -> middleHN_RES -> endSN_ANCHOR_KEY
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

from . import aka, identity, wire
from .providers import PrimitiveProvider

UE, SN, HN = "UE", "SN", "HN"

BEGIN_UE_HN_SUPI = "beginUE_HN_SUPI"
END_UE_HN_SUPI = "endUE_HN_SUPI"
BEGIN_HN_UE_MAC = "beginHN_UE_MAC"
END_UE_HN_MAC = "endUE_HN_MAC"
BEGIN_UE_RES = "beginUE_RES"
MIDDLE_SN_RES = "middleSN_RES"
MIDDLE_HN_RES = "middleHN_RES"
END_SN_ANCHOR_KEY = "endSN_ANCHOR_KEY"

PROTOCOL_VIOLATION = "protocol_violation"
FOREIGN_SESSION = "foreign_session"
UE_MAC_FAILURE = "ue_mac_failure"
UE_SYNC_FAILURE = "ue_sync_failure"
SN_HRES_MISMATCH = "sn_hres_mismatch"
SN_CLOSED = "sn_closed"
HN_DECONCEAL_FAILED = "hn_deconceal_failed"
HN_UNKNOWN_SUBSCRIBER = "hn_unknown_subscriber"
HN_SQN_OVERFLOW = "hn_sqn_overflow"
HN_RES_MISMATCH = "hn_res_mismatch"
HN_RESYNC_OK = "hn_resync_ok"
HN_RESYNC_REJECTED = "hn_resync_rejected"
HN_MAC_FAILURE = "hn_mac_failure"
EXPIRED = "expired"

DEFAULT_AV_TIMEOUT = 60.0


def payload_digest(*parts: bytes) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(len(p).to_bytes(4, "big"))
        h.update(p)
    return h.hexdigest()[:32]


@dataclass(frozen=True)
class AuditEvent:
    actor: str
    session_id: bytes
    kind: str
    digest: str = ""

    def to_record(self) -> str:
        return f"{self.session_id.hex()}\t{self.actor}\t{self.kind}\t{self.digest or '-'}"


@dataclass(frozen=True)
class Start:
    session_id: bytes


@dataclass(frozen=True)
class Step:
    state: object
    out: tuple = ()
    events: tuple = ()


def _mac_digest(supi: bytes, k: bytes, rand: bytes, sqn: int) -> str:
    return payload_digest(supi, k, rand, aka.sqn_bytes(sqn))


# ---------------------------------------------------------------- UE


class Phase(Enum):
    IDLE = "Idle"
    AWAITING_CHALLENGE = "AwaitingChallenge"
    DONE = "Done"
    FAILED = "Failed"


@dataclass(frozen=True)
class UeState:
    supi: bytes
    k: bytes
    sqn_ue: int
    pk_hn: bytes
    id_sn: bytes
    delta: int = aka.DEFAULT_DELTA
    phase: Phase = Phase.IDLE
    session_id: bytes | None = None
    suci: identity.Suci | None = None
    sk_ue: bytearray | None = field(default=None, repr=False)
    k_seaf: bytes | None = field(default=None, repr=False)


def _ue_fail(state: UeState, sid: bytes, kind: str) -> Step:
    if state.sk_ue is not None:
        state.sk_ue[:] = bytes(len(state.sk_ue))
    return Step(replace(state, phase=Phase.FAILED, sk_ue=None, k_seaf=None), (),
                (AuditEvent(UE, sid, kind),))


def ue_step(state: UeState, inp, *, provider: PrimitiveProvider, rng=None) -> Step:
    if isinstance(inp, Start):
        if state.phase is Phase.AWAITING_CHALLENGE:
            return _ue_fail(state, inp.session_id, PROTOCOL_VIOLATION)
        res = identity.conceal_supi(state.supi, state.pk_hn, provider, rng)
        new = replace(state, phase=Phase.AWAITING_CHALLENGE, session_id=inp.session_id,
                      suci=res.suci, sk_ue=bytearray(res.sk_ue), k_seaf=None)
        ev = AuditEvent(UE, inp.session_id, BEGIN_UE_HN_SUPI,
                        payload_digest(state.supi, res.suci.c0, state.pk_hn))
        return Step(new, ((SN, wire.Registration(inp.session_id, res.suci)),), (ev,))

    sid = inp.session_id
    if sid != state.session_id:
        return Step(state, (), (AuditEvent(UE, sid, FOREIGN_SESSION),))
    if state.phase is Phase.DONE:
        # a completed run keeps its anchor key; late or replayed input is only logged
        return Step(state, (), (AuditEvent(UE, sid, PROTOCOL_VIOLATION),))
    if not isinstance(inp, wire.Challenge) or state.phase is not Phase.AWAITING_CHALLENGE:
        return _ue_fail(state, sid, PROTOCOL_VIOLATION)

    session = aka.UeSession(state.k, state.sqn_ue, state.sk_ue, state.supi)
    outcome, sqn = aka.ue_process_challenge(session, inp.rand, inp.autn, state.id_sn,
                                            state.delta, provider)
    if isinstance(outcome, aka.MacFailure):
        step = _ue_fail(state, sid, UE_MAC_FAILURE)
        return replace(step, out=((SN, wire.MacFailureMsg(sid)),))
    if isinstance(outcome, aka.SyncFailure):
        step = _ue_fail(state, sid, UE_SYNC_FAILURE)
        msg = wire.SyncFailureMsg(sid, outcome.auts, inp.rand, state.suci)
        return replace(step, out=((SN, msg),))
    d = _mac_digest(state.supi, state.k, inp.rand, sqn)
    new = replace(state, phase=Phase.DONE, sqn_ue=sqn, sk_ue=None, k_seaf=outcome.k_seaf)
    events = (AuditEvent(UE, sid, END_UE_HN_MAC, d), AuditEvent(UE, sid, BEGIN_UE_RES, d))
    return Step(new, ((SN, wire.Response(sid, outcome.res_star)),), events)


# ---------------------------------------------------------------- SN


@dataclass(frozen=True)
class SnSession:
    stage: str  # awaiting_av | challenged | awaiting_key
    suci: identity.Suci
    deadline: float
    rand: bytes | None = None
    hxres_star: bytes | None = None


@dataclass(frozen=True)
class SnState:
    id_sn: bytes
    av_timeout: float = DEFAULT_AV_TIMEOUT
    pending: Mapping[bytes, SnSession] = field(default_factory=dict)
    completed: Mapping[bytes, tuple[bytes, bytes]] = field(default_factory=dict, repr=False)


def _sn_with(state: SnState, sid: bytes, sess: SnSession | None) -> SnState:
    pending = dict(state.pending)
    if sess is None:
        pending.pop(sid, None)
    else:
        pending[sid] = sess
    return replace(state, pending=pending)


def sn_step(state: SnState, msg: wire.Message, *, now: float = 0.0) -> Step:
    sid = msg.session_id
    sess = state.pending.get(sid)

    def violation():
        return Step(state, (), (AuditEvent(SN, sid, PROTOCOL_VIOLATION),))

    if isinstance(msg, wire.Registration):
        if sess is not None or sid in state.completed:
            return violation()
        new = _sn_with(state, sid, SnSession("awaiting_av", msg.suci, now + state.av_timeout))
        return Step(new, ((HN, wire.AuthRequest(sid, msg.suci, state.id_sn)),))

    if isinstance(msg, wire.SeAvMsg):
        if sess is None or sess.stage != "awaiting_av":
            return violation()
        new = _sn_with(state, sid, replace(sess, stage="challenged", rand=msg.rand,
                                           hxres_star=msg.hxres_star))
        return Step(new, ((UE, wire.Challenge(sid, msg.rand, msg.autn)),))

    if isinstance(msg, wire.Response):
        if sess is None or sess.stage != "challenged":
            return violation()
        if not aka.sn_verify_response(sess.rand, msg.res_star, sess.hxres_star):
            return Step(_sn_with(state, sid, None), (), (AuditEvent(SN, sid, SN_HRES_MISMATCH),))
        ev = AuditEvent(SN, sid, MIDDLE_SN_RES, payload_digest(msg.res_star, sess.rand))
        new = _sn_with(state, sid, replace(sess, stage="awaiting_key"))
        return Step(new, ((HN, wire.ResponseFwd(sid, msg.res_star)),), (ev,))

    if isinstance(msg, (wire.MacFailureMsg, wire.SyncFailureMsg)):
        if sess is None or sess.stage != "challenged":
            return violation()
        return Step(_sn_with(state, sid, None), ((HN, msg),), (AuditEvent(SN, sid, SN_CLOSED),))

    if isinstance(msg, wire.KeyRelease):
        if sess is None or sess.stage != "awaiting_key":
            return violation()
        new = _sn_with(state, sid, None)
        new = replace(new, completed={**state.completed, sid: (msg.supi, msg.k_seaf)})
        ev = AuditEvent(SN, sid, END_SN_ANCHOR_KEY, payload_digest(msg.supi, msg.k_seaf))
        return Step(new, (), (ev,))

    return violation()


def sn_expire(state: SnState, now: float) -> Step:
    stale = [sid for sid, s in state.pending.items() if s.deadline < now]
    if not stale:
        return Step(state)
    pending = {sid: s for sid, s in state.pending.items() if sid not in stale}
    return Step(replace(state, pending=pending), (),
                tuple(AuditEvent(SN, sid, EXPIRED) for sid in stale))


# ---------------------------------------------------------------- HN


@dataclass(frozen=True)
class Outstanding:
    supi: bytes
    id_sn: bytes
    av: aka.HeAv
    deadline: float


@dataclass(frozen=True)
class HnState:
    sk_hn: bytes = field(repr=False)
    pk_hn: bytes = field(repr=False)
    subscribers: Mapping[bytes, aka.SubscriberRecord] = field(default_factory=dict)
    outstanding: Mapping[bytes, Outstanding] = field(default_factory=dict, repr=False)
    av_timeout: float = DEFAULT_AV_TIMEOUT


def _hn_close(state: HnState, sid: bytes, **changes) -> HnState:
    outstanding = {s: o for s, o in state.outstanding.items() if s != sid}
    return replace(state, outstanding=outstanding, **changes)


def hn_step(state: HnState, msg: wire.Message, *, provider: PrimitiveProvider, rng=None,
            now: float = 0.0) -> Step:
    sid = msg.session_id
    pend = state.outstanding.get(sid)

    def event(kind, digest=""):
        return AuditEvent(HN, sid, kind, digest)

    if isinstance(msg, wire.AuthRequest):
        if pend is not None:
            return Step(state, (), (event(PROTOCOL_VIOLATION),))
        try:
            supi, pk1_ue = identity.deconceal_suci(msg.suci, state.sk_hn, provider)
        except identity.DeconcealError:
            return Step(state, (), (event(HN_DECONCEAL_FAILED),))
        sub = state.subscribers.get(supi)
        if sub is None:
            return Step(state, (), (event(HN_UNKNOWN_SUBSCRIBER),))
        end_supi = event(END_UE_HN_SUPI, payload_digest(supi, msg.suci.c0, state.pk_hn))
        try:
            he, se, sub2 = aka.generate_av(sub, msg.suci.c0, pk1_ue, msg.id_sn, provider, rng)
        except aka.SqnOverflow:
            return Step(state, (), (end_supi, event(HN_SQN_OVERFLOW)))
        begin_mac = event(BEGIN_HN_UE_MAC, _mac_digest(supi, sub.k, he.rand, he.sqn))
        new = replace(state, subscribers={**state.subscribers, supi: sub2},
                      outstanding={**state.outstanding,
                                   sid: Outstanding(supi, msg.id_sn, he, now + state.av_timeout)})
        out = wire.SeAvMsg(sid, se.rand, se.autn, se.hxres_star)
        return Step(new, ((SN, out),), (end_supi, begin_mac))

    if pend is None:
        return Step(state, (), (event(PROTOCOL_VIOLATION),))
    sub = state.subscribers[pend.supi]

    if isinstance(msg, wire.ResponseFwd):
        if not aka.hn_verify_response(pend.av.xres_star, msg.res_star):
            return Step(_hn_close(state, sid), (), (event(HN_RES_MISMATCH),))
        ev = event(MIDDLE_HN_RES, _mac_digest(pend.supi, sub.k, pend.av.rand, pend.av.sqn))
        out = wire.KeyRelease(sid, pend.supi, pend.av.k_seaf)
        return Step(_hn_close(state, sid), ((SN, out),), (ev,))

    if isinstance(msg, wire.SyncFailureMsg):
        # keyed on the stored AV; the echoed SUCI is accepted but not re-deconcealed
        if msg.rand != pend.av.rand:
            return Step(_hn_close(state, sid), (), (event(HN_RESYNC_REJECTED),))
        try:
            sub2 = aka.hn_resync(sub, msg.auts, pend.av.rand, pend.av.hpk)
        except (aka.ResyncRejected, aka.SqnOverflow):
            return Step(_hn_close(state, sid), (), (event(HN_RESYNC_REJECTED),))
        new = _hn_close(state, sid, subscribers={**state.subscribers, pend.supi: sub2})
        return Step(new, (), (event(HN_RESYNC_OK, payload_digest(aka.sqn_bytes(sub2.sqn_hn))),))

    if isinstance(msg, wire.MacFailureMsg):
        return Step(_hn_close(state, sid), (), (event(HN_MAC_FAILURE),))

    return Step(state, (), (event(PROTOCOL_VIOLATION),))


def hn_expire(state: HnState, now: float) -> Step:
    stale = [sid for sid, o in state.outstanding.items() if o.deadline < now]
    if not stale:
        return Step(state)
    outstanding = {s: o for s, o in state.outstanding.items() if s not in stale}
    return Step(replace(state, outstanding=outstanding), (),
                tuple(AuditEvent(HN, sid, EXPIRED) for sid in stale))
