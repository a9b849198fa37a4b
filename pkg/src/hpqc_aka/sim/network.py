"""In-memory transport for UE, SN and HN with a scripted network adversary.

Two channels: ``usch`` (UE <-> SN, always adversary-visible) and ``sch``
(SN <-> HN, private unless ``Topology.sch_public``). Sessions run one
after another; inside a session deliveries are FIFO. Every random byte
comes from a ``random.Random(seed)`` so a (topology, script, seed) triple
replays to identical transcripts.

Honest sends are numbered 0, 1, 2, ... and adversary actions refer to
those numbers. One uninterrupted session produces seven honest sends:

    0 usch UE->SN Registration     4 usch UE->SN Response
    1 sch  SN->HN AuthRequest      5 sch  SN->HN ResponseFwd
    2 sch  HN->SN SeAvMsg          6 sch  HN->SN KeyRelease
    3 usch SN->UE Challenge
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Union

from .. import aka, actors, wire, xwing
from ..actors import HN, SN, UE
from ..providers import PrimitiveProvider, get_provider

USCH, SCH = "usch", "sch"
ADVERSARY = "ADV"
MESSAGES_PER_SESSION = 7
DEFAULT_ID_SN = b"5G:mnc093.mcc208.3gppnetwork.org"
LEAKABLE = frozenset({"sk_hn", "k", "sk_ue"})


class ScriptError(ValueError):
    """Adversary script is malformed or acts on a channel it cannot reach."""


# ------------------------------------------------------------ adversary script


@dataclass(frozen=True)
class Observe:
    pass


@dataclass(frozen=True)
class Drop:
    index: int


@dataclass(frozen=True)
class Replay:
    """Re-deliver honest send ``index`` to ``target``.

    ``session_id`` rewrites the (unauthenticated) session-id header;
    ``"fresh"`` draws a new one from the run's generator.
    """

    index: int
    target: str
    session_id: Union[bytes, str, None] = None


@dataclass(frozen=True)
class Inject:
    """Deliver ``message`` to ``target`` right after honest send ``after``
    (or once every session has finished when ``after`` is None)."""

    message: Union[wire.Message, bytes]
    target: str
    after: int | None = None


@dataclass(frozen=True)
class Modify:
    """XOR ``mask`` into honest send ``index`` starting at byte ``offset``."""

    index: int
    offset: int
    mask: bytes


@dataclass(frozen=True)
class LeakAtPhase:
    keys: frozenset

    def __post_init__(self):
        object.__setattr__(self, "keys", frozenset(self.keys))


Action = Union[Observe, Drop, Replay, Inject, Modify, LeakAtPhase]


@dataclass(frozen=True)
class AdversaryScript:
    actions: tuple = ()

    def validate(self, topology: Topology) -> None:
        bound = MESSAGES_PER_SESSION * topology.sessions
        for a in self.actions:
            idx = getattr(a, "index", None)
            if isinstance(a, Inject):
                idx = a.after
            if idx is not None and not 0 <= idx < bound:
                raise ScriptError(f"{a!r} references message {idx}; an honest run has {bound}")
            target = getattr(a, "target", None)
            if target is not None and target not in (UE, SN, HN):
                raise ScriptError(f"unknown target {target!r}")
            if target == HN and not topology.sch_public:
                raise ScriptError(f"{a!r} writes to the private SN-HN channel")
            if isinstance(a, LeakAtPhase) and not a.keys <= LEAKABLE:
                raise ScriptError(f"cannot leak {sorted(a.keys - LEAKABLE)}")
            if isinstance(a, Modify) and not a.mask:
                raise ScriptError("Modify needs a non-empty mask")


# ------------------------------------------------------------ topology / results


@dataclass(frozen=True)
class Topology:
    sessions: int = 1
    subscribers: int = 1
    supi_len: int = 16
    supis: tuple | None = None
    id_sn: bytes = DEFAULT_ID_SN
    delta: int = aka.DEFAULT_DELTA
    amf: bytes = aka.DEFAULT_AMF
    sch_public: bool = False
    av_timeout: float = actors.DEFAULT_AV_TIMEOUT
    backend: str = "auto"
    ue_sqn: int = 0
    hn_sqn: int = 1
    key_confirmation: bool = False


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    index: int | None
    channel: str
    sender: str
    receiver: str
    data: bytes
    summary: str
    fate: str = "delivered"  # delivered | dropped | intercepted | modified | replayed | injected | leak
    label: str = "wire"  # term kind for leak entries

    def to_record(self) -> str:
        idx = "-" if self.index is None else str(self.index)
        return (f"{self.seq}\t{idx}\t{self.sender}->{self.receiver}\t{self.channel}\t"
                f"{self.fate}\t{self.data.hex()}\t{self.summary}")


@dataclass
class SessionTruth:
    session_id: bytes
    supi: bytes
    sk_ue: bytes


class RecordingProvider:
    """Wraps a provider and remembers every ML-KEM and X25519 secret.

    The tables back the break-oracle deduction rules; nothing here is
    visible to the adversary unless a scenario grants that oracle.
    """

    def __init__(self, inner: PrimitiveProvider):
        self.inner = inner
        self.name = inner.name
        self.x25519_base_point = inner.x25519_base_point
        self.mlkem_table: dict[bytes, bytes] = {}
        self.x25519_table: dict[frozenset, bytes] = {}

    def mlkem_keygen_internal(self, d, z):
        return self.inner.mlkem_keygen_internal(d, z)

    def mlkem_encaps(self, ek, m=None):
        ss1, c1 = self.inner.mlkem_encaps(ek, m)
        self.mlkem_table[c1] = ss1
        return ss1, c1

    def mlkem_decaps(self, c1, dk):
        return self.inner.mlkem_decaps(c1, dk)

    def x25519_dh(self, scalar, point):
        out = self.inner.x25519_dh(scalar, point)
        if point != self.x25519_base_point:
            pub = self.inner.x25519_dh(scalar, self.x25519_base_point)
            self.x25519_table[frozenset((pub, point))] = out
        return out


@dataclass
class SessionRun:
    topology: Topology
    seed: int
    transcript: list
    events: list  # (seq, AuditEvent)
    ue_states: list
    sn_state: actors.SnState
    hn_state: actors.HnState
    pk_hn: bytes
    sk_hn: bytes
    keys: dict  # supi -> k
    sessions: list  # SessionTruth
    recorder: RecordingProvider
    ue_keys: dict = field(default_factory=dict)  # session id -> UE-side k_seaf
    hn_keys: dict = field(default_factory=dict)  # session id -> released k_seaf

    def visible_entries(self) -> list:
        return [e for e in self.transcript
                if e.channel == USCH or (e.channel == SCH and self.topology.sch_public)]

    def audit_events(self) -> list:
        return [ev for _, ev in self.events]

    def k_seaf_views(self, session_id: bytes) -> dict:
        views = {}
        if session_id in self.ue_keys:
            views[UE] = self.ue_keys[session_id]
        if session_id in self.sn_state.completed:
            views[SN] = self.sn_state.completed[session_id][1]
        if session_id in self.hn_keys:
            views[HN] = self.hn_keys[session_id]
        return views

    def completed_sessions(self) -> list:
        return [s.session_id for s in self.sessions]


# ------------------------------------------------------------ driver


class _Runner:
    def __init__(self, topology: Topology, script: AdversaryScript, seed: int):
        self.t = topology
        self.script = script
        self.rng = random.Random(seed)
        self.randbytes = self.rng.randbytes
        self.provider = RecordingProvider(get_provider(topology.backend))
        self.now = 0.0
        self.seq = 0
        self.honest = 0
        self.transcript: list[TranscriptEntry] = []
        self.events: list = []
        self.queue: deque = deque()
        self.owner: dict[bytes, int] = {}
        self.ue_keys: dict[bytes, bytes] = {}
        self.hn_keys: dict[bytes, bytes] = {}
        self.sessions: list[SessionTruth] = []
        self.drops = {a.index for a in script.actions if isinstance(a, Drop)}
        self.modifies = {}
        for a in script.actions:
            if isinstance(a, Modify):
                self.modifies.setdefault(a.index, []).append(a)
        self.replays = {}
        for a in script.actions:
            if isinstance(a, Replay):
                self.replays.setdefault(a.index, []).append(a)
        self.injects = {}
        for a in script.actions:
            if isinstance(a, Inject):
                self.injects.setdefault(a.after, []).append(a)

    def provision(self):
        t = self.t
        hn_pair = xwing.keygen(self.provider, self.randbytes)
        self.sk_hn, self.pk_hn = hn_pair.sk, hn_pair.pk
        supis = list(t.supis) if t.supis else [self.randbytes(t.supi_len) for _ in range(t.subscribers)]
        subs, self.ues, self.keys = {}, [], {}
        for supi in supis:
            k = self.randbytes(32)
            self.keys[supi] = k
            subs[supi] = aka.SubscriberRecord(supi, k, t.hn_sqn, t.amf)
            self.ues.append(actors.UeState(supi, k, t.ue_sqn, self.pk_hn, t.id_sn, t.delta))
        self.sn = actors.SnState(t.id_sn, t.av_timeout)
        self.hn = actors.HnState(self.sk_hn, self.pk_hn, subs, av_timeout=t.av_timeout)

    # -- recording

    def _entry(self, **kw) -> TranscriptEntry:
        e = TranscriptEntry(seq=self.seq, **kw)
        self.seq += 1
        self.transcript.append(e)
        return e

    def _events(self, events: Iterable):
        for ev in events:
            self.events.append((self.seq, ev))
            self.seq += 1

    @staticmethod
    def _channel(a: str, b: str) -> str:
        return USCH if UE in (a, b) else SCH

    def _check_reach(self, channel: str, action):
        if channel == SCH and not self.t.sch_public:
            raise ScriptError(f"{action!r} touches the private SN-HN channel")

    # -- sending

    def send(self, sender: str, receiver: str, msg: wire.Message):
        data = wire.encode(msg)
        idx = self.honest
        self.honest += 1
        channel = self._channel(sender, receiver)
        if idx in self.drops:
            self._check_reach(channel, Drop(idx))
            self._entry(index=idx, channel=channel, sender=sender, receiver=receiver,
                        data=data, summary=msg.summary(), fate="dropped")
        elif idx in self.modifies:
            self._entry(index=idx, channel=channel, sender=sender, receiver=receiver,
                        data=data, summary=msg.summary(), fate="intercepted")
            edited = bytearray(data)
            for m in self.modifies[idx]:
                self._check_reach(channel, m)
                for i, b in enumerate(m.mask):
                    if m.offset + i < len(edited):
                        edited[m.offset + i] ^= b
            self._adv_send(receiver, bytes(edited), "modified", channel)
        else:
            self._entry(index=idx, channel=channel, sender=sender, receiver=receiver,
                        data=data, summary=msg.summary())
            self.queue.append((sender, receiver, data))
        for r in self.replays.get(idx, ()):
            rchan = SCH if r.target == HN else USCH
            self._check_reach(channel, r)
            self._check_reach(rchan, r)
            rdata = data
            if r.session_id is not None:
                sid = self.randbytes(16) if r.session_id == "fresh" else r.session_id
                rdata = data[:6] + sid + data[22:]
            self._adv_send(r.target, rdata, "replayed", rchan)
        for inj in self.injects.get(idx, ()):
            self._inject(inj)

    def _adv_send(self, receiver: str, data: bytes, fate: str, channel: str | None = None):
        channel = channel or (SCH if receiver == HN else USCH)
        try:
            summary = wire.decode(data).summary()
        except wire.DecodeError as exc:
            summary = f"<undecodable: {type(exc).__name__}>"
        self._entry(index=None, channel=channel, sender=ADVERSARY, receiver=receiver,
                    data=data, summary=summary, fate=fate)
        self.queue.append((ADVERSARY, receiver, data))

    def _inject(self, inj: Inject):
        data = inj.message if isinstance(inj.message, bytes) else wire.encode(inj.message)
        channel = SCH if inj.target == HN else USCH
        self._check_reach(channel, inj)
        self._adv_send(inj.target, data, "injected", channel)

    # -- delivery

    def deliver(self, sender: str, receiver: str, data: bytes):
        self.now += 0.001
        try:
            msg = wire.decode(data)
        except wire.DecodeError as exc:
            sid = data[6:22] if len(data) >= 22 else bytes(16)
            self._events([actors.AuditEvent(receiver, sid, "decode_error", type(exc).__name__)])
            return
        if receiver == UE:
            i = self.owner.get(msg.session_id)
            if i is None:
                self._events([actors.AuditEvent(UE, msg.session_id, actors.FOREIGN_SESSION)])
                return
            step = actors.ue_step(self.ues[i], msg, provider=self.provider, rng=self.randbytes)
            self.ues[i] = step.state
            if step.state.k_seaf is not None and msg.session_id not in self.ue_keys:
                self.ue_keys[msg.session_id] = step.state.k_seaf
            src = UE
        elif receiver == SN:
            step = actors.sn_step(self.sn, msg, now=self.now)
            self.sn = step.state
            src = SN
        else:
            step = actors.hn_step(self.hn, msg, provider=self.provider, rng=self.randbytes,
                                  now=self.now)
            self.hn = step.state
            src = HN
        self._events(step.events)
        for dest, out in step.out:
            if isinstance(out, wire.KeyRelease):
                self.hn_keys.setdefault(out.session_id, out.k_seaf)
            self.send(src, dest, out)

    def drain(self):
        while self.queue:
            self.deliver(*self.queue.popleft())

    def expire(self):
        if self.sn.pending or self.hn.outstanding:
            self.now += self.t.av_timeout + 1.0
            s = actors.sn_expire(self.sn, self.now)
            self.sn = s.state
            h = actors.hn_expire(self.hn, self.now)
            self.hn = h.state
            self._events(s.events + h.events)

    def start(self, ue_index: int):
        sid = self.randbytes(16)
        self.owner[sid] = ue_index
        step = actors.ue_step(self.ues[ue_index], actors.Start(sid), provider=self.provider,
                              rng=self.randbytes)
        self.ues[ue_index] = step.state
        self.sessions.append(SessionTruth(sid, step.state.supi, bytes(step.state.sk_ue)))
        self._events(step.events)
        for dest, out in step.out:
            self.send(UE, dest, out)
        self.drain()
        if self.t.key_confirmation:
            self.confirm(ue_index, sid)
        self.expire()

    def confirm(self, ue_index: int, sid: bytes):
        ue = self.ues[ue_index]
        done = self.sn.completed.get(sid)
        if ue.k_seaf is None or done is None:
            return
        nonce = self.randbytes(16)
        tag = aka.key_confirmation_tag(done[1], nonce, b"SN")
        ok = aka.verify_key_confirmation(ue.k_seaf, nonce, b"SN", tag)
        self._events([actors.AuditEvent(UE, sid, "key_confirmed" if ok else "key_confirmation_failed")])

    def leak(self, keys: frozenset):
        secrets = []
        if "sk_hn" in keys:
            secrets.append(("sk_hn", "xwing_sk", self.sk_hn))
        if "k" in keys:
            secrets += [("k", "long_term_k", k) for k in self.keys.values()]
        if "sk_ue" in keys:
            secrets += [("sk_ue", "xwing_sk", s.sk_ue) for s in self.sessions]
        for name, label, value in secrets:
            self._entry(index=None, channel=USCH, sender=ADVERSARY, receiver=ADVERSARY,
                        data=value, summary=f"phase 1 leak {name}", fate="leak", label=label)

    def run(self) -> SessionRun:
        self.provision()
        for i in range(self.t.sessions):
            self.start(i % len(self.ues))
        for inj in self.injects.get(None, ()):
            self._inject(inj)
        self.drain()
        self.expire()
        for a in self.script.actions:
            if isinstance(a, LeakAtPhase):
                self.leak(a.keys)
        return SessionRun(self.t, 0, self.transcript, self.events, self.ues, self.sn, self.hn,
                          self.pk_hn, self.sk_hn, self.keys, self.sessions, self.provider,
                          self.ue_keys, self.hn_keys)


def run_session(topology: Topology = Topology(), adversary: AdversaryScript | None = None,
                seed: int = 0) -> SessionRun:
    adversary = adversary or AdversaryScript()
    adversary.validate(topology)
    result = _Runner(topology, adversary, seed).run()
    result.seed = seed
    return result


def honest_topology(**kw) -> Topology:
    return replace(Topology(), **kw)
