"""Bounded Dolev-Yao style deduction over concrete bytes.

Knowledge is a set of typed terms. Each term records the rule that produced
it, its parents, and a derivation depth. Splitting a known value at fixed
boundaries (wire fields, ciphertext halves, key halves) is free. Every
cryptographic step costs one depth unit. Closure runs one round per depth
unit over a snapshot of the previous round, so a term's recorded depth is
its shortest derivation.

``ctx`` ties terms to the ciphertext (and long-term key) they belong to.
This lets join rules such as K_AUSF pick up CK, IK, CONC and HPK from one
run rather than trying every cross product.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Iterable

from .. import aka, identity, wire, xwing
from ..primitives import FTag, f, hmac_sha256, kdf_hmac, kdf_x963, xor_bytes
from ..providers import MLKEM_CT_LEN, MLKEM_EK_LEN, X25519_BASE, PrimitiveProvider, get_provider

DEFAULT_DEPTH = 6
LEAF_RULES = frozenset({"public", "observed", "leak"})


@dataclass(frozen=True, eq=False)
class Term:
    kind: str
    value: bytes
    depth: int
    rule: str
    parents: tuple = ()
    ctx: tuple = ()
    meta: object = None

    @property
    def key(self) -> tuple:
        return (self.kind, self.value, self.ctx)

    def __repr__(self) -> str:
        return f"Term({self.kind}, {self.value[:8].hex()}.., d={self.depth}, {self.rule})"

    def explain(self, indent: int = 0) -> str:
        """Derivation tree, one line per node."""
        pad = "  " * indent
        lines = [f"{pad}{self.kind} [{len(self.value)} B {self.value[:6].hex()}..] <- {self.rule} (d={self.depth})"]
        for p in self.parents:
            lines.append(p.explain(indent + 1))
        return "\n".join(lines)


class Knowledge:
    def __init__(self, terms: Iterable[Term] = ()):
        self._terms: dict[tuple, Term] = {}
        self._by_kind: dict[str, list[Term]] = {}
        self._by_value: dict[bytes, Term] = {}
        for t in terms:
            self.add(t)

    def add(self, term: Term) -> bool:
        if term.key in self._terms:
            return False
        self._terms[term.key] = term
        self._by_kind.setdefault(term.kind, []).append(term)
        best = self._by_value.get(term.value)
        if best is None or term.depth < best.depth:
            self._by_value[term.value] = term
        return True

    def of(self, kind: str) -> list[Term]:
        return list(self._by_kind.get(kind, ()))

    def find(self, value: bytes) -> Term | None:
        return self._by_value.get(bytes(value))

    def __contains__(self, value: bytes) -> bool:
        return bytes(value) in self._by_value

    def __iter__(self):
        return iter(list(self._terms.values()))

    def __len__(self) -> int:
        return len(self._terms)

    def values(self) -> set[bytes]:
        return set(self._by_value)

    def copy(self) -> Knowledge:
        return Knowledge(self._terms.values())


@dataclass
class DeductionEnv:
    """Primitive provider plus optional break oracles.

    ``break_mlkem`` maps ML-KEM ciphertexts to their shared secrets;
    ``break_x25519`` maps ``frozenset({pub_a, pub_b})`` to the DH output.
    """

    provider: PrimitiveProvider = field(default_factory=get_provider)
    break_mlkem: dict | None = None
    break_x25519: dict | None = None


def public_knowledge(pk_hn: bytes, id_sn: bytes, amf: bytes = aka.DEFAULT_AMF) -> Knowledge:
    consts = [("xwing_pk", pk_hn), ("id_sn", id_sn), ("amf", amf),
              ("const", xwing.XWING_LABEL), ("const", X25519_BASE)]
    k = Knowledge()
    for kind, value in consts:
        _admit(k, Term(kind, bytes(value), 0, "public"))
    return k


# ------------------------------------------------------------ structural splits

_FIELD_KIND = {
    wire.T_C0: "xwing_ct", wire.T_C1: "suci_c1", wire.T_C2: "suci_tag", wire.T_ID_SN: "id_sn",
    wire.T_RAND: "xwing_ct", wire.T_AUTN: "autn", wire.T_HXRES: "hxres",
    wire.T_RES_STAR: "res_star", wire.T_AUTS: "auts", wire.T_SUPI: "supi",
    wire.T_K_SEAF: "k_seaf",
}


def _tlv_spans(data: bytes) -> list[tuple[int, int, int]]:
    spans, pos = [], wire.HEADER_LEN
    while pos < len(data):
        tag, length = struct.unpack_from(">BH", data, pos)
        pos += wire.TLV_OVERHEAD
        spans.append((tag, pos, pos + length))
        pos += length
    return spans


def _piece(parent: Term, kind: str, start: int, end: int, ctx: tuple = ()) -> Term:
    return Term(kind, parent.value[start:end], parent.depth, "split", (parent,), ctx, (start, end))


def _splits(t: Term) -> list[Term]:
    v = t.value
    if t.kind == "wire":
        try:
            wire.decode(v)
        except wire.DecodeError:
            return []
        spans = _tlv_spans(v)
        byte_of = {tag: v[s:e] for tag, s, e in spans}
        anchor = byte_of.get(wire.T_C0) or byte_of.get(wire.T_RAND)
        out = []
        for tag, s, e in spans:
            ctx = (anchor,) if tag in (wire.T_C1, wire.T_C2, wire.T_AUTN, wire.T_HXRES,
                                       wire.T_AUTS) and anchor else ()
            if tag == wire.T_C1 or tag == wire.T_C2:
                ctx = (byte_of[wire.T_C0],)
            out.append(_piece(t, _FIELD_KIND[tag], s, e, ctx))
        return out
    if t.kind == "xwing_ct" and len(v) == xwing.CT_LEN:
        return [_piece(t, "mlkem_ct", 0, MLKEM_CT_LEN, (v,)),
                _piece(t, "x25519_pub", MLKEM_CT_LEN, xwing.CT_LEN)]
    if t.kind == "xwing_pk" and len(v) == xwing.PK_LEN:
        return [_piece(t, "mlkem_ek", 0, MLKEM_EK_LEN),
                _piece(t, "x25519_pub", MLKEM_EK_LEN, xwing.PK_LEN)]
    if t.kind in ("autn", "auts") and len(v) == 16:
        first = "conc" if t.kind == "autn" else "conc_star"
        last = "mac" if t.kind == "autn" else "mac_star"
        return [_piece(t, first, 0, 6, t.ctx), _piece(t, "amf", 6, 8),
                _piece(t, last, 8, 16, t.ctx)]
    if t.kind == "k_ue":
        return [_piece(t, "suci_k1", 0, 32, t.ctx), _piece(t, "suci_k2", 32, 64, t.ctx)]
    if t.kind == "suci_plain" and len(v) > MLKEM_EK_LEN:
        n = len(v) - MLKEM_EK_LEN
        return [_piece(t, "supi", 0, n), _piece(t, "mlkem_ek", n, len(v), t.ctx)]
    return []


def _admit(k: Knowledge, term: Term) -> int:
    added, stack = 0, [term]
    while stack:
        t = stack.pop()
        if k.add(t):
            added += 1
            stack.extend(_splits(t))
    return added


# ------------------------------------------------------------ crypto rules


def _d(*parents: Term) -> int:
    return max(p.depth for p in parents) + 1


def _combine_parts(ss1: bytes, ss2: bytes, ct: bytes, pk2: bytes) -> bytes:
    return xwing.combine(ss1, ss2, ct[MLKEM_CT_LEN:], pk2)


class _Engine:
    def __init__(self, env: DeductionEnv):
        self.env = env
        self.p = env.provider
        self._memo: dict = {}

    def memo(self, key, fn):
        if key not in self._memo:
            self._memo[key] = fn()
        return self._memo[key]

    def round(self, k: Knowledge) -> list[Term]:
        out: list[Term] = []
        for rule in (self.decap, self.expand, self.dh, self.break_x25519, self.break_mlkem,
                     self.combine, self.kdf_k_ue, self.kdf_hpk, self.suci_decrypt, self.pk_ue,
                     self.f_rule, self.sqn, self.res_star, self.k_ausf, self.k_seaf,
                     self.hxres, self.encapsulate):
            out.extend(rule(k))
        return out

    def decap(self, k):
        for ct in k.of("xwing_ct"):
            for sk in k.of("xwing_sk"):
                ss = self.memo(("decap", ct.value, sk.value),
                               lambda: xwing.decapsulate(ct.value, sk.value, self.p))
                yield Term("xwing_ss", ss, _d(ct, sk), "decap", (ct, sk), (ct.value,))

    def expand(self, k):
        for sk in k.of("xwing_sk"):
            e = self.memo(("expand", sk.value), lambda: xwing.expand(sk.value, self.p))
            d = _d(sk)
            yield Term("x25519_priv", e.sk2, d, "expand_sk2", (sk,))
            yield Term("x25519_pub", e.pk2, d, "expand_pk2", (sk,))
            yield Term("mlkem_ek", e.pk1, d, "expand_pk1", (sk,))

    def dh(self, k):
        for priv in k.of("x25519_priv"):
            mine = self.memo(("dh", priv.value, X25519_BASE),
                             lambda: self.p.x25519_dh(priv.value, X25519_BASE))
            for pub in k.of("x25519_pub"):
                out = self.memo(("dh", priv.value, pub.value),
                                lambda: self.p.x25519_dh(priv.value, pub.value))
                yield Term("x25519_ss", out, _d(priv, pub), "dh", (priv, pub),
                           meta=frozenset((mine, pub.value)))

    def break_x25519(self, k):
        table = self.env.break_x25519
        if not table:
            return
        pubs = k.of("x25519_pub")
        for i, a in enumerate(pubs):
            for b in pubs[i:]:
                pair = frozenset((a.value, b.value))
                if pair in table:
                    yield Term("x25519_ss", table[pair], _d(a, b), "break_x25519", (a, b),
                               meta=pair)

    def break_mlkem(self, k):
        table = self.env.break_mlkem
        if not table:
            return
        for c1 in k.of("mlkem_ct"):
            if c1.value in table:
                yield Term("mlkem_ss", table[c1.value], _d(c1), "break_mlkem", (c1,),
                           (c1.value,))

    def combine(self, k):
        ss1_by_c1 = {}
        for t in k.of("mlkem_ss"):
            ss1_by_c1.setdefault(t.ctx[0], []).append(t)
        pubs = {t.value: t for t in k.of("x25519_pub")}
        ss2s = k.of("x25519_ss")
        for ct in k.of("xwing_ct"):
            c1, c2 = ct.value[:MLKEM_CT_LEN], ct.value[MLKEM_CT_LEN:]
            for ss1 in ss1_by_c1.get(c1, ()):
                for ss2 in ss2s:
                    if c2 not in ss2.meta:
                        continue
                    others = [v for v in ss2.meta if v != c2] or [c2]
                    pk2 = pubs.get(others[0])
                    if pk2 is None:
                        continue
                    ss = _combine_parts(ss1.value, ss2.value, ct.value, pk2.value)
                    yield Term("xwing_ss", ss, _d(ss1, ss2, ct, pk2), "combine",
                               (ss1, ss2, ct, pk2), (ct.value,))

    def kdf_k_ue(self, k):
        for ss in k.of("xwing_ss"):
            v = self.memo(("k_ue", ss.value),
                          lambda: kdf_x963(ss.value, b"", identity.K_UE_BITS))
            yield Term("k_ue", v, _d(ss), "kdf_k_ue", (ss,), ss.ctx + (ss.value,))

    def kdf_hpk(self, k):
        for ss in k.of("xwing_ss"):
            v = self.memo(("hpk", ss.value), lambda: aka.compute_hpk(ss.value))
            yield Term("hpk", v, _d(ss), "kdf_hpk", (ss,), ss.ctx + (ss.value,))

    def suci_decrypt(self, k):
        keys2 = {t.ctx: t for t in k.of("suci_k2")}
        pairs = {}
        for k1 in k.of("suci_k1"):
            if k1.ctx in keys2:
                pairs.setdefault(k1.ctx[0], []).append((k1, keys2[k1.ctx]))
        tags = {}
        for t in k.of("suci_tag"):
            tags.setdefault(t.ctx, []).append(t)
        for c1 in k.of("suci_c1"):
            for k1, k2 in pairs.get(c1.ctx[0], ()):
                mac = hmac_sha256(k2.value, c1.value)
                for tag in tags.get(c1.ctx, ()):
                    if tag.value == mac:
                        plain = identity._ctr(k1.value, c1.value)
                        yield Term("suci_plain", plain, _d(c1, k1, k2, tag), "suci_decrypt",
                                   (c1, k1, k2, tag), c1.ctx)

    def pk_ue(self, k):
        cts = {t.value: t for t in k.of("xwing_ct")}
        for ek in k.of("mlkem_ek"):
            if ek.ctx and ek.ctx[0] in cts:
                ct = cts[ek.ctx[0]]
                yield Term("xwing_pk", ek.value + ct.value[MLKEM_CT_LEN:], _d(ek, ct),
                           "concat_pk_ue", (ek, ct))

    def f_rule(self, k):
        cts = {t.value: t for t in k.of("xwing_ct")}
        for hpk in k.of("hpk"):
            rand = cts.get(hpk.ctx[0]) if hpk.ctx else None
            if rand is None:
                continue
            for lk in k.of("long_term_k"):
                masked = xor_bytes(rand.value, hpk.value)
                ctx = (rand.value, hpk.value, lk.value)
                d = _d(hpk, lk, rand)
                for kind, tag in (("ak", FTag.F5), ("ck", FTag.F3), ("ik", FTag.F4),
                                  ("res", FTag.F2)):
                    v = self.memo((tag, lk.value, masked), lambda: f(tag, lk.value, masked))
                    yield Term(kind, v, d, f"f_{kind}", (lk, rand, hpk), ctx, tag)

    def sqn(self, k):
        concs = {}
        for c in k.of("conc"):
            concs.setdefault(c.ctx, []).append(c)
        for ak in k.of("ak"):
            for conc in concs.get(ak.ctx[:1], ()):
                yield Term("sqn", xor_bytes(conc.value, ak.value), _d(conc, ak), "xor",
                           (conc, ak), ak.ctx)

    def _pairs(self, k):
        iks = {t.ctx: t for t in k.of("ik")}
        for ck in k.of("ck"):
            ik = iks.get(ck.ctx)
            if ik is not None:
                yield ck, ik

    def res_star(self, k):
        res_by = {t.ctx: t for t in k.of("res")}
        for ck, ik in self._pairs(k):
            res, rand = res_by.get(ck.ctx), ck.parents[1]
            if res is None:
                continue
            for sn in k.of("id_sn"):
                v = kdf_hmac(ck.value + ik.value, sn.value + rand.value + res.value)
                yield Term("res_star", v, _d(ck, ik, sn, rand, res), "kdf_res_star",
                           (ck, ik, sn, rand, res), ck.ctx)

    def k_ausf(self, k):
        concs = {}
        for c in k.of("conc"):
            concs.setdefault(c.ctx, []).append(c)
        for ck, ik in self._pairs(k):
            hpk = ck.parents[2]
            for conc in concs.get(ck.ctx[:1], ()):
                for sn in k.of("id_sn"):
                    v = kdf_hmac(ck.value + ik.value, sn.value + conc.value + hpk.value)
                    yield Term("k_ausf", v, _d(ck, ik, sn, conc, hpk), "kdf_k_ausf",
                               (ck, ik, sn, conc, hpk), ck.ctx)

    def k_seaf(self, k):
        for ka in k.of("k_ausf"):
            for sn in k.of("id_sn"):
                yield Term("k_seaf", kdf_hmac(ka.value, sn.value), _d(ka, sn), "kdf_k_seaf",
                           (ka, sn), ka.ctx)

    def hxres(self, k):
        for rs in k.of("res_star"):
            for rand in k.of("xwing_ct"):
                yield Term("hxres", aka.hxres_star(rand.value, rs.value), _d(rand, rs),
                           "hash_hxres", (rand, rs))

    def encapsulate(self, k):
        for pk in k.of("xwing_pk"):
            def run(pk=pk):
                return _adv_encaps(pk.value, hashlib.sha3_512(b"adversary" + pk.value).digest(), self.p)
            ss, ct = self.memo(("encaps", pk.value), run)
            yield Term("xwing_ct", ct, _d(pk), "encapsulate_ct", (pk,))
            yield Term("xwing_ss", ss, _d(pk), "encapsulate_ss", (pk,), (ct,))


def _adv_encaps(pk: bytes, seed: bytes, provider: PrimitiveProvider) -> tuple[bytes, bytes]:
    """Adversary's own deterministic encapsulation: ephemeral and ML-KEM
    randomness both fixed by ``seed``."""
    return xwing.encapsulate(pk, None, provider, lambda n: seed[32:32 + n], mode="verbatim",
                             mlkem_m=seed[:32])


# ------------------------------------------------------------ closure / replay


def deduction_closure(
    initial: Knowledge,
    transcript: Iterable = (),
    depth: int = DEFAULT_DEPTH,
    env: DeductionEnv | None = None,
) -> Knowledge:
    """Everything derivable in at most ``depth`` crypto steps.

    ``transcript`` items are either raw wire bytes or objects with
    ``data`` and ``label`` attributes (transcript entries; ``label`` is
    the term kind for leaked keys).
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    env = env or DeductionEnv()
    k = initial.copy()
    for item in transcript:
        if isinstance(item, (bytes, bytearray)):
            _admit(k, Term("wire", bytes(item), 0, "observed"))
        else:
            rule = "leak" if item.label != "wire" else "observed"
            _admit(k, Term(item.label, bytes(item.data), 0, rule))
    engine = _Engine(env)
    for _ in range(depth):
        added = 0
        for t in engine.round(k):
            if t.depth <= depth:
                added += _admit(k, t)
        if not added:
            break
    return k


def replay(term: Term, env: DeductionEnv | None = None) -> bool:
    """Recompute ``term`` from its parents, recursively, and compare bytes."""
    env = env or DeductionEnv()
    p = env.provider
    if term.rule in LEAF_RULES:
        return True
    if not all(replay(q, env) for q in term.parents):
        return False
    pv = [q.value for q in term.parents]
    r = term.rule
    if r == "split":
        got = pv[0][term.meta[0]:term.meta[1]]
    elif r == "decap":
        got = xwing.decapsulate(pv[0], pv[1], p)
    elif r.startswith("expand_"):
        e = xwing.expand(pv[0], p)
        got = {"expand_sk2": e.sk2, "expand_pk2": e.pk2, "expand_pk1": e.pk1}[r]
    elif r == "dh":
        got = p.x25519_dh(pv[0], pv[1])
    elif r == "break_x25519":
        got = (env.break_x25519 or {}).get(frozenset(pv))
    elif r == "break_mlkem":
        got = (env.break_mlkem or {}).get(pv[0])
    elif r == "combine":
        got = _combine_parts(*pv)
    elif r == "kdf_k_ue":
        got = kdf_x963(pv[0], b"", identity.K_UE_BITS)
    elif r == "kdf_hpk":
        got = aka.compute_hpk(pv[0])
    elif r == "suci_decrypt":
        c1, k1, k2, tag = pv
        got = identity._ctr(k1, c1) if hmac_sha256(k2, c1) == tag else None
    elif r == "concat_pk_ue":
        got = pv[0] + pv[1][MLKEM_CT_LEN:]
    elif r.startswith("f_"):
        got = f(term.meta, pv[0], xor_bytes(pv[1], pv[2]))
    elif r == "xor":
        got = xor_bytes(pv[0], pv[1])
    elif r == "kdf_res_star":
        ck, ik, sn, rand, res = pv
        got = kdf_hmac(ck + ik, sn + rand + res)
    elif r == "kdf_k_ausf":
        ck, ik, sn, conc, hpk = pv
        got = kdf_hmac(ck + ik, sn + conc + hpk)
    elif r == "kdf_k_seaf":
        got = kdf_hmac(pv[0], pv[1])
    elif r == "hash_hxres":
        got = aka.hxres_star(pv[0], pv[1])
    elif r in ("encapsulate_ct", "encapsulate_ss"):
        seed = hashlib.sha3_512(b"adversary" + pv[0]).digest()
        ss, ct = _adv_encaps(pv[0], seed, p)
        got = ct if r == "encapsulate_ct" else ss
    else:
        return False
    return got == term.value


def verify_closure(k: Knowledge, env: DeductionEnv | None = None) -> bool:
    return all(replay(t, env) for t in k)
