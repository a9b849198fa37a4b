"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line.

Run directly with ``python tests/test_acceptance.py`` or through pytest.
"""

import random
import sys
import time

import pytest

from hpqc_aka import actors, aka, wire, xwing
from hpqc_aka.providers import available_backends, get_provider
from hpqc_aka.sim import scenarios
from hpqc_aka.sim.deduction import DeductionEnv, deduction_closure, public_knowledge
from hpqc_aka.sim.network import (
    UE,
    AdversaryScript,
    LeakAtPhase,
    Modify,
    Topology,
    run_session,
)
from msggen import random_message

H = bytes.fromhex
TWINS = {wire.Response.TAG, wire.ResponseFwd.TAG}
MAC_OFFSET = wire.HEADER_LEN + 3 + aka.RAND_LEN + 3 + 8  # AUTN.mac inside a Challenge


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] AC{n:02d} {title}" + (f" ({detail})" if detail else ""))
        assert ok, detail
    return emit


def _closure(run, mlkem=False, x25519=False, depth=6):
    env = DeductionEnv(run.recorder.inner, run.recorder.mlkem_table if mlkem else None,
                       run.recorder.x25519_table if x25519 else None)
    init = public_knowledge(run.pk_hn, run.topology.id_sn, run.topology.amf)
    return deduction_closure(init, run.visible_entries(), depth, env)


def test_ac01_xwing_sizes(report):
    t0 = time.perf_counter()
    ok = True
    for name in available_backends():
        p = get_provider(name)
        pair = xwing.keygen(p)
        ss, c = xwing.encapsulate(pair.pk, provider=p)
        ok &= (len(pair.sk), len(pair.pk), len(c), len(ss)) == (32, 1216, 1120, 32)
    dt = time.perf_counter() - t0
    report(1, "X-Wing sizes sk/pk/ct/ss = 32/1216/1120/32", ok and dt < 1, f"{dt:.2f}s")


def test_ac02_xwing_round_trip(report):
    p = get_provider()
    rb = random.Random(2024).randbytes
    t0 = time.perf_counter()
    fails = 0
    for _ in range(1000):
        pair = xwing.keygen(p, rb)
        ss, c = xwing.encapsulate(pair.pk, provider=p, rng=rb)
        fails += xwing.decapsulate(c, pair.sk, p) != ss
        ske = rb(32)
        eseed = ske + p.x25519_dh(ske, p.x25519_base_point)
        ss, c = xwing.encapsulate(pair.pk, eseed, p, rng=rb)
        fails += xwing.decapsulate(c, pair.sk, p) != ss
    dt = time.perf_counter() - t0
    report(2, "X-Wing round trip, 1000 seeded trials x 2 paths", fails == 0 and dt < 30,
           f"{fails} failures, {dt:.1f}s")


def test_ac03_kats(report, acvp, data_dir):
    from oracles import xwing_ref
    from hpqc_aka.vectors import parse_xwing, verify_xwing
    bad = []
    for name in available_backends():
        p = get_provider(name)
        for tc in acvp["encapsulation"]:
            if p.mlkem_encaps(H(tc["ek"]), H(tc["m"])) != (H(tc["k"]), H(tc["c"])):
                bad.append(f"{name} encaps {tc['tcId']}")
        for tc in acvp["keyGen"]:
            if p.mlkem_keygen_internal(H(tc["d"]), H(tc["z"]))[1] != H(tc["ek"]):
                bad.append(f"{name} keyGen {tc['tcId']}")
        # RFC 7748 section 5.2
        if p.x25519_dh(H("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4"),
                       H("e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c")) != \
                H("c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552"):
            bad.append(f"{name} x25519")
    pure = get_provider("pure")
    dk = H(acvp["decapsulation"]["dk"])
    for tc in acvp["decapsulation"]["tests"]:
        if pure.mlkem_decaps(H(tc["c"]), dk) != H(tc["k"]):
            bad.append(f"decaps {tc['tcId']}")

    records = parse_xwing((data_dir / "xwing_vectors.txt").read_text())
    draft = [r for r in records if r["mode"] == "draft"]
    for r in draft:
        if xwing_ref.encaps_draft(r["pk"], r["eseed"]) != (r["ss"], r["c"]):
            bad.append("draft vector vs oracle")
    bad += [str(m) for m in verify_xwing(draft)]
    # verbatim mode sends eseed[32:] as c2, draft mode derives it; same inputs diverge
    r = draft[0]
    verbatim = xwing.encapsulate(r["pk"], r["eseed"], mlkem_m=r["eseed"][:32])
    if verbatim == (r["ss"], r["c"]):
        bad.append("verbatim mode unexpectedly equals draft mode")
    report(3, "ML-KEM-768 ACVP + X25519 RFC 7748 KATs; draft vectors match oracle", not bad,
           ", ".join(bad) or f"{len(draft)} draft vectors, verbatim mode excluded")


def test_ac04_honest_handshake(report):
    t0 = time.perf_counter()
    run = run_session(Topology(sessions=1000, subscribers=8), seed=4)
    mismatched = [s for s in run.sessions
                  if len(v := run.k_seaf_views(s.session_id)) != 3 or len(set(v.values())) != 1]
    public = b"".join(e.data for e in run.transcript if e.channel == "usch")
    leaked = {s.supi for s in run.sessions if s.supi in public}
    dt = time.perf_counter() - t0
    report(4, "1000 honest sessions: UE/SN/HN k_seaf agree, SUPI never on USCH",
           not mismatched and not leaked and dt < 120,
           f"{len(mismatched)} mismatches, {len(leaked)} SUPIs exposed, {dt:.1f}s")


def test_ac05_mac_failure(report):
    bad = []
    for bit in range(64):
        mask = bytes([1 << (bit % 8)])
        run = run_session(Topology(), AdversaryScript((Modify(3, MAC_OFFSET + bit // 8, mask),)),
                          seed=bit)
        kinds = [e.kind for e in run.audit_events()]
        released = any(isinstance(wire.decode(e.data), wire.KeyRelease) for e in run.transcript)
        sid = run.sessions[0].session_id
        if actors.UE_MAC_FAILURE not in kinds or released or run.k_seaf_views(sid):
            bad.append(bit)
    report(5, "64 single-bit AUTN.mac flips -> MacFailure, no key release", not bad,
           f"bad bits {bad}" if bad else "64/64")


def test_ac06_resync(report):
    stale = run_session(Topology(ue_sqn=40, hn_sqn=1), seed=6)
    kinds = [e.kind for e in stale.audit_events()]
    sqn_hn = next(iter(stale.hn_state.subscribers.values())).sqn_hn
    sqn_ue = stale.ue_states[0].sqn_ue
    after = run_session(Topology(sessions=2, ue_sqn=40, hn_sqn=1), seed=6)
    second = after.sessions[1].session_id
    views = after.k_seaf_views(second)
    ok = (actors.UE_SYNC_FAILURE in kinds and actors.HN_RESYNC_OK in kinds
          and sqn_hn == sqn_ue + 1 and len(views) == 3 and len(set(views.values())) == 1)
    report(6, "stale SQN -> SyncFailure with valid AUTS, sqn_hn = sqn_ue + 1, next session ok", ok,
           f"sqn_ue={sqn_ue} sqn_hn={sqn_hn}")


def test_ac07_forged_res_star(report):
    run = run_session(Topology(), seed=7)
    p = get_provider()
    # drive a fresh SN to the challenged state: registration, AV request, SE-AV
    ue = actors.UeState(b"imsi-acceptance", bytes(32), 0, run.pk_hn, run.topology.id_sn)
    sub = aka.SubscriberRecord(b"imsi-acceptance", bytes(32), 1)
    hn = actors.HnState(run.sk_hn, run.pk_hn, {sub.supi: sub})
    sid = bytes(range(16))
    rb = random.Random(7).randbytes
    s = actors.ue_step(ue, actors.Start(sid), provider=p, rng=rb)
    sn = actors.SnState(run.topology.id_sn)
    st = actors.sn_step(sn, s.out[0][1])
    h = actors.hn_step(hn, st.out[0][1], provider=p, rng=rb)
    sn = actors.sn_step(st.state, h.out[0][1]).state
    assert sid in sn.pending
    rng = random.Random(77)
    accepts = 0
    for _ in range(10_000):
        out = actors.sn_step(sn, wire.Response(sid, rng.randbytes(32)))
        accepts += bool(out.out) or actors.MIDDLE_SN_RES in [e.kind for e in out.events]
    report(7, "10^4 forged RES* rejected at SN", accepts == 0, f"{accepts} accepts")


def test_ac08_scenarios(report):
    names = ["s0", "s1", "s2", "s3", "s4", "s4-replay", "s5", "s6", "fs",
             "break-x25519", "break-mlkem"]
    verdicts = {n: scenarios.run_scenario(n) for n in names}
    wrong = [n for n, v in verdicts.items() if not v.matches_expected]
    ok = not wrong and not verdicts["s4-replay"].passed and all(
        v.passed for n, v in verdicts.items() if n != "s4-replay")
    report(8, "S0-S3, S5, S6, FS, single breaks pass; S4-replay fails", ok,
           f"mismatched {wrong}" if wrong else "s4-replay witness present")


def test_ac09_forward_secrecy(report):
    run = run_session(Topology(), AdversaryScript((LeakAtPhase({"sk_hn", "k"}),)), seed=9)
    target = run.k_seaf_views(run.sessions[0].session_id)[UE]
    absent = target not in _closure(run)
    run2 = run_session(Topology(), AdversaryScript((LeakAtPhase({"sk_hn", "k", "sk_ue"}),)), seed=9)
    target2 = run2.k_seaf_views(run2.sessions[0].session_id)[UE]
    present = target2 in _closure(run2)
    report(9, "{sk_hn,k} leak keeps k_seaf out of depth-6 closure; adding sk_ue derives it",
           absent and present, f"absent={absent} present={present}")


def test_ac10_hybrid(report):
    run = run_session(Topology(), AdversaryScript((LeakAtPhase({"sk_hn", "k"}),)), seed=10)
    target = run.k_seaf_views(run.sessions[0].session_id)[UE]
    one_m = target in _closure(run, mlkem=True)
    one_x = target in _closure(run, x25519=True)
    both = target in _closure(run, mlkem=True, x25519=True)
    report(10, "one broken component keeps k_seaf out, both breaks derive it",
           not one_m and not one_x and both, f"mlkem={one_m} x25519={one_x} both={both}")


def test_ac11_sizes(report):
    from hpqc_aka import bench
    rep = bench.run_bench(iterations=1, compare=False)
    want = {"suci": 2352, "challenge": 1136, "se_av": 1152}
    payload = {k: rep.payload[k] for k in want}
    ok = payload == want and rep.expected == want and rep.sizes_match
    report(11, "SUCI 2352, Challenge 1136, SE-AV 1152 bytes, bench agrees", ok, str(payload))


def test_ac12_wire_fuzz(report):
    rng = random.Random(12)
    trip_bad = typed = 0
    untyped, aliased = [], 0
    for _ in range(10_000):
        msg = random_message(rng)
        data = wire.encode(msg)
        trip_bad += wire.decode(data) != msg
    for _ in range(10_000):
        data = wire.encode(random_message(rng))
        op = rng.randrange(3)
        if op == 0:
            bad = data[:rng.randrange(len(data))]
        elif op == 1:
            pos = rng.randrange(len(data) + 1)
            bad = data[:pos] + rng.randbytes(rng.randint(1, 8)) + data[pos:]
        else:
            # magic, version, type tag or the first TLV tag/length
            buf = bytearray(data)
            pos = rng.choice([p for p in (0, 4, 5, 22, 23, 24) if p < len(buf)])
            buf[pos] ^= rng.randrange(1, 256)
            bad = bytes(buf)
        try:
            got = wire.decode(bad)
        except wire.DecodeError:
            typed += 1
        except Exception as exc:  # noqa: BLE001
            untyped.append(type(exc).__name__)
        else:
            # Response and ResponseFwd share a body layout: a type-byte flip
            # between them is itself a canonical encoding
            if wire.encode(got) == bad and {bad[5], data[5]} == TWINS:
                aliased += 1
            else:
                untyped.append("silent decode")
    report(12, "10^4 valid messages round-trip, 10^4 corruptions raise typed errors",
           trip_bad == 0 and not untyped and typed + aliased == 10_000,
           f"{trip_bad} round-trip failures, {typed} typed, {aliased} twin-type aliases, "
           f"other {sorted(set(untyped))}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
