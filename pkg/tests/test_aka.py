import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpqc_aka import aka, identity, xwing
from hpqc_aka.aka import (
    DEFAULT_DELTA,
    MacFailure,
    ResyncRejected,
    SqnOverflow,
    SubscriberRecord,
    Success,
    SyncFailure,
    UeSession,
    derive_hierarchy,
    generate_av,
    hn_resync,
    sqn_window_check,
    ue_process_challenge,
)
from hpqc_aka.vectors import parse_hierarchy, verify_hierarchy
from oracles import hierarchy_ref

ID_SN = b"5G:mnc093.mcc208.3gppnetwork.org"


def test_golden_hierarchy(data_dir):
    records = parse_hierarchy((data_dir / "hierarchy_golden.txt").read_text())
    assert len(records) == 3
    assert verify_hierarchy(records) == []
    for r in records:
        h = derive_hierarchy(r["k"], r["rand"], r["hpk"], r["sqn"], r["amf"], r["id_sn"])
        assert (h.ck, h.ik, h.k_ausf, h.k_seaf) == (r["ck"], r["ik"], r["k_ausf"], r["k_seaf"])


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=32, max_size=32), st.binary(min_size=1120, max_size=1120),
       st.binary(min_size=1120, max_size=1120), st.integers(0, 2**48 - 1),
       st.binary(min_size=1, max_size=64))
def test_hierarchy_matches_oracle(k, rand, hpk, sqn, id_sn):
    s = sqn.to_bytes(6, "big")
    h = derive_hierarchy(k, rand, hpk, s, b"\x80\x00", id_sn)
    want = hierarchy_ref.hierarchy(k, rand, hpk, s, b"\x80\x00", id_sn)
    assert h.mac == want["mac"] and h.ak == want["ak"]
    assert h.res_star == want["xres_star"] and h.k_seaf == want["k_seaf"]
    assert aka.hxres_star(rand, h.res_star) == want["hxres_star"]


def test_hpk_is_1120_bytes():
    assert len(aka.compute_hpk(bytes(32))) == aka.RAND_LEN == 1120


@pytest.mark.parametrize("ue,hn,ok", [
    (5, 6, True), (5, 5, False), (5, 4, False), (0, 1, True),
    (5, 5 + DEFAULT_DELTA - 1, True), (5, 5 + DEFAULT_DELTA, False),
])
def test_window(ue, hn, ok):
    assert sqn_window_check(ue, hn) is ok


@settings(max_examples=200)
@given(st.integers(0, 2**47), st.integers(0, 2**47), st.integers(1, 2**30))
def test_window_property(ue, hn, delta):
    assert sqn_window_check(ue, hn, delta) == (ue < hn < ue + delta)


@pytest.fixture
def setup(provider):
    rb = random.Random(21).randbytes
    hn = xwing.keygen(provider, rb)
    supi, k = rb(16), rb(32)
    conc = identity.conceal_supi(supi, hn.pk, provider, rb)
    got, pk1_ue = identity.deconceal_suci(conc.suci, hn.sk, provider)
    return dict(provider=provider, rb=rb, hn=hn, supi=supi, k=k, conc=conc, pk1_ue=pk1_ue)


def _av(s, sqn_hn):
    sub = SubscriberRecord(s["supi"], s["k"], sqn_hn)
    return generate_av(sub, s["conc"].suci.c0, s["pk1_ue"], ID_SN, s["provider"], s["rb"])


def _ue(s, sqn_ue):
    return UeSession(s["k"], sqn_ue, bytearray(s["conc"].sk_ue), s["supi"])


def test_honest_challenge(setup):
    he, se, sub2 = _av(setup, 7)
    assert sub2.sqn_hn == 8
    state = _ue(setup, 3)
    outcome, sqn = ue_process_challenge(state, se.rand, se.autn, ID_SN, provider=setup["provider"])
    assert isinstance(outcome, Success) and sqn == 7
    assert outcome.k_seaf == he.k_seaf
    assert aka.sn_verify_response(se.rand, outcome.res_star, se.hxres_star)
    assert aka.hn_verify_response(he.xres_star, outcome.res_star)
    assert state.sk_ue == bytearray(32)


@pytest.mark.parametrize("bit", [0, 17, 63])
def test_case_i_mac_failure(setup, bit):
    he, se, _ = _av(setup, 7)
    mac = bytearray(se.autn.mac)
    mac[bit // 8] ^= 1 << (bit % 8)
    bad = aka.Autn(se.autn.conc, se.autn.amf, bytes(mac))
    state = _ue(setup, 3)
    outcome, sqn = ue_process_challenge(state, se.rand, bad, ID_SN, provider=setup["provider"])
    assert isinstance(outcome, MacFailure) and sqn == 3
    assert state.sk_ue == bytearray(32)


def test_case_ii_resync(setup):
    p, k = setup["provider"], setup["k"]
    he, se, sub2 = _av(setup, 50)
    outcome, sqn = ue_process_challenge(_ue(setup, 100), se.rand, se.autn, ID_SN, provider=p)
    assert isinstance(outcome, SyncFailure) and sqn == 100
    auts = outcome.auts
    masked = bytes(a ^ b for a, b in zip(se.rand, he.hpk))
    sqn_ue = bytes(a ^ b for a, b in zip(auts.conc_star, hierarchy_ref.f("f5s", k, masked)))
    assert int.from_bytes(sqn_ue, "big") == 100
    assert auts.mac_star == hierarchy_ref.f("f1s", k, sqn_ue + auts.amf + masked)
    sub3 = hn_resync(sub2, auts, se.rand, he.hpk)
    assert sub3.sqn_hn == 101
    # next session succeeds at the resynchronised SQN
    sub = sub3
    he2, se2, _ = generate_av(sub, setup["conc"].suci.c0, setup["pk1_ue"], ID_SN, p, setup["rb"])
    state = _ue(setup, 100)
    outcome, sqn = ue_process_challenge(state, se2.rand, se2.autn, ID_SN, provider=p)
    assert isinstance(outcome, Success) and sqn == 101 and outcome.k_seaf == he2.k_seaf


def test_resync_rejects_tampered_auts(setup):
    he, se, sub2 = _av(setup, 50)
    outcome, _ = ue_process_challenge(_ue(setup, 100), se.rand, se.autn, ID_SN,
                                      provider=setup["provider"])
    a = outcome.auts
    forged = aka.Auts(a.conc_star, a.amf, bytes(x ^ 1 for x in a.mac_star))
    with pytest.raises(ResyncRejected):
        hn_resync(sub2, forged, se.rand, he.hpk)


def test_replayed_challenge_is_stale(setup):
    he, se, _ = _av(setup, 7)
    outcome, _ = ue_process_challenge(_ue(setup, 7), se.rand, se.autn, ID_SN,
                                      provider=setup["provider"])
    assert isinstance(outcome, SyncFailure)


def test_case_iii_forged_res_star(setup):
    he, se, _ = _av(setup, 7)
    rng = random.Random(4)
    for _ in range(500):
        forged = rng.randbytes(32)
        assert not aka.sn_verify_response(se.rand, forged, se.hxres_star)
        assert not aka.hn_verify_response(he.xres_star, forged)


def test_sqn_overflow(setup):
    with pytest.raises(SqnOverflow):
        _av(setup, aka.SQN_MAX)
    with pytest.raises(SqnOverflow):
        aka.sqn_bytes(2**48)


def test_field_layouts():
    a = aka.Autn.from_bytes(bytes(range(16)))
    assert (a.conc, a.amf, a.mac) == (bytes(range(6)), bytes([6, 7]), bytes(range(8, 16)))
    assert a.to_bytes() == bytes(range(16))
    with pytest.raises(ValueError):
        aka.Autn.from_bytes(bytes(15))
    with pytest.raises(ValueError):
        aka.Auts(bytes(6), bytes(2), bytes(7))
    assert SubscriberRecord(b"s", b"k" * 32).amf == b"\x80\x00"
    assert "kkkk" not in repr(SubscriberRecord(b"s", b"k" * 32))


def test_derive_rejects_bad_lengths():
    with pytest.raises(ValueError):
        derive_hierarchy(bytes(32), bytes(1119), bytes(1120), bytes(6), bytes(2), ID_SN)
    with pytest.raises(ValueError):
        derive_hierarchy(bytes(32), bytes(1120), bytes(1120), bytes(5), bytes(2), ID_SN)


def test_key_confirmation():
    tag = aka.key_confirmation_tag(bytes(32), b"n", b"SN")
    assert aka.verify_key_confirmation(bytes(32), b"n", b"SN", tag)
    assert not aka.verify_key_confirmation(bytes(32), b"n", b"UE", tag)
