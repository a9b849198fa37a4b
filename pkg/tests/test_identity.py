import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpqc_aka import identity, xwing
from hpqc_aka.identity import MacMismatch, Suci, conceal_supi, deconceal_suci, ue_eseed


@pytest.fixture(scope="module")
def hn():
    return xwing.keygen_from_seed(bytes(range(32)))


@settings(max_examples=60, deadline=None)
@given(st.binary(min_size=1, max_size=64))
def test_round_trip_any_supi_length(hn, supi):
    res = conceal_supi(supi, hn.pk)
    assert len(res.suci) == 1120 + len(supi) + 1184 + 32
    assert deconceal_suci(res.suci, hn.sk) == (supi, res.pk1_ue)


def test_round_trip_many(hn, provider):
    rb = random.Random(11).randbytes
    for _ in range(100):
        supi = rb(16)
        res = conceal_supi(supi, hn.pk, provider, rb)
        assert deconceal_suci(res.suci, hn.sk, provider) == (supi, res.pk1_ue)
        assert len(res.suci) == 2352


@pytest.mark.parametrize("part,pos", [("c0", 0), ("c0", 1100), ("c0", 1119), ("c1", 0),
                                      ("c1", 1199), ("c2", 0), ("c2", 31)])
def test_tamper_rejected(hn, part, pos):
    res = conceal_supi(b"0123456789abcdef", hn.pk)
    fields = {"c0": res.suci.c0, "c1": res.suci.c1, "c2": res.suci.c2}
    buf = bytearray(fields[part])
    buf[pos] ^= 0x80
    fields[part] = bytes(buf)
    with pytest.raises(MacMismatch):
        deconceal_suci(Suci(**fields), hn.sk)


def test_wrong_home_key_rejected(hn):
    res = conceal_supi(b"supi", hn.pk)
    other = xwing.keygen_from_seed(bytes(32))
    with pytest.raises(identity.DeconcealError):
        deconceal_suci(res.suci, other.sk)


def test_freshness(hn):
    a = conceal_supi(b"same-supi", hn.pk)
    b = conceal_supi(b"same-supi", hn.pk)
    assert a.sk_ue != b.sk_ue
    assert a.suci.c0 != b.suci.c0 and a.suci.c1 != b.suci.c1


def test_c0_carries_ue_x25519_public(hn):
    res = conceal_supi(b"supi", hn.pk)
    assert res.suci.c0[1088:] == res.pk_ue[1184:]
    e = ue_eseed(res.sk_ue, res.pk_ue)
    assert e[32:] == res.pk_ue[1184:] and len(e) == 64


def test_supi_not_in_suci_bytes(hn):
    supi = b"\x02\x08\x93\x00\x00\x00\x00\x01" * 2
    res = conceal_supi(supi, hn.pk)
    assert supi not in res.suci.to_bytes()


@pytest.mark.parametrize("n", [0, 65])
def test_supi_length_bounds(hn, n):
    with pytest.raises(ValueError):
        conceal_supi(bytes(n), hn.pk)


def test_suci_field_validation():
    with pytest.raises(ValueError):
        Suci(bytes(1119), bytes(1200), bytes(32))
    with pytest.raises(ValueError):
        Suci(bytes(1120), bytes(1184), bytes(32))
    with pytest.raises(ValueError):
        Suci(bytes(1120), bytes(1200), bytes(31))


def test_result_repr_redacts(hn):
    res = conceal_supi(b"supi", hn.pk)
    assert res.sk_ue.hex() not in repr(res)
