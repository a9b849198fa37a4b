import random

import pytest

from hpqc_aka.providers import (
    BACKENDS,
    DEFAULT_BACKEND,
    X25519_BASE,
    PurePythonProvider,
    available_backends,
    get_provider,
    openssl_available,
)
from oracles import xwing_ref

H = bytes.fromhex

# RFC 7748 section 5.2 single-shot vectors and the 6.1 key agreement example
RFC7748_DH = [
    ("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4",
     "e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c",
     "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552"),
    ("4b66e9d4d1b4673c5ad22691957d6af5c11b6421e0ea01d42ca4169e7918ba0d",
     "e5210f12786811d3f4b7959d0538ae2c31dbe7106fc03c3efc4cd549c715a493",
     "95cbde9476e8907d7aade45cb4b873f88b595a68799fa152e6f8f7647aac7957"),
    ("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a",
     "0900000000000000000000000000000000000000000000000000000000000000",
     "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a"),
    ("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb",
     "0900000000000000000000000000000000000000000000000000000000000000",
     "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f"),
    ("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a",
     "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f",
     "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742"),
]


@pytest.mark.parametrize("scalar,u,want", RFC7748_DH)
def test_x25519_rfc7748(provider, scalar, u, want):
    assert provider.x25519_dh(H(scalar), H(u)).hex() == want
    assert xwing_ref.x25519(H(scalar), H(u)).hex() == want


def test_x25519_iterated_once(provider):
    k = u = X25519_BASE
    k, u = provider.x25519_dh(k, u), k
    assert k.hex() == "422c8e7a6227d7bca1350b3e2bb7279f7897b87bb6854b783c60e80311ae3079"


def test_x25519_low_order_point_gives_zeros(provider):
    assert provider.x25519_dh(bytes(range(32)), bytes(32)) == bytes(32)


def test_mlkem_keygen_acvp(provider, acvp):
    for tc in acvp["keyGen"]:
        dk, ek = provider.mlkem_keygen_internal(H(tc["d"]), H(tc["z"]))
        assert ek == H(tc["ek"]), tc["tcId"]
        if isinstance(provider, PurePythonProvider):
            assert dk == H(tc["dk"]), tc["tcId"]


def test_mlkem_encaps_acvp(provider, acvp):
    for tc in acvp["encapsulation"]:
        ss, c = provider.mlkem_encaps(H(tc["ek"]), H(tc["m"]))
        assert c == H(tc["c"]), tc["tcId"]
        assert ss == H(tc["k"]), tc["tcId"]


def test_mlkem_decaps_acvp_expanded_key(acvp):
    # the expanded dk form only exists on the pure provider
    p = get_provider("pure")
    dk = H(acvp["decapsulation"]["dk"])
    for tc in acvp["decapsulation"]["tests"]:
        assert p.mlkem_decaps(H(tc["c"]), dk) == H(tc["k"]), tc["tcId"]


@pytest.mark.skipif(not openssl_available(), reason="OpenSSL ML-KEM unavailable")
def test_cross_backend_agreement():
    o, p = get_provider("openssl"), get_provider("pure")
    rb = random.Random(1).randbytes
    for _ in range(10):
        d, z = rb(32), rb(32)
        dk_o, ek_o = o.mlkem_keygen_internal(d, z)
        dk_p, ek_p = p.mlkem_keygen_internal(d, z)
        assert ek_o == ek_p
        ss, c = o.mlkem_encaps(ek_o)
        assert p.mlkem_decaps(c, dk_p) == ss
        ss, c = p.mlkem_encaps(ek_p)
        assert o.mlkem_decaps(c, dk_o) == ss
        m = rb(32)
        assert o.mlkem_encaps(ek_o, m) == p.mlkem_encaps(ek_p, m)


def test_provider_selection():
    assert DEFAULT_BACKEND in available_backends()
    assert get_provider("auto").name == DEFAULT_BACKEND
    assert get_provider("pure") is get_provider("pure")
    assert set(available_backends()) <= set(BACKENDS)
    with pytest.raises(ValueError):
        get_provider("nope")


def test_mlkem_rejects_bad_lengths(provider):
    dk, ek = provider.mlkem_keygen_internal(bytes(32), bytes(32))
    with pytest.raises(ValueError):
        provider.mlkem_decaps(bytes(100), dk)
    with pytest.raises(ValueError):
        provider.mlkem_keygen_internal(bytes(31), bytes(32))
    with pytest.raises(ValueError):
        provider.mlkem_encaps(ek[:-1])
