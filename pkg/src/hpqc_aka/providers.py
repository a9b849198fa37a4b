"""ML-KEM-768 / X25519 backends behind a common provider interface.

Two backends ship:

* ``openssl`` -- ML-KEM and X25519 from ``cryptography`` (compiled,
  OpenSSL/Rust). Used whenever the installed ``cryptography`` exposes
  ML-KEM-768.
* ``pure`` -- ML-KEM from kyber-py (pure Python), X25519 from
  ``cryptography``.

``DEFAULT_BACKEND`` is picked at import. OpenSSL offers no derandomised
encapsulation, so an explicit 32-byte ``m`` always goes through the
FIPS 203 internal routine from kyber-py; both backends produce identical
bytes for the same inputs (checked in the KAT suite).
"""

from __future__ import annotations

import abc
import os

from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from kyber_py.ml_kem import ML_KEM_768

MLKEM_EK_LEN = 1184
MLKEM_CT_LEN = 1088
MLKEM_SS_LEN = 32
X25519_LEN = 32
X25519_BASE = (9).to_bytes(32, "little")


class EncapsulationError(ValueError):
    """The encapsulation key was rejected by the backend."""


class PrimitiveProvider(abc.ABC):
    name = "abstract"
    x25519_base_point = X25519_BASE

    @abc.abstractmethod
    def mlkem_keygen_internal(self, d: bytes, z: bytes) -> tuple[bytes, bytes]:
        """Return ``(dk, ek)``; ``dk`` is opaque to callers."""

    @abc.abstractmethod
    def mlkem_encaps(self, ek: bytes, m: bytes | None = None) -> tuple[bytes, bytes]:
        """Return ``(ss1, c1)``."""

    @abc.abstractmethod
    def mlkem_decaps(self, c1: bytes, dk: bytes) -> bytes: ...

    def x25519_dh(self, scalar: bytes, point: bytes) -> bytes:
        if len(scalar) != X25519_LEN or len(point) != X25519_LEN:
            raise ValueError("X25519 inputs must be 32 bytes")
        priv = X25519PrivateKey.from_private_bytes(scalar)
        try:
            return priv.exchange(X25519PublicKey.from_public_bytes(point))
        except ValueError:
            # low-order point: RFC 7748 leaves the all-zero check optional and
            # the combiner must still run
            return bytes(X25519_LEN)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def _check_seed(d: bytes, z: bytes) -> None:
    if len(d) != 32 or len(z) != 32:
        raise ValueError("ML-KEM keygen seeds d and z must be 32 bytes each")


def _encaps_derand(ek: bytes, m: bytes) -> tuple[bytes, bytes]:
    if len(m) != 32:
        raise ValueError("ML-KEM encapsulation randomness must be 32 bytes")
    if len(ek) != MLKEM_EK_LEN:
        raise EncapsulationError(f"ML-KEM-768 ek must be {MLKEM_EK_LEN} bytes, got {len(ek)}")
    try:
        return ML_KEM_768._encaps_internal(ek, m)
    except ValueError as exc:
        raise EncapsulationError(str(exc)) from exc


class PurePythonProvider(PrimitiveProvider):
    name = "pure"

    def mlkem_keygen_internal(self, d, z):
        _check_seed(d, z)
        ek, dk = ML_KEM_768._keygen_internal(d, z)
        return dk, ek

    def mlkem_encaps(self, ek, m=None):
        return _encaps_derand(ek, os.urandom(32) if m is None else m)

    def mlkem_decaps(self, c1, dk):
        if len(c1) != MLKEM_CT_LEN:
            raise ValueError(f"ML-KEM-768 ciphertext must be {MLKEM_CT_LEN} bytes")
        return ML_KEM_768.decaps(dk, c1)


class OpenSSLProvider(PrimitiveProvider):
    """Backend over ``cryptography``'s ML-KEM-768; ``dk`` is the 64-byte seed d||z."""

    name = "openssl"

    def __init__(self) -> None:
        from cryptography.hazmat.primitives.asymmetric import mlkem

        self._mlkem = mlkem

    def mlkem_keygen_internal(self, d, z):
        _check_seed(d, z)
        key = self._mlkem.MLKEM768PrivateKey.from_seed_bytes(d + z)
        return d + z, key.public_key().public_bytes_raw()

    def mlkem_encaps(self, ek, m=None):
        if m is not None:
            return _encaps_derand(ek, m)
        try:
            pub = self._mlkem.MLKEM768PublicKey.from_public_bytes(ek)
        except ValueError as exc:
            raise EncapsulationError(str(exc)) from exc
        ss, c1 = pub.encapsulate()
        return ss, c1

    def mlkem_decaps(self, c1, dk):
        if len(c1) != MLKEM_CT_LEN:
            raise ValueError(f"ML-KEM-768 ciphertext must be {MLKEM_CT_LEN} bytes")
        return self._mlkem.MLKEM768PrivateKey.from_seed_bytes(dk).decapsulate(c1)


def openssl_available() -> bool:
    try:
        from cryptography.hazmat.primitives.asymmetric import mlkem

        mlkem.MLKEM768PrivateKey.from_seed_bytes(bytes(64))
    except Exception:  # ImportError, UnsupportedAlgorithm
        return False
    return True


BACKENDS = {"openssl": OpenSSLProvider, "pure": PurePythonProvider}
DEFAULT_BACKEND = "openssl" if openssl_available() else "pure"
_instances: dict[str, PrimitiveProvider] = {}


def get_provider(name: str = "auto") -> PrimitiveProvider:
    if name == "auto":
        name = DEFAULT_BACKEND
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)} or 'auto'")
    if name not in _instances:
        _instances[name] = BACKENDS[name]()
    return _instances[name]


def available_backends() -> list[str]:
    return [n for n in BACKENDS if n != "openssl" or openssl_available()]
