"""Hashing, addresses and signatures.

Keccak-256 here is Ethereum's pre-standard variant (0x01 domain padding), not
``hashlib.sha3_256``. Signatures default to deterministic secp256k1 ECDSA over
the keccak digest of the message; a keyed-tag scheme can be selected for
fixtures that want to avoid curve arithmetic entirely.
"""

from __future__ import annotations

import functools
import hashlib
import hmac
from dataclasses import dataclass

from Crypto.Hash import keccak as _keccak
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec, utils

SECP256K1_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141

SCHEME_ECDSA = "ecdsa"
SCHEME_TEST = "test"
_SIG_TAG = {SCHEME_ECDSA: b"\x01", SCHEME_TEST: b"\x02"}

# public key -> private scalar for the test scheme; tag verification needs the secret
_TEST_SECRETS: dict[bytes, int] = {}


class InvalidInput(ValueError):
    pass


class Digest32(bytes):
    def __new__(cls, value: bytes):
        if len(value) != 32:
            raise InvalidInput(f"digest must be 32 bytes, got {len(value)}")
        return super().__new__(cls, value)

    def __repr__(self):
        return f"Digest32(0x{self.hex()})"


class Address(bytes):
    def __new__(cls, value: bytes | str):
        if isinstance(value, str):
            value = bytes.fromhex(value.removeprefix("0x"))
        if len(value) != 20:
            raise InvalidInput(f"address must be 20 bytes, got {len(value)}")
        return super().__new__(cls, value)

    def __repr__(self):
        return f"Address({self.hex0x()})"

    def __str__(self):
        return self.hex0x()

    def hex0x(self) -> str:
        return "0x" + self.hex()


ZERO_DIGEST = Digest32(bytes(32))
ZERO_ADDRESS = Address(bytes(20))


def keccak256(data: bytes) -> Digest32:
    h = _keccak.new(digest_bits=256)
    h.update(bytes(data))
    return Digest32(h.digest())


def derive_address(public_key: bytes) -> Address:
    if not public_key:
        raise InvalidInput("public key is empty")
    return Address(keccak256(public_key)[-20:])


def function_selector(signature_text: str) -> bytes:
    """First four bytes of keccak256 over the canonical signature, e.g. ``reply()``."""
    if not signature_text:
        raise InvalidInput("function signature is empty")
    return keccak256(signature_text.encode())[:4]


def hash_addresses(*addresses: bytes) -> Digest32:
    """K(A1, A2, ...): keccak over the addresses concatenated in the given order."""
    return keccak256(b"".join(addresses))


@dataclass(frozen=True)
class KeyPair:
    private_key: int
    public_key: bytes
    scheme: str = SCHEME_ECDSA

    @property
    def address(self) -> Address:
        return derive_address(self.public_key)

    @classmethod
    def from_private(cls, private_key: int, scheme: str = SCHEME_ECDSA) -> KeyPair:
        if not 0 < private_key < SECP256K1_ORDER:
            raise InvalidInput("private scalar out of range")
        if scheme == SCHEME_ECDSA:
            sk = _ecdsa_private(private_key)
            point = sk.public_key().public_bytes(
                serialization.Encoding.X962, serialization.PublicFormat.UncompressedPoint
            )
            return cls(private_key, point[1:], scheme)
        if scheme == SCHEME_TEST:
            secret = private_key.to_bytes(32, "big")
            public = keccak256(b"test-pub-hi" + secret) + keccak256(b"test-pub-lo" + secret)
            _TEST_SECRETS[public] = private_key
            return cls(private_key, public, scheme)
        raise InvalidInput(f"unknown signature scheme {scheme!r}")

    @classmethod
    def generate(cls, seed: bytes | str | int, scheme: str = SCHEME_ECDSA) -> KeyPair:
        """Deterministic key derivation from an arbitrary seed label."""
        if isinstance(seed, int):
            seed = seed.to_bytes(32, "big", signed=True)
        elif isinstance(seed, str):
            seed = seed.encode()
        scalar = int.from_bytes(keccak256(b"defeed-key:" + seed), "big") % (SECP256K1_ORDER - 1) + 1
        return cls.from_private(scalar, scheme)


@functools.lru_cache(maxsize=4096)
def _ecdsa_private(scalar: int) -> ec.EllipticCurvePrivateKey:
    return ec.derive_private_key(scalar, ec.SECP256K1())


def sign(key: KeyPair, msg: bytes) -> bytes:
    digest = keccak256(msg)
    if key.scheme == SCHEME_ECDSA:
        sk = _ecdsa_private(key.private_key)
        der = sk.sign(digest, ec.ECDSA(utils.Prehashed(hashes.SHA256()), deterministic_signing=True))
        return _SIG_TAG[SCHEME_ECDSA] + der
    if key.scheme == SCHEME_TEST:
        tag = hmac.new(key.private_key.to_bytes(32, "big"), digest, hashlib.sha256).digest()
        return _SIG_TAG[SCHEME_TEST] + tag
    raise InvalidInput(f"unknown signature scheme {key.scheme!r}")


def verify(public_key: bytes, msg: bytes, signature: bytes) -> bool:
    """Malformed input of any kind yields False rather than an exception."""
    if not isinstance(signature, (bytes, bytearray)) or len(signature) < 2:
        return False
    tag, body = bytes(signature[:1]), bytes(signature[1:])
    digest = keccak256(msg)
    if tag == _SIG_TAG[SCHEME_ECDSA]:
        try:
            pk = ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256K1(), b"\x04" + bytes(public_key))
            pk.verify(body, digest, ec.ECDSA(utils.Prehashed(hashes.SHA256())))
            return True
        except (InvalidSignature, ValueError, TypeError):
            return False
    if tag == _SIG_TAG[SCHEME_TEST]:
        secret = _TEST_SECRETS.get(bytes(public_key))
        if secret is None:
            return False
        expected = hmac.new(secret.to_bytes(32, "big"), digest, hashlib.sha256).digest()
        return hmac.compare_digest(expected, body)
    return False
