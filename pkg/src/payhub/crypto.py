"""Hashing, key pairs and signatures used across the hub protocol.

One hash function (SHA-256) is configured globally so every node derives
identical digests, election indices and merkle roots without coordination.
Signatures are Ed25519; verification results are memoized because the same
(state, signature) pairs get re-checked by every node in a hub.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

DIGEST_LEN = 32
ACCOUNT_LEN = 20
SIGNATURE_LEN = 64
EMPTY_DIGEST = b"\x00" * DIGEST_LEN  # sentinel root for an empty transaction set


def hash_bytes(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def account_for(public_key: bytes) -> bytes:
    """Derive the 20-byte account address from a raw public key."""
    return hash_bytes(public_key)[:ACCOUNT_LEN]


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 signing key plus its derived account address."""

    seed: bytes
    public_key: bytes
    account: bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        if len(seed) != 32:
            raise ValueError("key seed must be 32 bytes")
        sk = Ed25519PrivateKey.from_private_bytes(seed)
        pk = sk.public_key().public_bytes_raw()
        return cls(seed=seed, public_key=pk, account=account_for(pk))

    @classmethod
    def generate(cls, rng) -> "KeyPair":
        """Deterministic key generation from a seeded random.Random."""
        return cls.from_seed(rng.randbytes(32))

    def sign(self, message: bytes) -> bytes:
        return _private_key(self.seed).sign(message)


@lru_cache(maxsize=4096)
def _private_key(seed: bytes) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(seed)


@lru_cache(maxsize=4096)
def _public_key(raw: bytes) -> Ed25519PublicKey:
    return Ed25519PublicKey.from_public_bytes(raw)


@lru_cache(maxsize=1 << 16)
def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """Check an Ed25519 signature; False on any malformed input."""
    try:
        _public_key(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False
