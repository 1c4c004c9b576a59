"""Independent oracles for the core protocol operations.

These deliberately avoid the package's own helpers: each one re-derives the
expected result directly from the published construction (slice-based merkle
recursion, word-wise XOR fold, one-transfer-at-a-time balance replay) so the
implementation is checked against a separately written path.
"""

import functools
import hashlib
import math
import struct


def merkle_oracle(leaf_preimages):
    """Direct recursion: H(x) for one leaf, H(left XOR right) otherwise,
    splitting the ordered set at ceil(n/2)."""

    def rec(items):
        if len(items) == 1:
            return hashlib.sha256(items[0]).digest()
        mid = math.ceil(len(items) / 2)
        left = rec(items[:mid])
        right = rec(items[mid:])
        return hashlib.sha256(bytes(a ^ b for a, b in zip(left, right))).digest()

    return rec(list(leaf_preimages))


def election_oracle(balances):
    """XOR the 8-byte words, hash, reduce the digest mod n."""
    words = [struct.pack(">Q", b) for b in balances]
    fold = functools.reduce(
        lambda a, b: bytes(x ^ y for x, y in zip(a, b)), words
    )
    digest = hashlib.sha256(fold).hexdigest()
    return int(digest, 16) % len(balances)


def replay_balances(initial, transfers):
    """Apply (sender, receiver, amount) transfers one at a time."""
    balances = dict(initial)
    incoming = {acct: 0 for acct in balances}
    for sender, receiver, amount in transfers:
        assert balances[sender] >= amount, "oracle fed an overspending workload"
        balances[sender] -= amount
        incoming[receiver] += amount
    for acct, got in incoming.items():
        balances[acct] += got
    return balances
