"""Pure protocol primitives shared by every hub node.

Everything here is deterministic and side-effect free: coin arithmetic, the
canonical byte encoding (the signing, hashing and golden-file format), the
transfer tuple, the per-epoch checkpoint state, the transaction merkle tree
and the balance-based leader election.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .crypto import DIGEST_LEN, EMPTY_DIGEST, hash_bytes, verify

MAX_COINS = 2**64 - 1

# Domain tags keep signatures over different payload kinds from colliding.
TXID_DOMAIN = b"payhub/txid|"
TX_DOMAIN = b"payhub/tx|"
STATE_DOMAIN = b"payhub/state|"


class ProtocolError(Exception):
    """Base class for protocol rule violations."""


class CoinError(ProtocolError):
    """Coin amount out of range, or arithmetic would wrap."""


class EncodingError(ProtocolError):
    """Malformed canonical encoding."""


class EmptyTransactionSet(ProtocolError):
    """Merkle root requested for an empty transaction set."""


class UnorderedTransactions(ProtocolError):
    """Transaction set not strictly ascending by transaction id."""


class OverspendError(ProtocolError):
    """A rollup or reservation would drive a balance negative."""


# ---------------------------------------------------------------------------
# Coins
# ---------------------------------------------------------------------------

def check_coins(amount: int) -> int:
    if not isinstance(amount, int) or isinstance(amount, bool):
        raise CoinError(f"coin amount must be an int, got {type(amount).__name__}")
    if amount < 0 or amount > MAX_COINS:
        raise CoinError(f"coin amount out of range: {amount}")
    return amount


def add_coins(a: int, b: int) -> int:
    total = check_coins(a) + check_coins(b)
    if total > MAX_COINS:
        raise CoinError("coin addition overflow")
    return total


def sub_coins(a: int, b: int) -> int:
    if check_coins(b) > check_coins(a):
        raise CoinError("coin subtraction underflow")
    return a - b


# ---------------------------------------------------------------------------
# Canonical encoding
# ---------------------------------------------------------------------------
#
# Fixed-width big-endian integers, 4-byte length prefixes for variable
# fields, fields in declaration order.  Injective by construction; used for
# every signature, digest and golden test vector in the system.

def enc_u64(x: int) -> bytes:
    return check_coins(x).to_bytes(8, "big")


def enc_bytes(b: bytes) -> bytes:
    if len(b) > 0xFFFFFFFF:
        raise EncodingError("byte field too long")
    return len(b).to_bytes(4, "big") + b


class _Reader:
    """Strict cursor over an encoded buffer."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise EncodingError("truncated encoding")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def bytes_(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> None:
        if self.pos != len(self.data):
            raise EncodingError("trailing bytes in encoding")


# ---------------------------------------------------------------------------
# Participants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Participant:
    """A hub member: ordinal position in join order plus account address."""

    index: int
    account: bytes


def participant_index(roster: Sequence[bytes], account: bytes) -> int:
    try:
        return roster.index(account)  # type: ignore[union-attr]
    except (ValueError, AttributeError):
        return list(roster).index(account)


# ---------------------------------------------------------------------------
# Transactions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Transaction:
    """An off-chain transfer: (epoch, tx_id, sender, receiver, amount) with
    the three signatures that make it complete."""

    epoch: int
    tx_id: int
    sender: bytes
    receiver: bytes
    amount: int
    leader_sig: bytes = b""
    sender_sig: bytes = b""
    receiver_sig: bytes = b""

    def core_encoding(self) -> bytes:
        """The five-field tuple both endpoint signatures cover."""
        return (
            enc_u64(self.epoch)
            + enc_u64(self.tx_id)
            + enc_bytes(self.sender)
            + enc_bytes(self.receiver)
            + enc_u64(self.amount)
        )


def tx_id_payload(epoch: int, tx_id: int, sender: bytes) -> bytes:
    """Bytes the leader signs when issuing a transaction id."""
    return TXID_DOMAIN + enc_u64(epoch) + enc_u64(tx_id) + enc_bytes(sender)


def tx_payload(tx: Transaction) -> bytes:
    """Bytes sender and receiver sign: the full transfer tuple."""
    return TX_DOMAIN + tx.core_encoding()


def encode_transaction(tx: Transaction) -> bytes:
    return (
        tx.core_encoding()
        + enc_bytes(tx.leader_sig)
        + enc_bytes(tx.sender_sig)
        + enc_bytes(tx.receiver_sig)
    )


def decode_transaction(data: bytes) -> Transaction:
    r = _Reader(data)
    tx = Transaction(
        epoch=r.u64(),
        tx_id=r.u64(),
        sender=r.bytes_(),
        receiver=r.bytes_(),
        amount=r.u64(),
        leader_sig=r.bytes_(),
        sender_sig=r.bytes_(),
        receiver_sig=r.bytes_(),
    )
    r.done()
    return tx


def transaction_complete(
    tx: Transaction, leader_pk: bytes, sender_pk: bytes, receiver_pk: bytes
) -> bool:
    """A transfer is complete iff all three signatures verify."""
    if tx.sender == tx.receiver or tx.amount <= 0:
        return False
    return (
        verify(leader_pk, tx_id_payload(tx.epoch, tx.tx_id, tx.sender), tx.leader_sig)
        and verify(sender_pk, tx_payload(tx), tx.sender_sig)
        and verify(receiver_pk, tx_payload(tx), tx.receiver_sig)
    )


# ---------------------------------------------------------------------------
# Epoch state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochState:
    """Per-epoch checkpoint: the balances entering the epoch, the merkle
    roots committing the previous epoch's transactions, and the enrollment
    and withdrawal sets taking effect at this boundary.

    Entries are (account, value) pairs; ``balances`` and ``tx_roots`` are in
    roster (join) order, ``enrollments`` in on-chain confirmation order. The
    accounts keyed in ``balances`` are exactly the members whose signatures
    make the state agreed.
    """

    epoch: int
    balances: tuple[tuple[bytes, int], ...]
    tx_roots: tuple[tuple[bytes, bytes], ...]
    enrollments: tuple[tuple[bytes, int], ...] = ()
    withdrawals: tuple[tuple[bytes, int], ...] = ()

    def roster(self) -> list[bytes]:
        return [acct for acct, _ in self.balances]

    def balance_of(self, account: bytes) -> int:
        for acct, amount in self.balances:
            if acct == account:
                return amount
        raise KeyError(account.hex())

    def root_of(self, account: bytes) -> bytes:
        for acct, root in self.tx_roots:
            if acct == account:
                return root
        raise KeyError(account.hex())

    def total(self) -> int:
        return sum(amount for _, amount in self.balances)

    def withdrawal_amount(self, account: bytes) -> int | None:
        for acct, amount in self.withdrawals:
            if acct == account:
                return amount
        return None


def encode_epoch_state(state: EpochState) -> bytes:
    def pairs_u64(entries: Iterable[tuple[bytes, int]]) -> bytes:
        items = list(entries)
        out = len(items).to_bytes(4, "big")
        for acct, amount in items:
            out += enc_bytes(acct) + enc_u64(amount)
        return out

    roots = list(state.tx_roots)
    out = enc_u64(state.epoch)
    out += pairs_u64(state.balances)
    out += len(roots).to_bytes(4, "big")
    for acct, root in roots:
        if len(root) != DIGEST_LEN:
            raise EncodingError("merkle root must be a full digest")
        out += enc_bytes(acct) + root
    out += pairs_u64(state.enrollments)
    out += pairs_u64(state.withdrawals)
    return out


def decode_epoch_state(data: bytes) -> EpochState:
    r = _Reader(data)
    epoch = r.u64()

    def pairs_u64() -> tuple[tuple[bytes, int], ...]:
        return tuple((r.bytes_(), r.u64()) for _ in range(r.u32()))

    balances = pairs_u64()
    tx_roots = tuple((r.bytes_(), r.take(DIGEST_LEN)) for _ in range(r.u32()))
    enrollments = pairs_u64()
    withdrawals = pairs_u64()
    r.done()
    return EpochState(epoch, balances, tx_roots, enrollments, withdrawals)


def state_payload(state: EpochState) -> bytes:
    """Bytes every member signs to agree on a checkpoint."""
    return STATE_DOMAIN + encode_epoch_state(state)


def state_digest(state: EpochState) -> bytes:
    return hash_bytes(state_payload(state))


@dataclass
class SignedEpochState:
    """A checkpoint plus the member signatures collected for it."""

    state: EpochState
    signatures: dict[bytes, bytes] = field(default_factory=dict)

    def fully_signed(self, directory: Mapping[bytes, bytes]) -> bool:
        """True iff every account keyed in the balances signed validly."""
        payload = state_payload(self.state)
        for acct in self.state.roster():
            sig = self.signatures.get(acct)
            pk = directory.get(acct)
            if sig is None or pk is None or not verify(pk, payload, sig):
                return False
        return True


# ---------------------------------------------------------------------------
# Transaction merkle tree
# ---------------------------------------------------------------------------

def tx_merkle_root(txs: Sequence[Transaction]) -> bytes:
    """Root committing a participant's epoch transactions and their order.

    Leaves are hashes of the fully signed canonical encodings; an internal
    node hashes the XOR of its two children.  The left subtree takes the
    first ceil(n/2) leaves.  Input must be strictly ascending by tx_id.
    """
    if not txs:
        raise EmptyTransactionSet("empty transaction set")
    for prev, cur in zip(txs, txs[1:]):
        if cur.tx_id <= prev.tx_id:
            raise UnorderedTransactions("unordered transactions")
    leaves = [hash_bytes(encode_transaction(tx)) for tx in txs]
    return _merkle(leaves, 0, len(leaves))


def _merkle(leaves: list[bytes], lo: int, hi: int) -> bytes:
    n = hi - lo
    if n == 1:
        return leaves[lo]
    mid = lo + math.ceil(n / 2)
    left = _merkle(leaves, lo, mid)
    right = _merkle(leaves, mid, hi)
    return hash_bytes(_xor_digest(left, right))


def _xor_digest(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(
        DIGEST_LEN, "big"
    )


def root_for(txs: Sequence[Transaction]) -> bytes:
    """Merkle root, with the all-zero sentinel for an empty epoch."""
    return tx_merkle_root(txs) if txs else EMPTY_DIGEST


# ---------------------------------------------------------------------------
# Leader election
# ---------------------------------------------------------------------------

def elect_leader(balances: Sequence[int]) -> int:
    """Index of the epoch leader, derived from the balance vector alone.

    XOR the 8-byte big-endian encodings of every balance, hash the folded
    word, and reduce the digest (as a big-endian integer) modulo n.  Every
    node holding the same balances computes the same index with no
    communication.
    """
    if not balances:
        raise ProtocolError("no participants")
    fold = 0
    for b in balances:
        fold ^= check_coins(b)
    digest = hash_bytes(fold.to_bytes(8, "big"))
    return int.from_bytes(digest, "big") % len(balances)


# ---------------------------------------------------------------------------
# Balance rollup
# ---------------------------------------------------------------------------

def next_balances(
    prev: Mapping[bytes, int],
    sent: Mapping[bytes, int],
    received: Mapping[bytes, int],
) -> dict[bytes, int]:
    """Next-epoch balances: previous minus sent plus received, per member.

    Preserves the total whenever the sent and received columns sum equally.
    Raises if any member's sent total exceeds its previous balance, which
    can only happen if the bookkeeping upstream was corrupted.
    """
    out: dict[bytes, int] = {}
    for acct, balance in prev.items():
        s = sent.get(acct, 0)
        r = received.get(acct, 0)
        if check_coins(s) > balance:
            raise OverspendError(f"overspend in rollup for {acct.hex()}")
        out[acct] = add_coins(sub_coins(balance, s), check_coins(r))
    return out
