"""Domain types for swap/bridge events and detected arbitrage paths.

All types are immutable after construction and safe to share across
workers. USD amounts are fixed-point decimals with 6 fractional digits
(rounded half-even at ingest), so boundary comparisons such as the 0.98
value band are exact. Timestamps are integer seconds; ordering ties are
broken by (timestamp, hash).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN
from typing import Iterable, Mapping, Sequence

from . import chains
from .errors import (
    BridgeSameChain,
    InvalidField,
    MissingField,
    NegativeValue,
    UnknownKind,
)

USD_EXPONENT = Decimal("0.000001")  # 6 fractional digits
MAX_USD = Decimal(10) ** 12  # magnitude cap keeping micro-USD inside int64
# window arithmetic adds offsets to timestamps in int64; the bound leaves
# headroom so ts + window can never overflow
MAX_TIMESTAMP = 2 ** 62
MAX_LEG_COUNT = 1_000_000

# ASCII-only numeric grammars. Python's int()/Decimal() also accept
# underscores and non-ASCII digits; both ingest routes must agree on the
# accepted set, so the stricter machine-format grammar is enforced here.
_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
_DECIMAL_RE = re.compile(r"[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?\Z")


class Kind(enum.Enum):
    SWAP = "swap"
    BRIDGE = "bridge"


@dataclass(frozen=True, slots=True)
class CanonicalToken:
    """Chain-scoped token identity after cross-chain equivalence mapping.

    Equality and hashing use only the canonical symbol: two tokens are the
    same asset iff their canonical symbols match, regardless of the raw
    chain-local symbol they were ingested under.
    """

    symbol: str
    native_chain_symbol: str

    def __eq__(self, other) -> bool:
        if not isinstance(other, CanonicalToken):
            return NotImplemented
        return self.symbol == other.symbol

    def __hash__(self) -> int:
        return hash(self.symbol)

    @classmethod
    def raw(cls, symbol: str) -> "CanonicalToken":
        """A token that has not been remapped (canonical == native)."""
        return cls(symbol=symbol, native_chain_symbol=symbol)


@dataclass(frozen=True, slots=True)
class TransactionRecord:
    """One normalized swap or bridge event.

    For bridges, `chain` is the origin and `dest_chain` the delivery chain;
    swaps carry dest_chain=None. `value_in_usd`/`value_out_usd` are the USD
    value entering and leaving the transaction.
    """

    hash: str
    timestamp: int
    sender: str
    receiver: str
    chain: str
    dest_chain: str | None
    token_in: CanonicalToken
    token_out: CanonicalToken
    value_in_usd: Decimal
    value_out_usd: Decimal
    kind: Kind
    legs: int = 2  # token legs in the raw event; > 2 marks a multi-asset swap

    @property
    def is_swap(self) -> bool:
        return self.kind is Kind.SWAP

    @property
    def is_bridge(self) -> bool:
        return self.kind is Kind.BRIDGE

    def sort_key(self) -> tuple[int, str]:
        return (self.timestamp, self.hash)


def parse_usd(value, field_name: str) -> Decimal:
    """Parse a USD amount to fixed-point with 6 fractional digits.

    Accepts decimal strings, ints, and Decimals. Rounds half-even, matching
    the ingest contract. Floats are rejected: binary floats smuggle drift
    into the exact boundary comparisons.
    """
    if isinstance(value, bool):
        raise InvalidField(field_name, value, "not a decimal number")
    if isinstance(value, float):
        raise InvalidField(field_name, value, "floats are not exact; pass a string")
    try:
        d = Decimal(value)
    except (InvalidOperation, TypeError, ValueError):
        raise InvalidField(field_name, value, "not a decimal number") from None
    if not d.is_finite():
        raise InvalidField(field_name, value, "not finite")
    if isinstance(value, str) and not _DECIMAL_RE.match(value.strip()):
        raise InvalidField(field_name, value, "not a decimal number")
    return d.quantize(USD_EXPONENT, rounding=ROUND_HALF_EVEN)


_KIND_LOOKUP = {
    "swap": Kind.SWAP,
    "bridge": Kind.BRIDGE,
}


def parse_kind(value) -> Kind:
    if isinstance(value, Kind):
        return value
    try:
        return _KIND_LOOKUP[str(value).strip().lower()]
    except KeyError:
        raise UnknownKind(str(value)) from None


_REQUIRED = ("hash", "timestamp", "sender", "receiver", "chain",
             "token_in", "token_out", "value_in_usd", "value_out_usd", "kind")


def validate_record(raw: Mapping) -> TransactionRecord:
    """Build a TransactionRecord from a raw field map, enforcing invariants.

    Raises MissingField, NegativeValue, BridgeSameChain, UnknownChain,
    UnknownKind, or InvalidField. Tokens are taken as raw symbols here;
    cross-chain canonicalization happens later in ingest.
    """
    def missing(name):
        v = raw.get(name)
        return v is None or (isinstance(v, str) and v.strip() == "")

    for name in _REQUIRED:
        if missing(name):
            raise MissingField(name)

    kind = parse_kind(raw["kind"])
    chain = chains.resolve(str(raw["chain"]))

    if kind is Kind.BRIDGE:
        if missing("dest_chain"):
            raise MissingField("dest_chain")
        dest_chain = chains.resolve(str(raw["dest_chain"]))
        if dest_chain == chain:
            raise BridgeSameChain(chain)
    else:
        if not missing("dest_chain"):
            raise InvalidField("dest_chain", raw["dest_chain"],
                               "swaps must not carry a destination chain")
        dest_chain = None

    ts_text = str(raw["timestamp"]).strip()
    if not _INT_RE.match(ts_text):
        raise InvalidField("timestamp", raw["timestamp"], "not an integer")
    timestamp = int(ts_text)
    if abs(timestamp) > MAX_TIMESTAMP:
        raise InvalidField("timestamp", raw["timestamp"], "exceeds supported range")

    value_in = parse_usd(raw["value_in_usd"], "value_in_usd")
    value_out = parse_usd(raw["value_out_usd"], "value_out_usd")
    if value_in < 0:
        raise NegativeValue("value_in_usd", raw["value_in_usd"])
    if value_out < 0:
        raise NegativeValue("value_out_usd", raw["value_out_usd"])
    if value_in > MAX_USD:
        raise InvalidField("value_in_usd", raw["value_in_usd"],
                           "exceeds supported magnitude")
    if value_out > MAX_USD:
        raise InvalidField("value_out_usd", raw["value_out_usd"],
                           "exceeds supported magnitude")

    tok_in = raw["token_in"]
    tok_out = raw["token_out"]
    if not isinstance(tok_in, CanonicalToken):
        tok_in = CanonicalToken.raw(str(tok_in).strip())
    if not isinstance(tok_out, CanonicalToken):
        tok_out = CanonicalToken.raw(str(tok_out).strip())

    if missing("leg_count"):
        legs = 2
    else:
        legs_text = str(raw["leg_count"]).strip()
        if not _INT_RE.match(legs_text):
            raise InvalidField("leg_count", raw["leg_count"], "not an integer")
        legs = int(legs_text)
        if legs < 1:
            raise InvalidField("leg_count", raw["leg_count"], "must be >= 1")
        if legs > MAX_LEG_COUNT:
            raise InvalidField("leg_count", raw["leg_count"], "exceeds supported range")

    return TransactionRecord(
        hash=str(raw["hash"]).strip(),
        timestamp=timestamp,
        sender=str(raw["sender"]).strip(),
        receiver=str(raw["receiver"]).strip(),
        chain=chain,
        dest_chain=dest_chain,
        token_in=tok_in,
        token_out=tok_out,
        value_in_usd=value_in,
        value_out_usd=value_out,
        kind=kind,
        legs=legs,
    )


def path_shape_ok(transactions: Sequence[TransactionRecord]) -> bool:
    """True iff the list is an odd-length >= 3 swap/bridge alternation.

    Positions 1, 3, 5, ... (1-indexed) must be swaps and positions
    2, 4, ... bridges, so the sequence starts and ends with a swap.
    """
    n = len(transactions)
    if n < 3 or n % 2 == 0:
        return False
    for i, tx in enumerate(transactions):
        want = Kind.SWAP if i % 2 == 0 else Kind.BRIDGE
        if tx.kind is not want:
            return False
    return True


def has_effective_swap(transactions: Iterable[TransactionRecord]) -> bool:
    """True iff at least one swap step changes the canonical token."""
    return any(
        tx.kind is Kind.SWAP and tx.token_in != tx.token_out
        for tx in transactions
    )


@dataclass(frozen=True, slots=True)
class ArbitragePath:
    """An ordered, validated sequence of 2n-1 alternating transactions.

    Constructed through `from_transactions`, which enforces the shape and
    effectiveness invariants. Pairwise continuity (the phi predicate) is
    the producer's contract: pathfinder only mints paths whose consecutive
    pairs all validate.
    """

    transactions: tuple[TransactionRecord, ...]
    hops: int
    duration_secs: int
    gross_profit_usd: Decimal

    @classmethod
    def from_transactions(
        cls, transactions: Sequence[TransactionRecord]
    ) -> "ArbitragePath":
        txs = tuple(transactions)
        if not path_shape_ok(txs):
            raise InvalidField(
                "transactions", [t.hash for t in txs],
                "not an odd-length >= 3 swap/bridge alternation",
            )
        if not has_effective_swap(txs):
            raise InvalidField(
                "transactions", [t.hash for t in txs],
                "every swap keeps its canonical token; not an economic arbitrage",
            )
        duration = txs[-1].timestamp - txs[0].timestamp
        if duration < 0:
            raise InvalidField("transactions", duration, "timestamps not ordered")
        return cls(
            transactions=txs,
            hops=(len(txs) + 1) // 2,
            duration_secs=duration,
            gross_profit_usd=txs[-1].value_out_usd - txs[0].value_in_usd,
        )

    @property
    def chain_sequence(self) -> tuple[str, ...]:
        """Chains visited, in order, one entry per hop (revisits kept)."""
        return tuple(tx.chain for tx in self.transactions if tx.kind is Kind.SWAP)

    @property
    def token_display(self) -> tuple[str, ...]:
        """Distinct canonical swap tokens in order of first appearance."""
        seen: list[str] = []
        for tx in self.transactions:
            if tx.kind is not Kind.SWAP:
                continue
            for sym in (tx.token_in.symbol, tx.token_out.symbol):
                if sym not in seen:
                    seen.append(sym)
        return tuple(seen)

    def hash_sequence(self) -> tuple[str, ...]:
        return tuple(tx.hash for tx in self.transactions)

    def sort_key(self) -> tuple:
        return tuple(tx.sort_key() for tx in self.transactions)
