"""Columnar record storage backing the index and the search kernels.

Records live in parallel numpy arrays sorted by (timestamp, hash), so a
record id doubles as its global chronological rank; hash ties share a
timestamp only, never a hash (uniqueness is enforced upstream). String
fields (actors, token symbols) are interned to dense integer codes; USD
values are held as exact micro-USD int64.
"""

from __future__ import annotations

from collections.abc import Sequence as SequenceABC
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np

from . import chains
from .errors import DuplicateHash
from .model import (
    ArbitragePath,
    CanonicalToken,
    Kind,
    TransactionRecord,
    USD_EXPONENT,
)

KIND_SWAP = 0
KIND_BRIDGE = 1

USD_SCALE = 1_000_000


class StrTable(SequenceABC):
    """Read-only string table over a tuple or a columnar series.

    Code-to-string tables can hold tens of millions of entries on large
    datasets; keeping them in columnar form instead of Python tuples
    saves gigabytes. Only integer lookup is on the hot path — the
    Sequence mixins (``index``, ``in``, iteration) are linear scans for
    diagnostics on small data.
    """

    __slots__ = ("_data",)

    def __init__(self, data) -> None:
        self._data = data

    def __getitem__(self, i):
        return self._data[int(i)]

    def __len__(self) -> int:
        return len(self._data)


def usd_to_micro(value: Decimal) -> int:
    """Exact micro-USD integer for a 6-dp fixed-point decimal."""
    return int(value.scaleb(6))


def micro_to_usd(micro: int) -> Decimal:
    return Decimal(int(micro)).scaleb(-6).quantize(USD_EXPONENT)


def order_by_time_then_hash(ts: np.ndarray, hashes: np.ndarray) -> np.ndarray:
    """Permutation sorting by timestamp, hash bytes breaking ties.

    A full lexsort over the hash column is wasteful when ties are sparse,
    so only the tied rows get the byte-wise pass. UTF-8 byte order matches
    code-point order, so the tiebreak equals lexicographic order on the
    hash string.
    """
    order = np.argsort(ts, kind="stable")
    st = ts[order]
    tied = np.empty(len(ts), dtype=bool)
    if len(ts) == 0:
        return order
    tied[0] = False
    tied[1:] = st[1:] == st[:-1]
    if not tied.any():
        return order
    # a row is in a tie run if it equals its predecessor or successor
    in_run = tied.copy()
    in_run[:-1] |= tied[1:]
    pos = np.flatnonzero(in_run)
    sub = order[pos]
    sub = sub[np.lexsort((hashes[sub], ts[sub]))]
    order[pos] = sub
    return order


@dataclass(frozen=True)
class RecordColumns:
    """Immutable column block; arrays are sorted by (timestamp, hash)."""

    ts: np.ndarray          # int64 epoch seconds
    kind: np.ndarray        # int8, KIND_SWAP / KIND_BRIDGE
    chain: np.ndarray       # int16 chain codes
    dest: np.ndarray        # int16, chains.NO_CHAIN for swaps
    sender: np.ndarray      # int32 actor codes
    receiver: np.ndarray    # int32 actor codes
    tok_in: np.ndarray      # int32 canonical symbol codes
    tok_out: np.ndarray     # int32 canonical symbol codes
    tok_in_native: np.ndarray
    tok_out_native: np.ndarray
    vin: np.ndarray         # int64 micro-USD
    vout: np.ndarray        # int64 micro-USD
    legs: np.ndarray        # int32 raw leg count (2 = atomic)
    hashes: np.ndarray      # fixed-width bytes, UTF-8
    actors: Sequence[str]   # code -> address (tuple or StrTable)
    tokens: Sequence[str]   # code -> symbol

    def __len__(self) -> int:
        return len(self.ts)

    @classmethod
    def from_records(cls, records: Sequence[TransactionRecord]) -> "RecordColumns":
        n = len(records)
        actor_code: dict[str, int] = {}
        token_code: dict[str, int] = {}

        def actor(a: str) -> int:
            c = actor_code.get(a)
            if c is None:
                c = len(actor_code)
                actor_code[a] = c
            return c

        def token(t: str) -> int:
            c = token_code.get(t)
            if c is None:
                c = len(token_code)
                token_code[t] = c
            return c

        ts = np.empty(n, np.int64)
        kind = np.empty(n, np.int8)
        chain = np.empty(n, np.int16)
        dest = np.empty(n, np.int16)
        sender = np.empty(n, np.int32)
        receiver = np.empty(n, np.int32)
        tok_in = np.empty(n, np.int32)
        tok_out = np.empty(n, np.int32)
        tok_in_native = np.empty(n, np.int32)
        tok_out_native = np.empty(n, np.int32)
        vin = np.empty(n, np.int64)
        vout = np.empty(n, np.int64)
        legs = np.empty(n, np.int32)
        raw_hashes: list[bytes] = []
        seen: set[str] = set()

        for i, r in enumerate(records):
            if r.hash in seen:
                raise DuplicateHash(r.hash)
            seen.add(r.hash)
            ts[i] = r.timestamp
            kind[i] = KIND_SWAP if r.kind is Kind.SWAP else KIND_BRIDGE
            chain[i] = chains.CODE[r.chain]
            dest[i] = chains.NO_CHAIN if r.dest_chain is None else chains.CODE[r.dest_chain]
            sender[i] = actor(r.sender)
            receiver[i] = actor(r.receiver)
            tok_in[i] = token(r.token_in.symbol)
            tok_out[i] = token(r.token_out.symbol)
            tok_in_native[i] = token(r.token_in.native_chain_symbol)
            tok_out_native[i] = token(r.token_out.native_chain_symbol)
            vin[i] = usd_to_micro(r.value_in_usd)
            vout[i] = usd_to_micro(r.value_out_usd)
            legs[i] = r.legs
            raw_hashes.append(r.hash.encode("utf-8"))

        hashes = np.array(raw_hashes, dtype=bytes) if n else np.empty(0, dtype="S1")
        order = order_by_time_then_hash(ts, hashes)
        return cls(
            ts=ts[order], kind=kind[order], chain=chain[order], dest=dest[order],
            sender=sender[order], receiver=receiver[order],
            tok_in=tok_in[order], tok_out=tok_out[order],
            tok_in_native=tok_in_native[order], tok_out_native=tok_out_native[order],
            vin=vin[order], vout=vout[order], legs=legs[order],
            hashes=hashes[order],
            actors=tuple(actor_code),
            tokens=tuple(token_code),
        )

    @classmethod
    def from_arrays(cls, **kw) -> "RecordColumns":
        """Assemble from pre-built arrays (fast ingest path); sorts in place."""
        order = order_by_time_then_hash(kw["ts"], kw["hashes"])
        sorted_kw = {
            k: (v[order] if isinstance(v, np.ndarray) else v) for k, v in kw.items()
        }
        return cls(**sorted_kw)

    def hash_str(self, i: int) -> str:
        return self.hashes[i].decode("utf-8")

    def record(self, i: int) -> TransactionRecord:
        k = Kind.SWAP if self.kind[i] == KIND_SWAP else Kind.BRIDGE
        d = int(self.dest[i])
        return TransactionRecord(
            hash=self.hash_str(i),
            timestamp=int(self.ts[i]),
            sender=self.actors[self.sender[i]],
            receiver=self.actors[self.receiver[i]],
            chain=chains.CHAIN_IDS[self.chain[i]],
            dest_chain=None if d == chains.NO_CHAIN else chains.CHAIN_IDS[d],
            token_in=CanonicalToken(
                symbol=self.tokens[self.tok_in[i]],
                native_chain_symbol=self.tokens[self.tok_in_native[i]],
            ),
            token_out=CanonicalToken(
                symbol=self.tokens[self.tok_out[i]],
                native_chain_symbol=self.tokens[self.tok_out_native[i]],
            ),
            value_in_usd=micro_to_usd(self.vin[i]),
            value_out_usd=micro_to_usd(self.vout[i]),
            kind=k,
            legs=int(self.legs[i]),
        )

    def to_records(self) -> list[TransactionRecord]:
        return [self.record(i) for i in range(len(self))]

    def path(self, ids: Iterable[int]) -> ArbitragePath:
        return ArbitragePath.from_transactions([self.record(i) for i in ids])
