"""Per-actor time-sorted transaction buckets for successor lookups.

Records are split by role into two bucket families:

* bridge records, grouped by (sender, origin chain) — the candidates that
  can follow a swap;
* swap records, grouped by (sender, chain) — the candidates that can
  follow a bridge, queried with the bridge's (receiver, destination chain)
  since the bridge delivers funds to that actor on that chain.

Every record belongs to exactly one family. Buckets are stored as CSR
(offsets + members) over record ids; ids are globally time-ordered, so
each bucket is automatically time-ascending. `qslot` precomputes, for each
record, the bucket in the opposite family its successors live in, which
removes all key searches from the hot search loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import chains
from .columns import KIND_BRIDGE, KIND_SWAP, RecordColumns

_KEY_SHIFT = 8  # chain codes fit in the low byte


def _pack(actor_codes: np.ndarray, chain_codes: np.ndarray) -> np.ndarray:
    return (actor_codes.astype(np.int64) << _KEY_SHIFT) | chain_codes.astype(np.int64)


def _group(keys: np.ndarray, ids: np.ndarray):
    """CSR-group ids by key; stable sort keeps time order inside buckets."""
    order = np.argsort(keys, kind="stable")
    members = ids[order]
    sorted_keys = keys[order]
    uniq, starts = np.unique(sorted_keys, return_index=True)
    offsets = np.append(starts, len(members)).astype(np.int64)
    return uniq, offsets, members.astype(np.int64)


@dataclass(frozen=True)
class TxIndex:
    """Successor-lookup index over a sorted column block."""

    columns: RecordColumns
    bridge_keys: np.ndarray   # sorted packed (sender, chain) of bridge buckets
    bridge_offsets: np.ndarray
    bridge_members: np.ndarray
    bridge_member_ts: np.ndarray
    swap_keys: np.ndarray     # sorted packed (sender, chain) of swap buckets
    swap_offsets: np.ndarray
    swap_members: np.ndarray
    swap_member_ts: np.ndarray
    qslot: np.ndarray         # per record: opposite-family bucket slot, -1 if none
    swap_ids: np.ndarray      # all swap record ids (search seeds), ascending
    effective: np.ndarray     # int8, swap that changes its canonical token

    def __len__(self) -> int:
        return len(self.columns)

    @classmethod
    def build(cls, columns: RecordColumns) -> "TxIndex":
        c = columns
        n = len(c)
        ids = np.arange(n, dtype=np.int64)
        is_bridge = c.kind == KIND_BRIDGE
        is_swap = ~is_bridge

        own_key = _pack(c.sender, c.chain)
        bkeys, boff, bmem = _group(own_key[is_bridge], ids[is_bridge])
        skeys, soff, smem = _group(own_key[is_swap], ids[is_swap])

        # swaps query the bridge family by (sender, chain); bridges query the
        # swap family by (receiver, dest)
        qkey = np.where(is_swap, own_key, _pack(c.receiver, np.where(is_bridge, c.dest, 0)))
        qslot = np.full(n, -1, dtype=np.int64)
        for mask, fam_keys in ((is_swap, bkeys), (is_bridge, skeys)):
            if not mask.any() or len(fam_keys) == 0:
                continue
            pos = np.searchsorted(fam_keys, qkey[mask])
            pos_clipped = np.minimum(pos, len(fam_keys) - 1)
            hit = fam_keys[pos_clipped] == qkey[mask]
            qslot[mask] = np.where(hit, pos_clipped, -1)

        effective = ((c.kind == KIND_SWAP) & (c.tok_in != c.tok_out)).astype(np.int8)
        return cls(
            columns=c,
            bridge_keys=bkeys, bridge_offsets=boff, bridge_members=bmem,
            bridge_member_ts=c.ts[bmem],
            swap_keys=skeys, swap_offsets=soff, swap_members=smem,
            swap_member_ts=c.ts[smem],
            qslot=qslot,
            swap_ids=ids[is_swap],
            effective=effective,
        )

    # -- string-keyed views (diagnostics and contract checks) ---------------

    def _bucket(self, family: str, actor: str, chain: str) -> np.ndarray:
        try:
            a = self.columns.actors.index(actor)
        except ValueError:
            return np.empty(0, dtype=np.int64)
        ch = chains.CODE[chains.resolve(chain)]
        key = (a << _KEY_SHIFT) | ch
        keys, off, mem = (
            (self.bridge_keys, self.bridge_offsets, self.bridge_members)
            if family == "bridge"
            else (self.swap_keys, self.swap_offsets, self.swap_members)
        )
        p = np.searchsorted(keys, key)
        if p >= len(keys) or keys[p] != key:
            return np.empty(0, dtype=np.int64)
        return mem[off[p]:off[p + 1]]

    def by_sender_chain_time(self, sender: str, chain: str) -> np.ndarray:
        """Bridge record ids sent by `sender` from `chain`, time-ascending."""
        return self._bucket("bridge", sender, chain)

    def by_receiver_chain_time(self, receiver: str, chain: str) -> np.ndarray:
        """Swap record ids an inbound bridge could feed: swaps executed by
        `receiver` on `chain`, time-ascending."""
        return self._bucket("swap", receiver, chain)

    # -- successor windows ---------------------------------------------------

    def successor_window(self, rec_id: int, window_secs: int) -> np.ndarray:
        """Ids in the opposite family's bucket with timestamp in
        (ts[rec], ts[rec] + window]; value/token/effectiveness filters are
        the caller's job."""
        slot = self.qslot[rec_id]
        if slot < 0:
            return np.empty(0, dtype=np.int64)
        if self.columns.kind[rec_id] == KIND_SWAP:
            off, mem, mem_ts = self.bridge_offsets, self.bridge_members, self.bridge_member_ts
        else:
            off, mem, mem_ts = self.swap_offsets, self.swap_members, self.swap_member_ts
        lo, hi = off[slot], off[slot + 1]
        t = self.columns.ts[rec_id]
        a = lo + np.searchsorted(mem_ts[lo:hi], t, side="right")
        b = lo + np.searchsorted(mem_ts[lo:hi], t + window_secs, side="right")
        return mem[a:b]

    @cached_property
    def hash_to_id(self) -> dict[str, int]:
        return {h.decode("utf-8"): i for i, h in enumerate(self.columns.hashes)}
