"""Multihop path search over an indexed dataset.

`find_paths` drives the active kernel (compiled or pure Python) over every
swap seed and returns maximal, deduplicated, deterministically ordered
`ArbitragePath` objects. `brute_force_find` is an independent oracle for
small inputs: it shares no code with the kernel route — it walks raw
records with the record-level pairwise predicate — so the two can
cross-check each other.
"""

from __future__ import annotations

from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernel
from .columns import USD_SCALE
from .errors import InputTooLarge, InvalidSpec
from .index import TxIndex
from .matcher import DetectionConfig, phi
from .model import ArbitragePath, TransactionRecord, has_effective_swap, path_shape_ok

BRUTE_FORCE_LIMIT = 2000


@dataclass(frozen=True)
class CandidateChain:
    """A partial path under construction, referenced by record ids."""

    ids: tuple[int, ...]
    index: TxIndex

    @classmethod
    def seed(cls, index: TxIndex, rec_id: int) -> "CandidateChain":
        return cls(ids=(int(rec_id),), index=index)

    @property
    def records(self) -> tuple[TransactionRecord, ...]:
        return tuple(self.index.columns.record(i) for i in self.ids)

    @property
    def duration_secs(self) -> int:
        ts = self.index.columns.ts
        return int(ts[self.ids[-1]] - ts[self.ids[0]])

    @property
    def consumed(self) -> frozenset[str]:
        return frozenset(self.index.columns.hash_str(i) for i in self.ids)

    def as_path(self) -> ArbitragePath:
        return self.index.columns.path(self.ids)


def _admissible_successors(index: TxIndex, rec_id: int, cfg: DetectionConfig) -> list[int]:
    """Successor ids passing the time window, token, and value-band checks."""
    c = index.columns
    vo = int(c.vout[rec_id])
    t_out = int(c.tok_out[rec_id])
    tol = cfg.tolerance_micro
    out = []
    for cand in index.successor_window(rec_id, cfg.window_secs).tolist():
        if int(c.tok_in[cand]) != t_out:
            continue
        vi = int(c.vin[cand])
        if vi > vo or tol * vo > USD_SCALE * vi:
            continue
        out.append(cand)
    return out


def extend(chain: CandidateChain, index: TxIndex, config: DetectionConfig) -> list[CandidateChain]:
    """All one-transaction extensions of a candidate chain.

    Applies exactly the per-pair filters the search kernel applies, so a
    chain's extensions here equal the kernel's branch set at that node.
    """
    return [
        CandidateChain(ids=chain.ids + (c,), index=index)
        for c in _admissible_successors(index, chain.ids[-1], config)
    ]


def is_effective(path) -> bool:
    """False iff every swap keeps its canonical token (a no-op round trip)."""
    txs = path.transactions if isinstance(path, ArbitragePath) else path
    return has_effective_swap(txs)


def _dedupe_sequences(seqs: Sequence[tuple]) -> list[int]:
    """Indices of sequences that are not contiguous subsequences of another.

    Exact duplicates keep their first occurrence. Containment is checked
    against kept longer sequences only; contiguity makes containment
    transitive, so that is sufficient.
    """
    order = sorted(range(len(seqs)), key=lambda i: (-len(seqs[i]), i))
    kept: list[int] = []
    by_elem: dict[object, list[int]] = {}  # element -> kept seq indices
    seen: set[tuple] = set()
    for i in order:
        s = seqs[i]
        if s in seen:
            continue
        candidates = by_elem.get(s[0], ())
        swallowed = False
        for j in candidates:
            k = seqs[j]
            if len(k) <= len(s):
                continue
            L = len(s)
            if any(k[p:p + L] == s for p in range(len(k) - L + 1)):
                swallowed = True
                break
        if swallowed:
            continue
        seen.add(s)
        kept.append(i)
        for e in set(s):
            by_elem.setdefault(e, []).append(i)
    kept.sort()
    return kept


def dedupe_maximal(paths: Sequence[ArbitragePath]) -> list[ArbitragePath]:
    """Drop every path whose transaction sequence is a contiguous
    subsequence of another detected path's sequence."""
    seqs = [p.hash_sequence() for p in paths]
    return [paths[i] for i in _dedupe_sequences(seqs)]


def find_paths(
    index: TxIndex, config: DetectionConfig, threads: int = 1
) -> list[ArbitragePath]:
    """Detect all maximal arbitrage paths in the indexed dataset.

    Output is sorted by the per-transaction (timestamp, hash) sequence and
    is independent of `threads`, which only partitions the search seeds.
    """
    c = index.columns
    args = (
        c.ts, c.vin, c.vout, c.tok_in, c.tok_out, c.kind, index.effective,
        index.qslot,
        index.bridge_offsets, index.bridge_members, index.bridge_member_ts,
        index.swap_offsets, index.swap_members, index.swap_member_ts,
    )
    tail = (config.window_secs, config.tolerance_micro, config.min_len, config.max_len)

    seeds = index.swap_ids
    if threads > 1 and len(seeds) > threads:
        chunks = np.array_split(seeds, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flats = list(pool.map(lambda ch: kernel.search(*args, ch, *tail), chunks))
    else:
        flats = [kernel.search(*args, seeds, *tail)]

    id_seqs: list[tuple[int, ...]] = []
    for flat in flats:
        i = 0
        n = len(flat)
        while i < n:
            length = int(flat[i])
            i += 1
            id_seqs.append(tuple(int(x) for x in flat[i:i + length]))
            i += length

    id_seqs.sort()
    kept = _dedupe_sequences(id_seqs)
    return [c.path(id_seqs[i]) for i in kept]


def validate_path(
    transactions: Sequence[TransactionRecord], config: DetectionConfig
) -> bool:
    """Full recheck of a complete path: shape, pairwise continuity,
    effectiveness, and hop bounds. Used as a defense-in-depth assertion on
    anything the search emits."""
    txs = tuple(transactions)
    if not path_shape_ok(txs):
        return False
    hops = (len(txs) + 1) // 2
    if not (config.min_hops <= hops <= config.max_hops):
        return False
    if not has_effective_swap(txs):
        return False
    return all(phi(a, b, config) for a, b in zip(txs, txs[1:]))


def brute_force_find(
    records: Iterable[TransactionRecord], config: DetectionConfig
) -> list[ArbitragePath]:
    """Exhaustive oracle search over raw records (no index, no kernel).

    Guards against inputs larger than BRUTE_FORCE_LIMIT records, since the
    search is superlinear. Semantics match `find_paths`: maximal
    deduplicated effective paths, same ordering.
    """
    recs = sorted(records, key=lambda r: r.sort_key())
    if len(recs) > BRUTE_FORCE_LIMIT:
        raise InputTooLarge(len(recs), BRUTE_FORCE_LIMIT)
    for r in recs:
        if not isinstance(r, TransactionRecord):
            raise InvalidSpec(f"expected TransactionRecord, got {type(r).__name__}")

    times = [r.timestamp for r in recs]
    found: list[tuple[TransactionRecord, ...]] = []
    stack: list[TransactionRecord] = []

    def dfs(last_i: int) -> None:
        length = len(stack)
        if length % 2 == 1 and length >= config.min_len:
            if has_effective_swap(stack):
                found.append(tuple(stack))
        if length >= config.max_len:
            return
        last = recs[last_i]
        hi = bisect_right(times, last.timestamp + config.window_secs)
        for j in range(last_i + 1, hi):
            cand = recs[j]
            if cand.timestamp <= last.timestamp:
                continue
            if phi(last, cand, config):
                stack.append(cand)
                dfs(j)
                stack.pop()

    for i, r in enumerate(recs):
        if r.is_swap:
            stack.append(r)
            dfs(i)
            stack.pop()

    seqs = [tuple(t.hash for t in p) for p in found]
    kept = _dedupe_sequences(seqs)
    paths = [ArbitragePath.from_transactions(found[i]) for i in kept]
    paths.sort(key=lambda p: p.sort_key())
    return paths
