"""Benchmark the compiled search kernel against the pure-Python fallback.

Builds dense synthetic datasets (a tiny shared vocabulary of actors,
chains, tokens, and lattice-aligned values, so pairwise continuity
matches are frequent and the search does real work), indexes each once,
then times ``search`` from both implementations on identical inputs.
Outputs are asserted identical before any timing is reported.

Usage:
    python3 benchmarks/bench_kernel.py
    python3 benchmarks/bench_kernel.py --sizes 1000,4000 --repeat 5
"""

from __future__ import annotations

import argparse
import random
import time
from decimal import Decimal

from hopscan import _kernel_py
from hopscan.columns import RecordColumns
from hopscan.index import TxIndex
from hopscan.matcher import DetectionConfig
from hopscan.model import validate_record

try:
    from hopscan import _kernel as _compiled
except ImportError:
    _compiled = None

CHAINS = ("base", "optimism", "arbitrum", "ethereum")
TOKENS = ("USDC", "WETH")
VALUES = (
    "1000", "999.5", "990", "981", "980.000001",
    "980", "979.999999", "960.4", "960.400001",
)


def dense_records(rng: random.Random, count: int):
    """Records over a tiny vocabulary so continuity matches are dense."""
    span = max(count * 4, 600)
    rows = []
    for i in range(count):
        chain = rng.choice(CHAINS)
        row = {
            "hash": f"0x{i:040x}",
            "timestamp": str(rng.randrange(0, span)),
            "sender": f"0xa{rng.randrange(2)}",
            "receiver": f"0xa{rng.randrange(2)}",
            "chain": chain,
            "dest_chain": "",
            "token_in": rng.choice(TOKENS),
            "token_out": rng.choice(TOKENS),
            "value_in_usd": rng.choice(VALUES),
            "value_out_usd": rng.choice(VALUES),
            "kind": "swap",
            "leg_count": "2",
        }
        if rng.random() < 0.5:
            token = rng.choice(TOKENS)
            row.update(
                kind="bridge",
                dest_chain=rng.choice([c for c in CHAINS if c != chain]),
                token_in=token,
                token_out=token,
            )
        rows.append(validate_record(row))
    return rows


def kernel_inputs(records, config: DetectionConfig):
    index = TxIndex.build(RecordColumns.from_records(records))
    c = index.columns
    args = (
        c.ts, c.vin, c.vout, c.tok_in, c.tok_out, c.kind, index.effective,
        index.qslot,
        index.bridge_offsets, index.bridge_members, index.bridge_member_ts,
        index.swap_offsets, index.swap_members, index.swap_member_ts,
    )
    tail = (
        config.window_secs, config.tolerance_micro,
        config.min_len, config.max_len,
    )
    return args, index.swap_ids, tail


def time_search(search, args, seeds, tail, repeat: int):
    flat, best = None, float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        flat = search(*args, seeds, *tail)
        best = min(best, time.perf_counter() - started)
    return list(int(x) for x in flat), best


def count_paths(flat) -> int:
    i = paths = 0
    while i < len(flat):
        i += 1 + int(flat[i])
        paths += 1
    return paths


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--sizes", default="1000,2000,4000",
        help="comma-separated dataset sizes (default: 1000,2000,4000)",
    )
    parser.add_argument(
        "--repeat", type=int, default=3,
        help="timing repetitions; the best run is reported (default: 3)",
    )
    parser.add_argument("--seed", type=int, default=1234)
    ns = parser.parse_args()

    if _compiled is None:
        print("compiled kernel is not built; nothing to compare")
        print("build it with: pip install -e . --no-build-isolation")
        return 0

    config = DetectionConfig()
    print(f"{'records':>8} {'paths':>7} {'compiled':>10} "
          f"{'pure-python':>12} {'speedup':>8}")
    for size in (int(s) for s in ns.sizes.split(",")):
        records = dense_records(random.Random(ns.seed), size)
        args, seeds, tail = kernel_inputs(records, config)

        flat_c, secs_c = time_search(
            _compiled.search, args, seeds, tail, ns.repeat
        )
        flat_p, secs_p = time_search(
            _kernel_py.search, args, seeds, tail, ns.repeat
        )
        assert flat_c == flat_p, "kernel outputs diverged"

        print(f"{size:>8,} {count_paths(flat_c):>7,} {secs_c:>9.4f}s "
              f"{secs_p:>11.4f}s {secs_p / max(secs_c, 1e-9):>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
