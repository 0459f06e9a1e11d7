"""Synthetic dataset generation with planted ground truth.

Three layers:

* :func:`plant` turns a :class:`PlantSpec` into the ``2n - 1``
  transaction records of one n-hop arbitrage path, returning the
  records together with their hash sequence as the ground-truth id;
* :func:`gen_noise` / :func:`gen_noise_frame` produce background
  transactions that are deterministic per seed and, by construction,
  never share an actor with planted paths (each generator is
  deterministic for a given seed; the two generators are independent
  implementations and do not mirror each other row for row);
* :func:`golden_table1` assembles the reference dataset: ten planted
  paths (eight three-hop, two four-hop sharing one actor) over a year
  of noise, plus the summary report the detector is expected to
  reproduce exactly.

Writers in this module emit the same CSV/JSONL schema the ingest layer
reads, so a generated dataset round-trips bit-for-bit through
``parse_dataset``.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from decimal import Decimal, ROUND_CEILING
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import polars as pl

from . import chains
from .analytics import SummaryReport, summarize
from .errors import InvalidSpec, UnknownChain, UnknownFormat, ValidationError
from .ingest import SCHEMA_COLUMNS, TokenEquivalenceMap, canonicalize
from .matcher import DetectionConfig
from .model import MAX_USD, ArbitragePath, TransactionRecord, validate_record
from .pathfinder import validate_path

__all__ = [
    "PlantSpec",
    "PlantedPath",
    "GoldenDataset",
    "plant",
    "gen_noise",
    "gen_noise_frame",
    "write_dataset",
    "write_frame",
    "golden_table1",
    "GOLDEN_SEED",
]

_SIX = Decimal("0.000001")

# Default background-token vocabulary: a spread of majors, stables and
# the wrapped/bridged variants the equivalence map knows about.
NOISE_TOKENS = (
    "USDC", "USDC.e", "USDT", "DAI", "WETH", "WBTC", "ARB", "OP", "HOP",
    "BAL", "ezETH", "WMATIC", "axlUSDC", "LINK", "UNI", "AAVE", "ATOM", "OSMO",
)


def _fmt_usd(value: Decimal) -> str:
    """Fixed-point rendering (never scientific notation)."""
    return format(value, "f")


def _plant_hash(actor: str, start_ts: int, i: int) -> str:
    digest = hashlib.sha256(f"plant|{actor}|{start_ts}|{i}".encode()).hexdigest()
    return "0x" + digest[:40]


def _pool_address(actor: str, i: int) -> str:
    digest = hashlib.sha256(f"pool|{actor}|{i}".encode()).hexdigest()
    return "0x" + digest[:40]


@dataclass(frozen=True, slots=True)
class PlantSpec:
    """Blueprint for one planted arbitrage path.

    ``chains`` lists the chain of each swap (consecutive entries must
    differ); ``swap_tokens`` gives the raw ``(token_in, token_out)``
    pair of each swap.  Bridges are derived: bridge *i* carries swap
    *i*'s outbound symbol out of its chain and delivers swap *i+1*'s
    inbound symbol on the next chain.  ``gaps`` are the ``2n - 2``
    second offsets between consecutive transactions; each must stay
    within the detection window.  ``retentions`` (default: all ones)
    scale the value handed from each transaction to the next and must
    stay within ``[value_tolerance, 1]``.  The final transaction pays
    out ``initial_value + profit``.
    """

    chains: tuple[str, ...]
    swap_tokens: tuple[tuple[str, str], ...]
    start_ts: int
    gaps: tuple[int, ...]
    initial_value: Decimal
    profit: Decimal = Decimal("0")
    actor: str = "0xplantedactor"
    retentions: tuple[Decimal, ...] | None = None

    @property
    def hops(self) -> int:
        return len(self.chains)


@dataclass(frozen=True, slots=True)
class PlantedPath:
    """A planted path: its records plus the hash sequence as ground truth."""

    records: tuple[TransactionRecord, ...]

    def hash_sequence(self) -> tuple[str, ...]:
        return tuple(r.hash for r in self.records)

    def as_path(self, token_map: TokenEquivalenceMap | None = None) -> ArbitragePath:
        records = (
            canonicalize(self.records, token_map) if token_map else self.records
        )
        return ArbitragePath.from_transactions(records)


def _validate_spec(spec: PlantSpec, config: DetectionConfig) -> tuple[str, ...]:
    n = len(spec.chains)
    if not (config.min_hops <= n <= config.max_hops):
        raise InvalidSpec(
            f"{n} hops outside detectable range "
            f"[{config.min_hops}, {config.max_hops}]"
        )
    try:
        resolved = tuple(chains.resolve(c) for c in spec.chains)
    except UnknownChain as exc:
        raise InvalidSpec(str(exc)) from exc
    for a, b in zip(resolved, resolved[1:]):
        if a == b:
            raise InvalidSpec(f"consecutive swaps on the same chain: {a}")
    if len(spec.swap_tokens) != n:
        raise InvalidSpec(
            f"need {n} swap token pairs, got {len(spec.swap_tokens)}"
        )
    for pair in spec.swap_tokens:
        if len(pair) != 2 or not all(isinstance(s, str) and s.strip() for s in pair):
            raise InvalidSpec(f"malformed swap token pair: {pair!r}")
    if not any(a != b for a, b in spec.swap_tokens):
        raise InvalidSpec("every swap keeps its token; path would be ineffective")
    if len(spec.gaps) != 2 * n - 2:
        raise InvalidSpec(f"need {2 * n - 2} gaps, got {len(spec.gaps)}")
    for gap in spec.gaps:
        if not isinstance(gap, int) or gap < 1:
            raise InvalidSpec(f"gap {gap!r} must be a positive integer")
        if gap > config.window_secs:
            raise InvalidSpec(
                f"gap {gap}s exceeds the {config.window_secs}s detection window"
            )
    retentions = spec.retentions or (Decimal(1),) * (2 * n - 2)
    if len(retentions) != 2 * n - 2:
        raise InvalidSpec(f"need {2 * n - 2} retentions, got {len(retentions)}")
    for r in retentions:
        r = Decimal(r)
        if not (config.value_tolerance <= r <= 1):
            raise InvalidSpec(
                f"retention {r} outside [{config.value_tolerance}, 1]"
            )
    if not isinstance(spec.start_ts, int) or spec.start_ts < 0:
        raise InvalidSpec(f"start timestamp {spec.start_ts!r} must be a non-negative int")
    if spec.initial_value <= 0 or spec.initial_value > MAX_USD:
        raise InvalidSpec(f"initial value {spec.initial_value} out of range")
    final_value = spec.initial_value + spec.profit
    if final_value < 0 or final_value > MAX_USD:
        raise InvalidSpec(f"final value {final_value} out of range")
    if not spec.actor or not spec.actor.strip():
        raise InvalidSpec("actor address must be non-empty")
    return resolved


def plant(spec: PlantSpec, config: DetectionConfig | None = None) -> PlantedPath:
    """Materialize *spec* into ``2n - 1`` schema-valid records.

    The result is guaranteed detectable under *config* with raw token
    symbols (an equivalence map can still fold a swap's tokens together;
    callers that canonicalize must keep at least one swap effective).
    Raises :class:`InvalidSpec` when the spec violates its constraints.
    """
    config = config or DetectionConfig()
    resolved = _validate_spec(spec, config)
    n = len(resolved)
    retentions = tuple(
        Decimal(r) for r in (spec.retentions or (Decimal(1),) * (2 * n - 2))
    )

    timestamps = [spec.start_ts]
    for gap in spec.gaps:
        timestamps.append(timestamps[-1] + gap)

    count = 2 * n - 1
    final_value = spec.initial_value + spec.profit
    rows: list[dict[str, str]] = []
    value_in = spec.initial_value
    for i in range(count):
        is_swap = i % 2 == 0
        value_out = final_value if i == count - 1 else value_in
        if is_swap:
            s = i // 2
            token_in, token_out = spec.swap_tokens[s]
            row = {
                "hash": _plant_hash(spec.actor, spec.start_ts, i),
                "timestamp": str(timestamps[i]),
                "sender": spec.actor,
                "receiver": _pool_address(spec.actor, i),
                "chain": resolved[s],
                "dest_chain": "",
                "token_in": token_in,
                "token_out": token_out,
                "value_in_usd": _fmt_usd(value_in),
                "value_out_usd": _fmt_usd(value_out),
                "kind": "swap",
                "leg_count": "2",
            }
        else:
            b = (i - 1) // 2
            row = {
                "hash": _plant_hash(spec.actor, spec.start_ts, i),
                "timestamp": str(timestamps[i]),
                "sender": spec.actor,
                "receiver": spec.actor,
                "chain": resolved[b],
                "dest_chain": resolved[b + 1],
                "token_in": spec.swap_tokens[b][1],
                "token_out": spec.swap_tokens[b + 1][0],
                "value_in_usd": _fmt_usd(value_in),
                "value_out_usd": _fmt_usd(value_out),
                "kind": "bridge",
                "leg_count": "2",
            }
        rows.append(row)
        if i < count - 1:
            scaled = (retentions[i] * value_out).quantize(_SIX, rounding=ROUND_CEILING)
            value_in = min(value_out, scaled)

    try:
        records = tuple(validate_record(row) for row in rows)
    except ValidationError as exc:  # a spec hole the checks above missed
        raise InvalidSpec(str(exc)) from exc
    if not validate_path(records, config):
        raise InvalidSpec("planted records do not satisfy path continuity")
    return PlantedPath(records=records)


# ---------------------------------------------------------------------------
# background noise


def gen_noise(
    count: int,
    *,
    seed: int,
    span: tuple[int, int] = (1693526400, 1722470400),
    chain_pool: Sequence[str] | None = None,
    token_pool: Sequence[str] = NOISE_TOKENS,
    multi_leg_rate: float = 0.02,
) -> list[TransactionRecord]:
    """Generate *count* background records, deterministic per *seed*.

    Actors come from a reserved ``0xn...`` namespace that planted paths
    never use, so every noise record violates actor consistency against
    every planted record.  Values are log-uniform over [10, 10^6] USD.
    A small fraction of swaps carries more than two token legs to
    exercise the atomic-swap filter.
    """
    if count < 0:
        raise InvalidSpec(f"noise count {count} must be non-negative")
    lo, hi = span
    if hi <= lo:
        raise InvalidSpec(f"empty time span {span}")
    pool = tuple(chain_pool) if chain_pool else chains.CHAIN_IDS
    pool = tuple(chains.resolve(c) for c in pool)
    if len(pool) < 2:
        raise InvalidSpec("noise needs at least two chains to bridge between")
    tokens = tuple(token_pool)
    rng = random.Random(seed)
    actor_space = max(4 * count, 64)

    rows = []
    for i in range(count):
        digest = hashlib.sha256(f"noise|{seed}|{i}".encode()).hexdigest()
        h = "0x" + digest[:40]
        ts = rng.randrange(lo, hi)
        sender = f"0xn{rng.randrange(actor_space):016x}"
        receiver = f"0xn{rng.randrange(actor_space):016x}"
        chain = rng.choice(pool)
        micro_in = int(10 ** rng.uniform(1.0, 6.0) * 1_000_000)
        micro_out = max(1, int(micro_in * rng.uniform(0.9, 1.1)))
        value_in = Decimal(micro_in).scaleb(-6)
        value_out = Decimal(micro_out).scaleb(-6)
        if rng.random() < 0.5:
            token = rng.choice(tokens)
            dest = rng.choice([c for c in pool if c != chain])
            row = {
                "hash": h, "timestamp": str(ts),
                "sender": sender, "receiver": receiver,
                "chain": chain, "dest_chain": dest,
                "token_in": token, "token_out": token,
                "value_in_usd": _fmt_usd(value_in),
                "value_out_usd": _fmt_usd(value_out),
                "kind": "bridge", "leg_count": "2",
            }
        else:
            legs = 2
            if rng.random() < multi_leg_rate:
                legs = rng.randint(3, 6)
            row = {
                "hash": h, "timestamp": str(ts),
                "sender": sender, "receiver": receiver,
                "chain": chain, "dest_chain": "",
                "token_in": rng.choice(tokens),
                "token_out": rng.choice(tokens),
                "value_in_usd": _fmt_usd(value_in),
                "value_out_usd": _fmt_usd(value_out),
                "kind": "swap", "leg_count": str(legs),
            }
        rows.append(row)
    return [validate_record(row) for row in rows]


def gen_noise_frame(
    count: int,
    *,
    seed: int,
    span: tuple[int, int] = (1693526400, 1722470400),
    chain_pool: Sequence[str] | None = None,
    token_pool: Sequence[str] = NOISE_TOKENS,
) -> pl.DataFrame:
    """Vectorized bulk variant of :func:`gen_noise` for huge datasets.

    Returns a DataFrame in the ingest schema (all-string values exact to
    six decimals), deterministic per *seed*.  Independent implementation
    from :func:`gen_noise`: same statistical shape, different streams.
    """
    if count < 0:
        raise InvalidSpec(f"noise count {count} must be non-negative")
    lo, hi = span
    if hi <= lo:
        raise InvalidSpec(f"empty time span {span}")
    pool = tuple(chain_pool) if chain_pool else chains.CHAIN_IDS
    pool = tuple(chains.resolve(c) for c in pool)
    if len(pool) < 2:
        raise InvalidSpec("noise needs at least two chains to bridge between")
    tokens = tuple(token_pool)
    rng = np.random.default_rng(seed)

    ts = rng.integers(lo, hi, count, dtype=np.int64)
    is_bridge = rng.random(count) < 0.5
    chain_idx = rng.integers(0, len(pool), count, dtype=np.int64)
    dest_idx = (chain_idx + rng.integers(1, len(pool), count, dtype=np.int64)) % len(pool)
    actor_space = max(4 * count, 64)
    sender_id = rng.integers(0, actor_space, count, dtype=np.int64)
    receiver_id = rng.integers(0, actor_space, count, dtype=np.int64)
    tok_in_idx = rng.integers(0, len(tokens), count, dtype=np.int64)
    tok_out_idx = rng.integers(0, len(tokens), count, dtype=np.int64)
    micro_in = (10 ** rng.uniform(1.0, 6.0, count) * 1e6).astype(np.int64)
    micro_out = np.maximum(
        (micro_in * rng.uniform(0.9, 1.1, count)).astype(np.int64), 1
    )

    chain_series = pl.Series("chains", pool)
    token_series = pl.Series("tokens", tokens)
    salt = hashlib.sha256(f"noiseframe|{seed}".encode()).hexdigest()[:12]

    def usd(expr: pl.Expr) -> pl.Expr:
        return pl.format(
            "{}.{}",
            expr // 1_000_000,
            (expr % 1_000_000).cast(pl.String).str.zfill(6),
        )

    base = pl.DataFrame(
        {
            "row": np.arange(count, dtype=np.int64),
            "timestamp": ts,
            "bridge": is_bridge,
            "chain_idx": chain_idx,
            "dest_idx": dest_idx,
            "sender_id": sender_id,
            "receiver_id": receiver_id,
            "tok_in_idx": tok_in_idx,
            "tok_out_idx": tok_out_idx,
            "micro_in": micro_in,
            "micro_out": micro_out,
        }
    )
    chain_names = chain_series.gather(base["chain_idx"]).rename("chain")
    dest_names = chain_series.gather(base["dest_idx"]).rename("dest")
    tok_in = token_series.gather(base["tok_in_idx"]).rename("tok_in")
    tok_out = token_series.gather(base["tok_out_idx"]).rename("tok_out")
    frame = base.with_columns(chain_names, dest_names, tok_in, tok_out).select(
        pl.format("0xh{}{}", pl.lit(salt), pl.col("row")).alias("hash"),
        pl.col("timestamp"),
        pl.format("0xn{}", pl.col("sender_id")).alias("sender"),
        pl.format("0xn{}", pl.col("receiver_id")).alias("receiver"),
        pl.col("chain"),
        pl.when(pl.col("bridge"))
        .then(pl.col("dest"))
        .otherwise(pl.lit(""))
        .alias("dest_chain"),
        pl.col("tok_in").alias("token_in"),
        pl.when(pl.col("bridge"))
        .then(pl.col("tok_in"))
        .otherwise(pl.col("tok_out"))
        .alias("token_out"),
        usd(pl.col("micro_in")).alias("value_in_usd"),
        usd(pl.col("micro_out")).alias("value_out_usd"),
        pl.when(pl.col("bridge"))
        .then(pl.lit("bridge"))
        .otherwise(pl.lit("swap"))
        .alias("kind"),
        pl.lit(2, dtype=pl.Int64).alias("leg_count"),
    )
    return frame


# ---------------------------------------------------------------------------
# serialization


def _record_row(r: TransactionRecord) -> dict[str, object]:
    return {
        "hash": r.hash,
        "timestamp": r.timestamp,
        "sender": r.sender,
        "receiver": r.receiver,
        "chain": r.chain,
        "dest_chain": r.dest_chain or "",
        "token_in": r.token_in.native_chain_symbol,
        "token_out": r.token_out.native_chain_symbol,
        "value_in_usd": _fmt_usd(r.value_in_usd),
        "value_out_usd": _fmt_usd(r.value_out_usd),
        "kind": r.kind.value,
        "leg_count": r.legs,
    }


def write_dataset(
    records: Iterable[TransactionRecord], path: str | Path, fmt: str = "csv"
) -> None:
    """Write *records* in the ingest schema (raw token symbols preserved)."""
    import csv

    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=SCHEMA_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in records:
                writer.writerow(_record_row(r))
    elif fmt == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for r in records:
                fh.write(json.dumps(_record_row(r), separators=(", ", ": ")))
                fh.write("\n")
    else:
        raise UnknownFormat(fmt)


def write_frame(frame: pl.DataFrame, path: str | Path, fmt: str = "csv") -> None:
    """Write a generated DataFrame in the ingest schema."""
    path = Path(path)
    if fmt == "csv":
        frame.write_csv(path)
    elif fmt == "jsonl":
        frame.write_ndjson(path)
    else:
        raise UnknownFormat(fmt)


# ---------------------------------------------------------------------------
# the golden dataset


GOLDEN_SEED = 20230915
_GOLDEN_T0 = 1694736000  # 2023-09-15T00:00:00Z
_GOLDEN_SPACING = 3600  # leaves > window seconds between planted paths

_FOUR_HOP_ACTOR = "0xf6c77e" + "0" * 28 + "ace28d"

_WETH_HOP_CYCLE = (("WETH", "HOP"), ("HOP", "WETH"), ("WETH", "HOP"), ("HOP", "WETH"))

# Ten reference paths: chains per swap, raw (in, out) per swap, total
# duration in seconds, gross profit in USD, actor. The four-hop pair
# shares one actor; three-hop actors are distinct derived addresses.
_GOLDEN_ROWS: tuple[tuple[tuple[str, ...], tuple[tuple[str, str], ...], int, str, str], ...] = (
    (("base", "ethereum", "base"),
     (("USDC", "BAL"), ("BAL", "USDC"), ("USDC", "BAL")), 646, "32.78", ""),
    (("base", "optimism", "base"),
     (("HOP", "WETH"), ("WETH", "HOP"), ("HOP", "WETH")), 490, "0.43", ""),
    (("arbitrum", "optimism", "base"),
     (("ARB", "WETH"), ("WETH", "HOP"), ("HOP", "ARB")), 311, "-255.07", ""),
    (("optimism", "base", "arbitrum"),
     (("WETH", "HOP"), ("HOP", "WETH"), ("WETH", "HOP")), 466, "264.04", ""),
    (("base", "avalanche", "base"),
     (("USDC", "axlUSDC"), ("axlUSDC", "USDC"), ("USDC", "axlUSDC")), 448, "21.40", ""),
    (("arbitrum", "polygon", "arbitrum"),
     (("USDT", "USDC"), ("USDC.e", "WBTC"), ("WBTC", "USDT")), 412, "-0.17", ""),
    (("blast", "arbitrum", "ethereum"),
     (("WETH", "ezETH"), ("ezETH", "WETH"), ("WETH", "ezETH")), 458, "-8.17", ""),
    (("polygon", "arbitrum", "polygon"),
     (("WMATIC", "WBTC"), ("WBTC", "WETH"), ("WETH", "WMATIC")), 242, "-0.02", ""),
    (("optimism", "base", "optimism", "base"),
     _WETH_HOP_CYCLE, 776, "20.69", _FOUR_HOP_ACTOR),
    (("arbitrum", "optimism", "base", "arbitrum"),
     _WETH_HOP_CYCLE, 617, "1.61", _FOUR_HOP_ACTOR),
)

_GOLDEN_INITIAL = Decimal("1000.00")


def _split_gaps(total: int, parts: int) -> tuple[int, ...]:
    """Split *total* seconds into *parts* near-equal positive gaps.

    How a duration is divided is an implementation detail; only the sum
    is part of the golden contract.
    """
    base, rem = divmod(total, parts)
    return tuple([base + 1] * rem + [base] * (parts - rem))


def _golden_actor(i: int) -> str:
    return "0x" + hashlib.sha256(f"golden-actor|{i}".encode()).hexdigest()[:40]


@dataclass(frozen=True)
class GoldenDataset:
    """The reference dataset plus everything needed to judge a detector."""

    records: tuple[TransactionRecord, ...]
    planted: tuple[PlantedPath, ...]
    expected_report: SummaryReport
    token_map: TokenEquivalenceMap
    config: DetectionConfig
    seed: int
    noise_count: int

    def expected_hash_sequences(self) -> set[tuple[str, ...]]:
        return {p.hash_sequence() for p in self.planted}


def golden_table1(
    noise_count: int = 5000, *, seed: int = GOLDEN_SEED
) -> GoldenDataset:
    """Build the reference dataset: ten planted paths over background noise.

    Deterministic for a given (noise_count, seed).  Planted paths start
    an hour apart, so no transaction of one path is inside the detection
    window of another; noise actors live in a namespace planted actors
    never use.  The expected report is computed from the planted ground
    truth canonicalized with the default token map -- never from the
    detector.
    """
    config = DetectionConfig()
    token_map = TokenEquivalenceMap.default()

    planted: list[PlantedPath] = []
    for i, (row_chains, tokens, duration, profit, actor) in enumerate(_GOLDEN_ROWS):
        spec = PlantSpec(
            chains=row_chains,
            swap_tokens=tokens,
            start_ts=_GOLDEN_T0 + i * _GOLDEN_SPACING,
            gaps=_split_gaps(duration, 2 * len(row_chains) - 2),
            initial_value=_GOLDEN_INITIAL,
            profit=Decimal(profit),
            actor=actor or _golden_actor(i),
        )
        planted.append(plant(spec, config))

    noise = gen_noise(noise_count, seed=seed)
    records: list[TransactionRecord] = [
        r for p in planted for r in p.records
    ]
    records.extend(noise)
    hashes = [r.hash for r in records]
    if len(set(hashes)) != len(hashes):  # astronomically unlikely; fail loud
        raise InvalidSpec("hash collision between planted and noise records")

    expected = summarize([p.as_path(token_map) for p in planted])
    return GoldenDataset(
        records=tuple(records),
        planted=tuple(planted),
        expected_report=expected,
        token_map=token_map,
        config=config,
        seed=seed,
        noise_count=noise_count,
    )
