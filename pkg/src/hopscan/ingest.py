"""Dataset ingestion: parsing, validation, canonicalization, indexing.

Two routes produce the same logical result:

* the record route (`parse_dataset` → `filter_atomic_swaps` →
  `canonicalize` → `build_index`) validates row by row with the stdlib and
  exact `Decimal` arithmetic — transparent, easy to reason about, and the
  reference semantics;
* the fast route (`load_dataset`) runs the same pipeline vectorized on
  polars and feeds the columnar store directly. Values with more than six
  decimals, scientific notation, or magnitude beyond the float-exact zone
  are re-parsed with `Decimal`, so both routes accept identical rows with
  identical micro-USD values. Inputs polars cannot frame fall back to the
  record route (`LoadResult.route` says which one ran).

Token canonicalization is chain-scoped: an equivalence entry maps a raw
symbol to a canonical one *on one chain only*. Wrapped or bridged variants
of an asset often trade at their own price somewhere — on such chains they
must stay distinct tokens, or a genuine same-asset arbitrage would be
canonicalized into a no-op round trip and discarded. A bridge's outbound
token is scoped by its destination chain (where the funds land), its
inbound token by its origin chain.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import polars as pl

from . import chains
from .columns import RecordColumns, StrTable
from .errors import (
    InvalidTokenMap,
    UnknownFormat,
    UnreadableSource,
    ValidationError,
)
from .index import TxIndex
from .model import (
    CanonicalToken,
    MAX_LEG_COUNT,
    MAX_TIMESTAMP,
    TransactionRecord,
    USD_EXPONENT,
    validate_record,
)

# column order of the on-disk schema; leg_count is optional on read
SCHEMA_COLUMNS = (
    "hash", "timestamp", "sender", "receiver", "chain", "dest_chain",
    "token_in", "token_out", "value_in_usd", "value_out_usd", "kind",
    "leg_count",
)
_REQUIRED_COLUMNS = SCHEMA_COLUMNS[:-1]
_IDENTITY_COLUMNS = ("hash", "sender", "receiver", "chain", "dest_chain",
                     "token_in", "token_out", "kind")

FORMATS = ("csv", "jsonl")

_MAX_MICRO = 10 ** 18  # 1e12 USD in micro units, the int64-safe cap
# float64 micro conversion is provably exact below this magnitude (USD);
# larger values, >6 decimals, and scientific notation re-parse via Decimal
_FLOAT_EXACT_BOUND = 1e9
_NEEDS_DECIMAL = r"\.\d{7,}|[eE]"
_FLOAT_SENTINEL = "\x00float"  # poisons non-string typed numeric columns
# a JSON float literal (fraction or exponent) in one of the numeric fields;
# escaped quotes inside JSON strings cannot produce this byte pattern
_JSONL_FLOAT_FIELD = re.compile(
    rb'"(?:timestamp|value_in_usd|value_out_usd|leg_count)"'
    rb'[ \t]*:[ \t]*-?\d+(?:\.\d+|[eE][+-]?\d+)'
)


@dataclass(frozen=True, slots=True)
class RejectedRow:
    """A row that failed validation: its ordinal, why, and human detail."""

    row: int
    reason: str
    detail: str = ""


# ---------------------------------------------------------------------------
# token equivalence


DEFAULT_EQUIVALENCES: Mapping[tuple[str, str], str] = MappingProxyType({
    ("arbitrum", "USDC.e"): "USDC",
    ("optimism", "USDC.e"): "USDC",
    ("polygon", "USDC.e"): "USDC",
    ("avalanche", "USDC.e"): "USDC",
    ("avalanche", "axlUSDC"): "USDC",
    ("avalanche", "WETH.e"): "WETH",
})


@dataclass(frozen=True)
class TokenEquivalenceMap:
    """Chain-scoped raw-symbol -> canonical-symbol equivalences.

    Deliberately *not* chain-agnostic: the same raw symbol may be a mere
    alias on one chain and an independently priced asset on another (e.g.
    a bridged stablecoin with its own pools, where same-symbol round trips
    are real arbitrage). Only listed (chain, symbol) pairs are rewritten.
    The map must be idempotent: a canonical symbol may not itself be
    remapped on the same chain.
    """

    entries: Mapping[tuple[str, str], str]

    def __post_init__(self):
        normalized: dict[tuple[str, str], str] = {}
        for (chain, raw), canon in self.entries.items():
            try:
                chain_id = chains.resolve(chain)
            except ValidationError as e:
                raise InvalidTokenMap(str(e)) from None
            if not raw or not canon:
                raise InvalidTokenMap(
                    f"empty symbol in entry ({chain!r}, {raw!r}) -> {canon!r}"
                )
            key = (chain_id, raw)
            if normalized.get(key, canon) != canon:
                raise InvalidTokenMap(
                    f"conflicting canonical symbols for {key}: "
                    f"{normalized[key]!r} vs {canon!r}"
                )
            normalized[key] = canon
        for (chain_id, _), canon in normalized.items():
            again = normalized.get((chain_id, canon), canon)
            if again != canon:
                raise InvalidTokenMap(
                    f"not idempotent: {canon!r} on {chain_id!r} re-maps to {again!r}"
                )
        object.__setattr__(self, "entries", MappingProxyType(normalized))

    @classmethod
    def identity(cls) -> "TokenEquivalenceMap":
        return cls(entries={})

    @classmethod
    def default(cls) -> "TokenEquivalenceMap":
        return cls(entries=dict(DEFAULT_EQUIVALENCES))

    @classmethod
    def from_csv(cls, source) -> "TokenEquivalenceMap":
        """Load from a CSV with header ``chain,raw_symbol,canonical_symbol``."""
        text = _read_text(source)
        reader = csv.DictReader(io.StringIO(text))
        header = reader.fieldnames or []
        want = {"chain", "raw_symbol", "canonical_symbol"}
        if not want.issubset(header):
            raise InvalidTokenMap(
                f"header must contain {sorted(want)}, got {header}"
            )
        entries: dict[tuple[str, str], str] = {}
        for i, row in enumerate(reader):
            vals = {k: (row.get(k) or "").strip() for k in want}
            if not all(vals.values()):
                raise InvalidTokenMap(f"row {i}: empty field in {row}")
            key = (vals["chain"], vals["raw_symbol"])
            if entries.get(key, vals["canonical_symbol"]) != vals["canonical_symbol"]:
                raise InvalidTokenMap(
                    f"row {i}: conflicting canonical symbol for {key}"
                )
            entries[key] = vals["canonical_symbol"]
        return cls(entries=entries)

    def canonical(self, chain: str, raw_symbol: str) -> str:
        return self.entries.get((chain, raw_symbol), raw_symbol)

    def token(self, chain: str, raw_symbol: str) -> CanonicalToken:
        return CanonicalToken(
            symbol=self.canonical(chain, raw_symbol),
            native_chain_symbol=raw_symbol,
        )


# ---------------------------------------------------------------------------
# record route


def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if hasattr(source, "read"):
        data = source.read()
        return data.encode("utf-8") if isinstance(data, str) else data
    try:
        return Path(source).read_bytes()
    except OSError as e:
        raise UnreadableSource(f"cannot read {source!r}: {e}") from None


def _read_text(source) -> str:
    try:
        return _read_bytes(source).decode("utf-8")
    except UnicodeDecodeError as e:
        raise UnreadableSource(f"input is not valid UTF-8: {e}") from None


def _iter_csv(text: str) -> Iterator[tuple[int, Mapping | None]]:
    reader = csv.DictReader(io.StringIO(text), restval=None)
    try:
        header = reader.fieldnames
        if not header:
            return
        missing = [c for c in _REQUIRED_COLUMNS if c not in header]
        if missing:
            raise UnreadableSource(f"csv header lacks required column(s): {missing}")
        for i, row in enumerate(reader):
            row.pop(None, None)  # cells beyond the header
            yield i, row
    except csv.Error as e:
        raise UnreadableSource(f"cannot parse csv: {e}") from None


def _iter_jsonl(text: str) -> Iterator[tuple[int, Mapping | None]]:
    # ordinals count data rows (blank lines are not rows), matching the
    # vectorized route's row indexing
    idx = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            yield idx, None
        else:
            yield idx, obj if isinstance(obj, dict) else None
        idx += 1


def parse_dataset(
    source, fmt: str = "csv"
) -> tuple[list[TransactionRecord], list[RejectedRow]]:
    """Parse and validate a dataset row by row.

    Returns accepted records in file order plus one `RejectedRow` per
    failed row (0-based data-row ordinals). A repeated transaction hash
    rejects every occurrence after the first accepted one. Raises
    UnknownFormat for unsupported formats and UnreadableSource when the
    input cannot be read at all.
    """
    if fmt not in FORMATS:
        raise UnknownFormat(fmt)
    text = _read_text(source)
    rows = _iter_csv(text) if fmt == "csv" else _iter_jsonl(text)

    records: list[TransactionRecord] = []
    rejects: list[RejectedRow] = []
    seen: set[str] = set()
    for i, raw in rows:
        if raw is None:
            rejects.append(RejectedRow(i, "InvalidField", "row is not a JSON object"))
            continue
        try:
            rec = validate_record(raw)
        except ValidationError as e:
            rejects.append(RejectedRow(i, type(e).__name__, str(e)))
            continue
        if rec.hash in seen:
            rejects.append(
                RejectedRow(i, "DuplicateHash",
                            f"hash {rec.hash!r} appears more than once")
            )
            continue
        seen.add(rec.hash)
        records.append(rec)
    return records, rejects


def filter_atomic_swaps(
    records: Iterable[TransactionRecord],
) -> list[TransactionRecord]:
    """Drop swaps whose raw event carried more than two token legs.

    A multi-leg swap has no single well-defined (token_in, token_out)
    edge, so it cannot participate in pairwise continuity. Bridges pass
    through regardless of leg count.
    """
    return [r for r in records if r.is_bridge or r.legs <= 2]


def canonicalize(
    records: Iterable[TransactionRecord], token_map: TokenEquivalenceMap
) -> list[TransactionRecord]:
    """Rewrite token symbols through the equivalence map.

    The inbound token is scoped by the chain the transaction executes on;
    a bridge's outbound token by its destination chain. Raw symbols are
    preserved on the token, so re-canonicalizing is a no-op.
    """
    out = []
    for r in records:
        out_scope = r.chain if r.is_swap else r.dest_chain
        out.append(dataclasses.replace(
            r,
            token_in=token_map.token(r.chain, r.token_in.native_chain_symbol),
            token_out=token_map.token(out_scope, r.token_out.native_chain_symbol),
        ))
    return out


def build_index(records: Sequence[TransactionRecord]) -> TxIndex:
    """Columnarize validated records and build the successor index."""
    return TxIndex.build(RecordColumns.from_records(records))


# ---------------------------------------------------------------------------
# fast route


@dataclass(frozen=True)
class LoadResult:
    """Outcome of the full ingestion pipeline."""

    index: TxIndex
    rejects: list[RejectedRow]
    rows_total: int
    multi_asset_dropped: int
    route: str = "vectorized"  # or "record" when the fallback ran

    @property
    def rows_accepted(self) -> int:
        return len(self.index.columns)


def _load_via_records(source, fmt: str, token_map: TokenEquivalenceMap) -> LoadResult:
    records, rejects = parse_dataset(source, fmt)
    atomic = filter_atomic_swaps(records)
    canon = canonicalize(atomic, token_map)
    return LoadResult(
        index=build_index(canon),
        rejects=rejects,
        rows_total=len(records) + len(rejects),
        multi_asset_dropped=len(records) - len(atomic),
        route="record",
    )


def load_dataset(
    source,
    fmt: str = "csv",
    token_map: TokenEquivalenceMap | None = None,
) -> LoadResult:
    """Vectorized parse + filter + canonicalize + index in one pass.

    Accepts exactly the rows `parse_dataset` accepts, with identical
    (row, reason) reject pairs and identical fixed-point values, then
    drops multi-asset swaps and builds the index.
    """
    if fmt not in FORMATS:
        raise UnknownFormat(fmt)
    token_map = token_map if token_map is not None else TokenEquivalenceMap.default()

    # file sources are left on disk so the vectorized route can stream
    # them instead of buffering gigabytes; everything else is read once
    src: bytes | Path
    if isinstance(source, (str, os.PathLike)):
        src = Path(source)
    else:
        src = _read_bytes(source)
    try:
        return _load_vectorized(src, fmt, token_map)
    except (UnreadableSource, InvalidTokenMap):
        raise
    except Exception:
        # anything polars cannot frame the way the record route would
        # (malformed JSONL lines, mixed-type columns, exotic payloads)
        return _load_via_records(_read_bytes(source), fmt, token_map)


def _normalize_columns(df: pl.DataFrame) -> pl.DataFrame:
    """Coerce every schema column to stripped strings.

    Integer-typed inputs (JSONL) stringify exactly. Float-typed inputs are
    poisoned with a sentinel for numeric fields, mirroring the record
    route, which rejects binary floats for timestamps, values, and legs.
    """
    exprs = []
    for c in SCHEMA_COLUMNS:
        if c not in df.columns:
            exprs.append(pl.lit("").alias(c))
            continue
        dt = df.schema[c]
        if dt == pl.String:
            exprs.append(pl.col(c).fill_null("").str.strip_chars().alias(c))
        elif dt.is_integer() or c in _IDENTITY_COLUMNS:
            exprs.append(pl.col(c).cast(pl.String).fill_null("").alias(c))
        else:
            exprs.append(
                pl.when(pl.col(c).is_null())
                .then(pl.lit(""))
                .otherwise(pl.lit(_FLOAT_SENTINEL))
                .alias(c)
            )
    return df.select(pl.col("__row"), *exprs)


def _decimal_micro(raw: str) -> int | None:
    """Exact micro-USD via Decimal; None when unparseable or non-finite.

    Magnitudes beyond the int64 cap clamp to cap+1, preserving the
    out-of-range predicate without overflowing the column.
    """
    try:
        d = Decimal(raw)
    except (InvalidOperation, ValueError):
        return None
    if not d.is_finite():
        return None
    micro = int(d.quantize(USD_EXPONENT, rounding=ROUND_HALF_EVEN).scaleb(6))
    bound = _MAX_MICRO + 1
    return max(-bound, min(bound, micro))


def _value_columns(df: pl.DataFrame, col: str) -> pl.DataFrame:
    """Add __micro_<col> (int64, exact) and __ok_<col> (parse success)."""
    f = pl.col(col).cast(pl.Float64, strict=False)
    micro = (f.clip(-2e12, 2e12) * 1_000_000).round(0).cast(pl.Int64, strict=False)
    needs_fix = (
        pl.col(col).str.contains(_NEEDS_DECIMAL) | (f.abs() >= _FLOAT_EXACT_BOUND)
    ).fill_null(False) & (pl.col(col) != "")
    df = df.with_columns(micro.alias(f"__micro_{col}"), needs_fix.alias(f"__fix_{col}"))

    # positions are frame-local: __row holds dataset-global ordinals
    fixes = (
        df.with_row_index("__pos")
        .filter(pl.col(f"__fix_{col}"))
        .select("__pos", col)
    )
    ok = df[f"__micro_{col}"].is_not_null().to_numpy().copy()
    arr = df[f"__micro_{col}"].fill_null(0).to_numpy().astype(np.int64, copy=True)
    for pos, raw in zip(fixes["__pos"].to_list(), fixes[col].to_list()):
        m = _decimal_micro(raw)
        if m is None:
            ok[pos], arr[pos] = False, 0
        else:
            ok[pos], arr[pos] = True, m
    return df.with_columns(
        pl.Series(f"__micro_{col}", arr),
        pl.Series(f"__ok_{col}", ok),
    )


def _failure_rules(df: pl.DataFrame) -> list[tuple[pl.Expr, str, str]]:
    """(condition, reason, detail) triples in record-route precedence."""
    def empty(c):
        return pl.col(c) == ""

    is_bridge = pl.col("__kind") == "bridge"
    is_swap = pl.col("__kind") == "swap"

    rules: list[tuple[pl.Expr, str, str]] = []
    for c in ("hash", "timestamp", "sender", "receiver", "chain",
              "token_in", "token_out", "value_in_usd", "value_out_usd", "kind"):
        rules.append((empty(c), "MissingField", f"missing required field: {c}"))
    rules.append((~pl.col("__kind").is_in(["swap", "bridge"]), "UnknownKind",
                  "kind must be 'swap' or 'bridge'"))
    rules.append((pl.col("__chain").is_null(), "UnknownChain",
                  "chain is not in the chain registry"))
    rules.append((is_bridge & empty("dest_chain"), "MissingField",
                  "missing required field: dest_chain"))
    rules.append((is_bridge & pl.col("__dest").is_null(), "UnknownChain",
                  "dest_chain is not in the chain registry"))
    rules.append((is_bridge & (pl.col("__dest") == pl.col("__chain")),
                  "BridgeSameChain",
                  "bridge origin and destination chain are equal"))
    rules.append((is_swap & ~empty("dest_chain"), "InvalidField",
                  "swaps must not carry a destination chain"))
    rules.append((pl.col("__ts").is_null(), "InvalidField",
                  "timestamp: not an integer"))
    rules.append(((pl.col("__ts") > MAX_TIMESTAMP) | (pl.col("__ts") < -MAX_TIMESTAMP),
                  "InvalidField", "timestamp: exceeds supported range"))
    rules.append((~pl.col("__ok_value_in_usd"), "InvalidField",
                  "value_in_usd: not a decimal number"))
    rules.append((~pl.col("__ok_value_out_usd"), "InvalidField",
                  "value_out_usd: not a decimal number"))
    rules.append((pl.col("__micro_value_in_usd") < 0, "NegativeValue",
                  "value_in_usd must be non-negative"))
    rules.append((pl.col("__micro_value_out_usd") < 0, "NegativeValue",
                  "value_out_usd must be non-negative"))
    rules.append((pl.col("__micro_value_in_usd") > _MAX_MICRO, "InvalidField",
                  "value_in_usd: exceeds supported magnitude"))
    rules.append((pl.col("__micro_value_out_usd") > _MAX_MICRO, "InvalidField",
                  "value_out_usd: exceeds supported magnitude"))
    rules.append((~empty("leg_count") & pl.col("__legs").is_null(),
                  "InvalidField", "leg_count: not an integer"))
    rules.append((pl.col("__legs") < 1, "InvalidField", "leg_count: must be >= 1"))
    rules.append((pl.col("__legs") > MAX_LEG_COUNT, "InvalidField",
                  "leg_count: exceeds supported range"))
    return rules


def _precheck_bytes(src: bytes | Path, fmt: str) -> bool:
    """Byte-level screens the framed parse cannot do itself; True if blank.

    CSV refuses NUL bytes (the record route's csv reader does, so framing
    them into field text would break parity). JSONL detects float-typed
    numeric fields, which must take the record route to keep their
    original per-row types. File sources are streamed line-wise so large
    datasets never sit in memory as one buffer.
    """
    if isinstance(src, bytes):
        if fmt == "csv":
            if b"\x00" in src:
                raise UnreadableSource("cannot parse csv: line contains NUL")
        elif _JSONL_FLOAT_FIELD.search(src):
            raise TypeError("float-typed numeric field in ndjson input")
        return not src.strip()

    blank = True
    tail = b""  # carry of the trailing partial line between chunks
    try:
        with src.open("rb") as fh:
            while True:
                chunk = fh.read(1 << 23)
                if not chunk:
                    break
                if blank and chunk.strip():
                    blank = False
                if fmt == "csv":
                    if b"\x00" in chunk:
                        raise UnreadableSource(
                            "cannot parse csv: line contains NUL"
                        )
                    continue
                buf = tail + chunk
                cut = buf.rfind(b"\n")
                if cut == -1:
                    tail = buf
                    continue
                if _JSONL_FLOAT_FIELD.search(buf[: cut + 1]):
                    raise TypeError("float-typed numeric field in ndjson input")
                tail = buf[cut + 1:]
    except OSError as e:
        raise UnreadableSource(f"cannot read {src!r}: {e}") from None
    if fmt != "csv" and tail and _JSONL_FLOAT_FIELD.search(tail):
        raise TypeError("float-typed numeric field in ndjson input")
    return blank


_SLIM_COLUMNS = (
    "__row", "hash", "sender", "receiver", "token_in", "token_out",
    "__kind", "__chain", "__dest", "__ts", "__legs",
    "__micro_value_in_usd", "__micro_value_out_usd",
)

# rows screened per streaming batch; bounds the raw-text frame that is
# alive at any moment while a large csv file is ingested
_BATCH_ROWS = 1 << 18


def _screen_batch(
    df: pl.DataFrame, row_offset: int, rejects: list[RejectedRow]
) -> pl.DataFrame:
    """Run the per-row screens on one raw string frame.

    Appends this frame's rejects (with dataset-global row ordinals) and
    returns the surviving rows narrowed to ``_SLIM_COLUMNS``. Cross-row
    screens (duplicate hashes, multi-asset swaps) run on the combined
    slim frame afterwards.
    """
    df = df.with_row_index("__row").with_columns(
        (pl.col("__row").cast(pl.Int64) + row_offset).alias("__row")
    )
    df = _normalize_columns(df)

    alias_map = dict(chains.ALIASES)
    df = df.with_columns(
        pl.col("kind").str.to_lowercase().alias("__kind"),
        pl.col("chain").str.to_lowercase()
        .replace_strict(alias_map, default=None).alias("__chain"),
        pl.col("dest_chain").str.to_lowercase()
        .replace_strict(alias_map, default=None).alias("__dest"),
        pl.col("timestamp").cast(pl.Int64, strict=False).alias("__ts"),
        pl.col("leg_count").cast(pl.Int64, strict=False).alias("__legs"),
    )
    df = _value_columns(df, "value_in_usd")
    df = _value_columns(df, "value_out_usd")

    reason: pl.Expr = pl.lit(None, dtype=pl.String)
    detail: pl.Expr = pl.lit(None, dtype=pl.String)
    for expr, rname, rdetail in reversed(_failure_rules(df)):
        cond = expr.fill_null(False)
        reason = pl.when(cond).then(pl.lit(rname)).otherwise(reason)
        detail = pl.when(cond).then(pl.lit(rdetail)).otherwise(detail)
    df = df.with_columns(reason.alias("__reason"), detail.alias("__detail"))

    rejects.extend(
        RejectedRow(int(r), str(why), str(det))
        for r, why, det in df.filter(pl.col("__reason").is_not_null())
        .select("__row", "__reason", "__detail")
        .iter_rows()
    )
    # keep only the columns the index needs; the raw text columns the
    # rules consumed can be multiple gigabytes on large datasets
    return df.filter(pl.col("__reason").is_null()).select(_SLIM_COLUMNS)


def _load_vectorized(
    src: bytes | Path, fmt: str, token_map: TokenEquivalenceMap
) -> LoadResult:
    blank = _precheck_bytes(src, fmt)
    rejects: list[RejectedRow] = []
    parts: list[pl.DataFrame] = []
    rows_total = 0

    if fmt == "csv" and isinstance(src, Path):
        # file sources stream in bounded batches so the raw text never
        # has to fit in memory all at once
        try:
            head = pl.read_csv(src, infer_schema=False, n_rows=0)
        except Exception:
            if not blank:
                raise  # the record route's csv reader gets the final say
            head = pl.DataFrame({c: [] for c in _REQUIRED_COLUMNS})
        missing = [c for c in _REQUIRED_COLUMNS if c not in head.columns]
        if missing:
            raise UnreadableSource(
                f"csv header lacks required column(s): {missing}"
            )
        if not blank:
            batches = pl.scan_csv(src, infer_schema=False).collect_batches(
                chunk_size=_BATCH_ROWS, maintain_order=True, lazy=True
            )
            for batch in batches:
                parts.append(_screen_batch(batch, rows_total, rejects))
                rows_total += len(batch)
        if not parts:  # blank or header-only file
            parts.append(_screen_batch(head, 0, rejects))
    else:
        buffer = io.BytesIO(src) if isinstance(src, bytes) else src
        if fmt == "csv":
            try:
                df = pl.read_csv(buffer, infer_schema=False)
            except Exception:
                if blank:
                    df = pl.DataFrame({c: [] for c in _REQUIRED_COLUMNS})
                else:
                    # e.g. overlong rows, which the record route tolerates;
                    # its csv reader decides what is truly unreadable
                    raise
            missing = [c for c in _REQUIRED_COLUMNS if c not in df.columns]
            if missing:
                raise UnreadableSource(
                    f"csv header lacks required column(s): {missing}"
                )
        else:
            df = pl.read_ndjson(buffer)  # failure falls back upstream
        rows_total = len(df)
        parts.append(_screen_batch(df, 0, rejects))
        del df

    ok_df = parts[0] if len(parts) == 1 else pl.concat(parts, rechunk=False)
    del parts

    dup_mask = ~ok_df["hash"].is_first_distinct()
    if dup_mask.any():
        dup_rows = ok_df.filter(dup_mask)["__row"].to_list()
        accepted = ok_df.filter(~dup_mask)
    else:
        dup_rows = []
        accepted = ok_df
    del ok_df
    rejects.extend(
        RejectedRow(int(r), "DuplicateHash", "hash appears more than once")
        for r in dup_rows
    )
    rejects.sort(key=lambda rr: rr.row)

    # multi-asset swaps are valid rows that the pipeline excludes
    legs = pl.col("__legs").fill_null(2)
    multi = (pl.col("__kind") == "swap") & (legs > 2)
    n_multi = int(accepted.select(multi.sum()).item() or 0)
    if n_multi:
        accepted = accepted.filter(~multi)
    accepted = accepted.with_columns(legs.alias("__legs"))

    box = [accepted]
    del accepted  # _build_columns owns the frame; see its docstring
    columns = _build_columns(box, token_map)
    return LoadResult(
        index=TxIndex.build(columns),
        rejects=rejects,
        rows_total=rows_total,
        multi_asset_dropped=n_multi,
    )


def _build_columns(
    box: list[pl.DataFrame], token_map: TokenEquivalenceMap
) -> RecordColumns:
    """Encode the slim accepted frame into the index's arrays.

    Takes ownership of the frame (passed as a one-element list, which the
    caller must not retain) so each string column's buffers can be freed
    as soon as it is encoded; those columns dominate the peak footprint
    on large datasets.
    """
    df = box.pop()
    n = len(df)
    if n == 0:
        return RecordColumns.from_records([])

    # chain-scoped canonicalization: key = scope chain + NUL + raw symbol
    sep = "\x00"
    mapping = {
        f"{chain}{sep}{raw}": canon
        for (chain, raw), canon in token_map.entries.items()
    }
    out_scope = pl.when(pl.col("__kind") == "swap").then(pl.col("__chain")) \
        .otherwise(pl.col("__dest"))
    if mapping:
        canon_in = (pl.col("__chain") + sep + pl.col("token_in")) \
            .replace_strict(mapping, default=pl.col("token_in"))
        canon_out = (out_scope + sep + pl.col("token_out")) \
            .replace_strict(mapping, default=pl.col("token_out"))
    else:
        canon_in = pl.col("token_in")
        canon_out = pl.col("token_out")
    df = df.with_columns(canon_in.alias("__tin"), canon_out.alias("__tout"))

    actor_cats = pl.Categories.random()
    actor_dt = pl.Categorical(actor_cats)
    sender_c = df["sender"].cast(actor_dt)
    receiver_c = df["receiver"].cast(actor_dt)
    # the actor universe can reach tens of millions of addresses; keep
    # the code->address table columnar instead of a tuple of str
    actors = StrTable(pl.concat([sender_c, receiver_c]).cat.get_categories())
    sender = sender_c.to_physical().to_numpy().astype(np.int32)
    receiver = receiver_c.to_physical().to_numpy().astype(np.int32)
    del sender_c, receiver_c
    df = df.drop("sender", "receiver")

    token_cats = pl.Categories.random()
    token_dt = pl.Categorical(token_cats)
    tok_codes: dict[str, np.ndarray] = {}
    tok_series = []
    for name, col in (
        ("tin", "__tin"), ("tout", "__tout"),
        ("tin_nat", "token_in"), ("tout_nat", "token_out"),
    ):
        s = df[col].cast(token_dt)
        tok_codes[name] = s.to_physical().to_numpy().astype(np.int32)
        tok_series.append(s)
    tokens = pl.concat(tok_series).cat.get_categories().to_list()
    del tok_series
    df = df.drop("__tin", "__tout", "token_in", "token_out")

    # fixed-width hash array built in slices so only a bounded number of
    # transient bytes objects exist at once
    width = int(df["hash"].str.len_bytes().max() or 1)
    hash_col = df["hash"].cast(pl.Binary)
    hashes = np.empty(n, dtype=f"S{width}")
    step = 1 << 20
    for start in range(0, n, step):
        chunk = hash_col.slice(start, step).to_list()
        hashes[start:start + len(chunk)] = np.array(chunk, dtype=f"S{width}")
    del hash_col
    df = df.drop("hash")

    chain_code = {name: code for name, code in chains.CODE.items()}
    return RecordColumns.from_arrays(
        ts=df["__ts"].to_numpy().astype(np.int64),
        kind=(df["__kind"] == "bridge").to_numpy().astype(np.int8),
        chain=df["__chain"].replace_strict(chain_code, return_dtype=pl.Int16)
        .to_numpy().astype(np.int16),
        dest=df["__dest"].replace_strict(chain_code, default=chains.NO_CHAIN,
                                         return_dtype=pl.Int16)
        .fill_null(chains.NO_CHAIN).to_numpy().astype(np.int16),
        sender=sender,
        receiver=receiver,
        tok_in=tok_codes["tin"],
        tok_out=tok_codes["tout"],
        tok_in_native=tok_codes["tin_nat"],
        tok_out_native=tok_codes["tout_nat"],
        vin=df["__micro_value_in_usd"].to_numpy().astype(np.int64),
        vout=df["__micro_value_out_usd"].to_numpy().astype(np.int64),
        legs=df["__legs"].to_numpy().astype(np.int32),
        hashes=hashes,
        actors=actors,
        tokens=tuple(tokens),
    )
