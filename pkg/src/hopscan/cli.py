"""Command-line entry point: reproducible detect / fit / synth / oracle runs.

Every run that writes artifacts also writes a ``manifest.json`` naming
the input files (with content digests), the full effective
configuration, the tool version, and wall-clock start/end times, so any
published number can be re-derived.  All JSON artifacts are UTF-8 with
sorted keys; human-readable tables use the column order
(chain path, duration, tokens, profit).

Exit codes: 0 success (including "no paths found"), 2 configuration
error, 3 input error.  An oracle mismatch — a detector bug, not a bad
input — exits 1.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

try:  # 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from . import __version__
from .analytics import (
    HopCountDistribution,
    compare_models,
    path_row_dict,
    plot_csv,
    summarize,
    summary_csv,
    summary_json,
)
from .errors import (
    ConfigError,
    HopscanError,
    InputTooLarge,
    InsufficientPoints,
    InvalidSpec,
    InvalidTokenMap,
    UnknownFormat,
    UnreadableSource,
)
from .ingest import LoadResult, TokenEquivalenceMap, build_index, load_dataset
from .matcher import DetectionConfig
from .pathfinder import brute_force_find, find_paths
from .synth import (
    GOLDEN_SEED,
    PlantSpec,
    gen_noise,
    golden_table1,
    plant,
    write_dataset,
)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3

_CONFIG_KEYS = (
    "window_secs",
    "value_tolerance",
    "min_hops",
    "max_hops",
    "format",
    "token_map",
    "seed",
    "threads",
)


def _utc_stamp(epoch: float) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(epoch))


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 23), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Reproducibility sidecar written next to every artifact set."""

    inputs: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__
    started_at: float = 0.0
    finished_at: float = 0.0
    outputs: list[str] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def add_input(self, path: Path) -> None:
        self.inputs.append({"path": str(path), "sha256": _sha256_file(path)})

    def to_json(self) -> str:
        doc = {
            "inputs": self.inputs,
            "config": self.config,
            "version": self.version,
            "started_at": _utc_stamp(self.started_at),
            "finished_at": _utc_stamp(self.finished_at),
            "outputs": self.outputs,
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: Path) -> None:
        self.finished_at = time.time()
        self.outputs = sorted(set(self.outputs))
        (out_dir / "manifest.json").write_text(self.to_json(), encoding="utf-8")


def _json_float(x: float):
    """JSON has no infinities; keep them readable and round-trippable."""
    if math.isfinite(x):
        return x
    return "-inf" if x < 0 else "inf"


# ---------------------------------------------------------------------------
# configuration plumbing


def _read_toml(path: Path) -> dict:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise UnreadableSource(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc


def _effective_settings(args: argparse.Namespace) -> dict:
    """Merge the TOML config file (if any) with flags; flags win."""
    settings: dict = {}
    if getattr(args, "config", None):
        doc = _read_toml(Path(args.config))
        unknown = sorted(set(doc) - set(_CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        settings.update(doc)
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def _detection_config(settings: dict) -> DetectionConfig:
    try:
        tolerance = settings.get("value_tolerance", "0.98")
        if isinstance(tolerance, float):
            # TOML floats would smuggle binary rounding into an exact knob.
            raise ConfigError(
                "value_tolerance must be a string or integer, got a float; "
                'write it as value_tolerance = "0.98"'
            )
        return DetectionConfig(
            window_secs=int(settings.get("window_secs", 300)),
            value_tolerance=Decimal(str(tolerance)),
            min_hops=int(settings.get("min_hops", 3)),
            max_hops=int(settings.get("max_hops", 6)),
        )
    except (InvalidOperation, ValueError, TypeError) as exc:
        raise ConfigError(f"bad detection settings: {exc}") from exc


def _threads(settings: dict) -> int:
    raw = settings.get("threads", 1)
    if raw == "auto":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"threads must be an integer or 'auto', got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"threads must be >= 1, got {n}")
    return n


def _seed(settings: dict, default: int | None = None) -> int | None:
    raw = settings.get("seed", default)
    if raw is None:
        return None
    try:
        seed = int(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"seed must be an integer, got {raw!r}") from exc
    if not (0 <= seed < 2**64):
        raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def _token_map(settings: dict) -> TokenEquivalenceMap:
    path = settings.get("token_map")
    if not path:
        return TokenEquivalenceMap.default()
    p = Path(path)
    if not p.exists():
        raise UnreadableSource(f"token map file not found: {p}")
    return TokenEquivalenceMap.from_csv(p)


def _infer_format(path: Path, explicit: str | None) -> str:
    if explicit:
        if explicit not in ("csv", "jsonl"):
            raise UnknownFormat(explicit)
        return explicit
    suffix = path.suffix.lower().lstrip(".")
    if suffix in ("csv",):
        return "csv"
    if suffix in ("jsonl", "ndjson", "json"):
        return "jsonl"
    raise UnreadableSource(
        f"cannot infer format of {path}; pass --format csv|jsonl"
    )


def _config_dict(config: DetectionConfig, settings: dict) -> dict:
    doc = config.as_dict()
    doc["format"] = settings.get("format")
    doc["token_map"] = settings.get("token_map")
    doc["threads"] = _threads(settings)
    doc["seed"] = _seed(settings)
    return doc


# ---------------------------------------------------------------------------
# detect


def _load_inputs(
    paths: list[Path],
    fmt_flag: str | None,
    token_map: TokenEquivalenceMap,
    manifest: RunManifest,
) -> tuple[LoadResult | None, list, dict]:
    """Load one or more datasets; returns (single_load, records, diagnostics).

    A single input keeps its vectorized index as-is.  Multiple inputs
    are merged record-wise (first occurrence of a duplicate hash wins)
    and re-indexed.
    """
    loads: list[LoadResult] = []
    for path in paths:
        if not path.exists():
            raise UnreadableSource(f"input file not found: {path}")
        manifest.add_input(path)
        fmt = _infer_format(path, fmt_flag)
        if path.stat().st_size == 0:  # an empty dataset is a valid dataset
            loads.append(
                LoadResult(
                    index=build_index([]),
                    rejects=[],
                    rows_total=0,
                    multi_asset_dropped=0,
                    route="record",
                )
            )
            continue
        loads.append(load_dataset(path, fmt=fmt, token_map=token_map))

    diagnostics: dict = {
        "rows_total": sum(l.rows_total for l in loads),
        "rows_accepted": sum(l.rows_accepted for l in loads),
        "rows_rejected": sum(len(l.rejects) for l in loads),
        "multi_asset_dropped": sum(l.multi_asset_dropped for l in loads),
        "routes": [l.route for l in loads],
        "reject_reasons": {},
    }
    reasons: dict[str, int] = {}
    for l in loads:
        for r in l.rejects:
            reasons[r.reason] = reasons.get(r.reason, 0) + 1
    diagnostics["reject_reasons"] = dict(sorted(reasons.items()))

    if len(loads) == 1:
        return loads[0], [], diagnostics

    seen: set[str] = set()
    merged = []
    dup_across = 0
    for l in loads:
        for rec in l.index.columns.to_records():
            if rec.hash in seen:
                dup_across += 1
                continue
            seen.add(rec.hash)
            merged.append(rec)
    diagnostics["cross_file_duplicates"] = dup_across
    diagnostics["rows_accepted"] -= dup_across
    return None, merged, diagnostics


def cmd_detect(args: argparse.Namespace) -> int:
    manifest = RunManifest(started_at=time.time())
    settings = _effective_settings(args)
    config = _detection_config(settings)
    threads = _threads(settings)
    token_map = _token_map(settings)
    manifest.config = _config_dict(config, settings)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    single, merged, diagnostics = _load_inputs(
        [Path(p) for p in args.inputs], settings.get("format"), token_map, manifest
    )
    index = single.index if single is not None else build_index(merged)
    paths = find_paths(index, config, threads=threads)
    report = summarize(paths)

    with (out_dir / "paths.jsonl").open("w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(json.dumps(path_row_dict(row), sort_keys=True))
            fh.write("\n")
    (out_dir / "summary.csv").write_text(summary_csv(report), encoding="utf-8")
    (out_dir / "summary.json").write_text(summary_json(report), encoding="utf-8")

    diagnostics["paths_found"] = len(paths)
    manifest.diagnostics = diagnostics
    manifest.outputs = ["paths.jsonl", "summary.csv", "summary.json", "manifest.json"]
    manifest.write(out_dir)

    _print_detect_table(report)
    print(
        f"{len(paths)} path(s) from {diagnostics['rows_accepted']} records "
        f"({diagnostics['rows_rejected']} rejected, "
        f"{diagnostics['multi_asset_dropped']} multi-asset dropped) -> {out_dir}"
    )
    return EXIT_OK


def _print_detect_table(report) -> None:
    if not report.rows:
        return
    headers = ("hops", "chain path", "duration_s", "tokens", "profit_usd")
    table = [
        (
            str(r.hops),
            r.chain_display,
            str(r.duration_secs),
            r.token_display,
            r.profit_display,
        )
        for r in report.rows
    ]
    widths = [
        max(len(h), *(len(row[i]) for row in table)) for i, h in enumerate(headers)
    ]
    def fmt(cells):
        left = cells[1].ljust(widths[1]), cells[3].ljust(widths[3])
        return "  ".join(
            [
                cells[0].rjust(widths[0]),
                left[0],
                cells[2].rjust(widths[2]),
                left[1],
                cells[4].rjust(widths[4]),
            ]
        ).rstrip()
    print(fmt(headers))
    for row in table:
        print(fmt(row))


# ---------------------------------------------------------------------------
# fit


def _counts_from_paths_file(path: Path) -> dict[int, int]:
    counts: dict[int, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                hops = int(doc["hops"])
            except (ValueError, KeyError, TypeError) as exc:
                raise UnreadableSource(
                    f"{path}:{lineno}: not a path row: {exc}"
                ) from exc
            counts[hops] = counts.get(hops, 0) + 1
    return counts


def _counts_from_counts_file(path: Path) -> dict[int, int]:
    import csv

    counts: dict[int, int] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"hops", "count"} <= set(reader.fieldnames):
            raise UnreadableSource(
                f"{path}: counts file needs 'hops' and 'count' columns"
            )
        for i, row in enumerate(reader, start=2):
            try:
                hops, count = int(row["hops"]), int(row["count"])
            except (ValueError, TypeError) as exc:
                raise UnreadableSource(f"{path}:{i}: bad counts row: {exc}") from exc
            if count < 0 or hops < 1:
                raise UnreadableSource(
                    f"{path}:{i}: hop level must be >= 1 and count >= 0"
                )
            counts[hops] = counts.get(hops, 0) + count
    return counts


def cmd_fit(args: argparse.Namespace) -> int:
    manifest = RunManifest(started_at=time.time())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    merged: dict[int, int] = {}
    for raw in args.inputs:
        path = Path(raw)
        if not path.exists():
            raise UnreadableSource(f"input file not found: {path}")
        manifest.add_input(path)
        if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
            part = _counts_from_paths_file(path)
        else:
            part = _counts_from_counts_file(path)
        for hops, count in part.items():
            merged[hops] = merged.get(hops, 0) + count
    if not merged:
        raise InsufficientPoints(0)

    levels = tuple(sorted(merged))
    dist = HopCountDistribution(
        hops=levels, counts=tuple(merged[h] for h in levels)
    )
    comparison = compare_models(dist)

    def fit_doc(fit):
        return {
            "kind": fit.kind,
            "a": _json_float(fit.a),
            "k": _json_float(fit.k),
            "rss": _json_float(fit.rss),
            "rmse": _json_float(fit.rmse),
            "aic": _json_float(fit.aic),
            "n_points": fit.n_points,
            "zeros_excluded": fit.zeros_excluded,
        }

    doc = {
        "distribution": {
            "hops": list(dist.hops),
            "counts": list(dist.counts),
        },
        "powerlaw": fit_doc(comparison.powerlaw),
        "exponential": fit_doc(comparison.exponential),
        "preferred": comparison.preferred,
        "tie": comparison.tie,
    }
    (out_dir / "fit.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "fit_plot.csv").write_text(plot_csv(dist, comparison), encoding="utf-8")

    manifest.config = {"inputs_merged": len(args.inputs)}
    manifest.outputs = ["fit.json", "fit_plot.csv", "manifest.json"]
    manifest.write(out_dir)

    pw, ex = comparison.powerlaw.rounded(), comparison.exponential.rounded()
    print(f"power-law:   a={pw['a']} k={pw['k']} rss={pw['rss']} rmse={pw['rmse']} aic={pw['aic']}")
    print(f"exponential: a={ex['a']} rate={ex['k']} rss={ex['rss']} rmse={ex['rmse']} aic={ex['aic']}")
    print(f"preferred: {comparison.preferred}" + (" (tie)" if comparison.tie else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def _plant_specs_from_toml(doc: dict, default_seed: int | None) -> tuple[list[PlantSpec], int, int, tuple[int, int]]:
    try:
        seed = int(doc.get("seed", default_seed if default_seed is not None else 0))
        noise_doc = doc.get("noise", {})
        noise_count = int(noise_doc.get("count", 0))
        span = tuple(noise_doc.get("span", (1693526400, 1722470400)))
        if len(span) != 2:
            raise InvalidSpec(f"noise span must be [start, end], got {span!r}")
        specs = []
        for entry in doc.get("plant", []):
            specs.append(
                PlantSpec(
                    chains=tuple(entry["chains"]),
                    swap_tokens=tuple(
                        (str(a), str(b)) for a, b in entry["tokens"]
                    ),
                    start_ts=int(entry["start_ts"]),
                    gaps=tuple(int(g) for g in entry["gaps"]),
                    initial_value=Decimal(str(entry["initial_value"])),
                    profit=Decimal(str(entry.get("profit", "0"))),
                    actor=str(entry.get("actor", "0xplantedactor")),
                    retentions=(
                        tuple(Decimal(str(r)) for r in entry["retentions"])
                        if "retentions" in entry
                        else None
                    ),
                )
            )
        return specs, seed, noise_count, (int(span[0]), int(span[1]))
    except (KeyError, ValueError, TypeError, InvalidOperation) as exc:
        raise InvalidSpec(f"malformed synth spec: {exc}") from exc


def cmd_synth(args: argparse.Namespace) -> int:
    manifest = RunManifest(started_at=time.time())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = args.format or "csv"
    if fmt not in ("csv", "jsonl"):
        raise UnknownFormat(fmt)
    seed = _seed(vars(args))

    truth: dict = {}
    if args.spec:
        spec_path = Path(args.spec)
        if not spec_path.exists():
            raise UnreadableSource(f"spec file not found: {spec_path}")
        manifest.add_input(spec_path)
        doc = _read_toml(spec_path)
        specs, seed, noise_count, span = _plant_specs_from_toml(doc, seed)
        planted = [plant(spec) for spec in specs]
        noise = gen_noise(noise_count, seed=seed, span=span)
        records = [r for p in planted for r in p.records] + noise
        truth = {
            "seed": seed,
            "noise_count": noise_count,
            "paths": [{"hashes": list(p.hash_sequence())} for p in planted],
        }
    elif args.preset == "golden":
        golden = golden_table1(args.noise if args.noise is not None else 5000,
                               seed=seed if seed is not None else GOLDEN_SEED)
        records = list(golden.records)
        truth = {
            "seed": golden.seed,
            "noise_count": golden.noise_count,
            "paths": [
                {"hashes": list(p.hash_sequence())} for p in golden.planted
            ],
        }
        seed = golden.seed
    elif args.preset == "noise":
        count = args.noise if args.noise is not None else 10000
        seed = seed if seed is not None else 0
        records = gen_noise(count, seed=seed)
        truth = {"seed": seed, "noise_count": count, "paths": []}
    else:
        raise ConfigError("synth needs --spec FILE or --preset golden|noise")

    dataset_name = f"dataset.{fmt}"
    write_dataset(records, out_dir / dataset_name, fmt=fmt)
    (out_dir / "ground_truth.json").write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    manifest.config = {"format": fmt, "seed": seed, "preset": args.preset,
                       "spec": args.spec}
    manifest.outputs = [dataset_name, "ground_truth.json", "manifest.json"]
    manifest.write(out_dir)
    print(f"{len(records)} records ({len(truth['paths'])} planted path(s)) -> {out_dir / dataset_name}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle check


def cmd_oracle_check(args: argparse.Namespace) -> int:
    manifest = RunManifest(started_at=time.time())
    settings = _effective_settings(args)
    config = _detection_config(settings)
    token_map = _token_map(settings)
    manifest.config = _config_dict(config, settings)

    path = Path(args.input)
    if not path.exists():
        raise UnreadableSource(f"input file not found: {path}")
    manifest.add_input(path)
    fmt = _infer_format(path, settings.get("format"))
    load = load_dataset(path, fmt=fmt, token_map=token_map)

    records = load.index.columns.to_records()
    # brute_force_find enforces its own input-size guard (InputTooLarge).
    reference = brute_force_find(records, config)
    fast = find_paths(load.index, config, threads=_threads(settings))

    ref_set = {p.hash_sequence() for p in reference}
    fast_set = {p.hash_sequence() for p in fast}
    missing = sorted(ref_set - fast_set)
    extra = sorted(fast_set - ref_set)

    doc = {
        "records": load.rows_accepted,
        "reference_paths": len(reference),
        "detected_paths": len(fast),
        "missing": [list(seq) for seq in missing],
        "extra": [list(seq) for seq in extra],
        "equal": not missing and not extra,
    }
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "oracle_report.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        manifest.outputs = ["oracle_report.json", "manifest.json"]
        manifest.write(out_dir)

    if doc["equal"]:
        print(f"oracle check passed: {len(fast)} path(s) on {doc['records']} records")
        return EXIT_OK
    print(f"oracle mismatch: {len(missing)} missing, {len(extra)} extra", file=sys.stderr)
    for seq in missing:
        print(f"  missing: {' -> '.join(seq)}", file=sys.stderr)
    for seq in extra:
        print(f"  extra:   {' -> '.join(seq)}", file=sys.stderr)
    return EXIT_MISMATCH


# ---------------------------------------------------------------------------
# argument parsing


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file; flags override it")
    parser.add_argument("--window-secs", dest="window_secs", type=int)
    parser.add_argument("--value-tolerance", dest="value_tolerance")
    parser.add_argument("--min-hops", dest="min_hops", type=int)
    parser.add_argument("--max-hops", dest="max_hops", type=int)
    parser.add_argument("--format", choices=("csv", "jsonl"))
    parser.add_argument("--token-map", dest="token_map")
    parser.add_argument("--threads", help="worker threads for detection, or 'auto'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopscan",
        description="Detect sequence-dependent multihop arbitrage paths "
        "across chains and analyze their profitability.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="find arbitrage paths in a dataset")
    p.add_argument("inputs", nargs="+", help="dataset file(s), CSV or JSONL")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("fit", help="fit decay models to a hop-count histogram")
    p.add_argument(
        "inputs",
        nargs="+",
        help="paths.jsonl files and/or CSV counts files (hops,count); merged",
    )
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="TOML file of planted paths and noise")
    p.add_argument("--preset", choices=("golden", "noise"),
                   help="built-in dataset: the reference table or pure noise")
    p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--noise", type=int, help="noise record count for presets")
    p.add_argument("--format", choices=("csv", "jsonl"), help="dataset format")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser(
        "oracle-check",
        help="compare the indexed search against the exhaustive reference",
    )
    p.add_argument("input", help="dataset file (<= 2000 records)")
    p.add_argument("--out", help="optional directory for the diff report")
    _add_config_flags(p)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidSpec, UnknownFormat, InsufficientPoints) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnreadableSource, InvalidTokenMap, InputTooLarge, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HopscanError as exc:  # residual domain errors are input-shaped
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
