"""Profitability and hop-count analytics over detected arbitrage paths.

Two halves live here:

* report building -- :func:`summarize` turns a list of
  :class:`~hopscan.model.ArbitragePath` into a :class:`SummaryReport`
  whose aggregates (per-hop counts and mean durations, profit extremes,
  chain frequencies, repeated-actor clusters) are always recomputable
  from its per-path rows;
* model fitting -- :func:`fit_model` / :func:`compare_models` fit
  power-law and exponential decay models to a hop-count histogram by
  closed-form least squares on the log-linearized form, scored by AIC
  on the raw counts.

All USD amounts stay :class:`~decimal.Decimal`; rounding happens only
in the ``display_*`` helpers (0.1 s for durations, 0.01 USD for
profits, two decimals for fit diagnostics), never in stored values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_EVEN
from typing import Mapping, Sequence

from . import chains
from .errors import InsufficientPoints
from .model import ArbitragePath

__all__ = [
    "PathRow",
    "SummaryReport",
    "HopCountDistribution",
    "FitResult",
    "ModelComparison",
    "gross_profit",
    "summarize",
    "chain_frequency",
    "fit_model",
    "compare_models",
    "summary_csv",
    "summary_json",
    "path_row_dict",
    "plot_csv",
]

_CENT = Decimal("0.01")

# Ordinary least squares needs at least this many points for a
# two-parameter model to say anything beyond interpolation.
_MIN_FIT_POINTS = 3


def gross_profit(path: ArbitragePath) -> Decimal:
    """USD profit of *path*: output of its last leg minus input of its first."""
    return path.gross_profit_usd


def _display_usd(value: Decimal) -> str:
    return str(value.quantize(_CENT, rounding=ROUND_HALF_EVEN))


def _display_secs(value: float) -> str:
    return f"{value:.1f}"


@dataclass(frozen=True, slots=True)
class PathRow:
    """One detected path, in display order: route, duration, tokens, profit."""

    hops: int
    chain_path: tuple[str, ...]
    duration_secs: int
    tokens: tuple[str, ...]
    profit_usd: Decimal
    actor: str
    tx_hashes: tuple[str, ...]

    @property
    def chain_display(self) -> str:
        """Route rendered with short chain names, e.g. ``Base->Eth->Base``."""
        return "->".join(chains.display(c) for c in self.chain_path)

    @property
    def token_display(self) -> str:
        return "/".join(self.tokens)

    @property
    def profit_display(self) -> str:
        return _display_usd(self.profit_usd)


@dataclass(frozen=True, slots=True)
class SummaryReport:
    """Per-path rows plus aggregates that are recomputable from the rows."""

    rows: tuple[PathRow, ...]
    count_by_hops: Mapping[int, int]
    mean_duration_by_hops: Mapping[int, float]
    positive_profit_count: int
    max_profit_usd: Decimal | None
    min_profit_usd: Decimal | None
    chain_frequency: Mapping[str, int]
    same_actor_clusters: Mapping[str, tuple[int, ...]]

    @property
    def path_count(self) -> int:
        return len(self.rows)

    def mean_duration_display(self, hops: int) -> str:
        return _display_secs(self.mean_duration_by_hops[hops])


def _row_for(path: ArbitragePath) -> PathRow:
    return PathRow(
        hops=path.hops,
        chain_path=path.chain_sequence,
        duration_secs=path.duration_secs,
        tokens=path.token_display,
        profit_usd=path.gross_profit_usd,
        actor=path.transactions[0].sender,
        tx_hashes=path.hash_sequence(),
    )


def chain_frequency(paths: Sequence[ArbitragePath]) -> dict[str, int]:
    """How many paths visit each chain, counting a chain once per path.

    Keys are canonical chain identifiers; chains no path visits are
    absent.  Ordering is by descending count, then chain id, so the
    result is deterministic.
    """
    counts: dict[str, int] = {}
    for path in paths:
        for chain in set(path.chain_sequence):
            counts[chain] = counts.get(chain, 0) + 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def summarize(paths: Sequence[ArbitragePath]) -> SummaryReport:
    """Build a :class:`SummaryReport` for *paths*.

    Rows keep the order of *paths*; callers that want chronological
    reports should pass paths already sorted (``find_paths`` output is).
    Mean durations are exact ratios of integer second totals, stored
    unrounded; use the display helpers for presentation.
    """
    rows = tuple(_row_for(p) for p in paths)

    count_by_hops: dict[int, int] = {}
    duration_sum: dict[int, int] = {}
    for row in rows:
        count_by_hops[row.hops] = count_by_hops.get(row.hops, 0) + 1
        duration_sum[row.hops] = duration_sum.get(row.hops, 0) + row.duration_secs
    count_by_hops = dict(sorted(count_by_hops.items()))
    mean_duration = {
        hops: duration_sum[hops] / count for hops, count in count_by_hops.items()
    }

    profits = [row.profit_usd for row in rows]
    clusters: dict[str, list[int]] = {}
    for i, row in enumerate(rows):
        clusters.setdefault(row.actor, []).append(i)

    return SummaryReport(
        rows=rows,
        count_by_hops=count_by_hops,
        mean_duration_by_hops=mean_duration,
        positive_profit_count=sum(1 for p in profits if p > 0),
        max_profit_usd=max(profits) if profits else None,
        min_profit_usd=min(profits) if profits else None,
        chain_frequency=chain_frequency(paths),
        same_actor_clusters={
            actor: tuple(ids)
            for actor, ids in sorted(clusters.items())
            if len(ids) > 1
        },
    )


@dataclass(frozen=True, slots=True)
class HopCountDistribution:
    """Histogram of path counts by hop level.

    ``hops`` is strictly increasing and every count is a non-negative
    integer; zero counts are legal entries (they are excluded from
    fitting and flagged on the result).
    """

    hops: tuple[int, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.hops) != len(self.counts):
            raise ValueError("hops and counts must have equal length")
        if any(b <= a for a, b in zip(self.hops, self.hops[1:])):
            raise ValueError("hop levels must be strictly increasing")
        if any(h < 1 for h in self.hops):
            raise ValueError("hop levels must be positive")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_paths(cls, paths: Sequence[ArbitragePath]) -> "HopCountDistribution":
        counts: dict[int, int] = {}
        for path in paths:
            counts[path.hops] = counts.get(path.hops, 0) + 1
        levels = tuple(sorted(counts))
        return cls(hops=levels, counts=tuple(counts[h] for h in levels))

    def nonzero(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        pairs = [(h, c) for h, c in zip(self.hops, self.counts) if c > 0]
        return tuple(h for h, _ in pairs), tuple(c for _, c in pairs)


@dataclass(frozen=True, slots=True)
class FitResult:
    """A fitted decay model and its goodness-of-fit diagnostics.

    ``kind`` is ``"powerlaw"`` (``count ~ a * hops**-k``) or
    ``"exponential"`` (``count ~ a * exp(-k * hops)``; ``k`` is the
    rate).  ``rss``/``rmse``/``aic`` are computed on the raw counts of
    the fitted (non-zero) points.  A perfect fit has ``rss == 0`` and
    ``aic == -inf``.
    """

    kind: str
    a: float
    k: float
    rss: float
    rmse: float
    aic: float
    n_points: int
    zeros_excluded: bool

    def predict(self, hops: int | float) -> float:
        if self.kind == "powerlaw":
            return self.a * float(hops) ** (-self.k)
        return self.a * math.exp(-self.k * float(hops))

    def rounded(self) -> dict[str, float]:
        """Diagnostics rounded to two decimals, for display only."""
        return {
            "a": round(self.a, 2),
            "k": round(self.k, 2),
            "rss": round(self.rss, 2),
            "rmse": round(self.rmse, 2),
            "aic": round(self.aic, 2) if math.isfinite(self.aic) else self.aic,
        }


@dataclass(frozen=True, slots=True)
class ModelComparison:
    powerlaw: FitResult
    exponential: FitResult
    preferred: str
    tie: bool


def _ols(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Closed-form simple linear regression: returns (slope, intercept)."""
    m = len(xs)
    mean_x = math.fsum(xs) / m
    mean_y = math.fsum(ys) / m
    sxx = math.fsum((x - mean_x) ** 2 for x in xs)
    sxy = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, mean_y - slope * mean_x


def fit_model(dist: HopCountDistribution, kind: str) -> FitResult:
    """Fit one decay model to *dist* by log-linearized least squares.

    Zero-count levels carry no information in log space; they are
    dropped before the regression and the result is flagged.  Raises
    :class:`InsufficientPoints` when fewer than three non-zero levels
    remain.
    """
    if kind not in ("powerlaw", "exponential"):
        raise ValueError(f"unknown model kind: {kind!r}")
    hops, counts = dist.nonzero()
    if len(hops) < _MIN_FIT_POINTS:
        raise InsufficientPoints(len(hops), _MIN_FIT_POINTS)

    log_y = [math.log(c) for c in counts]
    if kind == "powerlaw":
        xs = [math.log(h) for h in hops]
    else:
        xs = [float(h) for h in hops]
    slope, intercept = _ols(xs, log_y)
    a = math.exp(intercept)
    k = -slope

    result = FitResult(
        kind=kind,
        a=a,
        k=k,
        rss=0.0,
        rmse=0.0,
        aic=0.0,
        n_points=len(hops),
        zeros_excluded=len(hops) < len(dist.hops),
    )
    rss = math.fsum((c - result.predict(h)) ** 2 for h, c in zip(hops, counts))
    m = len(hops)
    rmse = math.sqrt(rss / m)
    # Two fitted parameters (a and k) in both model families.
    aic = m * math.log(rss / m) + 2 * 2 if rss > 0 else float("-inf")
    return FitResult(
        kind=kind,
        a=a,
        k=k,
        rss=rss,
        rmse=rmse,
        aic=aic,
        n_points=m,
        zeros_excluded=result.zeros_excluded,
    )


def compare_models(dist: HopCountDistribution) -> ModelComparison:
    """Fit both model families and prefer the lower AIC.

    An exact AIC tie prefers the power-law (the simpler tail behavior
    for this data) and says so via ``tie=True``.
    """
    power = fit_model(dist, "powerlaw")
    expo = fit_model(dist, "exponential")
    tie = power.aic == expo.aic
    preferred = "powerlaw" if power.aic <= expo.aic else "exponential"
    return ModelComparison(powerlaw=power, exponential=expo, preferred=preferred, tie=tie)


# ---------------------------------------------------------------------------
# serialization helpers


_SUMMARY_COLUMNS = (
    "hops",
    "chain_path",
    "duration_secs",
    "tokens",
    "profit_usd",
    "actor",
    "tx_hashes",
)


def summary_csv(report: SummaryReport) -> str:
    """Render the per-path rows as CSV text (route, duration, tokens, profit)."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_SUMMARY_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [
                row.hops,
                row.chain_display,
                row.duration_secs,
                row.token_display,
                row.profit_display,
                row.actor,
                ";".join(row.tx_hashes),
            ]
        )
    return buf.getvalue()


def path_row_dict(row: PathRow) -> dict:
    """JSON-ready dict for one path row (shared by reports and exports)."""
    return {
        "hops": row.hops,
        "chain_path": list(row.chain_path),
        "chain_display": row.chain_display,
        "duration_secs": row.duration_secs,
        "tokens": list(row.tokens),
        "profit_usd": str(row.profit_usd),
        "actor": row.actor,
        "tx_hashes": list(row.tx_hashes),
    }


def summary_json(report: SummaryReport) -> str:
    """Render the full report (rows + aggregates) as stable-keyed JSON."""
    doc = {
        "paths": [path_row_dict(row) for row in report.rows],
        "aggregates": {
            "path_count": report.path_count,
            "count_by_hops": {str(k): v for k, v in report.count_by_hops.items()},
            "mean_duration_by_hops": {
                str(k): v for k, v in report.mean_duration_by_hops.items()
            },
            "positive_profit_count": report.positive_profit_count,
            "max_profit_usd": (
                str(report.max_profit_usd) if report.max_profit_usd is not None else None
            ),
            "min_profit_usd": (
                str(report.min_profit_usd) if report.min_profit_usd is not None else None
            ),
            "chain_frequency": dict(report.chain_frequency),
            "same_actor_clusters": {
                actor: list(ids) for actor, ids in report.same_actor_clusters.items()
            },
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def plot_csv(dist: HopCountDistribution, comparison: ModelComparison) -> str:
    """CSV of observed counts with both fitted curves, one row per hop level."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["hops", "count", "fitted_powerlaw", "fitted_exponential"])
    for hops, count in zip(dist.hops, dist.counts):
        writer.writerow(
            [
                hops,
                count,
                f"{comparison.powerlaw.predict(hops):.6f}",
                f"{comparison.exponential.predict(hops):.6f}",
            ]
        )
    return buf.getvalue()
