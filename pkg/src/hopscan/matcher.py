"""Pairwise continuity checks between consecutive transactions.

A candidate pair (t_i, t_j) must satisfy five independent constraints
before it can sit adjacent in an arbitrage path: time continuity within
the detection window, value continuity within the tolerance band, token
continuity of the canonical symbols, actor consistency, and the
same-chain/cross-chain rule. `phi` is their conjunction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .errors import ConfigError, KindMismatch
from .model import Kind, TransactionRecord

TOLERANCE_SCALE = 1_000_000  # tolerance carries at most 6 fractional digits


@dataclass(frozen=True, slots=True)
class DetectionConfig:
    """Tunable knobs of the pairwise and path-level search."""

    window_secs: int = 300
    value_tolerance: Decimal = Decimal("0.98")
    min_hops: int = 3
    max_hops: int = 6

    def __post_init__(self):
        if not isinstance(self.value_tolerance, Decimal):
            try:
                object.__setattr__(
                    self, "value_tolerance", Decimal(str(self.value_tolerance))
                )
            except InvalidOperation:
                raise ConfigError(
                    f"value_tolerance {self.value_tolerance!r} is not a decimal"
                ) from None
        if self.window_secs <= 0:
            raise ConfigError(f"window_secs must be positive, got {self.window_secs}")
        if not (0 < self.value_tolerance <= 1):
            raise ConfigError(
                f"value_tolerance must be in (0, 1], got {self.value_tolerance}"
            )
        scaled = self.value_tolerance * TOLERANCE_SCALE
        if scaled != scaled.to_integral_value():
            raise ConfigError(
                "value_tolerance supports at most 6 fractional digits, "
                f"got {self.value_tolerance}"
            )
        if not isinstance(self.min_hops, int) or not isinstance(self.max_hops, int):
            raise ConfigError("hop bounds must be integers")
        if not (2 <= self.min_hops <= self.max_hops):
            raise ConfigError(
                f"need 2 <= min_hops <= max_hops, got {self.min_hops}..{self.max_hops}"
            )

    @property
    def tolerance_micro(self) -> int:
        """value_tolerance as an exact integer numerator over 10**6."""
        return int(self.value_tolerance * TOLERANCE_SCALE)

    @property
    def min_len(self) -> int:
        return 2 * self.min_hops - 1

    @property
    def max_len(self) -> int:
        return 2 * self.max_hops - 1

    def as_dict(self) -> dict:
        return {
            "window_secs": self.window_secs,
            "value_tolerance": str(self.value_tolerance),
            "min_hops": self.min_hops,
            "max_hops": self.max_hops,
        }


def check_time(t_i: TransactionRecord, t_j: TransactionRecord,
               cfg: DetectionConfig) -> bool:
    """Strictly later, and no later than the window bound (inclusive)."""
    return t_i.timestamp < t_j.timestamp <= t_i.timestamp + cfg.window_secs


def check_value(t_i: TransactionRecord, t_j: TransactionRecord,
                cfg: DetectionConfig) -> bool:
    """tolerance * out(t_i) <= in(t_j) <= out(t_i), both bounds closed."""
    upper = t_i.value_out_usd
    return cfg.value_tolerance * upper <= t_j.value_in_usd <= upper


def check_token(t_i: TransactionRecord, t_j: TransactionRecord) -> bool:
    """The canonical token leaving t_i is the one entering t_j."""
    return t_i.token_out == t_j.token_in


def check_actor(t_i: TransactionRecord, t_j: TransactionRecord) -> bool:
    """Swap->bridge keeps the sender; bridge->swap hands off to the receiver."""
    if t_i.kind is t_j.kind:
        raise KindMismatch(f"{t_i.kind.value} followed by {t_j.kind.value}")
    if t_i.is_swap:
        return t_j.sender == t_i.sender
    return t_j.sender == t_i.receiver


def check_chain(t_i: TransactionRecord, t_j: TransactionRecord) -> bool:
    """Swap->bridge stays on one chain; bridge->swap lands on the destination."""
    if t_i.kind is t_j.kind:
        raise KindMismatch(f"{t_i.kind.value} followed by {t_j.kind.value}")
    if t_i.is_swap:
        return t_j.chain == t_i.chain
    return t_j.chain == t_i.dest_chain and t_j.chain != t_i.chain


def phi(t_i: TransactionRecord, t_j: TransactionRecord,
        cfg: DetectionConfig) -> bool:
    """Conjunction of all five pairwise constraints.

    Total predicate: same-kind pairs are an alternation failure, which is
    simply an invalid adjacency, so they return False instead of raising.
    """
    if t_i.kind is t_j.kind:
        return False
    return (
        check_time(t_i, t_j, cfg)
        and check_value(t_i, t_j, cfg)
        and check_token(t_i, t_j)
        and check_actor(t_i, t_j)
        and check_chain(t_i, t_j)
    )
