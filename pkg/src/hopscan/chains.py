"""Closed registry of supported blockchain networks.

Chain identifiers come from a fixed set; anything else is rejected at
ingest with UnknownChain. Each chain has a canonical lowercase id, a short
display label used in report tables, and a handful of accepted aliases.
"""

from __future__ import annotations

from .errors import UnknownChain

# (canonical id, display label, aliases)
_CHAINS = [
    ("ethereum", "Eth", ("eth", "mainnet")),
    ("arbitrum", "Arb", ("arb",)),
    ("near", "Near", ()),
    ("polygon", "Poly", ("poly", "matic")),
    ("bsc", "BSC", ("bnb", "binance")),
    ("solana", "Sol", ("sol",)),
    ("blast", "Blast", ()),
    ("osmosis", "Osmo", ("osmo",)),
    ("avalanche", "Avax", ("avax",)),
    ("optimism", "Opt", ("opt", "op")),
    ("base", "Base", ()),
    ("gnosis", "Gnosis", ("xdai",)),
]

CHAIN_IDS = tuple(name for name, _, _ in _CHAINS)
DISPLAY = {name: disp for name, disp, _ in _CHAINS}

_LOOKUP: dict[str, str] = {}
for _name, _disp, _aliases in _CHAINS:
    _LOOKUP[_name] = _name
    _LOOKUP[_disp.lower()] = _name
    for _a in _aliases:
        _LOOKUP[_a] = _name

# every accepted spelling (lowercased) -> canonical id
ALIASES = dict(_LOOKUP)

# dense codes for the columnar engine; order is fixed by the registry
CODE = {name: i for i, name in enumerate(CHAIN_IDS)}
NO_CHAIN = -1  # dest_chain code for swaps


def resolve(raw: str) -> str:
    """Map a chain string (canonical, display, or alias) to its canonical id."""
    key = raw.strip().lower()
    try:
        return _LOOKUP[key]
    except KeyError:
        raise UnknownChain(raw) from None


def display(canonical: str) -> str:
    return DISPLAY[canonical]
