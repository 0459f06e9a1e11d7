"""hopscan: detection and analysis of cross-chain multihop arbitrage.

The package finds sequence-dependent arbitrage paths — alternating
swap/bridge transaction chains executed by a single actor across
blockchains — in normalized transaction datasets, quantifies their
profitability and hop-count structure, and generates synthetic datasets
with planted ground truth for calibration and testing.
"""

from .errors import (
    BridgeSameChain,
    ConfigError,
    DuplicateHash,
    HopscanError,
    InputTooLarge,
    InsufficientPoints,
    InvalidField,
    InvalidSpec,
    InvalidTokenMap,
    KindMismatch,
    MissingField,
    NegativeValue,
    UnknownChain,
    UnknownFormat,
    UnknownKind,
    UnreadableSource,
    ValidationError,
)
from .ingest import (
    LoadResult,
    RejectedRow,
    TokenEquivalenceMap,
    build_index,
    canonicalize,
    filter_atomic_swaps,
    load_dataset,
    parse_dataset,
)
from .index import TxIndex
from .matcher import (
    DetectionConfig,
    check_actor,
    check_chain,
    check_time,
    check_token,
    check_value,
    phi,
)
from .model import (
    ArbitragePath,
    CanonicalToken,
    Kind,
    TransactionRecord,
    validate_record,
)
from .pathfinder import (
    CandidateChain,
    brute_force_find,
    dedupe_maximal,
    extend,
    find_paths,
    is_effective,
    validate_path,
)

__version__ = "0.1.0"

__all__ = [
    "ArbitragePath",
    "BridgeSameChain",
    "CandidateChain",
    "CanonicalToken",
    "ConfigError",
    "DetectionConfig",
    "DuplicateHash",
    "HopscanError",
    "InputTooLarge",
    "InsufficientPoints",
    "InvalidField",
    "InvalidSpec",
    "InvalidTokenMap",
    "Kind",
    "KindMismatch",
    "LoadResult",
    "MissingField",
    "NegativeValue",
    "RejectedRow",
    "TokenEquivalenceMap",
    "TransactionRecord",
    "TxIndex",
    "UnknownChain",
    "UnknownFormat",
    "UnknownKind",
    "UnreadableSource",
    "ValidationError",
    "brute_force_find",
    "build_index",
    "canonicalize",
    "check_actor",
    "check_chain",
    "check_time",
    "check_token",
    "check_value",
    "dedupe_maximal",
    "extend",
    "filter_atomic_swaps",
    "find_paths",
    "is_effective",
    "load_dataset",
    "parse_dataset",
    "phi",
    "validate_path",
    "validate_record",
    "__version__",
]
