"""Exception hierarchy shared across the package."""


class HopscanError(Exception):
    """Base class for all package errors."""


class ValidationError(HopscanError):
    """A record or row violates a structural invariant."""


class MissingField(ValidationError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class NegativeValue(ValidationError):
    def __init__(self, field: str, value):
        super().__init__(f"{field} must be non-negative, got {value}")
        self.field = field
        self.value = value


class BridgeSameChain(ValidationError):
    def __init__(self, chain: str):
        super().__init__(f"bridge origin and destination chain are both {chain!r}")
        self.chain = chain


class UnknownChain(ValidationError):
    def __init__(self, chain: str):
        super().__init__(f"chain {chain!r} is not in the chain registry")
        self.chain = chain


class UnknownKind(ValidationError):
    def __init__(self, kind: str):
        super().__init__(f"kind must be 'swap' or 'bridge', got {kind!r}")
        self.kind = kind


class InvalidField(ValidationError):
    def __init__(self, field: str, value, why: str = ""):
        detail = f": {why}" if why else ""
        super().__init__(f"invalid value for {field}: {value!r}{detail}")
        self.field = field
        self.value = value


class DuplicateHash(ValidationError):
    def __init__(self, hash_: str):
        super().__init__(f"hash {hash_!r} appears more than once in the dataset")
        self.hash = hash_


class KindMismatch(HopscanError):
    """Two records have the same kind where a swap/bridge pair is required."""


class UnreadableSource(HopscanError):
    """Input bytes could not be decoded or read."""


class UnknownFormat(HopscanError):
    def __init__(self, fmt: str):
        super().__init__(f"unsupported dataset format {fmt!r} (expected 'csv' or 'jsonl')")
        self.format = fmt


class InvalidTokenMap(HopscanError):
    """Token equivalence file is malformed or not idempotent."""


class InputTooLarge(HopscanError):
    def __init__(self, count: int, limit: int):
        super().__init__(
            f"{count} records exceed the exhaustive-search guard of {limit}"
        )
        self.count = count
        self.limit = limit


class InsufficientPoints(HopscanError):
    def __init__(self, have: int, need: int = 3):
        super().__init__(
            f"model fit needs at least {need} nonzero points, got {have}"
        )
        self.have = have
        self.need = need


class InvalidSpec(HopscanError):
    """A synthetic plant spec violates its own constraints."""


class ConfigError(HopscanError):
    """Detection configuration is out of range or unparseable."""
