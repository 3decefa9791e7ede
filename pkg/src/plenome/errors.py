"""Exception types with machine-parsable categories (used by the CLI exit path)."""


class PlenomeError(Exception):
    """Base error; `category` is a stable, machine-parsable identifier."""

    category = "error"


class InvalidOpticsError(PlenomeError):
    category = "invalid-optics"


class InvalidDiameterError(PlenomeError):
    category = "invalid-diameter"


class OutOfBoundsMvError(PlenomeError):
    category = "out-of-bounds-mv"


class EmptyFeasibleSetError(PlenomeError):
    category = "empty-feasible-set"


class SpecTooSmallError(PlenomeError):
    category = "spec-too-small"


class ShiftExitsFrameError(PlenomeError):
    category = "shift-exits-frame"


class SizeMismatchError(PlenomeError):
    category = "size-mismatch"


class FrameIndexError(PlenomeError):
    category = "index-out-of-range"


class ConfigError(PlenomeError):
    category = "parse-error"
