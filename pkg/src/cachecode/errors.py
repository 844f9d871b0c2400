"""Exception types shared across the cachecode package."""


class CacheCodeError(Exception):
    """Base class for all cachecode errors."""


class InstanceError(CacheCodeError):
    """System parameters, demands, or inputs are invalid for an operation."""


class RegimeError(CacheCodeError):
    """An operation was called outside the parameter regime it covers."""


class ReplacementExhausted(CacheCodeError):
    """No replacement rule produced a usable substitute for a served term."""


class NoSeedTerm(CacheCodeError):
    """The tail subroutine found no remaining demand of user 1 to seed from."""


class ScheduleError(CacheCodeError):
    """A generated schedule violated one of its structural guarantees."""


class UnsupportedMemoryPoint(CacheCodeError):
    """The multi-access memory point does not reduce to a K-subfile placement."""


class SimulationMismatch(CacheCodeError):
    """End-to-end simulation failed to reconstruct a demanded file."""
