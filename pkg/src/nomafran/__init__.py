"""Resource allocation for NOMA-based fog radio access networks.

Pipeline per Monte Carlo drop: random geometry -> channel gains -> edge cache
placement -> many-to-many subchannel matching -> priced power-control game.
"""

from nomafran.errors import (
    ConfigError,
    DomainError,
    FeasibilityError,
    InstanceTooLarge,
    ParseError,
    UnmatchedError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "FeasibilityError",
    "InstanceTooLarge",
    "ParseError",
    "UnmatchedError",
    "ValidationError",
]
