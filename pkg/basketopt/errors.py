#!/usr/bin/env python3
"""
Exception hierarchy for BasketOptimizer
Each class maps onto one CLI exit status
"""

from typing import Optional


class BasketOptError(Exception):
    """Base class for all package errors"""


class DomainError(BasketOptError, ValueError):
    """Argument outside the domain of a function"""


class NumericalError(BasketOptError, ArithmeticError):
    """Continued fraction or quadrature failed to converge"""

    def __init__(self, message: str, iterations: Optional[int] = None):
        super().__init__(message)
        self.iterations = iterations


class OutcomeSpaceError(BasketOptError):
    """Exact enumeration refused because the outcome space is too large"""

    def __init__(self, outcome_count: int, ceiling: int):
        super().__init__(
            f"Outcome space has {outcome_count:,} vectors, above the ceiling of "
            f"{ceiling:,}; use the Monte Carlo backend (--backend mc) instead"
        )
        self.outcome_count = outcome_count
        self.ceiling = ceiling


class ConfigError(BasketOptError, ValueError):
    """Invalid run configuration"""

    def __init__(self, message: str, field_path: str = ""):
        text = f"{field_path}: {message}" if field_path else message
        super().__init__(text)
        self.field_path = field_path


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_RESOURCE = 4


def exit_code_for(error: BaseException) -> int:
    """Map an exception onto the CLI exit status"""
    if isinstance(error, (ConfigError, DomainError)):
        return EXIT_CONFIG
    if isinstance(error, NumericalError):
        return EXIT_NUMERIC
    if isinstance(error, OutcomeSpaceError):
        return EXIT_RESOURCE
    return 1
