"""koszulnc: exact Koszul cohomology tables for projective varieties and
normal crossing unions over prime fields."""

__version__ = "0.1.0"

from .fields import ALTERNATE_PRIME, DEFAULT_PRIME, DEFAULT_PRIMES, PrimeField

__all__ = [
    "ALTERNATE_PRIME",
    "DEFAULT_PRIME",
    "DEFAULT_PRIMES",
    "PrimeField",
    "__version__",
]
