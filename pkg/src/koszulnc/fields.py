"""Prime fields used as exact stand-ins for characteristic zero.

All rank and dimension computations run over F_p for a word-sized prime p.
Two default primes are provided so every quantity can be recomputed over a
second field; agreement across the two is the guard against accidental
bad-characteristic artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_PRIME = 32003
ALTERNATE_PRIME = 65521
DEFAULT_PRIMES = (DEFAULT_PRIME, ALTERNATE_PRIME)

# The dense kernels keep entries unreduced in float64 across elimination
# steps; exactness needs n_cols * p**2 < 2**53, which caps the modulus.
MAX_MODULUS = 65536


class FieldConfigError(ValueError):
    """Raised for a modulus that is not an odd prime in the supported range."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    """The field Z/p for prime p, with elements represented in [0, p)."""

    modulus: int = DEFAULT_PRIME

    def __post_init__(self):
        if not isinstance(self.modulus, int) or not is_prime(self.modulus):
            raise FieldConfigError(f"modulus {self.modulus!r} is not prime")
        if self.modulus >= MAX_MODULUS:
            raise FieldConfigError(
                f"modulus {self.modulus} too large for exact float64 kernels"
            )

    @property
    def p(self) -> int:
        return self.modulus

    def reduce(self, a: int) -> int:
        return a % self.modulus

    def neg(self, a: int) -> int:
        return (-a) % self.modulus

    def inv(self, a: int) -> int:
        a %= self.modulus
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        return pow(a, self.modulus - 2, self.modulus)

    def __str__(self):
        return f"F{self.modulus}"
