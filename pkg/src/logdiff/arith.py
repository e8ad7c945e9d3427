"""Exact integer, modular and p-integral rational arithmetic.

All level-m divided-power combinatorics live here: the q-factorials, the
brace and angle binomials, and generalized binomial coefficients of
p-integral rationals.  Everything is computed exactly over Z or Q and only
reduced modulo p^(i+1) at the very end; no computation is ever done
modulo-first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

from .errors import (
    ComponentwiseOrderViolation,
    IntegralityFailure,
    NotInvertible,
    NotPIntegral,
)

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all 64-bit-and-beyond inputs."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with g = gcd(a, b) >= 0 and x*a + y*b = g."""
    x, nx = 1, 0
    y, ny = 0, 1
    g, ng = a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        g, x, y = -g, -x, -y
    return g, x, y


@dataclass(frozen=True)
class RingParams:
    """The triple (p, i+1, m): coefficients live in Z/p^(i+1)Z at level m."""

    p: int
    nilpotency: int
    level: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.nilpotency < 1:
            raise ValueError("nilpotency must be >= 1")
        if self.level < 0:
            raise ValueError("level must be >= 0")

    @property
    def modulus(self) -> int:
        return self.p ** self.nilpotency

    def with_level(self, level: int) -> "RingParams":
        return RingParams(self.p, self.nilpotency, level)

    def __str__(self) -> str:
        return f"(p={self.p}, mod=p^{self.nilpotency}, level={self.level})"


@dataclass(frozen=True)
class ModInt:
    """Residue in Z/p^(i+1)Z."""

    residue: int
    params: RingParams

    def __post_init__(self):
        object.__setattr__(self, "residue", self.residue % self.params.modulus)

    def _check(self, other: "ModInt"):
        if other.params != self.params:
            raise ValueError("mixed ring parameters")

    def __add__(self, other: "ModInt") -> "ModInt":
        self._check(other)
        return ModInt(self.residue + other.residue, self.params)

    def __sub__(self, other: "ModInt") -> "ModInt":
        self._check(other)
        return ModInt(self.residue - other.residue, self.params)

    def __mul__(self, other: "ModInt") -> "ModInt":
        self._check(other)
        return ModInt(self.residue * other.residue, self.params)

    def __neg__(self) -> "ModInt":
        return ModInt(-self.residue, self.params)

    def inverse(self) -> "ModInt":
        return ModInt(invmod(self.residue, self.params.modulus), self.params)

    def is_zero(self) -> bool:
        return self.residue == 0

    def __str__(self) -> str:
        return str(self.residue)


def invmod(a: int, modulus: int) -> int:
    """Inverse of a modulo ``modulus``; NotInvertible when gcd != 1."""
    g, x, _ = xgcd(a % modulus, modulus)
    if g != 1:
        raise NotInvertible(f"{a} has no inverse modulo {modulus}")
    return x % modulus


@dataclass(frozen=True)
class PRat:
    """A p-integral rational: denominator coprime to p, kept fully reduced."""

    numerator: int
    denominator: int
    p: int

    def __post_init__(self):
        num, den = self.numerator, self.denominator
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            num, den = -num, -den
        g = math.gcd(num, den)
        if g > 1:
            num //= g
            den //= g
        if den % self.p == 0:
            raise NotPIntegral(f"denominator {den} divisible by p = {self.p}")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def from_fraction(cls, value: Union[Fraction, int], p: int) -> "PRat":
        frac = Fraction(value)
        return cls(frac.numerator, frac.denominator, p)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def _coerce(self, other) -> "PRat":
        if isinstance(other, PRat):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        return PRat.from_fraction(other, self.p)

    def __add__(self, other) -> "PRat":
        o = self._coerce(other)
        return PRat.from_fraction(self.as_fraction() + o.as_fraction(), self.p)

    def __sub__(self, other) -> "PRat":
        o = self._coerce(other)
        return PRat.from_fraction(self.as_fraction() - o.as_fraction(), self.p)

    def __mul__(self, other) -> "PRat":
        o = self._coerce(other)
        return PRat.from_fraction(self.as_fraction() * o.as_fraction(), self.p)

    def __neg__(self) -> "PRat":
        return PRat(-self.numerator, self.denominator, self.p)

    def __str__(self) -> str:
        if self.denominator == 1:
            return str(self.numerator)
        return f"{self.numerator}/{self.denominator}"


class MultiIndex:
    """Tuple of r non-negative integers with componentwise operations."""

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[int]):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError("multi-index entries must be non-negative")
        self.entries = entries

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndex) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    @property
    def weight(self) -> int:
        return sum(self.entries)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(a + b for a, b in zip(self.entries, tuple(other)))

    def __sub__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(a - b for a, b in zip(self.entries, tuple(other)))

    def __le__(self, other: "MultiIndex") -> bool:
        return all(a <= b for a, b in zip(self.entries, tuple(other)))

    def __repr__(self) -> str:
        return f"MultiIndex{self.entries}"


def _as_tuple(k) -> tuple[int, ...]:
    if isinstance(k, MultiIndex):
        return k.entries
    if isinstance(k, int):
        return (k,)
    return tuple(int(e) for e in k)


@lru_cache(maxsize=None)
def _qfact1(p: int, m: int, k: int) -> int:
    return math.factorial(k // p ** m)


def qfact(k: int, params: RingParams) -> int:
    """q! where q is the quotient of k by p^m; exact big integer."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return _qfact1(params.p, params.level, k)


@lru_cache(maxsize=None)
def _brace1(p: int, m: int, k: int, i: int) -> int:
    num = _qfact1(p, m, k)
    den = _qfact1(p, m, i) * _qfact1(p, m, k - i)
    q, r = divmod(num, den)
    if r:
        raise IntegralityFailure(f"brace({k},{i}) not integral at p={p}, m={m}")
    return q


@lru_cache(maxsize=None)
def _angle1(p: int, m: int, k: int, i: int) -> int:
    num = math.comb(k, i) * _qfact1(p, m, i) * _qfact1(p, m, k - i)
    q, r = divmod(num, _qfact1(p, m, k))
    if r:
        raise IntegralityFailure(f"angle({k},{i}) not integral at p={p}, m={m}")
    return q


def _check_componentwise(k: tuple[int, ...], i: tuple[int, ...]):
    if len(k) != len(i):
        raise ComponentwiseOrderViolation(f"arity mismatch: {k} vs {i}")
    if any(a > b for a, b in zip(i, k)):
        raise ComponentwiseOrderViolation(f"{i} exceeds {k} componentwise")


def brace_binom(k, i, params: RingParams) -> int:
    """The level-m symbol {k over i} = prod q_k!/(q_i! q_(k-i)!); exact."""
    kt, it = _as_tuple(k), _as_tuple(i)
    _check_componentwise(kt, it)
    out = 1
    for a, b in zip(kt, it):
        out *= _brace1(params.p, params.level, a, b)
    return out


def angle_binom(k, i, params: RingParams) -> int:
    """The level-m symbol <k over i> = prod C(k,i) q_i! q_(k-i)!/q_k!; exact."""
    kt, it = _as_tuple(k), _as_tuple(i)
    _check_componentwise(kt, it)
    out = 1
    for a, b in zip(kt, it):
        out *= _angle1(params.p, params.level, a, b)
    return out


def falling_binom(alpha: Fraction, k: int) -> Fraction:
    """C(alpha, k) = alpha(alpha-1)...(alpha-k+1)/k! over exact rationals."""
    num = Fraction(1)
    for j in range(k):
        num *= alpha - j
    return num / math.factorial(k)


def padic_binom(alpha: Union[PRat, Fraction, int], k: int) -> PRat:
    """C(alpha, k) for a p-integral alpha; the result is again p-integral."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if isinstance(alpha, PRat):
        p = alpha.p
        frac = alpha.as_fraction()
    else:
        raise TypeError("padic_binom needs a PRat to know the prime")
    value = falling_binom(frac, k)
    if value.denominator % p == 0:
        raise NotPIntegral(f"C({frac},{k}) has denominator divisible by {p}")
    return PRat(value.numerator, value.denominator, p)


def reduce(x, params: RingParams) -> ModInt:
    """Reduce an integer, Fraction or PRat modulo p^(i+1)."""
    if isinstance(x, int):
        return ModInt(x, params)
    if isinstance(x, PRat):
        if x.p != params.p:
            raise ValueError("mixed primes")
        x = x.as_fraction()
    if isinstance(x, Fraction):
        return ModInt(
            x.numerator * invmod(x.denominator, params.modulus), params
        )
    raise TypeError(f"cannot reduce {type(x).__name__}")


def reduce_int(x, params: RingParams) -> int:
    """Like reduce() but returns the bare residue; the hot-loop variant."""
    if isinstance(x, int):
        return x % params.modulus
    if isinstance(x, PRat):
        x = x.as_fraction()
    return x.numerator * invmod(x.denominator, params.modulus) % params.modulus
