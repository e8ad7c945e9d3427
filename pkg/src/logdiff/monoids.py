"""Integer-lattice algebra for fine monoids and their morphisms.

Smith normal form with unimodular transforms, cokernel invariants, the
log-etale / log p-etale chart criterion, the Bezout decomposition behind
it, rank-1 saturation, and the fine-pushout construction that separates
fine from fs monoids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .arith import is_prime, xgcd
from .errors import (
    ArgumentsNotCoprime,
    BoundExceeded,
    CriterionViolated,
    NotInSpan,
    SchemaError,
)

Matrix = tuple[tuple[int, ...], ...]


def _freeze(rows: Sequence[Sequence[int]]) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in rows)


@dataclass(frozen=True)
class LatticeMap:
    """An integer matrix with d rows and r columns, a map Z^r -> Z^d."""

    matrix: Matrix

    def __post_init__(self):
        rows = _freeze(self.matrix)
        if rows and any(len(row) != len(rows[0]) for row in rows):
            raise ValueError("ragged matrix")
        object.__setattr__(self, "matrix", rows)

    @property
    def rows(self) -> int:
        return len(self.matrix)

    @property
    def cols(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        if len(v) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(
            sum(row[j] * v[j] for j in range(self.cols)) for row in self.matrix
        )

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.matrix)

    def __str__(self) -> str:
        return "[" + ", ".join("[" + ", ".join(map(str, r)) + "]" for r in self.matrix) + "]"


@dataclass(frozen=True)
class SnfResult:
    """L*A*R = diag(divisors) with L, R unimodular and d_j | d_(j+1)."""

    divisors: tuple[int, ...]
    left: Matrix
    right: Matrix


def _identity(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def smith_normal_form(a: LatticeMap) -> SnfResult:
    """Exact SNF by gcd-driven elimination; no modular shortcuts."""
    d = [list(row) for row in a.matrix]
    nrows, ncols = a.rows, a.cols
    left = _identity(nrows)
    right = _identity(ncols)

    def row_op(i1, i2, x, y, z, w):
        # (row i1, row i2) <- (x*i1 + y*i2, z*i1 + w*i2); det(x w - y z) = +-1
        for mat in (d, left):
            r1, r2 = mat[i1], mat[i2]
            for j in range(len(r1)):
                aa, bb = r1[j], r2[j]
                r1[j] = x * aa + y * bb
                r2[j] = z * aa + w * bb

    def col_op(j1, j2, x, y, z, w):
        for mat, size in ((d, nrows), (right, ncols)):
            for i in range(size):
                aa, bb = mat[i][j1], mat[i][j2]
                mat[i][j1] = x * aa + y * bb
                mat[i][j2] = z * aa + w * bb

    t = 0
    while t < min(nrows, ncols):
        # find a pivot
        pivot = None
        for i in range(t, nrows):
            for j in range(t, ncols):
                if d[i][j] != 0:
                    pivot = (i, j)
                    break
            if pivot:
                break
        if pivot is None:
            break
        pi, pj = pivot
        if pi != t:
            row_op(t, pi, 0, 1, 1, 0)
        if pj != t:
            col_op(t, pj, 0, 1, 1, 0)
        while True:
            # plain subtraction when the pivot divides the entry keeps the
            # opposite direction clean; the generalized op strictly shrinks
            # the pivot, so the outer loop terminates
            dirty = False
            for i in range(t + 1, nrows):
                v = d[i][t]
                if v:
                    piv = d[t][t]
                    if v % piv == 0:
                        row_op(t, i, 1, 0, -(v // piv), 1)
                    else:
                        g, x, y = xgcd(piv, v)
                        row_op(t, i, x, y, -(v // g), piv // g)
                        dirty = True
            for j in range(t + 1, ncols):
                v = d[t][j]
                if v:
                    piv = d[t][t]
                    if v % piv == 0:
                        col_op(t, j, 1, 0, -(v // piv), 1)
                    else:
                        g, x, y = xgcd(piv, v)
                        col_op(t, j, x, y, -(v // g), piv // g)
                        dirty = True
            if not dirty:
                break
        t += 1

    # enforce the divisibility chain
    rank = sum(1 for i in range(min(nrows, ncols)) if d[i][i] != 0)
    changed = True
    while changed:
        changed = False
        for i in range(rank - 1):
            if d[i + 1][i + 1] % d[i][i] != 0:
                # fold column i+1 into column i, then re-eliminate the block;
                # diag(a, b) becomes diag(gcd(a,b), lcm(a,b))
                col_op(i, i + 1, 1, 1, 0, 1)
                g, x, y = xgcd(d[i][i], d[i + 1][i])
                row_op(i, i + 1, x, y, -(d[i + 1][i] // g), d[i][i] // g)
                if d[i][i + 1]:
                    # the new pivot divides this entry; one subtraction clears it
                    col_op(i, i + 1, 1, 0, -(d[i][i + 1] // d[i][i]), 1)
                changed = True
    for i in range(rank):
        if d[i][i] < 0:
            for j in range(ncols):
                d[i][j] = -d[i][j]
            for j in range(nrows):
                left[i][j] = -left[i][j]

    divisors = tuple(d[i][i] for i in range(rank))
    return SnfResult(divisors, _freeze(left), _freeze(right))


def det(matrix: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant by fraction-free Gaussian elimination."""
    m = [list(row) for row in matrix]
    n = len(m)
    if n == 0:
        return 1
    if any(len(row) != n for row in m):
        raise ValueError("determinant of a non-square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def solve_integer(a: LatticeMap, b: Sequence[int]) -> Optional[tuple[int, ...]]:
    """One integer solution x of A x = b, or None when unsolvable over Z."""
    snf = smith_normal_form(a)
    rank = len(snf.divisors)
    c = [sum(snf.left[i][j] * b[j] for j in range(a.rows)) for i in range(a.rows)]
    y = [0] * a.cols
    for i in range(a.rows):
        if i < rank:
            q, r = divmod(c[i], snf.divisors[i])
            if r:
                return None
            y[i] = q
        elif c[i] != 0:
            return None
    return tuple(
        sum(snf.right[i][j] * y[j] for j in range(a.cols)) for i in range(a.cols)
    )


def solve_rational(a: LatticeMap, b: Sequence[int]) -> tuple[Fraction, ...]:
    """The solution of A x = b over Q; NotInSpan when inconsistent or ambiguous."""
    snf = smith_normal_form(a)
    rank = len(snf.divisors)
    if rank < a.cols:
        raise NotInSpan("kernel is nontrivial; no unique solution")
    c = [sum(snf.left[i][j] * b[j] for j in range(a.rows)) for i in range(a.rows)]
    y = [Fraction(0)] * a.cols
    for i in range(a.rows):
        if i < rank:
            y[i] = Fraction(c[i], snf.divisors[i])
        elif c[i] != 0:
            raise NotInSpan(f"inconsistent system: residual {c[i]} in row {i}")
    return tuple(
        sum((Fraction(snf.right[i][j]) * y[j] for j in range(a.cols)), Fraction(0))
        for i in range(a.cols)
    )


def coker_invariants(a: LatticeMap) -> tuple[int, list[int]]:
    """Cokernel of A as (free rank, torsion divisors > 1), read off the SNF."""
    snf = smith_normal_form(a)
    free_rank = a.rows - len(snf.divisors)
    torsion = [d for d in snf.divisors if d > 1]
    return free_rank, torsion


@dataclass(frozen=True)
class ChartCriterion:
    """Decision record for the kernel/cokernel chart criterion.

    ``coker_order`` is None when the cokernel is infinite.  A True
    ``log_etale`` also certifies log p-etaleness of every level.
    """

    log_etale: bool
    kernel_trivial: bool
    coker_order: Optional[int]


def is_log_etale_chart(phi: LatticeMap, p: int) -> ChartCriterion:
    """Kernel zero + finite cokernel of order prime to p.

    For a map out of a free group a finite kernel is automatically zero,
    so triviality of the kernel is equivalent to full column rank.
    """
    snf = smith_normal_form(phi)
    rank = len(snf.divisors)
    kernel_trivial = rank == phi.cols
    free_rank = phi.rows - rank
    if free_rank > 0:
        return ChartCriterion(False, kernel_trivial, None)
    order = math.prod(snf.divisors) if snf.divisors else 1
    ok = kernel_trivial and order % p != 0
    return ChartCriterion(ok, kernel_trivial, order)


def bezout_split(
    x0: Sequence[int], phi: LatticeMap, p: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Decompose x0 = phi(y) + p*x, given the chart criterion holds.

    With n the cokernel order (prime to p), n*x0 lifts through phi; a
    Bezout relation a*n + b*p = 1 then gives y = a*y0 and x = b*x0.
    """
    crit = is_log_etale_chart(phi, p)
    if not crit.log_etale:
        raise CriterionViolated("chart map fails the kernel/cokernel criterion")
    n = crit.coker_order
    x0 = tuple(int(v) for v in x0)
    y0 = solve_integer(phi, [n * v for v in x0])
    if y0 is None:
        raise CriterionViolated("cokernel order does not kill x0; bug")
    g, a, b = xgcd(n, p)
    assert g == 1
    y = tuple(a * v for v in y0)
    x = tuple(b * v for v in x0)
    return y, x


class AffineMonoid:
    """A fine monoid given by generators inside Z^d.

    Membership is decided by bounded exhaustive search over coefficient
    tuples; rank-1 monoids with positive generators use a cached sieve.
    """

    def __init__(
        self,
        ambient_rank: int,
        generators: Sequence[Sequence[int]],
        membership_bound: int = 100_000,
    ):
        if not generators:
            raise ValueError("generators must be nonempty")
        self.ambient_rank = int(ambient_rank)
        self.generators = _freeze(generators)
        for g in self.generators:
            if len(g) != self.ambient_rank:
                raise ValueError("generator has wrong ambient rank")
        if membership_bound < 1:
            raise ValueError("membership_bound must be positive")
        self.membership_bound = int(membership_bound)
        self._cache: dict[tuple[int, ...], bool] = {}
        self._sieve: Optional[list[bool]] = None
        # standard free orthant N^d is the common fast path
        units = {tuple(1 if i == j else 0 for i in range(self.ambient_rank))
                 for j in range(self.ambient_rank)}
        self._is_orthant = set(self.generators) == units and self.ambient_rank > 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AffineMonoid)
            and self.ambient_rank == other.ambient_rank
            and self.generators == other.generators
        )

    def __hash__(self) -> int:
        return hash((self.ambient_rank, self.generators))

    def __repr__(self) -> str:
        gens = ", ".join(str(list(g)) for g in self.generators)
        return f"AffineMonoid(Z^{self.ambient_rank}; {gens})"

    def _contains_rank1_positive(self, v: int) -> bool:
        gens = sorted({g[0] for g in self.generators})
        if self._sieve is None or len(self._sieve) <= v:
            limit = max(v + 1, 256)
            sieve = [False] * limit
            sieve[0] = True
            for g in gens:
                for x in range(g, limit):
                    if sieve[x - g]:
                        sieve[x] = True
            self._sieve = sieve
        return self._sieve[v]

    def contains(self, v: Sequence[int]) -> bool:
        v = tuple(int(x) for x in v)
        if len(v) != self.ambient_rank:
            raise ValueError("vector has wrong ambient rank")
        if self._is_orthant:
            return all(x >= 0 for x in v)
        if v in self._cache:
            return self._cache[v]
        result = self._search(v)
        self._cache[v] = result
        return result

    def _search(self, v: tuple[int, ...]) -> bool:
        if all(x == 0 for x in v):
            return True
        gens = self.generators
        positive = all(all(c >= 0 for c in g) and any(c > 0 for c in g) for g in gens)
        if positive:
            if any(x < 0 for x in v):
                return False
            if self.ambient_rank == 1:
                return self._contains_rank1_positive(v[0])
            # coefficient sums are bounded by the coordinate sum of v
            budget = sum(v)
        else:
            budget = self.membership_bound
        seen = {v}
        frontier = [v]
        for _ in range(budget):
            nxt = []
            for w in frontier:
                for g in gens:
                    u = tuple(a - b for a, b in zip(w, g))
                    if positive and any(x < 0 for x in u):
                        continue
                    if all(x == 0 for x in u):
                        return True
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
            if not nxt:
                return False
            if len(seen) > self.membership_bound:
                raise BoundExceeded(f"membership search for {v} exceeded the bound")
            frontier = nxt
        if positive:
            return False
        raise BoundExceeded(f"membership search for {v} exceeded the bound")


def monoid_membership(monoid: AffineMonoid, v: Sequence[int]) -> bool:
    """True iff v is a non-negative integer combination of the generators."""
    return monoid.contains(v)


def rank1_saturation(gens: Sequence[int]) -> int:
    """Saturation of <gens> inside Z>=0 is stride*N with stride = gcd."""
    gens = [int(g) for g in gens]
    if not gens or any(g <= 0 for g in gens):
        raise ValueError("need a nonempty list of positive integers")
    return math.gcd(*gens)


def fine_pushout_rank1(p: int, n: int, membership_bound: int = 100_000) -> AffineMonoid:
    """The fine pushout of N <-(*p)- N -(*n)-> N: the submonoid <p, n> of N.

    Its saturation is N itself whenever gcd(p, n) = 1, so comparing with
    rank1_saturation exhibits the fine / fs gap.
    """
    if not is_prime(p):
        raise ValueError(f"p = {p} must be prime")
    if n < 2:
        raise ValueError("n must be >= 2")
    if math.gcd(p, n) != 1:
        raise ArgumentsNotCoprime(f"gcd({p}, {n}) != 1")
    return AffineMonoid(1, [[p], [n]], membership_bound)


# ---------------------------------------------------------------------------
# JSON wire formats


def _int_out(x: int):
    return str(x)


def _int_in(x, pointer: str) -> int:
    if isinstance(x, bool):
        raise SchemaError(pointer, "expected an integer")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        try:
            return int(x, 10)
        except ValueError:
            raise SchemaError(pointer, f"not an integer: {x!r}") from None
    raise SchemaError(pointer, f"expected an integer, got {type(x).__name__}")


def monoid_to_json(monoid: AffineMonoid) -> dict:
    return {
        "ambient_rank": _int_out(monoid.ambient_rank),
        "generators": [[_int_out(x) for x in g] for g in monoid.generators],
        "membership_bound": _int_out(monoid.membership_bound),
    }


def monoid_from_json(doc, pointer: str = "") -> AffineMonoid:
    if not isinstance(doc, dict):
        raise SchemaError(pointer or "/", "expected an object")
    if "ambient_rank" not in doc:
        raise SchemaError(f"{pointer}/ambient_rank", "missing")
    if "generators" not in doc:
        raise SchemaError(f"{pointer}/generators", "missing")
    rank = _int_in(doc["ambient_rank"], f"{pointer}/ambient_rank")
    gens_doc = doc["generators"]
    if not isinstance(gens_doc, list) or not gens_doc:
        raise SchemaError(f"{pointer}/generators", "expected a nonempty array")
    gens = []
    for i, g in enumerate(gens_doc):
        if not isinstance(g, list):
            raise SchemaError(f"{pointer}/generators/{i}", "expected an array")
        gens.append([_int_in(x, f"{pointer}/generators/{i}/{j}") for j, x in enumerate(g)])
    bound = _int_in(doc.get("membership_bound", 100_000), f"{pointer}/membership_bound")
    try:
        return AffineMonoid(rank, gens, bound)
    except ValueError as exc:
        raise SchemaError(pointer or "/", str(exc)) from None


def map_to_json(m: LatticeMap) -> dict:
    return {"matrix": [[_int_out(x) for x in row] for row in m.matrix]}


def map_from_json(doc, pointer: str = "") -> LatticeMap:
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise SchemaError(f"{pointer}/matrix", "missing matrix")
    rows_doc = doc["matrix"]
    if not isinstance(rows_doc, list):
        raise SchemaError(f"{pointer}/matrix", "expected an array of rows")
    rows = []
    for i, row in enumerate(rows_doc):
        if not isinstance(row, list):
            raise SchemaError(f"{pointer}/matrix/{i}", "expected an array")
        rows.append([_int_in(x, f"{pointer}/matrix/{i}/{j}") for j, x in enumerate(row)])
    try:
        return LatticeMap(tuple(tuple(r) for r in rows))
    except ValueError as exc:
        raise SchemaError(f"{pointer}/matrix", str(exc)) from None


def parse_matrix_literal(text: str) -> LatticeMap:
    """Parse a matrix literal like ``[[2,4],[6,8]]`` from the CLI."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"bad matrix literal: {exc}") from None
    if not isinstance(doc, list):
        raise SchemaError("/", "expected an array of rows")
    return map_from_json({"matrix": doc})
