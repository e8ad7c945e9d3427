"""Monoid-algebra charts.

A Chart is the working geometric datum: the algebra (Z/p^(i+1)Z)[P] for a
fine monoid P inside Z^d (or of its group P^gp in group mode), together
with a basis map Z^r -> Z^d whose columns are the exponent vectors of the
chosen log basis b_1..b_r.  The basis map must pass the kernel/cokernel
criterion, which certifies that every monomial has a unique tuple of
p-integral logarithmic exponents along the basis.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .arith import PRat, RingParams, _qfact1, falling_binom, invmod, reduce_int
from .errors import (
    ChartMismatch,
    CriterionViolated,
    ExponentNotInMonoid,
    NotAUnit,
    NotInSpan,
    NotPIntegral,
    SchemaError,
)
from .monoids import (
    AffineMonoid,
    LatticeMap,
    is_log_etale_chart,
    map_from_json,
    map_to_json,
    monoid_from_json,
    monoid_to_json,
    solve_rational,
    _int_in,
    _int_out,
)


class ExponentVector:
    """The unique p-integral solution alpha of basis_map * alpha = v."""

    __slots__ = ("alphas",)

    def __init__(self, alphas: Sequence[PRat]):
        self.alphas = tuple(alphas)

    def __iter__(self):
        return iter(self.alphas)

    def __len__(self):
        return len(self.alphas)

    def __getitem__(self, i):
        return self.alphas[i]

    def __repr__(self):
        return "ExponentVector(" + ", ".join(str(a) for a in self.alphas) + ")"


class Chart:
    """Immutable chart datum; all caches are internal and value-transparent."""

    def __init__(
        self,
        params: RingParams,
        monoid: AffineMonoid,
        basis_map: LatticeMap,
        group_mode: bool = False,
    ):
        if basis_map.rows != monoid.ambient_rank:
            raise CriterionViolated(
                "basis map target rank differs from the monoid's ambient rank"
            )
        crit = is_log_etale_chart(basis_map, params.p)
        if not crit.log_etale:
            raise CriterionViolated(
                f"basis map fails the chart criterion: kernel_trivial="
                f"{crit.kernel_trivial}, coker_order={crit.coker_order}"
            )
        self.params = params
        self.monoid = monoid
        self.basis_map = basis_map
        self.group_mode = bool(group_mode)
        self.criterion = crit
        self._alpha_cache: dict[tuple[int, ...], tuple[Fraction, ...]] = {}
        self._eigen_cache: dict[tuple, int] = {}
        self._mu_cache: dict = {}
        self._siblings: dict[int, "Chart"] = {params.level: self}

    @property
    def rank(self) -> int:
        """Number r of log basis elements."""
        return self.basis_map.cols

    @property
    def ambient_rank(self) -> int:
        return self.monoid.ambient_rank

    def with_level(self, level: int) -> "Chart":
        """The same chart over the same ring but at a different level."""
        if level not in self._siblings:
            sibling = Chart(
                self.params.with_level(level), self.monoid, self.basis_map,
                self.group_mode,
            )
            sibling._siblings = self._siblings
            self._siblings[level] = sibling
        return self._siblings[level]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Chart)
            and self.params == other.params
            and self.monoid == other.monoid
            and self.basis_map == other.basis_map
            and self.group_mode == other.group_mode
        )

    def __hash__(self) -> int:
        return hash((self.params, self.monoid, self.basis_map, self.group_mode))

    def __repr__(self) -> str:
        mode = "gp" if self.group_mode else "monoid"
        return f"Chart({self.params}, {self.monoid!r}, basis={self.basis_map}, {mode})"

    def accepts_exponent(self, v: tuple[int, ...]) -> bool:
        if self.group_mode:
            return True
        return self.monoid.contains(v)

    def alpha_fractions(self, v: Sequence[int]) -> tuple[Fraction, ...]:
        v = tuple(int(x) for x in v)
        cached = self._alpha_cache.get(v)
        if cached is None:
            cached = solve_rational(self.basis_map, v)
            for a in cached:
                if a.denominator % self.params.p == 0:
                    raise NotPIntegral(
                        f"exponent {a} of {v} is not p-integral; chart invariant broken"
                    )
            self._alpha_cache[v] = cached
        return cached

    def basis_exponent(self, lam: int) -> tuple[int, ...]:
        """Exponent vector of the basis element b_lam."""
        return self.basis_map.column(lam)


def exponent_alpha(chart: Chart, v: Sequence[int]) -> ExponentVector:
    """Solve basis_map * alpha = v over the p-integral rationals."""
    fracs = chart.alpha_fractions(v)
    return ExponentVector(
        PRat(f.numerator, f.denominator, chart.params.p) for f in fracs
    )


class AlgElem:
    """Element of the monoid algebra, a sparse exponent -> residue map.

    Residues are reduced representatives in [0, p^(i+1)); zero coefficients
    are never stored.  Equality, printing and serialization all use the
    canonical lexicographic term order.
    """

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: dict, validate: bool = True):
        modulus = chart.params.modulus
        clean: dict[tuple[int, ...], int] = {}
        for v, c in terms.items():
            c %= modulus
            if c == 0:
                continue
            v = tuple(int(x) for x in v)
            if validate and not chart.accepts_exponent(v):
                raise ExponentNotInMonoid(f"exponent {v} not in the chart monoid")
            clean[v] = c
        self.chart = chart
        self.terms = clean

    # -- constructors

    @classmethod
    def zero(cls, chart: Chart) -> "AlgElem":
        return cls(chart, {}, validate=False)

    @classmethod
    def one(cls, chart: Chart) -> "AlgElem":
        return cls(chart, {(0,) * chart.ambient_rank: 1}, validate=False)

    @classmethod
    def constant(cls, chart: Chart, c: int) -> "AlgElem":
        return cls(chart, {(0,) * chart.ambient_rank: c}, validate=False)

    @classmethod
    def monomial(cls, chart: Chart, v: Sequence[int], c: int = 1) -> "AlgElem":
        return cls(chart, {tuple(int(x) for x in v): c})

    # -- ring structure

    def _check(self, other: "AlgElem"):
        if other.chart is not self.chart and other.chart != self.chart:
            raise ChartMismatch("operands live over different charts")

    def __add__(self, other: "AlgElem") -> "AlgElem":
        self._check(other)
        terms = dict(self.terms)
        for v, c in other.terms.items():
            terms[v] = terms.get(v, 0) + c
        return AlgElem(self.chart, terms, validate=False)

    def __neg__(self) -> "AlgElem":
        return AlgElem(
            self.chart, {v: -c for v, c in self.terms.items()}, validate=False
        )

    def __sub__(self, other: "AlgElem") -> "AlgElem":
        return self + (-other)

    def __mul__(self, other: "AlgElem") -> "AlgElem":
        self._check(other)
        terms: dict[tuple[int, ...], int] = {}
        for v, c in self.terms.items():
            for w, e in other.terms.items():
                u = tuple(a + b for a, b in zip(v, w))
                terms[u] = terms.get(u, 0) + c * e
        out = AlgElem(self.chart, terms, validate=False)
        if not self.chart.group_mode:
            for u in out.terms:
                if not self.chart.accepts_exponent(u):
                    raise ExponentNotInMonoid(f"product exponent {u} left the monoid")
        return out

    def scale(self, c: int) -> "AlgElem":
        return AlgElem(
            self.chart, {v: c * e for v, e in self.terms.items()}, validate=False
        )

    def shift(self, w: Sequence[int]) -> "AlgElem":
        """Multiply by the monomial x^w."""
        w = tuple(int(x) for x in w)
        return AlgElem(
            self.chart,
            {tuple(a + b for a, b in zip(v, w)): c for v, c in self.terms.items()},
        )

    def __pow__(self, e: int) -> "AlgElem":
        if e < 0:
            raise ValueError("use unit_inverse for negative powers")
        out = AlgElem.one(self.chart)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base if e > 1 else base
            e >>= 1
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AlgElem)
            and self.chart == other.chart
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.chart, tuple(sorted(self.terms.items()))))

    def sorted_terms(self) -> list[tuple[tuple[int, ...], int]]:
        return sorted(self.terms.items())

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for v, c in self.sorted_terms():
            parts.append(f"{c}*x[{','.join(map(str, v))}]")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"AlgElem({self})"


def alg_add(f: AlgElem, g: AlgElem) -> AlgElem:
    """Exact monoid-algebra sum."""
    return f + g


def alg_mul(f: AlgElem, g: AlgElem) -> AlgElem:
    """Exact monoid-algebra product, zero coefficients pruned."""
    return f * g


def unit_inverse(f: AlgElem) -> AlgElem:
    """Invert a unit c*x^v*(1 + g) with g == 0 mod p.

    The decomposition is found by reducing mod p: a unit must have exactly
    one term surviving, whose exponent is invertible (group mode or zero).
    The inverse is c^(-1) x^(-v) times the finite geometric series in g.
    """
    chart = f.chart
    p = chart.params.p
    lead = [(v, c) for v, c in f.terms.items() if c % p != 0]
    if len(lead) != 1:
        raise NotAUnit("no monomial leading term modulo p")
    v, c = lead[0]
    if any(v) and not chart.group_mode:
        raise NotAUnit(f"leading exponent {v} is not invertible outside group mode")
    c_inv = invmod(c, chart.params.modulus)
    neg_v = tuple(-x for x in v)
    # f = c x^v (1 + g);  g = c^-1 x^-v f - 1
    g = f.scale(c_inv).shift(neg_v) - AlgElem.one(chart)
    out = AlgElem.one(chart)
    power = AlgElem.one(chart)
    for _ in range(1, chart.params.nilpotency):
        power = power * (-g)
        if power.is_zero():
            break
        out = out + power
    return out.scale(c_inv).shift(neg_v)


def eigen_scalar(chart: Chart, k: tuple[int, ...], v: tuple[int, ...]) -> int:
    """The action eigenvalue of the basis operator with index k on x^v.

    Equals q_k! * prod_lam C(alpha_lam(v), k_lam) computed exactly over Q
    and then reduced; this is also the eta^{{k}}-coefficient of mu(x^v).
    """
    key = (k, v)
    cached = chart._eigen_cache.get(key)
    if cached is None:
        params = chart.params
        alphas = chart.alpha_fractions(v)
        value = Fraction(1)
        for lam, kl in enumerate(k):
            if kl:
                value *= _qfact1(params.p, params.level, kl)
                value *= falling_binom(alphas[lam], kl)
        if value.denominator % params.p == 0:
            raise NotPIntegral(f"eigenvalue at k={k}, v={v} not p-integral")
        cached = reduce_int(value, params)
        chart._eigen_cache[key] = cached
    return cached


# ---------------------------------------------------------------------------
# JSON wire format


def chart_to_json(chart: Chart) -> dict:
    return {
        "p": _int_out(chart.params.p),
        "nilpotency": _int_out(chart.params.nilpotency),
        "level": _int_out(chart.params.level),
        "monoid": monoid_to_json(chart.monoid),
        "basis_map": map_to_json(chart.basis_map),
        "group_mode": chart.group_mode,
    }


def chart_from_json(doc, pointer: str = "") -> Chart:
    if not isinstance(doc, dict):
        raise SchemaError(pointer or "/", "expected an object")
    for key in ("p", "nilpotency", "level", "monoid", "basis_map"):
        if key not in doc:
            raise SchemaError(f"{pointer}/{key}", "missing")
    p = _int_in(doc["p"], f"{pointer}/p")
    nilp = _int_in(doc["nilpotency"], f"{pointer}/nilpotency")
    level = _int_in(doc["level"], f"{pointer}/level")
    try:
        params = RingParams(p, nilp, level)
    except ValueError as exc:
        raise SchemaError(f"{pointer}/p", str(exc)) from None
    monoid = monoid_from_json(doc["monoid"], f"{pointer}/monoid")
    basis = map_from_json(doc["basis_map"], f"{pointer}/basis_map")
    group_mode = doc.get("group_mode", False)
    if not isinstance(group_mode, bool):
        raise SchemaError(f"{pointer}/group_mode", "expected a boolean")
    try:
        return Chart(params, monoid, basis, group_mode)
    except CriterionViolated as exc:
        raise SchemaError(pointer or "/", str(exc)) from None


def identity_chart(
    params: RingParams, rank: int, group_mode: bool = False
) -> Chart:
    """The standard chart: P = N^rank with the coordinate log basis."""
    if rank == 0:
        monoid = AffineMonoid(0, [[]])
        return Chart(params, monoid, LatticeMap(()), group_mode)
    gens = [[1 if i == j else 0 for i in range(rank)] for j in range(rank)]
    eye = LatticeMap(tuple(tuple(row) for row in gens))
    return Chart(params, AffineMonoid(rank, gens), eye, group_mode)
