"""Truncated divided-power algebras of principal parts.

Elements are stored in the eta-basis with coefficients on the p_0 side.
Every divided-power coefficient is produced by one trusted rational-oracle
layer: embed the truncated algebra into the plain polynomial model via
eta^{{k}} -> eta^k / q_k!, compute there with exact rationals, re-express
in the {{.}}-basis and assert integrality.  The closed coefficient
formulas (brace rule for products, the comultiplication expansion) are
derived through this single path so that the hand formulas used elsewhere
act as independent cross-checks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product as cartesian
from typing import Sequence

from .arith import _brace1, _qfact1, RingParams
from .chart import AlgElem, Chart, eigen_scalar, unit_inverse
from .errors import (
    ChartMismatch,
    IntegralityFailure,
    OrderIncrease,
    OrderMismatch,
)


def indices_upto(rank: int, n: int) -> list[tuple[int, ...]]:
    """All multi-indices of arity ``rank`` with weight <= n, by (weight, lex)."""
    if rank == 0:
        return [()]
    out = [k for k in cartesian(range(n + 1), repeat=rank) if sum(k) <= n]
    out.sort(key=lambda k: (sum(k), k))
    return out


def brace_product(params: RingParams, k: tuple[int, ...], i: tuple[int, ...]) -> int:
    """Componentwise brace symbol; inputs are raw tuples (hot path)."""
    out = 1
    for a, b in zip(k, i):
        out *= _brace1(params.p, params.level, a, b)
    return out


class PPartsElem:
    """Element of the order-n truncated divided-power algebra."""

    __slots__ = ("chart", "order", "terms")

    def __init__(self, chart: Chart, order: int, terms: dict):
        self.chart = chart
        self.order = int(order)
        clean = {}
        for k, coef in terms.items():
            k = tuple(int(x) for x in k)
            if len(k) != chart.rank:
                raise ValueError(f"multi-index {k} has wrong arity")
            if sum(k) > self.order:
                raise OrderIncrease(f"term {k} exceeds order {self.order}")
            if not coef.is_zero():
                clean[k] = coef
        self.terms = clean

    @classmethod
    def zero(cls, chart: Chart, order: int) -> "PPartsElem":
        return cls(chart, order, {})

    @classmethod
    def one(cls, chart: Chart, order: int) -> "PPartsElem":
        return cls(chart, order, {(0,) * chart.rank: AlgElem.one(chart)})

    @classmethod
    def basis(cls, chart: Chart, k: Sequence[int], order: int) -> "PPartsElem":
        return cls(chart, order, {tuple(k): AlgElem.one(chart)})

    def coefficient(self, k: Sequence[int]) -> AlgElem:
        return self.terms.get(tuple(k), AlgElem.zero(self.chart))

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "PPartsElem"):
        if self.chart != other.chart:
            raise ChartMismatch("principal parts over different charts")
        if self.order != other.order:
            raise OrderMismatch(f"orders {self.order} and {other.order} differ")

    def __add__(self, other: "PPartsElem") -> "PPartsElem":
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms[k] + c if k in terms else c
        return PPartsElem(self.chart, self.order, terms)

    def __neg__(self) -> "PPartsElem":
        return PPartsElem(
            self.chart, self.order, {k: -c for k, c in self.terms.items()}
        )

    def __sub__(self, other: "PPartsElem") -> "PPartsElem":
        return self + (-other)

    def scale(self, a: AlgElem) -> "PPartsElem":
        """Multiply every coefficient by a on the p_0 side."""
        return PPartsElem(
            self.chart, self.order, {k: c * a for k, c in self.terms.items()}
        )

    def scale_int(self, c: int) -> "PPartsElem":
        return PPartsElem(
            self.chart, self.order, {k: a.scale(c) for k, a in self.terms.items()}
        )

    def __mul__(self, other: "PPartsElem") -> "PPartsElem":
        return pp_mul(self, other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PPartsElem)
            and self.chart == other.chart
            and self.order == other.order
            and self.terms == other.terms
        )

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, c in self.sorted_terms():
            coef = str(c) if len(c.terms) == 1 else f"({c})"
            parts.append(f"{coef} * E[{','.join(map(str, k))}]")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"PPartsElem(n={self.order}: {self})"


def pp_mul(u: PPartsElem, v: PPartsElem) -> PPartsElem:
    """Product in the truncated algebra: eta^{{k}} eta^{{k'}} = {k+k' over k} eta^{{k+k'}}."""
    u._check(v)
    chart = u.chart
    params = chart.params
    n = u.order
    terms: dict[tuple[int, ...], AlgElem] = {}
    for k, a in u.terms.items():
        for kp, b in v.terms.items():
            kk = tuple(x + y for x, y in zip(k, kp))
            if sum(kk) > n:
                continue
            coef = (a * b).scale(brace_product(params, kk, k))
            terms[kk] = terms[kk] + coef if kk in terms else coef
    return PPartsElem(chart, n, terms)


def project(w: PPartsElem, n2: int) -> PPartsElem:
    """Projection onto order n2 <= order: drop all terms of weight > n2."""
    if n2 > w.order:
        raise OrderIncrease(f"cannot project order {w.order} up to {n2}")
    return PPartsElem(
        w.chart, n2, {k: c for k, c in w.terms.items() if sum(k) <= n2}
    )


def mu_of_monomial(chart: Chart, v: Sequence[int], n: int) -> PPartsElem:
    """mu(x^v) truncated at order n: prod_lam (1 + eta_lam)^(alpha_lam(v)).

    The eta^{{k}}-coefficient is the exact rational q_k! prod C(alpha_lam, k_lam)
    reduced modulo p^(i+1); it is a scalar.
    """
    v = tuple(int(x) for x in v)
    key = (v, n)
    cached = chart._mu_cache.get(key)
    if cached is None:
        terms = {}
        for k in indices_upto(chart.rank, n):
            c = eigen_scalar(chart, k, v)
            if c:
                terms[k] = AlgElem.constant(chart, c)
        cached = PPartsElem(chart, n, terms)
        chart._mu_cache[key] = cached
    return cached


def theta(chart: Chart, f: AlgElem, n: int) -> PPartsElem:
    """Taylor development of f at order n: sum_k (basis-op_k f) eta^{{k}}.

    Equals p_1^*(f); multiplicative in f and x^v mu(x^v) on monomials.
    """
    if f.chart != chart:
        raise ChartMismatch("element lives over a different chart")
    terms = {}
    for k in indices_upto(chart.rank, n):
        coef_terms = {}
        for v, c in f.terms.items():
            e = eigen_scalar(chart, k, v)
            if e:
                coef_terms[v] = coef_terms.get(v, 0) + c * e
        coef = AlgElem(chart, coef_terms, validate=False)
        if not coef.is_zero():
            terms[k] = coef
    return PPartsElem(chart, n, terms)


def mu_of_unit(chart: Chart, u: AlgElem, n: int) -> PPartsElem:
    """mu(u) = u^(-1) theta_n(u) for a unit u; lies in 1 + (augmentation ideal)."""
    u_inv = unit_inverse(u)
    return theta(chart, u, n).scale(u_inv)


def mul_p1(w: PPartsElem, g: AlgElem) -> PPartsElem:
    """The p_1-side action of g on w: multiplication by theta(g)."""
    return pp_mul(w, theta(w.chart, g, w.order))


def psi_level(w: PPartsElem, target_level: int) -> PPartsElem:
    """Level-change map on principal parts, from level m' down to m <= m'.

    Basis-wise rescaling eta_(m')^{{k}} -> (q!/q'!) eta_(m)^{{k}} with q, q'
    the quotients of k by p^m and p^m'.
    """
    high = w.chart.params.level
    if target_level > high:
        raise OrderIncrease(f"psi goes to a lower level: {target_level} > {high}")
    chart = w.chart.with_level(target_level)
    p = w.chart.params.p
    terms = {}
    for k, c in w.terms.items():
        factor = 1
        for kl in k:
            factor *= _qfact1(p, target_level, kl) // _qfact1(p, high, kl)
        coef = AlgElem(chart, {v: e * factor for v, e in c.terms.items()},
                       validate=False)
        if not coef.is_zero():
            terms[k] = coef
    return PPartsElem(chart, w.order, terms)


# ---------------------------------------------------------------------------
# Divided powers of augmentation-ideal elements (the rational oracle)


def mpd_power(xi: PPartsElem, e: int) -> PPartsElem:
    """The level-m divided power xi^{{e}} = xi^e / q_e! of an element with
    no constant term.

    Expanded composition by composition; each universal cofactor
    multinomial(e; ...) * q_J! / (q_e! * prod q_j!^(k_i)) is an exact
    integer by the theory of divided-power polynomial rings, which we
    assert.  The algebra coefficients are never divided.
    """
    chart = xi.chart
    params = chart.params
    n = xi.order
    zero = (0,) * chart.rank
    if zero in xi.terms:
        raise ValueError("divided powers require a vanishing constant term")
    if e == 0:
        return PPartsElem.one(chart, n)
    items = xi.sorted_terms()
    s = len(items)
    out_terms: dict[tuple[int, ...], AlgElem] = {}
    p, m = params.p, params.level
    for comp in _compositions(e, s):
        j_total = zero
        q_prod = 1
        coef_pows: list[AlgElem] = []
        skip = False
        for (j, c), ki in zip(items, comp):
            if ki == 0:
                continue
            j_total = tuple(a + ki * b for a, b in zip(j_total, j))
            if sum(j_total) > n:
                skip = True
                break
            for jl in j:
                q_prod *= _qfact1(p, m, jl) ** ki
            coef_pows.append(c ** ki)
        if skip or sum(j_total) > n:
            continue
        cof = Fraction(math.factorial(e), _qfact1(p, m, e) * q_prod)
        for jl in j_total:
            cof *= _qfact1(p, m, jl)
        for ki in comp:
            cof /= math.factorial(ki)
        if cof.denominator != 1:
            raise IntegralityFailure(
                f"divided-power cofactor {cof} at composition {comp}"
            )
        coef = AlgElem.constant(chart, int(cof))
        for cp in coef_pows:
            coef = coef * cp
        if not coef.is_zero():
            out_terms[j_total] = (
                out_terms[j_total] + coef if j_total in out_terms else coef
            )
    return PPartsElem(chart, n, out_terms)


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` non-negative integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Comultiplication


class BiPPartsElem:
    """Element of P^n tensor P^n' in the eta-pair basis, coefficients p_0-left."""

    __slots__ = ("chart", "orders", "terms")

    def __init__(self, chart: Chart, orders: tuple[int, int], terms: dict):
        self.chart = chart
        self.orders = (int(orders[0]), int(orders[1]))
        clean = {}
        for (k, kp), coef in terms.items():
            k, kp = tuple(k), tuple(kp)
            if sum(k) > self.orders[0] or sum(kp) > self.orders[1]:
                raise OrderIncrease(f"bi-term {(k, kp)} exceeds orders {self.orders}")
            if not coef.is_zero():
                clean[(k, kp)] = coef
        self.terms = clean

    @classmethod
    def zero(cls, chart: Chart, orders: tuple[int, int]) -> "BiPPartsElem":
        return cls(chart, orders, {})

    def _check(self, other: "BiPPartsElem"):
        if self.chart != other.chart or self.orders != other.orders:
            raise OrderMismatch("incompatible bi-elements")

    def __add__(self, other: "BiPPartsElem") -> "BiPPartsElem":
        self._check(other)
        terms = dict(self.terms)
        for kk, c in other.terms.items():
            terms[kk] = terms[kk] + c if kk in terms else c
        return BiPPartsElem(self.chart, self.orders, terms)

    def __sub__(self, other: "BiPPartsElem") -> "BiPPartsElem":
        return self + other.scale_int(-1)

    def scale(self, a: AlgElem) -> "BiPPartsElem":
        return BiPPartsElem(
            self.chart, self.orders, {kk: c * a for kk, c in self.terms.items()}
        )

    def scale_int(self, c: int) -> "BiPPartsElem":
        return BiPPartsElem(
            self.chart, self.orders,
            {kk: a.scale(c) for kk, a in self.terms.items()},
        )

    def __mul__(self, other: "BiPPartsElem") -> "BiPPartsElem":
        self._check(other)
        params = self.chart.params
        n, np_ = self.orders
        terms: dict = {}
        for (k, kp), a in self.terms.items():
            for (l, lp), b in other.terms.items():
                kk = tuple(x + y for x, y in zip(k, l))
                kkp = tuple(x + y for x, y in zip(kp, lp))
                if sum(kk) > n or sum(kkp) > np_:
                    continue
                cof = brace_product(params, kk, k) * brace_product(params, kkp, kp)
                coef = (a * b).scale(cof)
                key = (kk, kkp)
                terms[key] = terms[key] + coef if key in terms else coef
        return BiPPartsElem(self.chart, self.orders, terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BiPPartsElem)
            and self.chart == other.chart
            and self.orders == other.orders
            and self.terms == other.terms
        )

    def sorted_terms(self):
        return sorted(
            self.terms.items(),
            key=lambda kv: (sum(kv[0][0]) + sum(kv[0][1]), kv[0]),
        )

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (k, kp), c in self.sorted_terms():
            coef = str(c) if len(c.terms) == 1 else f"({c})"
            parts.append(
                f"{coef} * E[{','.join(map(str, k))}]oE[{','.join(map(str, kp))}]"
            )
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"BiPPartsElem(n={self.orders}: {self})"


_delta_cache: dict = {}


def _delta_basis(params: RingParams, rank: int, k: tuple[int, ...],
                 n: int, nprime: int) -> dict:
    """Integer expansion of delta(eta^{{k}}) in the eta-pair basis.

    Computed in the rational model: substitute each eta_lam by
    eta_lam(x)1 + 1(x)eta_lam + eta_lam(x)eta_lam inside eta^k / q_k!,
    then re-express; forced by delta being a divided-power morphism with
    delta(1 + eta) = (1 + eta)(x)(1 + eta).
    """
    key = (params.p, params.level, rank, k, n, nprime)
    cached = _delta_cache.get(key)
    if cached is not None:
        return cached
    p, m = params.p, params.level
    # polynomial over Fraction in 2*rank variables, keyed (j, j')
    poly = {((0,) * rank, (0,) * rank): Fraction(1)}
    for lam, kl in enumerate(k):
        if kl == 0:
            continue
        e_lam = tuple(1 if i == lam else 0 for i in range(rank))
        z = (0,) * rank
        gen = {(e_lam, z): Fraction(1), (z, e_lam): Fraction(1),
               (e_lam, e_lam): Fraction(1)}
        factor = gen
        for _ in range(kl - 1):
            factor = _bi_poly_mul(factor, gen)
        factor = {kk: c / _qfact1(p, m, kl) for kk, c in factor.items()}
        poly = _bi_poly_mul(poly, factor)
    out = {}
    for (j, jp), c in poly.items():
        if sum(j) > n or sum(jp) > nprime:
            continue
        for jl in j:
            c *= _qfact1(p, m, jl)
        for jl in jp:
            c *= _qfact1(p, m, jl)
        if c.denominator != 1:
            raise IntegralityFailure(f"delta coefficient {c} at {(j, jp)}")
        if c:
            out[(j, jp)] = int(c)
    _delta_cache[key] = out
    return out


def _bi_poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (j1, j1p), c1 in a.items():
        for (j2, j2p), c2 in b.items():
            key = (
                tuple(x + y for x, y in zip(j1, j2)),
                tuple(x + y for x, y in zip(j1p, j2p)),
            )
            out[key] = out.get(key, 0) + c1 * c2
    return out


def comult(w: PPartsElem, n: int, nprime: int) -> BiPPartsElem:
    """delta^{n,n'}(w), the comultiplication into P^n tensor P^n'."""
    if w.order < n + nprime:
        raise OrderMismatch(
            f"comultiplication needs order >= {n + nprime}, have {w.order}"
        )
    chart = w.chart
    terms: dict = {}
    for k, c in w.terms.items():
        for kk, cof in _delta_basis(chart.params, chart.rank, k, n, nprime).items():
            coef = c.scale(cof)
            terms[kk] = terms[kk] + coef if kk in terms else coef
    return BiPPartsElem(chart, (n, nprime), terms)


# ---------------------------------------------------------------------------
# Flat-coordinate elements


def tau_basis(chart: Chart, k: Sequence[int], n: int) -> PPartsElem:
    """tau^{{k}} = p_0^*(t^k) eta^{{k}}, the flat divided-power basis element."""
    k = tuple(int(x) for x in k)
    tk = chart.basis_map.apply(k)
    return PPartsElem(chart, n, {k: AlgElem.monomial(chart, tk)})


def tau_via_divided_powers(chart: Chart, k: Sequence[int], n: int) -> PPartsElem:
    """tau^{{k}} assembled from tau_lam = p_0^*(t_lam) eta_lam by divided powers."""
    k = tuple(int(x) for x in k)
    out = PPartsElem.one(chart, n)
    for lam, kl in enumerate(k):
        e_lam = tuple(1 if i == lam else 0 for i in range(chart.rank))
        tau_lam = PPartsElem(
            chart, n,
            {e_lam: AlgElem.monomial(chart, chart.basis_exponent(lam))},
        )
        out = pp_mul(out, mpd_power(tau_lam, kl))
    return out
