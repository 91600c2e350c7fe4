"""Exact star products of spin-J phase-space functions.

Three independent constructions are provided and cross-checked in the tests:

* ``star_table``: structure constants K of the tensor-operator algebra.
* ``star_q`` / ``star_p``: finite sums of eth / eth_bar products for the
  Q (s=-1) and P (s=+1) representations.
* ``star_general``: any s, by conjugating star_q or star_p with the diagonal
  representation transform Delta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .angular import SqrtRational
from .expansion import SpinWeightedExpansion, eth, eth_bar, eth_power, multiply, pruning
from .tensorops import (
    PhaseSpaceFunction,
    basis_index,
    gamma,
    gamma_power,
    gamma_vector,
    k_coefficient_table,
    radius,
)

ROUTES = ("via_Q", "via_P")


def _same(f: PhaseSpaceFunction, g: PhaseSpaceFunction):
    if f.two_J != g.two_J:
        raise ValueError(f"spin mismatch: 2J={f.two_J} vs 2J={g.two_J}")
    if f.s != g.s:
        raise ValueError(f"representation mismatch: s={f.s} vs s={g.s}")


def _check_in_range(F: PhaseSpaceFunction, tol: float = 1e-12):
    for (j, _), c in F.body.coeffs.items():
        if j > F.two_J and abs(c) > tol:
            raise ValueError(f"rank {j} exceeds 2J={F.two_J}")


# structure-constant route ----------------------------------------------------

@lru_cache(maxsize=16)
def _table_targets(two_J: int):
    idx = basis_index(two_J)
    n = len(idx)
    pos = {jm: k for k, jm in enumerate(idx)}
    tgt = np.full((n, n, two_J + 1), n, dtype=np.int64)  # n = dump slot
    for a, (_, ma) in enumerate(idx):
        for b, (_, mb) in enumerate(idx):
            M = ma + mb
            for l in range(abs(M), two_J + 1):
                tgt[a, b, l] = pos[(l, M)]
    return tgt


def _to_vector(F: PhaseSpaceFunction) -> np.ndarray:
    return np.array([F.body.coeff(j, m) for j, m in basis_index(F.two_J)], dtype=complex)


def _from_vector(two_J: int, s: float, v: np.ndarray) -> PhaseSpaceFunction:
    coeffs = {jm: v[k] for k, jm in enumerate(basis_index(two_J))}
    return PhaseSpaceFunction(two_J, s, SpinWeightedExpansion(coeffs, 0, two_J))


def star_table(f: PhaseSpaceFunction, g: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Reference star product from the structure constants K."""
    _same(f, g)
    _check_in_range(f)
    _check_in_range(g)
    two_J, s = f.two_J, f.s
    idx = basis_index(two_J)
    gam = gamma_vector(two_J)
    gs = np.array([gam[j] ** s for j, _ in idx])
    a = _to_vector(f) * gs
    b = _to_vector(g) * gs
    K = k_coefficient_table(two_J)
    contrib = np.einsum("a,b,abl->abl", a, b, K)
    out = np.zeros(len(idx) + 1, dtype=complex)
    np.add.at(out, _table_targets(two_J), contrib)
    out = out[:-1] * radius(two_J) / gs
    return _from_vector(two_J, s, out)


# ladder-operator route ------------------------------------------------------

@lru_cache(maxsize=None)
def lambda_coeff(two_J: int, eta: int, s_pm: int) -> SqrtRational:
    """Coefficients of the Q (s_pm=-1) and P (s_pm=+1) ladder sums."""
    if not 0 <= eta <= two_J:
        raise ValueError(f"eta={eta} outside 0..2J")
    f = math.factorial
    if s_pm == -1:
        q = Fraction(f(two_J - eta), f(eta) * f(two_J))
    elif s_pm == 1:
        q = Fraction((-1) ** eta * two_J * f(two_J), f(eta) * f(two_J + eta + 1))
    else:
        raise ValueError("s_pm must be -1 or +1")
    return SqrtRational.from_rational(q)


def _ladder_sum(f: PhaseSpaceFunction, g: PhaseSpaceFunction, s_pm: int, coeff=None) -> SpinWeightedExpansion:
    two_J = f.two_J
    top = min(f.body.max_rank, g.body.max_rank, two_J)
    left = eth_bar if s_pm == -1 else eth
    right = eth if s_pm == -1 else eth_bar
    lam = coeff or (lambda n: float(lambda_coeff(two_J, n, s_pm)))
    fa, gb = f.body, g.body
    terms = []
    for n in range(top + 1):
        if fa.is_empty() or gb.is_empty():
            break
        terms.append(multiply(fa, gb, max_rank=two_J).scale(lam(n)))
        fa, gb = left(fa), right(gb)
    acc = {}
    for t in terms:
        for k, c in t.coeffs.items():
            acc[k] = acc.get(k, 0j) + c
    return SpinWeightedExpansion(acc, 0, two_J)


def star_q(f: PhaseSpaceFunction, g: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Exact star product of two Q functions (s = -1)."""
    _same(f, g)
    if f.s != -1:
        raise ValueError("star_q requires s = -1")
    return PhaseSpaceFunction(f.two_J, -1.0, _ladder_sum(f, g, -1))


def star_p(f: PhaseSpaceFunction, g: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Exact star product of two P functions (s = +1)."""
    _same(f, g)
    if f.s != 1:
        raise ValueError("star_p requires s = +1")
    return PhaseSpaceFunction(f.two_J, 1.0, _ladder_sum(f, g, 1))


# representation transforms -------------------------------------------------

def delta_apply(F: PhaseSpaceFunction, s_param: float) -> PhaseSpaceFunction:
    """Delta^{(s_param)}: rank-j block times gamma_j^{1 - s_param}.

    The result is a type (s + s_param - 1) function.  Ranks above 2J are
    annihilated for a positive exponent, kept for exponent zero, and must be
    absent for a negative one.
    """
    p = 1.0 - s_param
    two_J = F.two_J

    def fac(j):
        if j > two_J:
            if p > 0:
                return 0.0
            if p == 0:
                return 1.0
            raise ValueError(f"rank {j} > 2J cannot be mapped by Delta^({s_param})")
        return gamma_power(two_J, j, p)

    s_out = F.s + s_param - 1.0
    if abs(s_out - round(s_out * 2) / 2) < 1e-12:
        s_out = round(s_out * 2) / 2  # keep the tag clean under repeated transforms
    return PhaseSpaceFunction(two_J, s_out, F.body.map_ranks(fac))


def _vandermonde_solve(nodes, targets, dps):
    with mpmath.workdps(dps):
        n = len(nodes)
        V = mpmath.matrix(n, n)
        for r, x in enumerate(nodes):
            for c in range(n):
                V[r, c] = mpmath.mpf(x) ** c
        sol = mpmath.lu_solve(V, mpmath.matrix([mpmath.mpf(t) for t in targets]))
        return [sol[k] for k in range(n)]


def _poly_residual(coeffs, nodes, targets, dps):
    with mpmath.workdps(dps):
        worst = mpmath.mpf(0)
        for x, t in zip(nodes, targets):
            v = sum(c * mpmath.mpf(x) ** n for n, c in enumerate(coeffs))
            scale = max(abs(mpmath.mpf(t)), mpmath.mpf(1))
            worst = max(worst, abs(v - t) / scale)
        return float(worst)


def _leja_order(nodes):
    """Indices of ``nodes`` in Leja order (largest first, then maximal product distance)."""
    rest = list(range(len(nodes)))
    first = max(rest, key=lambda i: abs(nodes[i]))
    order = [first]
    rest.remove(first)
    while rest:
        nxt = max(rest, key=lambda i: math.prod(abs(nodes[i] - nodes[k]) for k in order))
        order.append(nxt)
        rest.remove(nxt)
    return order


def _newton_coeffs(nodes, targets, dps):
    """Leja-ordered nodes x_k and divided differences a_k with
    P(x) = a_0 + (x - x_0)(a_1 + (x - x_1)(a_2 + ...))."""
    order = _leja_order(nodes)
    with mpmath.workdps(dps):
        xs = [mpmath.mpf(nodes[i]) for i in order]
        a = [mpmath.mpf(targets[i]) for i in order]
        n = len(xs)
        for k in range(1, n):
            for i in range(n - 1, k - 1, -1):
                a[i] = (a[i] - a[i - 1]) / (xs[i] - xs[i - k])
        return tuple(nodes[i] for i in order), tuple(float(v) for v in a)


def _newton_apply(newton, body: SpinWeightedExpansion) -> SpinWeightedExpansion:
    # nested form; intermediate coefficients can be far below the pruning
    # threshold, so pruning is disabled until the end
    nodes, a = newton
    with pruning(0.0):
        acc = body.scale(a[-1])
        for k in range(len(a) - 2, -1, -1):
            acc = eth(eth_bar(acc)) - acc.scale(nodes[k]) + body.scale(a[k])
    return acc.scale(1.0)


def _gamma_mp(two_J: int, j: int, p, dps):
    with mpmath.workdps(dps):
        if j > two_J:
            return mpmath.mpf(0)
        g = gamma(two_J, j)
        val = mpmath.sqrt(mpmath.mpf(g.radicand.numerator) / g.radicand.denominator)
        return val ** p


@dataclass(frozen=True)
class DeltaPolynomial:
    """Coefficients c_n with sum_n c_n (-j(j+1))^n = gamma_j^{1-s}.

    Applying sum_n c_n (eth eth_bar)^n reproduces Delta^{(s)} on ranks <= 2J.
    In truncating mode the polynomial has degree 4J and also annihilates
    ranks 2J < j <= 4J.
    """

    two_J: int
    s: float
    c: tuple
    truncating: bool = False

    @property
    def nodes(self):
        top = 2 * self.two_J if self.truncating else self.two_J
        return [-j * (j + 1) for j in range(top + 1)]

    def targets(self, dps=60):
        top = 2 * self.two_J if self.truncating else self.two_J
        return [_gamma_mp(self.two_J, j, 1 - mpmath.mpf(self.s), dps) for j in range(top + 1)]

    def residual(self) -> float:
        dps = _dps(self.two_J)
        return _poly_residual(self._mp, self.nodes, self.targets(dps), dps)

    def eigenvalue(self, j: int) -> float:
        x = -j * (j + 1)
        return float(sum(cn * x ** n for n, cn in enumerate(self._mp)))

    def apply(self, F: PhaseSpaceFunction) -> PhaseSpaceFunction:
        """Apply as a polynomial in eth eth_bar (the verification form), in Newton form."""
        body = _newton_apply(self.newton, F.body)
        return PhaseSpaceFunction(F.two_J, F.s + self.s - 1.0, body)

    def apply_monomial(self, F: PhaseSpaceFunction) -> PhaseSpaceFunction:
        """Same operator from the monomial coefficients c (loses accuracy for 2J >~ 6)."""
        return PhaseSpaceFunction(F.two_J, F.s + self.s - 1.0, _poly_apply(self.c, F.body))

    @property
    def newton(self):
        return _delta_newton(self.two_J, float(self.s), self.truncating)

    @property
    def _mp(self):
        return _delta_poly_mp(self.two_J, float(self.s), self.truncating)


@dataclass(frozen=True)
class ProjectionPolynomial:
    """Coefficients p_n: 1 on ranks j <= 2J and 0 on 2J < j <= 4J."""

    two_J: int
    p: tuple

    @property
    def nodes(self):
        return [-j * (j + 1) for j in range(2 * self.two_J + 1)]

    def targets(self):
        return [1 if j <= self.two_J else 0 for j in range(2 * self.two_J + 1)]

    def residual(self) -> float:
        dps = _dps(self.two_J)
        return _poly_residual(_proj_poly_mp(self.two_J), self.nodes, self.targets(), dps)

    def apply(self, F: PhaseSpaceFunction) -> PhaseSpaceFunction:
        """Apply in Newton form (see DeltaPolynomial.apply)."""
        return PhaseSpaceFunction(F.two_J, F.s, _newton_apply(self.newton, F.body))

    def apply_monomial(self, F: PhaseSpaceFunction) -> PhaseSpaceFunction:
        return PhaseSpaceFunction(F.two_J, F.s, _poly_apply(self.p, F.body))

    @property
    def newton(self):
        return _proj_newton(self.two_J)


def _dps(two_J: int) -> int:
    # the Vandermonde conditioning grows like (4J)^(4J); pay for it in digits
    return 40 + 6 * two_J


@lru_cache(maxsize=None)
def _delta_poly_mp(two_J: int, s: float, truncating: bool):
    top = 2 * two_J if truncating else two_J
    dps = _dps(two_J)
    nodes = [-j * (j + 1) for j in range(top + 1)]
    tg = [_gamma_mp(two_J, j, 1 - mpmath.mpf(s), dps) for j in range(top + 1)]
    return tuple(_vandermonde_solve(nodes, tg, dps))


@lru_cache(maxsize=None)
def _proj_poly_mp(two_J: int):
    nodes = [-j * (j + 1) for j in range(2 * two_J + 1)]
    tg = [1 if j <= two_J else 0 for j in range(2 * two_J + 1)]
    return tuple(_vandermonde_solve(nodes, tg, _dps(two_J)))


@lru_cache(maxsize=None)
def _delta_newton(two_J: int, s: float, truncating: bool):
    top = 2 * two_J if truncating else two_J
    dps = _dps(two_J)
    nodes = [-j * (j + 1) for j in range(top + 1)]
    return _newton_coeffs(nodes, [_gamma_mp(two_J, j, 1 - mpmath.mpf(s), dps) for j in range(top + 1)], dps)


@lru_cache(maxsize=None)
def _proj_newton(two_J: int):
    nodes = [-j * (j + 1) for j in range(2 * two_J + 1)]
    return _newton_coeffs(nodes, [1 if j <= two_J else 0 for j in range(2 * two_J + 1)], _dps(two_J))


def delta_polynomial(two_J: int, s: float, truncating: bool = False) -> DeltaPolynomial:
    """Solve the Vandermonde system for the polynomial form of Delta^{(s)}."""
    c = tuple(float(x) for x in _delta_poly_mp(two_J, float(s), truncating))
    return DeltaPolynomial(two_J, float(s), c, truncating)


def projection_polynomial(two_J: int) -> ProjectionPolynomial:
    return ProjectionPolynomial(two_J, tuple(float(x) for x in _proj_poly_mp(two_J)))


def _poly_apply(coeffs, body: SpinWeightedExpansion) -> SpinWeightedExpansion:
    with pruning(0.0):
        acc = body.scale(coeffs[0])
        cur = body
        for cn in coeffs[1:]:
            cur = eth(eth_bar(cur))
            acc = acc + cur.scale(cn)
    return acc.scale(1.0)


def project(F: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Drop all ranks above 2J (diagonal form of the projection)."""
    return PhaseSpaceFunction(F.two_J, F.s, F.body.truncate(F.two_J))


# general s --------------------------------------------------------------------

def star_general(f: PhaseSpaceFunction, g: PhaseSpaceFunction, route: str = "via_Q") -> PhaseSpaceFunction:
    """Star product for any s, routed through the Q or the P star product."""
    _same(f, g)
    s = f.s
    if route == "via_Q":
        fq, gq = delta_apply(f, -s), delta_apply(g, -s)
        out = delta_apply(star_q(fq, gq), s + 2)
    elif route == "via_P":
        fp, gp = delta_apply(f, 2 - s), delta_apply(g, 2 - s)
        out = delta_apply(star_p(fp, gp), s)
    else:
        raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")
    return PhaseSpaceFunction(f.two_J, s, out.body)  # exact tag, no float drift


def spin_half_constants(s: float):
    """(N_s, a_s, b_s) of the spin-1/2 closed form."""
    N = 2.0 ** (-s / 2 - 0.5)
    pre = 0.25 * 3.0 ** (-s - 0.5)
    a = pre * (2 * 3.0 ** (s / 2) - 3.0 ** (s + 0.5) + math.sqrt(3))
    b = pre * (2 * 3.0 ** (s / 2) + 3.0 ** (s + 0.5) - math.sqrt(3))
    return N, a, b


def star_spin_half(f: PhaseSpaceFunction, g: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Closed-form star product for a single spin 1/2."""
    _same(f, g)
    if f.two_J != 1:
        raise ValueError("star_spin_half requires J = 1/2")
    N, a, b = spin_half_constants(f.s)
    fb, gb = f.body, g.body
    body = (multiply(fb, gb, 1)
            + multiply(eth_bar(fb), eth(gb), 1).scale(a)
            - multiply(eth(fb), eth_bar(gb), 1).scale(b))
    return PhaseSpaceFunction(1, f.s, body.truncate(1).scale(N))


def poisson_bracket_s(f: PhaseSpaceFunction, g: PhaseSpaceFunction) -> PhaseSpaceFunction:
    """Spherical Poisson bracket i[(eth_bar f)(eth g) - (eth f)(eth_bar g)] / (2J).

    The result is not truncated to rank 2J.
    """
    if f.two_J != g.two_J:
        raise ValueError("spin mismatch")
    body = multiply(eth_bar(f.body), eth(g.body)) - multiply(eth(f.body), eth_bar(g.body))
    return PhaseSpaceFunction(f.two_J, f.s, body.scale(1j / f.two_J))
