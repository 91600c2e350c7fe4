"""Exact angular-momentum coupling coefficients and rotation matrix elements.

Quantum numbers are carried as ``HalfInt`` (doubled integers) and coupling
coefficients as ``SqrtRational`` (sign times the square root of a rational),
so tables stay exact until they are converted to floats at the boundary.
The Condon-Shortley phase convention is used throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, isqrt
import numbers

import mpmath
import numpy as np

__all__ = [
    "HalfInt",
    "SqrtRational",
    "as_halfint",
    "clebsch_gordan",
    "wigner_3j",
    "wigner_6j",
    "wigner_small_d",
    "wigner_D",
    "small_d_table",
]


@dataclass(frozen=True, order=True)
class HalfInt:
    """An integer or half-integer stored as ``two_x = 2 * value``."""

    two_x: int

    def __post_init__(self):
        if not isinstance(self.two_x, numbers.Integral):
            raise TypeError(f"two_x must be an integer, got {self.two_x!r}")
        object.__setattr__(self, "two_x", int(self.two_x))

    @classmethod
    def from_value(cls, value) -> "HalfInt":
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, numbers.Integral):
            return cls(2 * int(value))
        if isinstance(value, (Fraction, float)):
            two = Fraction(value) * 2
            if two.denominator != 1:
                raise ValueError(f"{value!r} is not an integer or half-integer")
            return cls(int(two))
        raise TypeError(f"cannot convert {value!r} to HalfInt")

    @property
    def is_integer(self) -> bool:
        return self.two_x % 2 == 0

    @property
    def value(self) -> Fraction:
        return Fraction(self.two_x, 2)

    def __float__(self):
        return self.two_x / 2.0

    def __neg__(self):
        return HalfInt(-self.two_x)

    def __abs__(self):
        return HalfInt(abs(self.two_x))

    def __add__(self, other):
        other = as_halfint(other)
        return HalfInt(self.two_x + other.two_x)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_halfint(other)
        return HalfInt(self.two_x - other.two_x)

    def __rsub__(self, other):
        return as_halfint(other) - self

    def __str__(self):
        if self.is_integer:
            return str(self.two_x // 2)
        return f"{self.two_x}/2"

    def __repr__(self):
        return f"HalfInt({self})"


def as_halfint(x) -> HalfInt:
    return x if isinstance(x, HalfInt) else HalfInt.from_value(x)


def _two(x) -> int:
    return as_halfint(x).two_x


@dataclass(frozen=True)
class SqrtRational:
    """The exact real number ``sign * sqrt(radicand)``."""

    sign: int
    radicand: Fraction

    def __post_init__(self):
        r = Fraction(self.radicand)
        if r < 0:
            raise ValueError("radicand must be non-negative")
        s = 0 if r == 0 else int(self.sign)
        if s not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if s == 0:
            r = Fraction(0)
        object.__setattr__(self, "sign", s)
        object.__setattr__(self, "radicand", r)

    @classmethod
    def from_rational(cls, q) -> "SqrtRational":
        q = Fraction(q)
        return cls((q > 0) - (q < 0), q * q)

    @classmethod
    def zero(cls) -> "SqrtRational":
        return cls(0, Fraction(0))

    def is_zero(self) -> bool:
        return self.sign == 0

    def square(self) -> Fraction:
        """Signed square ``sign * radicand``; exact."""
        return self.sign * self.radicand

    def __mul__(self, other):
        if isinstance(other, SqrtRational):
            return SqrtRational(self.sign * other.sign, self.radicand * other.radicand)
        if isinstance(other, (numbers.Integral, Fraction)):
            return self * SqrtRational.from_rational(other)
        return float(self) * other

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (numbers.Integral, Fraction)):
            other = SqrtRational.from_rational(other)
        if isinstance(other, SqrtRational):
            if other.sign == 0:
                raise ZeroDivisionError("division by zero SqrtRational")
            return SqrtRational(self.sign * other.sign, self.radicand / other.radicand)
        return float(self) / other

    def __neg__(self):
        return SqrtRational(-self.sign, self.radicand)

    def __abs__(self):
        return SqrtRational(abs(self.sign), self.radicand)

    def __eq__(self, other):
        if isinstance(other, SqrtRational):
            return self.sign == other.sign and self.radicand == other.radicand
        if isinstance(other, (numbers.Integral, Fraction)):
            return self == SqrtRational.from_rational(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.sign, self.radicand))

    def __float__(self):
        if self.sign == 0:
            return 0.0
        p, q = self.radicand.numerator, self.radicand.denominator
        # scale so the integer square root carries > 64 significant bits
        k = max(0, 70 - (p.bit_length() - q.bit_length()) // 2)
        r = isqrt((p << (2 * k)) // q)
        return self.sign * float(Fraction(r, 1 << k))

    def __complex__(self):
        return complex(float(self))

    def __repr__(self):
        s = "-" if self.sign < 0 else ""
        return f"SqrtRational({s}sqrt({self.radicand}))"


def _fact(n: int) -> int:
    return factorial(n)


def _check_jm(two_j: int, two_m: int):
    if two_j < 0:
        raise ValueError(f"negative angular momentum 2j={two_j}")
    if (two_j - two_m) % 2:
        raise ValueError(f"m={two_m}/2 is not congruent to j={two_j}/2 mod 1")


def _triangle(two_a: int, two_b: int, two_c: int) -> bool:
    if (two_a + two_b + two_c) % 2:
        return False
    return abs(two_a - two_b) <= two_c <= two_a + two_b


@lru_cache(maxsize=200_000)
def _cg_two(tj1, tm1, tj2, tm2, tJ, tM) -> SqrtRational:
    if tM != tm1 + tm2 or not _triangle(tj1, tj2, tJ):
        return SqrtRational.zero()
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        return SqrtRational.zero()
    j1pj2mJ = (tj1 + tj2 - tJ) // 2
    Jpj1mj2 = (tJ + tj1 - tj2) // 2
    Jmj1pj2 = (tJ - tj1 + tj2) // 2
    tot = (tj1 + tj2 + tJ) // 2 + 1
    j1m = (tj1 - tm1) // 2
    j1p = (tj1 + tm1) // 2
    j2m = (tj2 - tm2) // 2
    j2p = (tj2 + tm2) // 2
    Jp = (tJ + tM) // 2
    Jm = (tJ - tM) // 2
    pre = Fraction(
        (tJ + 1) * _fact(Jpj1mj2) * _fact(Jmj1pj2) * _fact(j1pj2mJ)
        * _fact(Jp) * _fact(Jm) * _fact(j1m) * _fact(j1p) * _fact(j2m) * _fact(j2p),
        _fact(tot),
    )
    a = (tJ - tj2 + tm1) // 2  # J - j2 + m1
    b = (tJ - tj1 - tm2) // 2  # J - j1 - m2
    kmin = max(0, -a, -b)
    kmax = min(j1pj2mJ, j1m, j2p)
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (_fact(k) * _fact(j1pj2mJ - k) * _fact(j1m - k) * _fact(j2p - k)
               * _fact(a + k) * _fact(b + k))
        s += Fraction((-1) ** k, den)
    if s == 0:
        return SqrtRational.zero()
    return SqrtRational(1 if s > 0 else -1, s * s * pre)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> SqrtRational:
    """Clebsch-Gordan coefficient C^{J M}_{j1 m1, j2 m2} (Condon-Shortley)."""
    args = [_two(x) for x in (j1, m1, j2, m2, J, M)]
    for tj, tm in zip(args[0::2], args[1::2]):
        _check_jm(tj, tm)
    return _cg_two(*args)


def wigner_3j(j1, j2, j3, m1, m2, m3) -> SqrtRational:
    """Wigner 3j symbol, from the Clebsch-Gordan coefficient by the usual phase."""
    tj1, tj2, tj3, tm1, tm2, tm3 = (_two(x) for x in (j1, j2, j3, m1, m2, m3))
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        _check_jm(tj, tm)
    return _threej_two(tj1, tj2, tj3, tm1, tm2, tm3)


def _threej_two(tj1, tj2, tj3, tm1, tm2, tm3) -> SqrtRational:
    if tm1 + tm2 + tm3 != 0:
        return SqrtRational.zero()
    cg = _cg_two(tj1, tm1, tj2, tm2, tj3, -tm3)
    if cg.is_zero():
        return cg
    phase = (tj1 - tj2 - tm3) // 2
    sign = -1 if phase % 2 else 1
    return SqrtRational(sign * cg.sign, cg.radicand / (tj3 + 1))


@lru_cache(maxsize=None)
def threej_float(tj1, tj2, tj3, tm1, tm2, tm3) -> float:
    """Float value of a 3j symbol given doubled arguments (cached)."""
    return float(_threej_two(tj1, tj2, tj3, tm1, tm2, tm3))


def _delta_sq(ta, tb, tc) -> Fraction:
    return Fraction(
        _fact((ta + tb - tc) // 2) * _fact((ta - tb + tc) // 2) * _fact((-ta + tb + tc) // 2),
        _fact((ta + tb + tc) // 2 + 1),
    )


def wigner_6j(j1, j2, j3, j4, j5, j6) -> SqrtRational:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6} by the Racah formula."""
    t = [_two(x) for x in (j1, j2, j3, j4, j5, j6)]
    for x in t:
        if x < 0:
            raise ValueError("negative angular momentum in 6j symbol")
    tj1, tj2, tj3, tj4, tj5, tj6 = t
    triads = ((tj1, tj2, tj3), (tj1, tj5, tj6), (tj4, tj2, tj6), (tj4, tj5, tj3))
    if not all(_triangle(*tr) for tr in triads):
        return SqrtRational.zero()
    pre = Fraction(1)
    for tr in triads:
        pre *= _delta_sq(*tr)
    a = [sum(tr) // 2 for tr in triads]
    b = [(tj1 + tj2 + tj4 + tj5) // 2, (tj2 + tj3 + tj5 + tj6) // 2, (tj3 + tj1 + tj6 + tj4) // 2]
    s = Fraction(0)
    for k in range(max(a), min(b) + 1):
        den = 1
        for ai in a:
            den *= _fact(k - ai)
        for bi in b:
            den *= _fact(bi - k)
        s += Fraction((-1) ** k * _fact(k + 1), den)
    if s == 0:
        return SqrtRational.zero()
    return SqrtRational(1 if s > 0 else -1, s * s * pre)


def small_d_mp(two_j: int, two_m1: int, two_m2: int, theta):
    """d^j_{m1 m2}(theta) as an mpmath number at the current working precision."""
    jp1, jm1 = (two_j + two_m1) // 2, (two_j - two_m1) // 2
    jp2, jm2 = (two_j + two_m2) // 2, (two_j - two_m2) // 2
    d12 = (two_m1 - two_m2) // 2
    th = mpmath.mpf(theta) / 2
    c, s = mpmath.cos(th), mpmath.sin(th)
    pre = mpmath.sqrt(_fact(jp1) * _fact(jm1) * _fact(jp2) * _fact(jm2))
    tot = mpmath.mpf(0)
    for k in range(max(0, -d12), min(jp2, jm1) + 1):
        den = _fact(jp2 - k) * _fact(k) * _fact(d12 + k) * _fact(jm1 - k)
        term = mpmath.mpf(1) / den * c ** (jp2 + jm1 - 2 * k) * s ** (d12 + 2 * k)
        tot += -term if (d12 + k) % 2 else term
    return pre * tot


def wigner_small_d(j, m1, m2, theta) -> float:
    """Wigner small-d element d^j_{m1 m2}(theta) from the explicit sum formula.

    The combinatorial weights are exact integers; the alternating sum is
    accumulated in extended precision so that large j stays accurate.
    """
    tj, tm1, tm2 = _two(j), _two(m1), _two(m2)
    _check_jm(tj, tm1)
    _check_jm(tj, tm2)
    if abs(tm1) > tj or abs(tm2) > tj:
        raise ValueError("|m| exceeds j in wigner_small_d")
    with mpmath.workdps(20 + tj):
        return float(small_d_mp(tj, tm1, tm2, theta))


def wigner_D(j, m1, m2, phi, theta, psi) -> complex:
    """D^j_{m1 m2}(phi, theta, psi) = exp(-i m1 phi) d^j_{m1 m2}(theta) exp(-i m2 psi)."""
    d = wigner_small_d(j, m1, m2, theta)
    phase = -(float(as_halfint(m1)) * phi + float(as_halfint(m2)) * psi)
    return complex(np.cos(phase), np.sin(phase)) * d


def _d_seed(two_j: int, two_m1: int, two_m2: int, cth, sth):
    # single-term d^j when j = max(|m1|,|m2|)
    jp1, jm1 = (two_j + two_m1) // 2, (two_j - two_m1) // 2
    jp2, jm2 = (two_j + two_m2) // 2, (two_j - two_m2) // 2
    d12 = (two_m1 - two_m2) // 2
    k = max(0, -d12)
    assert k == min(jp2, jm1)
    coef = mpmath.sqrt(mpmath.mpf(_fact(jp1) * _fact(jm1) * _fact(jp2) * _fact(jm2))) / (
        _fact(jp2 - k) * _fact(k) * _fact(d12 + k) * _fact(jm1 - k))
    sign = -1.0 if (d12 + k) % 2 else 1.0
    return sign * float(coef) * cth ** (jp2 + jm1 - 2 * k) * sth ** (d12 + 2 * k)


def small_d_table(two_m1: int, two_m2: int, two_jmax: int, theta) -> np.ndarray:
    """d^j_{m1 m2}(theta) for all j = max(|m1|,|m2|) .. jmax, vectorized in theta.

    Returns an array of shape (n_j,) + theta.shape, row 0 at the smallest j.
    Uses the three-term recurrence in j, which is stable for all angles.
    """
    theta = np.asarray(theta, dtype=float)
    two_jmin = max(abs(two_m1), abs(two_m2))
    if two_jmax < two_jmin:
        return np.zeros((0,) + theta.shape)
    n = (two_jmax - two_jmin) // 2 + 1
    out = np.empty((n,) + theta.shape)
    cth, sth = np.cos(theta / 2), np.sin(theta / 2)
    ct = np.cos(theta)
    out[0] = _d_seed(two_jmin, two_m1, two_m2, cth, sth)
    m1, m2 = two_m1 / 2.0, two_m2 / 2.0
    for i in range(1, n):
        j = two_jmin / 2.0 + i  # target rank
        a = np.sqrt((j * j - m1 * m1) * (j * j - m2 * m2))
        jm = j - 1.0
        mix = m1 * m2 / (j * jm) if jm > 0 else 0.0
        t = (ct - mix) * out[i - 1]
        if i >= 2:
            b = np.sqrt((jm * jm - m1 * m1) * (jm * jm - m2 * m2)) / (jm * (2 * j - 1))
            t = t - b * out[i - 2]
        out[i] = j * (2 * j - 1) / a * t
    return out
