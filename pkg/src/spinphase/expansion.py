"""Spin-weighted spherical-harmonic expansions.

Convention: Condon-Shortley phases with

    Y^eta_{jm}(theta, phi) = (-1)^m sqrt((2j+1)/4pi) e^{i m phi} d^j_{-m,eta}(theta)

so that eth raises the weight by sqrt((j-eta)(j+eta+1)) and eth_bar lowers it
by -sqrt((j+eta)(j-eta+1)).  The psi-dependence of the D-matrix relation is
dropped (psi = 0) throughout.
"""
from __future__ import annotations

import contextvars
import json
import math
from contextlib import contextmanager
from functools import lru_cache
from typing import Iterable

import numpy as np

from .angular import small_d_table
from .kernels import multiply_kernel

PRUNE_TOL = 1e-14
_prune_tol = contextvars.ContextVar("prune_tol", default=PRUNE_TOL)


@contextmanager
def pruning(tol: float):
    """Temporarily change the pruning threshold (0 keeps every coefficient)."""
    token = _prune_tol.set(tol)
    try:
        yield
    finally:
        _prune_tol.reset(token)


class SpinWeightedExpansion:
    """Sparse coefficients c_{jm} of sum_{jm} c_{jm} Y^eta_{jm}.

    ``coeffs`` maps integer pairs (j, m) to complex numbers.  Instances are
    treated as immutable: every operation returns a new expansion.
    """

    __slots__ = ("weight", "max_rank", "coeffs")

    def __init__(self, coeffs=None, weight: int = 0, max_rank: int | None = None, prune: bool = True):
        weight = int(weight)
        clean = {}
        tol = _prune_tol.get()
        for (j, m), c in (coeffs or {}).items():
            j, m = int(j), int(m)
            c = complex(c)
            if abs(m) > j or j < abs(weight):
                if c != 0:
                    raise ValueError(f"coefficient ({j},{m}) not allowed at weight {weight}")
                continue
            if prune and abs(c) < tol:
                continue
            clean[(j, m)] = c
        top = max((j for j, _ in clean), default=abs(weight))
        if max_rank is None:
            max_rank = top
        elif clean and top > max_rank:
            raise ValueError("coefficient rank exceeds max_rank")
        self.weight = weight
        self.max_rank = int(max_rank)
        self.coeffs = clean

    # constructors -----------------------------------------------------
    @classmethod
    def basis(cls, j: int, m: int, weight: int = 0, coeff: complex = 1.0):
        """The single harmonic coeff * Y^weight_{jm}."""
        return cls({(j, m): coeff}, weight=weight, max_rank=j)

    @classmethod
    def zero(cls, weight: int = 0, max_rank: int = 0):
        return cls({}, weight=weight, max_rank=max_rank)

    @classmethod
    def from_arrays(cls, js, ms, cs, weight=0, max_rank=None):
        return cls({(int(j), int(m)): c for j, m, c in zip(js, ms, cs)}, weight, max_rank)

    @classmethod
    def from_dense(cls, block: np.ndarray, weight: int = 0, max_rank=None):
        """Build from an array indexed [j, m + lmax]."""
        lmax = block.shape[0] - 1
        d = {}
        for j in range(abs(weight), lmax + 1):
            for m in range(-j, j + 1):
                c = block[j, m + lmax]
                if c != 0:
                    d[(j, m)] = c
        return cls(d, weight, max_rank)

    # container helpers ---------------------------------------------------
    def __len__(self):
        return len(self.coeffs)

    def is_empty(self) -> bool:
        return not self.coeffs

    def coeff(self, j: int, m: int) -> complex:
        return self.coeffs.get((j, m), 0j)

    def items(self):
        return sorted(self.coeffs.items())

    def arrays(self):
        items = self.items()
        js = np.array([k[0] for k, _ in items], dtype=np.int64)
        ms = np.array([k[1] for k, _ in items], dtype=np.int64)
        cs = np.array([c for _, c in items], dtype=complex)
        return js, ms, cs

    def ranks(self):
        return sorted({j for j, _ in self.coeffs})

    def __repr__(self):
        body = ", ".join(f"({j},{m}): {c:.6g}" for (j, m), c in self.items()[:6])
        more = "" if len(self.coeffs) <= 6 else ", ..."
        return f"SpinWeightedExpansion(weight={self.weight}, max_rank={self.max_rank}, {{{body}{more}}})"

    # arithmetic ----------------------------------------------------------
    def _check_weight(self, other):
        if self.weight != other.weight:
            raise ValueError(f"weights differ: {self.weight} vs {other.weight}")

    def __add__(self, other):
        if not isinstance(other, SpinWeightedExpansion):
            return NotImplemented
        return linear_combine([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        if not isinstance(other, SpinWeightedExpansion):
            return NotImplemented
        return linear_combine([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, other):
        if isinstance(other, SpinWeightedExpansion):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(1.0 / other)

    def scale(self, a) -> "SpinWeightedExpansion":
        a = complex(a)
        return SpinWeightedExpansion({k: a * c for k, c in self.coeffs.items()}, self.weight, self.max_rank)

    def map_ranks(self, fn, max_rank=None) -> "SpinWeightedExpansion":
        """Multiply the rank-j block by ``fn(j)``."""
        out = {}
        for (j, m), c in self.coeffs.items():
            f = fn(j)
            if f != 0:
                out[(j, m)] = c * f
        return SpinWeightedExpansion(out, self.weight, self.max_rank if max_rank is None else max_rank)

    def truncate(self, rank: int) -> "SpinWeightedExpansion":
        """Drop all ranks above ``rank``."""
        out = {k: c for k, c in self.coeffs.items() if k[0] <= rank}
        return SpinWeightedExpansion(out, self.weight, min(self.max_rank, rank))

    def conj(self) -> "SpinWeightedExpansion":
        """Complex conjugate function: conj(Y^eta_{jm}) = (-1)^{m+eta} Y^{-eta}_{j,-m}."""
        out = {}
        for (j, m), c in self.coeffs.items():
            sign = -1.0 if (m + self.weight) % 2 else 1.0
            out[(j, -m)] = sign * np.conj(c)
        return SpinWeightedExpansion(out, -self.weight, self.max_rank)

    def allclose(self, other, atol=1e-12) -> bool:
        if self.weight != other.weight and not (self.is_empty() and other.is_empty()):
            return False
        return distance(self, other) <= atol

    # calculus -------------------------------------------------------------
    def eth(self):
        return eth(self)

    def eth_bar(self):
        return eth_bar(self)

    def evaluate(self, theta, phi):
        return evaluate(self, theta, phi)

    def rotate(self, theta0, phi0):
        return rotate(self, theta0, phi0)

    def l2_norm(self, R: float = 1.0):
        return l2_norm(self, R)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "weight": self.weight,
            "max_rank": self.max_rank,
            "coeffs": [{"j": j, "m": m, "re": c.real, "im": c.imag} for (j, m), c in self.items()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict):
        coeffs = {(int(e["j"]), int(e["m"])): complex(e.get("re", 0.0), e.get("im", 0.0)) for e in d["coeffs"]}
        return cls(coeffs, int(d.get("weight", 0)), d.get("max_rank"))

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


def distance(f: SpinWeightedExpansion, g: SpinWeightedExpansion) -> float:
    """Coefficient-wise L-infinity distance."""
    keys = set(f.coeffs) | set(g.coeffs)
    return max((abs(f.coeff(*k) - g.coeff(*k)) for k in keys), default=0.0)


def eth(f: SpinWeightedExpansion) -> SpinWeightedExpansion:
    """Raise the spin weight by one."""
    eta = f.weight
    out = {}
    for (j, m), c in f.coeffs.items():
        fac = (j - eta) * (j + eta + 1)
        if fac > 0:
            out[(j, m)] = c * math.sqrt(fac)
    return SpinWeightedExpansion(out, eta + 1, max(f.max_rank, abs(eta + 1)))


def eth_bar(f: SpinWeightedExpansion) -> SpinWeightedExpansion:
    """Lower the spin weight by one."""
    eta = f.weight
    out = {}
    for (j, m), c in f.coeffs.items():
        fac = (j + eta) * (j - eta + 1)
        if fac > 0:
            out[(j, m)] = -c * math.sqrt(fac)
    return SpinWeightedExpansion(out, eta - 1, max(f.max_rank, abs(eta - 1)))


def eth_power(f: SpinWeightedExpansion, n: int) -> SpinWeightedExpansion:
    """eth^n for n >= 0, eth_bar^|n| for n < 0."""
    op = eth if n >= 0 else eth_bar
    for _ in range(abs(n)):
        f = op(f)
    return f


def spin_harmonic(j: int, m: int, eta: int) -> SpinWeightedExpansion:
    """Y^eta_{jm} built from the ladder definition applied to Y_{jm}.

    Equals the basis element up to float rounding; kept as the derived
    constructor that mirrors the definition via repeated eth / eth_bar.
    """
    if abs(eta) > j:
        return SpinWeightedExpansion.zero(eta, j)
    f = eth_power(SpinWeightedExpansion.basis(j, m), eta)
    norm = math.factorial(j - abs(eta)) / math.factorial(j + abs(eta))
    sign = 1.0 if eta >= 0 else (-1.0) ** eta
    return f.scale(sign * math.sqrt(norm))


def multiply(f: SpinWeightedExpansion, g: SpinWeightedExpansion, max_rank: int | None = None) -> SpinWeightedExpansion:
    """Pointwise product, expanded at weight f.weight + g.weight.

    ``max_rank`` optionally truncates the output (ranks above it are never
    computed).  By default the full product up to f.max_rank + g.max_rank
    is kept.
    """
    w = f.weight + g.weight
    full = f.max_rank + g.max_rank
    cap = full if max_rank is None else min(full, max_rank)
    if f.is_empty() or g.is_empty():
        return SpinWeightedExpansion.zero(w, max(cap, abs(w)))
    j1, m1, c1 = f.arrays()
    j2, m2, c2 = g.arrays()
    block = multiply_kernel(j1, m1, c1, f.weight, j2, m2, c2, g.weight, cap)
    if block.shape[0] == 0:
        return SpinWeightedExpansion.zero(w, max(cap, abs(w)))
    return SpinWeightedExpansion.from_dense(block, w, max(cap, abs(w)))


def linear_combine(terms: Iterable) -> SpinWeightedExpansion:
    """sum_k a_k f_k over expansions of equal weight."""
    terms = list(terms)
    if not terms:
        return SpinWeightedExpansion.zero()
    weight = terms[0][1].weight
    out: dict = {}
    rank = 0
    for a, f in terms:
        if f.weight != weight:
            raise ValueError(f"weights differ: {weight} vs {f.weight}")
        rank = max(rank, f.max_rank)
        a = complex(a)
        for k, c in f.coeffs.items():
            out[k] = out.get(k, 0j) + a * c
    return SpinWeightedExpansion(out, weight, rank)


def evaluate(f: SpinWeightedExpansion, theta, phi):
    """Evaluate at (theta, phi); arrays broadcast against each other."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    out = np.zeros(theta.shape, dtype=complex)
    eta = f.weight
    by_m: dict = {}
    for (j, m), c in f.coeffs.items():
        by_m.setdefault(m, {})[j] = c
    for m, row in sorted(by_m.items()):
        jlo = max(abs(m), abs(eta))
        jtop = max(row)
        table = small_d_table(-2 * m, 2 * eta, 2 * jtop, theta)
        acc = np.zeros(theta.shape, dtype=complex)
        for j, c in sorted(row.items()):
            acc += c * math.sqrt((2 * j + 1) / (4 * math.pi)) * table[j - jlo]
        sign = -1.0 if m % 2 else 1.0
        out += sign * acc * np.exp(1j * m * phi)
    return out if out.ndim else complex(out)


def grid(n_theta: int, n_phi: int):
    """Uniform (theta, phi) mesh including both poles, phi in [0, 2pi)."""
    th = np.linspace(0.0, np.pi, n_theta)
    ph = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    return np.meshgrid(th, ph, indexing="ij")


@lru_cache(maxsize=256)
def _jy_eig(two_j: int):
    # eigen-decomposition of J_y in the |j m>, m descending basis
    j = two_j / 2.0
    ms = j - np.arange(two_j + 1)
    jp = np.zeros((two_j + 1, two_j + 1))
    for k in range(1, two_j + 1):
        m = ms[k]
        jp[k - 1, k] = math.sqrt(j * (j + 1) - m * (m + 1))
    jy = (jp - jp.T) / 2j
    return np.linalg.eigh(jy)


def small_d_matrix(two_j: int, theta: float) -> np.ndarray:
    """d^j(theta) as a matrix with rows/columns ordered m = j, j-1, ..., -j."""
    w, v = _jy_eig(two_j)
    d = (v * np.exp(-1j * theta * w)) @ v.conj().T
    return d.real


def wigner_D_matrix(two_j: int, phi: float, theta: float, psi: float = 0.0) -> np.ndarray:
    """D^j_{m1 m2}(phi, theta, psi), rows/columns ordered m = j .. -j."""
    ms = two_j / 2.0 - np.arange(two_j + 1)
    d = small_d_matrix(two_j, theta)
    return np.exp(-1j * ms * phi)[:, None] * d * np.exp(-1j * ms * psi)[None, :]


def rotate(f: SpinWeightedExpansion, theta0: float, phi0: float) -> SpinWeightedExpansion:
    """Rotate a weight-0 expansion so that the north pole goes to (theta0, phi0).

    c'_{jm} = sum_{m'} D^j_{m m'}(phi0, theta0, 0) c_{jm'}.
    """
    if f.weight != 0:
        raise NotImplementedError("rotation of spin-weighted expansions is not supported")
    out = {}
    for j in f.ranks():
        vec = np.array([f.coeff(j, m) for m in range(j, -j - 1, -1)])
        new = wigner_D_matrix(2 * j, phi0, theta0) @ vec
        for k, m in enumerate(range(j, -j - 1, -1)):
            out[(j, m)] = new[k]
    return SpinWeightedExpansion(out, 0, f.max_rank)


def l2_norm(f: SpinWeightedExpansion, R: float = 1.0) -> float:
    """L2 norm for the measure R^2 sin(theta) dtheta dphi."""
    if R <= 0:
        raise ValueError("R must be positive")
    return math.sqrt(R * R * sum(abs(c) ** 2 for c in f.coeffs.values()))


def quadrature_grid(max_rank: int, extra: int = 16):
    """Gauss-Legendre (in cos theta) x uniform phi nodes exact for ranks <= max_rank pairs."""
    n_t = max_rank + 1 + extra
    n_p = 2 * max_rank + 1 + 2 * extra
    x, w = np.polynomial.legendre.leggauss(n_t)
    theta = np.arccos(x)[::-1]
    w = w[::-1]
    phi = 2 * np.pi * np.arange(n_p) / n_p
    return theta, w, phi


def analyze(values: np.ndarray, theta, w_theta, n_phi: int, max_rank: int, weight: int = 0) -> SpinWeightedExpansion:
    """Project samples on a ``quadrature_grid`` onto Y^weight_{jm}, j <= max_rank.

    ``values`` has shape (len(theta), n_phi).
    """
    values = np.asarray(values, dtype=complex)
    fm = np.fft.fft(values, axis=1) * (2 * np.pi / n_phi)  # fm[:, k] ~ int F e^{-i k phi}
    out = {}
    for m in range(-max_rank, max_rank + 1):
        jlo = max(abs(m), abs(weight))
        if jlo > max_rank:
            continue
        col = fm[:, m % n_phi]
        table = small_d_table(-2 * m, 2 * weight, 2 * max_rank, theta)
        sign = -1.0 if m % 2 else 1.0
        for j in range(jlo, max_rank + 1):
            y = sign * math.sqrt((2 * j + 1) / (4 * math.pi)) * table[j - jlo]
            out[(j, m)] = np.sum(w_theta * col * y)
    return SpinWeightedExpansion(out, weight, max_rank)
