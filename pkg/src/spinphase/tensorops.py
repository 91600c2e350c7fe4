"""Operators on the spin-J Hilbert space and the map to phase-space functions.

Matrices are indexed by m = J, J-1, ..., -J (row 0 is spin-up).  The
phase-space image of an operator A in the s-parametrized representation has
coefficients Tr[A T_{jm}^dagger] gamma_j^{-s} / R over the harmonics Y_{jm}.
"""
from __future__ import annotations

import hashlib
import io
import json
import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .angular import SqrtRational, _cg_two
from .expansion import SpinWeightedExpansion, wigner_D_matrix

log = logging.getLogger(__name__)

K_CACHE_VERSION = 1


def _check_s(s: float):
    if not -1.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [-1, 1]")


@dataclass
class SpinOperator:
    """Dense (2J+1)x(2J+1) complex matrix in the |J m> basis, m descending."""

    two_J: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        d = self.two_J + 1
        if self.entries.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {self.entries.shape}")

    @property
    def dim(self) -> int:
        return self.two_J + 1

    def dag(self) -> "SpinOperator":
        return SpinOperator(self.two_J, self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def _other(self, other):
        if isinstance(other, SpinOperator):
            if other.two_J != self.two_J:
                raise ValueError("operators act on different spins")
            return other.entries
        return None

    def __matmul__(self, other):
        return SpinOperator(self.two_J, self.entries @ self._other(other))

    def __add__(self, other):
        return SpinOperator(self.two_J, self.entries + self._other(other))

    def __sub__(self, other):
        return SpinOperator(self.two_J, self.entries - self._other(other))

    def __mul__(self, a):
        if isinstance(a, SpinOperator):
            return self @ a
        return SpinOperator(self.two_J, self.entries * a)

    __rmul__ = __mul__

    def __neg__(self):
        return SpinOperator(self.two_J, -self.entries)

    def to_dict(self) -> dict:
        return {
            "two_j": self.two_J,
            "rows": [[{"re": z.real, "im": z.imag} for z in row] for row in self.entries.tolist()],
        }

    @classmethod
    def from_dict(cls, d: dict):
        rows = [[complex(e["re"], e["im"]) for e in row] for row in d["rows"]]
        return cls(int(d["two_j"]), np.array(rows, dtype=complex))


@dataclass
class PhaseSpaceFunction:
    """A weight-0 expansion tagged with the spin 2J and the parameter s."""

    two_J: int
    s: float
    body: SpinWeightedExpansion

    def __post_init__(self):
        _check_s(self.s)
        if self.body.weight != 0:
            raise ValueError("phase-space functions have spin weight 0")

    def _same(self, other):
        if self.two_J != other.two_J or self.s != other.s:
            raise ValueError("phase-space functions differ in J or s")

    def __add__(self, other):
        self._same(other)
        return PhaseSpaceFunction(self.two_J, self.s, self.body + other.body)

    def __sub__(self, other):
        self._same(other)
        return PhaseSpaceFunction(self.two_J, self.s, self.body - other.body)

    def __mul__(self, a):
        return PhaseSpaceFunction(self.two_J, self.s, self.body.scale(a))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def evaluate(self, theta, phi):
        return self.body.evaluate(theta, phi)

    def to_dict(self) -> dict:
        d = self.body.to_dict()
        d["two_j"] = self.two_J
        d["s"] = self.s
        return d

    @classmethod
    def from_dict(cls, d: dict):
        return cls(int(d["two_j"]), float(d["s"]), SpinWeightedExpansion.from_dict(d))


# basic spin matrices --------------------------------------------------------

def m_values(two_J: int) -> np.ndarray:
    return two_J / 2.0 - np.arange(two_J + 1)


def jz(two_J: int) -> SpinOperator:
    return SpinOperator(two_J, np.diag(m_values(two_J)))


def j_plus(two_J: int) -> SpinOperator:
    J = two_J / 2.0
    ms = m_values(two_J)
    mat = np.zeros((two_J + 1, two_J + 1))
    for k in range(1, two_J + 1):
        m = ms[k]
        mat[k - 1, k] = math.sqrt(J * (J + 1) - m * (m + 1))
    return SpinOperator(two_J, mat)


def j_minus(two_J: int) -> SpinOperator:
    return j_plus(two_J).dag()


def jx(two_J: int) -> SpinOperator:
    return (j_plus(two_J) + j_minus(two_J)) * 0.5


def jy(two_J: int) -> SpinOperator:
    return (j_plus(two_J) - j_minus(two_J)) * (-0.5j)


def identity(two_J: int) -> SpinOperator:
    return SpinOperator(two_J, np.eye(two_J + 1))


# tensor operators -----------------------------------------------------------

def basis_index(two_J: int):
    """List of (j, m) for 0 <= j <= 2J, m ascending within each rank."""
    return [(j, m) for j in range(two_J + 1) for m in range(-j, j + 1)]


@lru_cache(maxsize=None)
def _tensor_matrix(two_J: int, j: int, m: int) -> np.ndarray:
    d = two_J + 1
    mat = np.zeros((d, d))
    pre = math.sqrt((2 * j + 1) / (two_J + 1))
    for r in range(d):
        tm1 = two_J - 2 * r
        tm2 = tm1 - 2 * m
        if abs(tm2) > two_J:
            continue
        c = float(_cg_two(two_J, tm2, 2 * j, 2 * m, two_J, tm1))
        mat[r, r + m] = pre * c
    mat.setflags(write=False)
    return mat


def tensor_op(two_J: int, j: int, m: int) -> SpinOperator:
    """T_{jm} with [T_{jm}]_{m1 m2} = sqrt((2j+1)/(2J+1)) C^{J m1}_{J m2, j m}."""
    if not 0 <= j <= two_J or abs(m) > j:
        raise ValueError(f"tensor operator ({j},{m}) undefined for 2J={two_J}")
    return SpinOperator(two_J, _tensor_matrix(two_J, j, m).copy())


@lru_cache(maxsize=64)
def tensor_stack(two_J: int) -> np.ndarray:
    """All T_{jm} stacked along axis 0 in ``basis_index`` order (real)."""
    arr = np.array([_tensor_matrix(two_J, j, m) for j, m in basis_index(two_J)])
    arr.setflags(write=False)
    return arr


# weights and radius ------------------------------------------------------

def radius(two_J: int) -> float:
    """R = sqrt(J / 2pi)."""
    if two_J < 1:
        raise ValueError("spin must be positive")
    return math.sqrt(two_J / (4 * math.pi))


@lru_cache(maxsize=None)
def gamma(two_J: int, j: int) -> SqrtRational:
    """gamma_j = sqrt(2J) (2J)! / sqrt((2J+j+1)! (2J-j)!), zero for j > 2J."""
    if j < 0:
        raise ValueError("rank must be non-negative")
    if j > two_J:
        return SqrtRational.zero()
    # (2J)!/(2J-j)! and (2J)!/(2J+j+1)! as short products
    num, den = two_J, 1
    for k in range(j):
        num *= two_J - k
    for k in range(1, j + 2):
        den *= two_J + k
    return SqrtRational(1, Fraction(num, den))


@lru_cache(maxsize=None)
def gamma_vector(two_J: int, top: int | None = None) -> np.ndarray:
    """Float gamma_j for j = 0 .. top (default 2J)."""
    top = two_J if top is None else top
    v = np.array([float(gamma(two_J, j)) for j in range(top + 1)])
    v.setflags(write=False)
    return v


def gamma_power(two_J: int, j: int, p: float) -> float:
    """gamma_j ** p, with 0**0 = 1; raises for a negative power of zero."""
    g = float(gamma(two_J, j))
    if g == 0.0:
        if p > 0:
            return 0.0
        if p == 0:
            return 1.0
        raise ZeroDivisionError(f"gamma_{j} = 0 for 2J={two_J} cannot be inverted")
    return g ** p


# parity operator and the phase-space map -----------------------------------

def parity_operator(two_J: int, s: float) -> SpinOperator:
    """M_s = (1/R) sum_j sqrt((2j+1)/4pi) gamma_j^{-s} T_{j0}."""
    _check_s(s)
    R = radius(two_J)
    mat = np.zeros((two_J + 1, two_J + 1))
    for j in range(two_J + 1):
        mat += math.sqrt((2 * j + 1) / (4 * math.pi)) * gamma_power(two_J, j, -s) * _tensor_matrix(two_J, j, 0)
    return SpinOperator(two_J, mat / R)


def rotation_matrix(two_J: int, theta: float, phi: float) -> SpinOperator:
    """Rotation taking the north pole to (theta, phi): exp(-i phi Jz) exp(-i theta Jy).

    Its entries are the Wigner D^J_{m1 m2}(phi, theta, 0).
    """
    return SpinOperator(two_J, wigner_D_matrix(two_J, phi, theta))


def op_to_phase(A: SpinOperator, s: float) -> PhaseSpaceFunction:
    """Phase-space image of A: coefficients Tr[A T_{jm}^dagger] gamma_j^{-s} / R."""
    _check_s(s)
    two_J = A.two_J
    T = tensor_stack(two_J)
    tr = np.einsum("xy,nxy->n", A.entries, T)  # T real, so T^dagger = T^T
    R = radius(two_J)
    coeffs = {}
    for k, (j, m) in enumerate(basis_index(two_J)):
        coeffs[(j, m)] = tr[k] * gamma_power(two_J, j, -s) / R
    return PhaseSpaceFunction(two_J, s, SpinWeightedExpansion(coeffs, 0, two_J))


def phase_to_op(F: PhaseSpaceFunction, tol: float = 1e-10) -> SpinOperator:
    """Inverse of op_to_phase: A = sum c_{jm} R gamma_j^s T_{jm}.

    Ranks above 2J have no operator preimage; they must vanish to ``tol``.
    """
    two_J = F.two_J
    R = radius(two_J)
    mat = np.zeros((two_J + 1, two_J + 1), dtype=complex)
    for (j, m), c in F.body.coeffs.items():
        if j > two_J:
            if abs(c) > tol:
                raise ValueError(f"rank {j} > 2J has no operator preimage")
            continue
        mat += c * R * gamma_power(two_J, j, F.s) * _tensor_matrix(two_J, j, m)
    return SpinOperator(two_J, mat)


def phase_value(A: SpinOperator, s: float, theta: float, phi: float) -> complex:
    """Pointwise Tr[A R(theta,phi) M_s R(theta,phi)^dagger] (the matrix oracle)."""
    Rm = rotation_matrix(A.two_J, theta, phi).entries
    M = parity_operator(A.two_J, s).entries
    return complex(np.trace(A.entries @ Rm @ M @ Rm.conj().T))


# structure constants -------------------------------------------------------

def _build_k(two_J: int) -> np.ndarray:
    # K[a, b, l] = Tr[T_a T_b T^dagger_{l, m_a + m_b}]
    T = tensor_stack(two_J)
    idx = basis_index(two_J)
    pos = {jm: k for k, jm in enumerate(idx)}
    n = len(idx)
    prod = np.einsum("axy,byz->abxz", T, T)
    K = np.zeros((n, n, two_J + 1))
    for a, (ja, ma) in enumerate(idx):
        for b, (jb, mb) in enumerate(idx):
            M = ma + mb
            for l in range(max(abs(ja - jb), abs(M)), min(ja + jb, two_J) + 1):
                K[a, b, l] = np.sum(prod[a, b] * T[pos[(l, M)]])
    K[np.abs(K) < 1e-15] = 0.0
    return K


def _cache_path(two_J: int):
    d = os.environ.get("SPINPHASE_CACHE_DIR")
    if not d:
        return None
    return Path(d) / f"ktable_v{K_CACHE_VERSION}_2J{two_J}.npz"


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def _load_cached(path: Path, two_J: int):
    try:
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(str(z["header"]))
            K = z["K"]
    except (OSError, ValueError, KeyError) as exc:
        log.warning("ignoring unreadable K cache %s: %s", path, exc)
        return None
    ok = (header.get("version") == K_CACHE_VERSION and header.get("two_J") == two_J
          and header.get("sha256") == _digest(K))
    if not ok:
        log.warning("K cache %s failed its integrity check; rebuilding", path)
        return None
    return K


def _store_cached(path: Path, two_J: int, K: np.ndarray):
    header = {"version": K_CACHE_VERSION, "two_J": two_J, "shape": list(K.shape), "sha256": _digest(K)}
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.BytesIO()
    np.savez(buf, K=K, header=np.array(json.dumps(header)))
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(buf.getvalue())
    os.replace(tmp, path)


@lru_cache(maxsize=16)
def k_coefficient_table(two_J: int) -> np.ndarray:
    """Dense real array K[a, b, l] of Tr[T_a T_b T_{l, m_a+m_b}^dagger].

    ``a`` and ``b`` follow ``basis_index(two_J)``.  Persisted under
    SPINPHASE_CACHE_DIR when that variable is set.
    """
    path = _cache_path(two_J)
    K = _load_cached(path, two_J) if path is not None and path.exists() else None
    if K is None:
        K = _build_k(two_J)
        if path is not None:
            _store_cached(path, two_J, K)
    K.setflags(write=False)
    return K


def k_coefficient(two_J: int, j: int, m: int, jp: int, mp: int, l: int) -> float:
    """Single entry K^l_{jm, j'm'}; zero outside the allowed index range."""
    if not (0 <= j <= two_J and 0 <= jp <= two_J and abs(m) <= j and abs(mp) <= jp):
        return 0.0
    if not 0 <= l <= two_J:
        return 0.0
    pos = {jm: k for k, jm in enumerate(basis_index(two_J))}
    return float(k_coefficient_table(two_J)[pos[(j, m)], pos[(jp, mp)], l])
