"""Phase-space functions of several coupled spins.

The phase-space map of a multi-spin operator is the tensor product of the
single-spin maps, so the star product acts site by site: for every site k a
bilinear kernel S_k[a, b, c] (component c of the star product of basis
functions a and b) is contracted with that site's index pair.

Coefficients are stored sparsely as {((j1, m1), (j2, m2), ...): c}; contractions
go through a dense array indexed by ``tensorops.basis_index`` per site.
"""
from __future__ import annotations

import itertools
import json
import math
import string
from functools import lru_cache

import numpy as np

from .approx import star_approx_general
from .starprod import _from_vector, _table_targets, _to_vector
from .tensorops import (
    PhaseSpaceFunction,
    _check_s,
    basis_index,
    gamma_power,
    gamma_vector,
    k_coefficient_table,
    radius,
    tensor_stack,
)

PRUNE_TOL = 1e-14
MAX_DIM = 64


class CoupledPhaseFunction:
    """sum c_{(j1 m1),...,(jN mN)} prod_k Y_{jk mk}(Omega_k) for spins 2J_1, ..., 2J_N."""

    __slots__ = ("sites", "s", "coeffs")

    def __init__(self, sites, s: float, coeffs=None, prune: bool = True):
        self.sites = tuple(int(t) for t in sites)
        if not self.sites or any(t < 1 for t in self.sites):
            raise ValueError("sites must be a non-empty list of positive 2J values")
        _check_s(s)
        self.s = float(s)
        clean = {}
        for key, c in (coeffs or {}).items():
            key = tuple((int(j), int(m)) for j, m in key)
            if len(key) != len(self.sites):
                raise ValueError(f"index {key} does not match {len(self.sites)} sites")
            for (j, m), t in zip(key, self.sites):
                if not 0 <= j <= t or abs(m) > j:
                    raise ValueError(f"index {key} out of range for sites {self.sites}")
            c = complex(c)
            if prune and abs(c) < PRUNE_TOL:
                continue
            clean[key] = c
        self.coeffs = clean

    # dense view ---------------------------------------------------------------
    @property
    def shape(self):
        return tuple((t + 1) ** 2 for t in self.sites)

    def dense(self) -> np.ndarray:
        arr = np.zeros(self.shape, dtype=complex)
        pos = [_positions(t) for t in self.sites]
        for key, c in self.coeffs.items():
            arr[tuple(p[jm] for p, jm in zip(pos, key))] = c
        return arr

    @classmethod
    def from_dense(cls, sites, s, arr: np.ndarray):
        idx = [basis_index(t) for t in sites]
        nz = np.argwhere(np.abs(arr) >= PRUNE_TOL)
        coeffs = {tuple(idx[k][i] for k, i in enumerate(row)): arr[tuple(row)] for row in nz}
        return cls(sites, s, coeffs)

    @classmethod
    def product(cls, *factors: PhaseSpaceFunction):
        """Site-factorized function f_1(Omega_1) f_2(Omega_2) ..."""
        if len({f.s for f in factors}) != 1:
            raise ValueError("factors differ in s")
        arr = np.ones(())
        for f in factors:
            arr = np.multiply.outer(arr, _to_vector(f))
        return cls.from_dense([f.two_J for f in factors], factors[0].s, arr)

    # arithmetic --------------------------------------------------------------
    def _check(self, other):
        if self.sites != other.sites or abs(self.s - other.s) > 1e-12:
            raise ValueError(f"metadata mismatch: {self.sites}, s={self.s} vs {other.sites}, s={other.s}")

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return CoupledPhaseFunction(self.sites, self.s, out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, a):
        return CoupledPhaseFunction(self.sites, self.s, {k: a * c for k, c in self.coeffs.items()})

    def __mul__(self, a):
        return self.scale(a)

    __rmul__ = __mul__

    def distance(self, other) -> float:
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0) - other.coeffs.get(k, 0)) for k in keys), default=0.0)

    # serialization -------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "sites": list(self.sites),
            "s": self.s,
            "coeffs": [{"jm": [list(p) for p in k], "re": c.real, "im": c.imag}
                       for k, c in sorted(self.coeffs.items())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict):
        coeffs = {tuple(tuple(p) for p in e["jm"]): complex(e.get("re", 0.0), e.get("im", 0.0))
                  for e in d["coeffs"]}
        return cls(d["sites"], d["s"], coeffs)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"CoupledPhaseFunction(sites={self.sites}, s={self.s}, terms={len(self.coeffs)})"


@lru_cache(maxsize=None)
def _positions(two_J: int):
    return {jm: k for k, jm in enumerate(basis_index(two_J))}


def _letters(n: int):
    return string.ascii_letters[:n]


def _check_dims(sites):
    dim = math.prod(t + 1 for t in sites)
    if dim > MAX_DIM:
        raise ValueError(f"Hilbert-space dimension {dim} exceeds the supported {MAX_DIM}")
    return dim


# operators <-> phase space ----------------------------------------------------

def _site_weights(sites, s, power_sign):
    # per-site vectors gamma_j^{-power_sign * s} R^{-power_sign}
    out = []
    for t in sites:
        R = radius(t)
        out.append(np.array([gamma_power(t, j, -power_sign * s) * R ** (-power_sign) for j, _ in basis_index(t)]))
    return out


def coupled_op_to_phase(A, sites, s: float) -> CoupledPhaseFunction:
    """Coefficients Tr[A (T_{j1m1} x ... )^dagger] prod_k gamma_{jk}^{-s} / R_k."""
    _check_s(s)
    sites = tuple(int(t) for t in sites)
    dim = _check_dims(sites)
    A = np.asarray(A, dtype=complex)
    if A.shape != (dim, dim):
        raise ValueError(f"operator shape {A.shape} does not match sites {sites} (dimension {dim})")
    n = len(sites)
    dims = [t + 1 for t in sites]
    At = A.reshape(dims + dims)
    L = _letters(3 * n)
    ax, xs, ys = L[:n], L[n:2 * n], L[2 * n:]
    spec = xs + ys + "," + ",".join(ax[k] + xs[k] + ys[k] for k in range(n)) + "->" + ax
    arr = np.einsum(spec, At, *[tensor_stack(t) for t in sites])
    for k, w in enumerate(_site_weights(sites, s, 1)):
        arr = arr * w.reshape([-1 if q == k else 1 for q in range(n)])
    return CoupledPhaseFunction.from_dense(sites, s, arr)


def coupled_phase_to_op(F: CoupledPhaseFunction) -> np.ndarray:
    """Inverse map: sum c prod_k R_k gamma_{jk}^s T_{jk mk} as a dense Kronecker-ordered matrix."""
    sites = F.sites
    _check_dims(sites)
    n = len(sites)
    arr = F.dense()
    for k, w in enumerate(_site_weights(sites, F.s, -1)):
        arr = arr * w.reshape([-1 if q == k else 1 for q in range(n)])
    L = _letters(3 * n)
    ax, xs, ys = L[:n], L[n:2 * n], L[2 * n:]
    spec = ax + "," + ",".join(ax[k] + xs[k] + ys[k] for k in range(n)) + "->" + xs + ys
    out = np.einsum(spec, arr, *[tensor_stack(t) for t in sites])
    dim = math.prod(t + 1 for t in sites)
    return out.reshape(dim, dim)


# per-site kernels ------------------------------------------------------------

@lru_cache(maxsize=None)
def _exact_kernel(two_J: int, s: float) -> np.ndarray:
    """S[a, b, c]: component c of e_a * e_b for the exact star product."""
    idx = basis_index(two_J)
    n = len(idx)
    gam = gamma_vector(two_J)
    gs = np.array([gam[j] ** s for j, _ in idx])
    K = k_coefficient_table(two_J)
    tgt = _table_targets(two_J)
    S = np.zeros((n, n, n + 1), dtype=complex)
    a_idx, b_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for l in range(K.shape[2]):
        np.add.at(S, (a_idx, b_idx, tgt[:, :, l]), K[:, :, l] * np.outer(gs, gs))
    S = S[:, :, :n] * radius(two_J) / gs
    S.setflags(write=False)
    return S


@lru_cache(maxsize=None)
def _approx_kernel(two_J: int, s: float, order: int) -> np.ndarray:
    """Kernel of the order-truncated star expansion (cumulative up to ``order``)."""
    idx = basis_index(two_J)
    n = len(idx)
    S = np.zeros((n, n, n), dtype=complex)
    basis = [_from_vector(two_J, s, np.eye(n)[k]) for k in range(n)]
    for a in range(n):
        for b in range(n):
            S[a, b] = _to_vector(star_approx_general(basis[a], basis[b], order))
    S.setflags(write=False)
    return S


def _graded_kernel(two_J: int, s: float, p: int) -> np.ndarray:
    """Order-p part of the star expansion kernel."""
    if p == 0:
        return _approx_kernel(two_J, s, 0)
    return _approx_kernel(two_J, s, p) - _approx_kernel(two_J, s, p - 1)


def _contract(f_arr, g_arr, kernels):
    n = len(kernels)
    L = _letters(3 * n)
    A, B, C = L[:n], L[n:2 * n], L[2 * n:]
    spec = A + "," + B + "," + ",".join(A[k] + B[k] + C[k] for k in range(n)) + "->" + C
    return np.einsum(spec, f_arr, g_arr, *kernels, optimize=True)


def _parse_mode(mode):
    from .evolution import _parse_mode as parse
    return parse(mode)


def coupled_star(f: CoupledPhaseFunction, g: CoupledPhaseFunction, mode="exact") -> CoupledPhaseFunction:
    """Site-wise star product.

    ``exact`` applies the exact single-spin kernel on every site.  An order n
    keeps the terms of the per-site expansions whose derivative orders sum to
    at most n over all sites, so order 1 is the pointwise product plus the
    single-site first-order terms.
    """
    f._check(g)
    n = _parse_mode(mode)
    fa, ga = f.dense(), g.dense()
    if n is None:
        out = _contract(fa, ga, [_exact_kernel(t, f.s) for t in f.sites])
    else:
        out = np.zeros(f.shape, dtype=complex)
        for orders in itertools.product(range(n + 1), repeat=len(f.sites)):
            if sum(orders) > n:
                continue
            out += _contract(fa, ga, [_graded_kernel(t, f.s, p) for t, p in zip(f.sites, orders)])
    return CoupledPhaseFunction.from_dense(f.sites, f.s, out)


def coupled_moyal_rhs(H: CoupledPhaseFunction, rho: CoupledPhaseFunction, mode="exact") -> CoupledPhaseFunction:
    """-i (H * rho - rho * H) with ``coupled_star``."""
    return (coupled_star(H, rho, mode) - coupled_star(rho, H, mode)).scale(-1j)


__all__ = ["CoupledPhaseFunction", "coupled_op_to_phase", "coupled_phase_to_op", "coupled_star",
           "coupled_moyal_rhs"]
