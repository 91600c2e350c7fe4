"""Phase-space images of spin states: spin-up, coherent, excited coherent, Dicke.

The excited coherent state at Omega0 = (theta0, phi0) is K|J,J><J,J|K^dagger with

    K = N R(Omega0) J_- R(Omega0)^dagger / sqrt(2J),

R the rotation of ``tensorops.rotation_matrix`` and N fixing the unit trace.
Its phase-space image is built three ways: exactly with star products, with
the first-order eth-expansion of the star product acting on a Gaussian spin-up
function, and with the first-order planar (Wirtinger derivative) form.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .approx import alpha_to_sphere, sphere_to_alpha, spin_up_coefficients, star_approx_general
from .expansion import SpinWeightedExpansion, analyze, evaluate, quadrature_grid, rotate
from .starprod import star_general
from .tensorops import (PhaseSpaceFunction, SpinOperator, gamma_power, j_minus, m_values, op_to_phase,
                        radius, rotation_matrix)

METHODS = ("exact", "approx_eth", "approx_planar")
FD_STEP = 2e-3


def _index(two_J: int, m: float) -> int:
    """Row of |J, m> in the descending-m basis."""
    k = two_J - 2 * m
    if abs(k - round(k)) > 1e-9 or not 0 <= round(k) <= 2 * two_J or round(k) % 2:
        raise ValueError(f"m={m} is not a valid projection for 2J={two_J}")
    return int(round(k)) // 2


def ket_bra(two_J: int, m1: float, m2: float) -> SpinOperator:
    n = two_J + 1
    A = np.zeros((n, n), dtype=complex)
    A[_index(two_J, m1), _index(two_J, m2)] = 1.0
    return SpinOperator(two_J, A)


def spin_up_phase(two_J: int, s: float, gaussian: bool = False) -> PhaseSpaceFunction:
    """Image of |J,J><J,J|: only m = 0 coefficients, sqrt((2j+1)/4pi) gamma_j^{1-s} / R^2.

    With ``gaussian`` the gamma powers are replaced by exp(-j(j+1)(1-s)/(4J)).
    """
    c = spin_up_coefficients(two_J, s, gaussian)
    body = SpinWeightedExpansion({(j, 0): c[j] for j in range(two_J + 1)}, 0, two_J)
    return PhaseSpaceFunction(two_J, s, body)


def coherent_phase(two_J: int, s: float, theta0: float, phi0: float) -> PhaseSpaceFunction:
    """Spin coherent state at (theta0, phi0): the rotated spin-up function."""
    up = spin_up_phase(two_J, s)
    return PhaseSpaceFunction(two_J, s, rotate(up.body, theta0, phi0))


def dicke_phase(two_J: int, s: float, m: float) -> PhaseSpaceFunction:
    if _index(two_J, m) == 0:
        return spin_up_phase(two_J, s)  # same bytes as the spin-up path
    return op_to_phase(ket_bra(two_J, m, m), s)


def is_real_function(F: PhaseSpaceFunction, tol: float = 1e-12) -> bool:
    """Coefficient symmetry c(j,-m) = (-1)^m conj c(j,m) of a real function (Hermitian operator)."""
    for (j, m), c in F.body.coeffs.items():
        sign = -1.0 if m % 2 else 1.0
        if abs(F.body.coeff(j, -m) - sign * np.conj(c)) > tol:
            return False
    return True


def projector_phase(two_J: int, s: float, m1: float, m2: float) -> PhaseSpaceFunction:
    """Image of |J,m1><J,m2|."""
    return op_to_phase(ket_bra(two_J, m1, m2), s)


# excited coherent states -------------------------------------------------------

def normalization_N(two_J: int, theta0: float) -> float:
    """N with <J,J|K^dagger K|J,J> = 1.

    1/N^2 = cos^2(theta0/2) [1 + 2J - (2J - 1) cos theta0] / 2, which vanishes
    at theta0 = pi where the state is undefined.
    """
    c = math.cos(theta0 / 2.0) ** 2
    inv = c * (1 + two_J - (two_J - 1) * math.cos(theta0)) / 2.0
    # cos(pi/2)**2 is ~4e-33 in floating point, not zero
    if inv <= 1e-24:
        raise ValueError("excited coherent state undefined at theta0 = pi")
    return 1.0 / math.sqrt(inv)


def k_operator(two_J: int, theta0: float, phi0: float) -> SpinOperator:
    R = rotation_matrix(two_J, theta0, phi0)
    N = normalization_N(two_J, theta0)
    return (R @ j_minus(two_J) @ R.dag()) * (N / math.sqrt(two_J))


def k_phase(two_J: int, s: float, theta0: float, phi0: float) -> PhaseSpaceFunction:
    """Closed-form image of K: c_s rotate(Y_{1,-1}) with c_s = N sqrt((J+1)(2J+1)/3) gamma_1^{-s} / R."""
    J = two_J / 2.0
    N = normalization_N(two_J, theta0)
    c = N * math.sqrt((J + 1) * (2 * J + 1) / 3.0) * gamma_power(two_J, 1, -s) / radius(two_J)
    y = SpinWeightedExpansion.basis(1, -1, 0, c)
    return PhaseSpaceFunction(two_J, s, rotate(y, theta0, phi0).truncate(two_J))


def _trace_coefficient(two_J: int, s: float) -> complex:
    # c_00 of any unit-trace operator image
    return gamma_power(two_J, 0, -s) / (radius(two_J) * math.sqrt(two_J + 1))


def _renormalize(F: PhaseSpaceFunction) -> PhaseSpaceFunction:
    c00 = F.body.coeff(0, 0)
    if abs(c00) < 1e-300:
        raise ZeroDivisionError("zero trace; cannot renormalize")
    return PhaseSpaceFunction(F.two_J, F.s, F.body.scale(_trace_coefficient(F.two_J, F.s) / c00))


def _planar_star(two_J: int, s: float):
    """First-order planar star product acting on callables of alpha."""
    a, b = (1 - s) / 2.0, (1 + s) / 2.0
    h = FD_STEP
    stencil = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))

    def dx(f, z):
        return sum(w * f(z + k * h) for k, w in stencil) / h

    def dy(f, z):
        return sum(w * f(z + 1j * k * h) for k, w in stencil) / h

    def D(f, z):
        return 0.5 * (dx(f, z) - 1j * dy(f, z))

    def Dbar(f, z):
        return 0.5 * (dx(f, z) + 1j * dy(f, z))

    def star(f, g):
        def out(z):
            return f(z) * g(z) + a * Dbar(f, z) * D(g, z) - b * D(f, z) * Dbar(g, z)
        return out

    return star


def _as_alpha_function(body: SpinWeightedExpansion, two_J: int, conj: bool = False):
    def fun(z):
        theta, phi = alpha_to_sphere(z, two_J)
        v = evaluate(body, theta, phi)
        return np.conj(v) if conj else v
    return fun


def excited_coherent(two_J: int, s: float, theta0: float, phi0: float = 0.0,
                     method: str = "exact") -> PhaseSpaceFunction:
    """Image of K|J,J><J,J|K^dagger.

    exact          F_K * F_up * conj(F_K) with the exact star product
    approx_eth     first-order eth-expansion of the star product on the
                   Gaussian spin-up function
    approx_planar  first-order planar form on the plane alpha, finite
                   differences, then projected back onto ranks <= 2J

    Approximate results are rescaled to unit trace.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    FK = k_phase(two_J, s, theta0, phi0)
    FKc = PhaseSpaceFunction(two_J, s, FK.body.conj())
    if method == "exact":
        up = spin_up_phase(two_J, s)
        return star_general(FK, star_general(up, FKc))
    up = spin_up_phase(two_J, s, gaussian=True)
    if method == "approx_eth":
        inner = star_approx_general(up, FKc, 1)
        return _renormalize(star_approx_general(FK, inner, 1))
    star = _planar_star(two_J, s)
    fk = _as_alpha_function(FK.body, two_J)
    fkc = _as_alpha_function(FK.body, two_J, conj=True)
    g = _as_alpha_function(up.body, two_J)
    result = star(fk, star(g, fkc))
    theta, w, phi = quadrature_grid(two_J, extra=2 * two_J + 16)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    values = result(sphere_to_alpha(T, P, two_J))
    body = analyze(values, theta, w, len(phi), two_J)
    return _renormalize(PhaseSpaceFunction(two_J, s, body))


# Dicke states from ladder functions ---------------------------------------------

@dataclass
class LadderResult:
    function: PhaseSpaceFunction
    scale: complex  # ladder image = scale * exact image
    residual: float


def _fit_scale(F: PhaseSpaceFunction, ref: PhaseSpaceFunction):
    x, y = ref.body, F.body
    keys = set(x.coeffs) | set(y.coeffs)
    xv = np.array([x.coeff(*k) for k in keys])
    yv = np.array([y.coeff(*k) for k in keys])
    scale = complex(np.vdot(xv, yv) / np.vdot(xv, xv))
    resid = float(np.max(np.abs(yv - scale * xv), initial=0.0))
    return scale, resid


def ladder_projector(two_J: int, s: float, m1: float, m2: float) -> LadderResult:
    """Apply K-ladder functions to the spin-up image to reach |J,m1><J,m2|.

    With K = J_-/sqrt(2J) (theta0 = 0), F_K^{*(J-m1)} * F_up * conj(F_K)^{*(J-m2)}
    is proportional to the image of |J,m1><J,m2|.  The function is returned
    divided by the fitted constant, which is reported with the residual.
    """
    J = two_J / 2.0
    n1, n2 = int(round(J - m1)), int(round(J - m2))
    _index(two_J, m1), _index(two_J, m2)
    FK = k_phase(two_J, s, 0.0, 0.0)
    FKc = PhaseSpaceFunction(two_J, s, FK.body.conj())
    F = spin_up_phase(two_J, s)
    for _ in range(n1):
        F = star_general(FK, F)
    for _ in range(n2):
        F = star_general(F, FKc)
    ref = projector_phase(two_J, s, m1, m2)
    scale, resid = _fit_scale(F, ref)
    if abs(scale) < 1e-300:
        raise ZeroDivisionError("ladder image vanished")
    out = PhaseSpaceFunction(two_J, s, F.body.scale(1.0 / scale))
    return LadderResult(out, scale, resid)


def ladder_dicke(two_J: int, s: float, m: float) -> LadderResult:
    """(KK-bar)^{J-m} applied to spin-up; the result is rescaled to unit trace."""
    return ladder_projector(two_J, s, m, m)


# state specifications --------------------------------------------------------

STATE_KINDS = ("spin_up", "coherent", "excited_coherent", "dicke", "projector")


@dataclass
class StateSpec:
    kind: str
    two_j: int
    s: float = 0.0
    theta0: float = 0.0
    phi0: float = 0.0
    m1: float | None = None
    m2: float | None = None
    method: str = "exact"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown state fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


def build_state(spec: StateSpec) -> PhaseSpaceFunction:
    t, s = spec.two_j, spec.s
    if spec.kind == "spin_up":
        return spin_up_phase(t, s)
    if spec.kind == "coherent":
        return coherent_phase(t, s, spec.theta0, spec.phi0)
    if spec.kind == "excited_coherent":
        return excited_coherent(t, s, spec.theta0, spec.phi0, spec.method)
    if spec.kind == "dicke":
        if spec.m1 is None:
            raise ValueError("dicke state needs m1")
        return dicke_phase(t, s, spec.m1)
    if spec.kind == "projector":
        if spec.m1 is None or spec.m2 is None:
            raise ValueError("projector needs m1 and m2")
        return projector_phase(t, s, spec.m1, spec.m2)
    raise ValueError(f"unknown state kind {spec.kind!r}; choose from {STATE_KINDS}")


def state_operator(spec: StateSpec) -> SpinOperator:
    """Hilbert-space operator for ``spec`` (the oracle for ``build_state``)."""
    t = spec.two_j
    if spec.kind == "spin_up":
        return ket_bra(t, t / 2, t / 2)
    if spec.kind == "coherent":
        R = rotation_matrix(t, spec.theta0, spec.phi0)
        return R @ ket_bra(t, t / 2, t / 2) @ R.dag()
    if spec.kind == "excited_coherent":
        K = k_operator(t, spec.theta0, spec.phi0)
        return K @ ket_bra(t, t / 2, t / 2) @ K.dag()
    if spec.kind == "dicke":
        return ket_bra(t, spec.m1, spec.m1)
    if spec.kind == "projector":
        return ket_bra(t, spec.m1, spec.m2)
    raise ValueError(f"unknown state kind {spec.kind!r}")


__all__ = [
    "METHODS", "STATE_KINDS", "StateSpec", "LadderResult", "build_state", "state_operator",
    "spin_up_phase", "coherent_phase", "dicke_phase", "is_real_function", "projector_phase", "ket_bra",
    "normalization_N", "k_operator", "k_phase", "excited_coherent", "ladder_projector", "ladder_dicke",
    "m_values",
]
