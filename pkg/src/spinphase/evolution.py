"""Moyal-equation time evolution of phase-space functions.

d rho / dt = -i (H * rho - rho * H) with either the exact star product or the
order-n truncated expansion.  The right-hand side is linear in rho, so it is
assembled once as a matrix on the coefficient vector (basis order of
``tensorops.basis_index``) and integrated with fixed-step RK4.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .approx import star_approx_general
from .starprod import _from_vector, _to_vector, star_general
from .tensorops import PhaseSpaceFunction, SpinOperator, basis_index


class IntegrationError(RuntimeError):
    pass


def _parse_mode(mode):
    """'exact' -> None; an int, 'order(n)' or 'n' -> n."""
    if mode == "exact" or mode is None:
        return None
    if isinstance(mode, (int, np.integer)) and not isinstance(mode, bool):
        n = int(mode)
    else:
        text = str(mode).strip()
        if text.startswith("order(") and text.endswith(")"):
            text = text[6:-1]
        try:
            n = int(text)
        except ValueError:
            raise ValueError(f"mode must be 'exact' or an order, got {mode!r}") from None
    if n < 0:
        raise ValueError("order must be non-negative")
    return n


def _check_pair(H: PhaseSpaceFunction, rho: PhaseSpaceFunction):
    if H.two_J != rho.two_J or abs(H.s - rho.s) > 1e-12:
        raise ValueError(f"metadata mismatch: (2J={H.two_J}, s={H.s}) vs (2J={rho.two_J}, s={rho.s})")


def _star(mode):
    n = _parse_mode(mode)
    if n is None:
        return star_general
    return lambda f, g: star_approx_general(f, g, n)


def moyal_rhs(H: PhaseSpaceFunction, rho: PhaseSpaceFunction, mode="exact") -> PhaseSpaceFunction:
    """-i (H * rho) + i (rho * H)."""
    _check_pair(H, rho)
    rho = PhaseSpaceFunction(rho.two_J, H.s, rho.body)
    star = _star(mode)
    diff = star(H, rho).body - star(rho, H).body
    return PhaseSpaceFunction(H.two_J, H.s, diff.scale(-1j))


def moyal_generator(H: PhaseSpaceFunction, mode="exact") -> np.ndarray:
    """Matrix L with vec(moyal_rhs(H, rho)) = L vec(rho)."""
    two_J, s = H.two_J, H.s
    idx = basis_index(two_J)
    L = np.zeros((len(idx), len(idx)), dtype=complex)
    for k in range(len(idx)):
        e = np.zeros(len(idx), dtype=complex)
        e[k] = 1.0
        L[:, k] = _to_vector(moyal_rhs(H, _from_vector(two_J, s, e), mode))
    return L


@dataclass
class Trajectory:
    times: list
    states: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> PhaseSpaceFunction:
        return self.states[-1]

    def to_csv(self) -> str:
        """Long format t,j,m,re,im with a '# {json}' metadata line."""
        head = dict(self.meta)
        if self.states:
            head.update({"two_j": self.states[0].two_J, "s": self.states[0].s})
        head["steps"] = len(self.times) - 1
        buf = io.StringIO()
        buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
        buf.write("t,j,m,re,im\n")
        for t, F in zip(self.times, self.states):
            for (j, m), c in F.body.items():
                buf.write(f"{t!r},{j},{m},{c.real!r},{c.imag!r}\n")
        return buf.getvalue()


def evolve_rk4(H: PhaseSpaceFunction, rho0: PhaseSpaceFunction, t_end: float, dt: float,
               mode="exact") -> Trajectory:
    """Classic RK4 on the coefficient vector, every step recorded."""
    _check_pair(H, rho0)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    two_J, s = H.two_J, H.s
    meta = {"mode": "exact" if _parse_mode(mode) is None else f"order({_parse_mode(mode)})", "dt": dt}
    if t_end == 0:
        return Trajectory([0.0], [rho0], meta)
    steps = max(1, int(round(t_end / dt)))
    h = t_end / steps
    L = moyal_generator(H, mode)
    y = _to_vector(rho0)
    times, states = [0.0], [_from_vector(two_J, s, y)]
    with np.errstate(over="raise", invalid="raise"):
        for k in range(1, steps + 1):
            try:
                k1 = L @ y
                k2 = L @ (y + 0.5 * h * k1)
                k3 = L @ (y + 0.5 * h * k2)
                k4 = L @ (y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            except FloatingPointError as exc:
                raise IntegrationError(f"overflow at step {k} (t={k * h!r})") from exc
            if not np.all(np.isfinite(y)):
                raise IntegrationError(f"non-finite coefficients at step {k} (t={k * h!r})")
            times.append(k * h)
            states.append(_from_vector(two_J, s, y))
    return Trajectory(times, states, meta)


def hilbert_propagate(H_op: SpinOperator, rho0_op: SpinOperator, t: float) -> SpinOperator:
    """exp(-iHt) rho0 exp(iHt) through the eigendecomposition of H."""
    H = H_op.entries
    if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-10:
        raise ValueError("H is not Hermitian")
    if H_op.two_J != rho0_op.two_J:
        raise ValueError("operators act on different spins")
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    U = (V * np.exp(-1j * w * t)) @ V.conj().T
    return SpinOperator(H_op.two_J, U @ rho0_op.entries @ U.conj().T)


def rk4_order(H: PhaseSpaceFunction, rho0: PhaseSpaceFunction, reference: PhaseSpaceFunction,
              t_end: float = 1.0, dts=(4e-3, 2e-3, 1e-3, 5e-4), R: float = 1.0):
    """Log-log slope of the final-time L2 error against dt."""
    errs = []
    for dt in dts:
        final = evolve_rk4(H, rho0, t_end, dt).final
        # raw vectors: expansion subtraction would prune sub-1e-14 differences
        errs.append(R * float(np.linalg.norm(_to_vector(final) - _to_vector(reference))))
    slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    return slope, errs


__all__ = ["IntegrationError", "Trajectory", "moyal_rhs", "moyal_generator", "evolve_rk4",
           "hilbert_propagate", "rk4_order"]
