"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time

import numpy as np
import pytest

from spinphase.approx import (diff_l2_study, excited_state_study, gamma_study, lambda_study,
                              planar_fd_error)
from spinphase.coupled import coupled_op_to_phase, coupled_star
from spinphase.evolution import evolve_rk4, hilbert_propagate, moyal_rhs, rk4_order
from spinphase.expansion import SpinWeightedExpansion, distance, evaluate, multiply
from spinphase.starprod import (delta_apply, delta_polynomial, lambda_coeff, project, projection_polynomial,
                                spin_half_constants, star_general, star_spin_half, star_table)
from spinphase.states import (StateSpec, build_state, coherent_phase, dicke_phase, excited_coherent, k_phase,
                              projector_phase, spin_up_phase, state_operator)
from spinphase.tensorops import PhaseSpaceFunction, SpinOperator, gamma, op_to_phase, radius, tensor_op

S_VALUES = (-1.0, -0.5, 0.0, 0.5, 1.0)
SPINS = (1, 2, 3, 4)  # 2J for J = 1/2 .. 2


def herm(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return X + X.conj().T


def pairs(two_J, s, count=20, seed=0):
    rng = np.random.default_rng(1000 * two_J + seed)
    for _ in range(count):
        A, B = herm(rng, two_J + 1), herm(rng, two_J + 1)
        yield A, B, op_to_phase(SpinOperator(two_J, A), s), op_to_phase(SpinOperator(two_J, B), s)


def criterion_1():
    t0 = time.perf_counter()
    worst = 0.0
    for two_J in SPINS:
        for s in S_VALUES:
            for A, B, FA, FB in pairs(two_J, s):
                ref = op_to_phase(SpinOperator(two_J, A @ B), s)
                worst = max(worst, distance(star_general(FA, FB).body, ref.body))
    dt = time.perf_counter() - t0
    return worst < 1e-9 and dt < 60, f"max |star - image(AB)| = {worst:.2e} (tol 1e-9), {dt:.1f} s (limit 60 s)"


def criterion_2():
    worst = 0.0
    for two_J in SPINS:
        for s in S_VALUES:
            for _, _, FA, FB in pairs(two_J, s, seed=1):
                q = star_general(FA, FB, "via_Q").body
                others = [star_table(FA, FB).body, star_general(FA, FB, "via_P").body]
                if two_J == 1:
                    others.append(star_spin_half(FA, FB).body)
                worst = max(worst, *(distance(q, o) for o in others))
    return worst < 1e-9, f"max route disagreement = {worst:.2e} (tol 1e-9)"


def _Y(j, m, eta=0):
    return SpinWeightedExpansion.basis(j, m, eta)


def criterion_3():
    d1 = multiply(_Y(3, 3), _Y(1, 0)).coeff(4, 3) - 1 / (2 * math.sqrt(3 * math.pi))
    w = multiply(_Y(3, 3, 1), _Y(1, 0, -1))
    d2 = w.coeff(3, 3) + 3 / (4 * math.sqrt(2 * math.pi))
    d3 = w.coeff(4, 3) - 1 / (4 * math.sqrt(2 * math.pi))
    const_err = max(abs(d1), abs(d2), abs(d3))
    rhs_err, y43_at_3 = 0.0, None
    for two_J in (3, 4, 6, 10):
        R = radius(two_J)
        H = op_to_phase(tensor_op(two_J, 3, 3), 0.0)
        rho = op_to_phase(tensor_op(two_J, 1, 0), 0.0)
        rate = -1j * 3 * math.sqrt(3) / math.sqrt(math.pi) * float(lambda_coeff(two_J, 1, 1)) / (
            R * R * float(gamma(two_J, 1)))
        ref = SpinWeightedExpansion({(3, 3): rate}, 0, 3)
        out = moyal_rhs(H, rho).body
        rhs_err = max(rhs_err, distance(out, ref))
        if two_J == 3:
            y43_at_3 = abs(star_general(H, rho).body.coeff(4, 3))
    ok = const_err < 1e-12 and rhs_err < 1e-10 and y43_at_3 == 0
    return ok, (f"constants err {const_err:.1e} (tol 1e-12), RHS err {rhs_err:.1e} over 2J in {{3,4,6,10}} "
                f"(tol 1e-10), Y43 at 2J=3: {y43_at_3}")


def criterion_4():
    N, a, b = spin_half_constants(0.0)
    err = max(abs(N - 1 / math.sqrt(2)), abs(a - 1 / (2 * math.sqrt(3))), abs(b - 1 / (2 * math.sqrt(3))))
    return err < 1e-12, f"N0={N!r}, a0={a!r}, b0={b!r}, max err {err:.1e} (tol 1e-12)"


def criterion_5():
    t0 = time.perf_counter()
    parts, ok = [], True

    def check(label, slope, expected, tol):
        nonlocal ok
        good = abs(slope - expected) <= tol
        ok &= good
        parts.append(f"{label} {slope:+.3f} ({expected:+g}+-{tol}) {'ok' if good else 'MISS'}")

    # sweeps are in 2J: J in [100, 1e4] and [1000, 1e4]
    lam_sweep = tuple(int(x) for x in np.geomspace(200, 20000, 7))
    for eta in (2, 5, 10):
        for s_pm in (-1, 1):
            check(f"lambda eta={eta} s={s_pm:+d}", lambda_study(eta, s_pm, lam_sweep).slope, -(eta + 1), 0.3)
    gam_sweep = tuple(int(x) for x in np.geomspace(2000, 20000, 7))
    for j in (2, 5, 12):
        check(f"gamma j={j}", gamma_study(j, gam_sweep).slope, -1.0, 0.2)
    check("planar eta=-4 j=4 m=4", planar_fd_error(-4, 4, 4).slope, -0.5, 0.2)
    for n in (2, 3, 4, 8):
        check(f"diff_l2 n={n}", diff_l2_study(n).slope, -1.0, 0.2)
    check("excited s=0", excited_state_study(0.0, "approx_eth").slope, -1.0, 0.3)
    dt = time.perf_counter() - t0
    ok &= dt < 300
    return ok, "; ".join(parts) + f"; {dt:.1f} s (limit 300 s)"


def criterion_6():
    worst = 0.0
    for two_J in SPINS:
        rng = np.random.default_rng(60 + two_J)
        H = SpinOperator(two_J, herm(rng, two_J + 1))
        v = rng.normal(size=two_J + 1) + 1j * rng.normal(size=two_J + 1)
        rho = SpinOperator(two_J, np.outer(v, v.conj()) / np.vdot(v, v))
        for s in S_VALUES:
            final = evolve_rk4(op_to_phase(H, s), op_to_phase(rho, s), 1.0, 1e-3).final
            ref = op_to_phase(hilbert_propagate(H, rho, 1.0), s)
            worst = max(worst, (final.body - ref.body).l2_norm(radius(two_J)))
    rng = np.random.default_rng(6)
    H = SpinOperator(2, 3 * herm(rng, 3))
    rho = SpinOperator(2, np.diag([1.0, 0.0, 0.0]).astype(complex))
    ref = op_to_phase(hilbert_propagate(H, rho, 1.0), 0.0)
    slope_dt, _ = rk4_order(op_to_phase(H, 0.0), op_to_phase(rho, 0.0), ref, R=radius(2))
    # error ~ dt^4, i.e. slope -4 against the number of steps 1/dt
    slope_steps = -slope_dt
    ok = worst < 1e-6 and abs(slope_steps + 4) <= 0.5
    return ok, (f"max L2 vs Hilbert propagation {worst:.2e} (tol 1e-6); RK4 error slope {slope_steps:+.3f} "
                f"vs steps 1/dt (= {slope_dt:+.3f} vs dt), expected -4+-0.5")


def _random_function(rng, two_J, s, top):
    d = {(j, m): rng.normal() + 1j * rng.normal() for j in range(top + 1) for m in range(-j, j + 1)}
    return PhaseSpaceFunction(two_J, s, SpinWeightedExpansion(d, 0, top))


def criterion_7():
    resid, agree = 0.0, 0.0
    for two_J in range(1, 9):
        rng = np.random.default_rng(70 + two_J)
        for s in S_VALUES:
            poly = delta_polynomial(two_J, s)
            resid = max(resid, poly.residual())
            F = _random_function(rng, two_J, (1 - s) / 2, two_J)
            agree = max(agree, distance(poly.apply(F).body, delta_apply(F, s).body))
        proj = projection_polynomial(two_J)
        resid = max(resid, proj.residual())
        G = _random_function(rng, two_J, 0.0, 2 * two_J)
        agree = max(agree, distance(proj.apply(G).body, project(G).body))
    ok = resid < 1e-8 and agree < 1e-8
    return ok, f"max Vandermonde residual {resid:.1e}, max diagonal vs polynomial {agree:.1e} (tol 1e-8), 2J <= 8"


def criterion_8():
    t0 = time.perf_counter()
    worst = 0.0
    for sites in ((1, 1), (1, 2), (2, 2)):
        dim = math.prod(t + 1 for t in sites)
        rng = np.random.default_rng(sum(sites))
        for s in S_VALUES:
            for _ in range(5):
                A, B = herm(rng, dim), herm(rng, dim)
                FA, FB = coupled_op_to_phase(A, sites, s), coupled_op_to_phase(B, sites, s)
                worst = max(worst, coupled_star(FA, FB).distance(coupled_op_to_phase(A @ B, sites, s)))
    dt = time.perf_counter() - t0
    return worst < 1e-9 and dt < 60, f"max two-site homomorphism error {worst:.2e} (tol 1e-9), {dt:.1f} s"


def criterion_9():
    worst = 0.0
    for two_J in range(1, 7):
        J = two_J / 2
        ms = [J - k for k in range(two_J + 1)]
        for s in S_VALUES:
            specs = [StateSpec("spin_up", two_J, s), StateSpec("coherent", two_J, s, 1.1, -0.6),
                     StateSpec("excited_coherent", two_J, s, 0.8, 2.4)]
            specs += [StateSpec("dicke", two_J, s, m1=m) for m in ms]
            specs += [StateSpec("projector", two_J, s, m1=a, m2=b) for a in ms for b in ms]
            for spec in specs:
                worst = max(worst, distance(build_state(spec).body, op_to_phase(state_operator(spec), s).body))
            kop = op_to_phase(state_operator(StateSpec("excited_coherent", two_J, s, 0.8, 2.4)), s)
            worst = max(worst, distance(excited_coherent(two_J, s, 0.8, 2.4).body, kop.body))
    theta = np.linspace(0, math.pi, 100)
    phi = np.linspace(0, 2 * math.pi, 100, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    qmin = math.inf
    for two_J in range(1, 7):
        for F in (spin_up_phase(two_J, -1.0), coherent_phase(two_J, -1.0, 1.1, -0.6),
                  excited_coherent(two_J, -1.0, 0.8, 2.4), dicke_phase(two_J, -1.0, two_J / 2 - 1)):
            qmin = min(qmin, float(evaluate(F.body, T, P).real.min()))
    ok = worst < 1e-10 and qmin >= -1e-10
    return ok, f"max constructor vs oracle {worst:.1e} (tol 1e-10), min Q on 100x100 grids {qmin:+.2e} (>= -1e-10)"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def report(n):
    t0 = time.perf_counter()
    ok, detail = CRITERIA[n]()
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} [{time.perf_counter() - t0:.1f} s] {detail}"
    return ok, line


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, line = report(n)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [report(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
