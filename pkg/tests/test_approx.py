import math

import mpmath
import numpy as np
import pytest
from conftest import random_matrix
from hypothesis import given
from hypothesis import strategies as st

from spinphase.approx import (ConvergenceError, ConvergenceReport, alpha_to_sphere, c_nm, delta_approx_apply,
                              diff_l2_error, fd_weights, fit_slope, gamma_approx, gamma_study, lambda_approx,
                              lambda_error, lambda_study, planar_fd_error, sphere_to_alpha, star_approx_general,
                              star_p_approx, star_q_approx, wirtinger_fd_mp)
from spinphase.expansion import SpinWeightedExpansion, distance, multiply
from spinphase.starprod import delta_apply, lambda_coeff, poisson_bracket_s, star_general, star_p, star_q
from spinphase.states import coherent_phase
from spinphase.tensorops import PhaseSpaceFunction, SpinOperator, gamma, op_to_phase


def image(two_J, s, seed, hermitian=False):
    rng = np.random.default_rng(seed)
    return op_to_phase(SpinOperator(two_J, random_matrix(rng, two_J + 1, hermitian)), s)


# coefficient asymptotics -----------------------------------------------------------

def test_lambda_approx_exact_for_first_two():
    for t in range(1, 30):
        assert lambda_error(t, 0, -1) == 0.0
        assert lambda_error(t, 1, -1) == 0.0
        assert lambda_error(t, 0, 1) == pytest.approx(abs(t / (t + 1) - 1), rel=1e-14)
    assert lambda_approx(4, 3, 1) == pytest.approx(-1 / (6 * 64))
    assert lambda_approx(4, 3, -1) == pytest.approx(1 / (6 * 64))


@pytest.mark.parametrize("eta", [2, 5, 10])
@pytest.mark.parametrize("s_pm", [-1, 1])
def test_lambda_slope_asymptotic(eta, s_pm):
    sweep = tuple(int(x) for x in np.geomspace(200, 20000, 7))
    rep = lambda_study(eta, s_pm, sweep)
    assert rep.slope == pytest.approx(-(eta + 1), abs=0.3)


def test_gamma_approx_examples():
    assert gamma_approx(10, 0) == 1.0
    v = [gamma_approx(20, j) for j in range(10)]
    assert all(a > b for a, b in zip(v, v[1:]))
    assert abs(float(gamma(200, 0)) - 1) < 1 / 200


@pytest.mark.parametrize("j", [2, 5, 12])
def test_gamma_slope(j):
    sweep = tuple(int(x) for x in np.geomspace(2000, 20000, 6))
    assert gamma_study(j, sweep).slope == pytest.approx(-1.0, abs=0.2)


def test_delta_approx_identity_and_scalar():
    F = image(6, 0.0, 1)
    assert distance(delta_approx_apply(F, 1.0).body, F.body) == 0
    G = PhaseSpaceFunction(6, 0.0, SpinWeightedExpansion.basis(3, 1))
    out = delta_approx_apply(G, 0.0)
    assert out.body.coeff(3, 1) == pytest.approx(math.exp(-12 / 12.0))
    assert out.body.coeff(3, 1) == pytest.approx(gamma_approx(6, 3), rel=1e-15)


def test_delta_approx_error_is_order_inverse_J():
    errs, Js = [], [20, 40, 80, 160, 320]
    for t in Js:
        c = {(j, 0): 1.0 for j in range(min(t, 6) + 1)}
        F = PhaseSpaceFunction(t, 0.5, SpinWeightedExpansion(c))
        errs.append(distance(delta_apply(F, 0.5).body, delta_approx_apply(F, 0.5).body))
    slope = np.polyfit(np.log(Js), np.log(errs), 1)[0]
    assert slope == pytest.approx(-1, abs=0.1)


def test_delta_approx_commutes_with_exact():
    F = image(5, 0.0, 3)
    a = delta_apply(delta_approx_apply(F, 0.5), 1.5)
    b = delta_approx_apply(delta_apply(F, 1.5), 0.5)
    assert distance(a.body, b.body) < 1e-13


# c_nm ------------------------------------------------------------------------------

def test_c_nm_values():
    assert c_nm(0.3, 0, 0) == 1.0
    assert c_nm(0.0, 1, 0) == -0.5
    assert c_nm(0.0, 1, 1) == 0.5
    with pytest.raises(ValueError):
        c_nm(0.0, 1, 2)


@given(st.floats(-1, 1), st.integers(0, 8))
def test_c_nm_binomial_sum(s, n):
    # sum_m c_nm x^m y^(n-m) = (a x + b y)^n / n!
    x, y = 0.7, -1.3
    tot = sum(c_nm(s, n, m) * x ** m * y ** (n - m) for m in range(n + 1))
    a, b = (1 - s) / 2, -(1 + s) / 2
    assert tot == pytest.approx((a * x + b * y) ** n / math.factorial(n), rel=1e-12, abs=1e-14)


def test_c_nm_collapses_at_q():
    for n in range(6):
        assert c_nm(-1.0, n, n) == pytest.approx(1 / math.factorial(n))
        assert all(c_nm(-1.0, n, m) == 0 for m in range(n))


# approximate star products ----------------------------------------------------------

def test_order_zero_is_projected_product():
    f, g = image(4, -1.0, 1), image(4, -1.0, 2)
    ref = multiply(f.body, g.body).truncate(4)
    assert distance(star_q_approx(f, g, 0).body, ref) < 1e-13
    f, g = image(4, 0.2, 1), image(4, 0.2, 2)
    assert distance(star_approx_general(f, g, 0).body, ref.__class__(
        {k: c for k, c in multiply(f.body, g.body).truncate(4).coeffs.items()})) < 1e-13


@given(st.integers(1, 4), st.integers(0, 6), st.integers(0, 2 ** 32 - 1))
def test_general_at_minus_one_equals_q_approx(two_J, order, seed):
    f, g = image(two_J, -1.0, seed), image(two_J, -1.0, seed + 1)
    assert distance(star_approx_general(f, g, order).body, star_q_approx(f, g, order).body) < 1e-11


def test_general_at_plus_one_equals_p_approx():
    for order in range(5):
        f, g = image(3, 1.0, order), image(3, 1.0, order + 10)
        assert distance(star_approx_general(f, g, order).body, star_p_approx(f, g, order).body) < 1e-11


def test_full_order_differs_only_by_lambda_error():
    # with all orders included the only difference from the exact Q product is lambda_n - approx
    t = 6
    f, g = image(t, -1.0, 4), image(t, -1.0, 5)
    ex = star_q(f, g).body
    ap = star_q_approx(f, g, t).body
    from spinphase.expansion import eth, eth_bar
    corr = SpinWeightedExpansion.zero(0, t)
    fa, gb = f.body, g.body
    for n in range(t + 1):
        dl = float(lambda_coeff(t, n, -1)) - lambda_approx(t, n, -1)
        corr = corr + multiply(fa, gb, max_rank=t).scale(dl)
        fa, gb = eth_bar(fa), eth(gb)
    assert distance(ex - ap, corr) < 1e-11


@pytest.mark.parametrize("seed", range(3))
def test_error_shrinks_with_order(seed):
    t = 8
    f, g = image(t, -1.0, seed), image(t, -1.0, seed + 100)
    ex = star_q(f, g).body
    errs = [(star_q_approx(f, g, n).body - ex).l2_norm() for n in range(t + 1)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_first_order_wigner_term_is_poisson_bracket():
    t = 4
    f, g = image(t, 0.0, 7, True), image(t, 0.0, 8, True)
    first = star_approx_general(f, g, 1).body - star_approx_general(f, g, 0).body
    pb = poisson_bracket_s(f, g).body.truncate(t)
    assert distance(first, pb.scale(-0.5j)) < 1e-12


def test_rejects_bad_input():
    f = image(2, 0.0, 1)
    with pytest.raises(ValueError):
        star_approx_general(f, image(2, 0.5, 1), 1)
    with pytest.raises(ValueError):
        star_approx_general(f, f, -1)


def test_coherent_state_error_decays():
    errs, sweep = [], (6, 8, 12, 16, 20)
    for t in sweep:
        f = coherent_phase(t, 0.0, 0.6, 0.3)
        g = coherent_phase(t, 0.0, 0.9, 1.1)
        errs.append((star_general(f, g).body - star_approx_general(f, g, 2 * t).body).l2_norm())
    slope = np.polyfit(np.log(sweep), np.log(errs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.3)


# planar coordinates / finite differences ---------------------------------------------

@given(st.floats(0.01, 3.1), st.floats(-3.1, 3.1), st.integers(1, 200))
def test_alpha_round_trip(theta, phi, two_J):
    a = sphere_to_alpha(theta, phi, two_J)
    t2, p2 = alpha_to_sphere(a, two_J)
    assert t2 == pytest.approx(theta, rel=1e-12)
    assert np.exp(1j * p2) == pytest.approx(np.exp(1j * phi), abs=1e-12)


def test_fd_weights_exact_on_polynomials():
    w = fd_weights(2, 3)
    vals = [sum(float(c) * (k - 3) ** p for k, c in enumerate(w)) for p in range(7)]
    assert vals[2] == pytest.approx(2.0)
    assert all(abs(v) < 1e-12 for i, v in enumerate(vals) if i != 2)


def test_wirtinger_derivative_of_polynomial():
    # f = alpha^2 alpha*^1: d/dalpha = 2 alpha alpha*, d/dalpha* = alpha^2
    fun = lambda x, y: mpmath.mpc(x, y) ** 2 * mpmath.mpc(x, -y)
    x0, y0 = 0.4, -0.7
    a = complex(x0, y0)
    assert complex(wirtinger_fd_mp(fun, x0, y0, 1, False, 1e-3)) == pytest.approx(2 * a * a.conjugate(), abs=1e-12)
    assert complex(wirtinger_fd_mp(fun, x0, y0, 1, True, 1e-3)) == pytest.approx(a * a, abs=1e-12)
    assert complex(wirtinger_fd_mp(fun, x0, y0, 2, False, 1e-3)) == pytest.approx(2 * a.conjugate(), abs=1e-10)


def test_planar_eta_zero_is_exact():
    # no derivative is taken, so every error sits below the fit floor
    with pytest.raises(ConvergenceError, match="0 usable"):
        planar_fd_error(0, 3, 1, two_J_sweep=(16, 32, 64, 128, 256))


def test_planar_errors_decay():
    rep = planar_fd_error(-4, 4, 4, two_J_sweep=(16, 32, 64, 128, 256, 512))
    assert rep.errors[-1] < rep.errors[0]
    assert rep.slope < 0


@pytest.mark.parametrize("n", [2, 3])
def test_diff_l2_decay(n):
    sweep = (16, 32, 64, 128, 256)
    errs = [diff_l2_error(n, t) for t in sweep]
    slope = np.polyfit(np.log(sweep), np.log(errs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.2)


# reports ---------------------------------------------------------------------------

def test_fit_slope_and_floor():
    Js = [10, 20, 40, 80, 160]
    errs = [3.0 * (t / 2) ** -2 for t in Js]
    slope, intercept, used = fit_slope(Js, errs)
    assert slope == pytest.approx(-2.0) and used == 5
    with pytest.raises(ConvergenceError):
        fit_slope(Js, [1e-13] * 5)


def test_report_csv():
    rep = ConvergenceReport("x", [10, 20, 40, 80, 160], [1.0, 0.5, 0.25, 0.125, 0.0625], expected=-1.0,
                            tolerance=0.1).fit()
    text = rep.to_csv()
    assert text.startswith("# {")
    assert '"slope": -1.0' in text.splitlines()[0] or '"slope": -0.99999' in text.splitlines()[0]
    assert text.splitlines()[1] == "two_j,error"
    assert rep.ok
