"""Large-J approximations of star products and their convergence diagnostics.

Planar coordinates: alpha = sqrt(J/2) theta exp(-i phi) with x + iy = alpha.
With the harmonic convention of ``expansion`` the ladder operators reduce to

    eth / sqrt(2J)     ~ -exp(-i phi) d/d(alpha)
    eth_bar / sqrt(2J) ~ -exp(+i phi) d/d(alpha*)

for large J at fixed alpha.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .angular import small_d_mp
from .expansion import SpinWeightedExpansion, eth, eth_bar, eth_power, evaluate, multiply
from .starprod import lambda_coeff
from .tensorops import PhaseSpaceFunction, gamma, radius


class ConvergenceError(RuntimeError):
    """A slope fit had too few usable points."""


# coefficient asymptotics -------------------------------------------------

def lambda_approx(two_J: int, eta: int, s_pm: int) -> float:
    """Leading large-J form (+-1)^eta / (eta! (2J)^eta) of the ladder coefficients."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    q = Fraction(1, math.factorial(eta) * two_J ** eta)
    if s_pm == 1 and eta % 2:
        q = -q
    elif s_pm not in (-1, 1):
        raise ValueError("s_pm must be -1 or +1")
    return float(q)


def lambda_error(two_J: int, eta: int, s_pm: int) -> float:
    """|exact - approx| for the ladder coefficients, computed exactly then rounded."""
    q = Fraction(1, math.factorial(eta) * two_J ** eta)
    if s_pm == 1 and eta % 2:
        q = -q
    return float(abs(_lambda_exact(two_J, eta, s_pm) - q))


def _lambda_exact(two_J, eta, s_pm) -> Fraction:
    sr = lambda_coeff(two_J, eta, s_pm)
    # lambda is rational; recover it from sign and radicand
    r = sr.radicand
    num, den = math.isqrt(r.numerator), math.isqrt(r.denominator)
    return sr.sign * Fraction(num, den)


def gamma_approx(two_J: int, j: int) -> float:
    """exp(-j(j+1)/(4J))."""
    return math.exp(-j * (j + 1) / (2.0 * two_J))


def delta_approx_apply(F: PhaseSpaceFunction, s_param: float) -> PhaseSpaceFunction:
    """Approximate Delta^{(s_param)}: rank j times exp(-(1-s_param) j(j+1)/(4J))."""
    two_J = F.two_J
    p = 1.0 - s_param
    body = F.body.map_ranks(lambda j: math.exp(-p * j * (j + 1) / (2.0 * two_J)))
    return PhaseSpaceFunction(two_J, F.s + s_param - 1.0, body)


def c_nm(s: float, n: int, m: int) -> float:
    """Coefficient of (eth_bar^m eth^{n-m} f)(eth^m eth_bar^{n-m} g) / (2J)^n."""
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    a, b = (1 - s) / 2.0, -(1 + s) / 2.0
    return a ** m * b ** (n - m) / (math.factorial(m) * math.factorial(n - m))


# approximate star products ----------------------------------------------------

def _approx_ladder(f: PhaseSpaceFunction, g: PhaseSpaceFunction, order: int, sign: int) -> SpinWeightedExpansion:
    two_J = f.two_J
    left = eth_bar if sign == -1 else eth
    right = eth if sign == -1 else eth_bar
    acc = SpinWeightedExpansion.zero(0, two_J)
    fa, gb = f.body, g.body
    for n in range(order + 1):
        if fa.is_empty() or gb.is_empty():
            break
        coef = (1.0 if sign == -1 else (-1.0) ** n) / (math.factorial(n) * two_J ** n)
        acc = acc + multiply(fa, gb, max_rank=two_J).scale(coef)
        fa, gb = left(fa), right(gb)
    return acc


def star_q_approx(f: PhaseSpaceFunction, g: PhaseSpaceFunction, order: int) -> PhaseSpaceFunction:
    """Q-type ladder sum with the large-J coefficients 1/(n!(2J)^n)."""
    if f.two_J != g.two_J:
        raise ValueError("spin mismatch")
    if order < 0:
        raise ValueError("order must be non-negative")
    return PhaseSpaceFunction(f.two_J, f.s, _approx_ladder(f, g, order, -1))


def star_p_approx(f: PhaseSpaceFunction, g: PhaseSpaceFunction, order: int) -> PhaseSpaceFunction:
    """P-type ladder sum with the large-J coefficients (-1)^n/(n!(2J)^n)."""
    if f.two_J != g.two_J:
        raise ValueError("spin mismatch")
    if order < 0:
        raise ValueError("order must be non-negative")
    return PhaseSpaceFunction(f.two_J, f.s, _approx_ladder(f, g, order, 1))


def _word_factor(j: int, ops) -> float:
    """Scalar by which a word of eth (+1) / eth_bar (-1) acts on Y_{jm}, applied left to right."""
    eta, v = 0, 1.0
    for op in ops:
        if op > 0:
            v *= math.sqrt(max((j - eta) * (j + eta + 1), 0))
        else:
            v *= -math.sqrt(max((j + eta) * (j - eta + 1), 0))
        eta += op
        if v == 0.0:
            return 0.0
    return v


@lru_cache(maxsize=64)
def _word_tables(order: int, top: int):
    """L[n, m, j] for eth_bar^m eth^{n-m} and Rt[n, m, j] for eth^m eth_bar^{n-m} on rank j."""
    L = np.zeros((order + 1, order + 1, top + 1))
    Rt = np.zeros_like(L)
    for n in range(order + 1):
        for m in range(n + 1):
            for j in range(top + 1):
                L[n, m, j] = _word_factor(j, [1] * (n - m) + [-1] * m)
                Rt[n, m, j] = _word_factor(j, [-1] * (n - m) + [1] * m)
    L.setflags(write=False)
    Rt.setflags(write=False)
    return L, Rt


def star_approx_general(f: PhaseSpaceFunction, g: PhaseSpaceFunction, order: int) -> PhaseSpaceFunction:
    """Approximate star product for any s, truncated at total derivative order ``order``.

    Sum over n <= order, m <= n of c_nm(s)/(2J)^n (eth_bar^m eth^{n-m} f)(eth^m eth_bar^{n-m} g).
    On weight-0 input every word only rescales each rank, so all terms with the
    same left weight w = n - 2m are merged and one product is formed per
    (w, rank of g).
    """
    if f.two_J != g.two_J or f.s != g.s:
        raise ValueError("operands differ in J or s")
    if order < 0:
        raise ValueError("order must be non-negative")
    two_J, s = f.two_J, f.s
    if f.body.is_empty() or g.body.is_empty():
        return PhaseSpaceFunction(two_J, s, SpinWeightedExpansion.zero(0, two_J))
    top = max(f.body.max_rank, g.body.max_rank)
    L, Rt = _word_tables(order, top)
    coef = np.zeros((order + 1, order + 1))
    for n in range(order + 1):
        for m in range(n + 1):
            coef[n, m] = c_nm(s, n, m) / two_J ** n
    g_by_rank: dict = {}
    for (j, mm), c in g.body.coeffs.items():
        g_by_rank.setdefault(j, {})[(j, mm)] = c
    f_ranks = sorted(f.body.ranks())
    wmax = min(order, max(f_ranks), max(g_by_rank))
    acc = SpinWeightedExpansion.zero(0, two_J)
    for w in range(-wmax, wmax + 1):
        pairs = [(n, (n - w) // 2) for n in range(abs(w), order + 1, 1) if (n - w) % 2 == 0]
        pairs = [(n, m) for n, m in pairs if 0 <= m <= n and coef[n, m] != 0]
        if not pairs:
            continue
        ns, ms = np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
        cw = coef[ns, ms]
        for jg, gpart in sorted(g_by_rank.items()):
            if jg < abs(w):
                continue
            # per-rank scalar on the left: sum over (n, m) of c * L(j_f) * Rt(j_g)
            scal = (cw * Rt[ns, ms, jg]) @ L[ns, ms, :]
            left = {(j, mm): c * scal[j] for (j, mm), c in f.body.coeffs.items() if j >= abs(w) and scal[j] != 0}
            if not left:
                continue
            lf = SpinWeightedExpansion(left, w, f.body.max_rank)
            rg = SpinWeightedExpansion(gpart, -w, jg)
            acc = acc + multiply(lf, rg, max_rank=two_J)
    return PhaseSpaceFunction(two_J, s, acc)


# planar coordinates and finite differences -----------------------------------

def alpha_to_sphere(alpha, two_J: int):
    """(theta, phi) for alpha = sqrt(J/2) theta exp(-i phi)."""
    alpha = np.asarray(alpha, dtype=complex)
    scale = math.sqrt(two_J / 4.0)
    return np.abs(alpha) / scale, -np.angle(alpha)


def sphere_to_alpha(theta, phi, two_J: int):
    return math.sqrt(two_J / 4.0) * np.asarray(theta) * np.exp(-1j * np.asarray(phi))


@lru_cache(maxsize=None)
def fd_weights(deriv: int, half_width: int, dps: int = 50):
    """Central finite-difference weights on offsets -P..P for the given derivative."""
    P = half_width
    with mpmath.workdps(dps):
        offs = list(range(-P, P + 1))
        n = len(offs)
        V = mpmath.matrix(n, n)
        for r in range(n):
            for c, k in enumerate(offs):
                V[r, c] = mpmath.mpf(k) ** r
        rhs = mpmath.matrix([mpmath.factorial(deriv) if r == deriv else 0 for r in range(n)])
        w = mpmath.lu_solve(V, rhs)
        return tuple(w[k] for k in range(n))


def _half_width(deriv: int) -> int:
    # 4th-order accurate central stencils (at least)
    return 0 if deriv == 0 else deriv // 2 + 2


def wirtinger_fd_mp(fun, x0, y0, n: int, conj: bool, h, dps: int = 50):
    """n-th Wirtinger derivative of ``fun(x, y)`` (mp-valued) at (x0, y0).

    d/d(alpha) = (d/dx - i d/dy)/2 and d/d(alpha*) = (d/dx + i d/dy)/2.
    Mixed partials use tensor-product central stencils in extended precision.
    """
    with mpmath.workdps(dps):
        x0, y0, h = mpmath.mpf(x0), mpmath.mpf(y0), mpmath.mpf(h)
        P = max(_half_width(a) for a in range(n + 1))
        vals = {}

        def val(kx, ky):
            if (kx, ky) not in vals:
                vals[(kx, ky)] = fun(x0 + kx * h, y0 + ky * h)
            return vals[(kx, ky)]

        unit = mpmath.mpc(0, 1) if conj else mpmath.mpc(0, -1)
        total = mpmath.mpc(0)
        for k in range(n + 1):
            a, b = n - k, k
            wa, wb = fd_weights(a, _half_width(a), dps), fd_weights(b, _half_width(b), dps)
            pa, pb = _half_width(a), _half_width(b)
            part = mpmath.mpc(0)
            for ia, ca in enumerate(wa):
                if ca == 0:
                    continue
                for ib, cb in enumerate(wb):
                    if cb == 0:
                        continue
                    part += ca * cb * val(ia - pa, ib - pb)
            total += mpmath.binomial(n, k) * unit ** k * part / h ** n
        return total / mpmath.mpf(2) ** n


def _harmonic_mp(j, m, theta, phi):
    pre = mpmath.sqrt(mpmath.mpf(2 * j + 1) / (4 * mpmath.pi))
    sign = -1 if m % 2 else 1
    return sign * pre * mpmath.expj(m * phi) * small_d_mp(2 * j, -2 * m, 0, theta)


# convergence reports -----------------------------------------------------

@dataclass
class ConvergenceReport:
    """Errors over a sweep in J with a log-log least-squares slope."""

    study: str
    two_J: list
    errors: list
    slope: float = float("nan")
    intercept: float = float("nan")
    expected: float | None = None
    tolerance: float | None = None
    params: dict = field(default_factory=dict)
    used: int = 0

    def fit(self, floor: float = 1e-12, min_points: int = 5):
        self.slope, self.intercept, self.used = fit_slope(self.two_J, self.errors, floor, min_points)
        return self

    @property
    def ok(self) -> bool:
        if self.expected is None or self.tolerance is None:
            return True
        return abs(self.slope - self.expected) <= self.tolerance

    def to_csv(self) -> str:
        head = {"study": self.study, "slope": self.slope, "intercept": self.intercept, "points": self.used}
        if self.expected is not None:
            head["expected"] = self.expected
            head["tolerance"] = self.tolerance
        head.update({k: v for k, v in self.params.items()})
        buf = io.StringIO()
        buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
        buf.write("two_j,error\n")
        for t, e in zip(self.two_J, self.errors):
            buf.write(f"{t},{e!r}\n")
        return buf.getvalue()


def fit_slope(two_J, errors, floor: float = 1e-12, min_points: int = 5):
    """Least-squares slope of log(error) against log(J), ignoring errors below ``floor``."""
    xs, ys = [], []
    for t, e in zip(two_J, errors):
        if e > floor and np.isfinite(e):
            xs.append(math.log(t / 2.0))
            ys.append(math.log(e))
    if len(xs) < min_points:
        raise ConvergenceError(f"only {len(xs)} usable points (need {min_points})")
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept), len(xs)


LAMBDA_SWEEP = (10, 20, 40, 80, 120, 160, 200)
GAMMA_SWEEP = (20, 40, 60, 80, 120, 160, 200)
PLANAR_SWEEP = (16, 32, 64, 128, 256, 512, 1024, 2048)
DIFF_SWEEP = (16, 32, 64, 128, 256, 512)
EXCITED_SWEEP = (3, 8, 12, 16, 20, 24)


def lambda_study(eta: int, s_pm: int = -1, sweep=LAMBDA_SWEEP) -> ConvergenceReport:
    """|lambda_exact - lambda_approx| over J; expected slope -(eta+1).

    The differences are formed in exact rationals, so no noise floor applies.
    """
    sweep = [t for t in sweep if t >= eta]
    errs = [lambda_error(t, eta, s_pm) for t in sweep]
    rep = ConvergenceReport("lambda", list(sweep), errs, expected=-(eta + 1), tolerance=0.3,
                            params={"eta": eta, "s_pm": s_pm})
    return rep.fit(floor=0.0)


def gamma_study(j: int, sweep=GAMMA_SWEEP) -> ConvergenceReport:
    """|gamma_j - exp(-j(j+1)/(4J))| over J; expected slope -1."""
    errs = [abs(float(gamma(t, j)) - gamma_approx(t, j)) for t in sweep]
    rep = ConvergenceReport("gamma", list(sweep), errs, expected=-1.0, tolerance=0.2, params={"j": j})
    return rep.fit()


def planar_fd_error(eta: int, j: int, m: int, alpha: complex = 1.2 * np.exp(2.1j),
                    two_J_sweep=PLANAR_SWEEP, dps: int = 50) -> ConvergenceReport:
    """Error of the planar-derivative form of Y^eta_{jm} at fixed alpha over a J sweep.

    Compares Y^eta_{jm}(alpha) against
        N (2J)^{eta/2} (-1)^eta e^{-i eta phi} d^eta/d alpha^eta  Y_{jm}   (eta > 0)
        N (2J)^{|eta|/2}        e^{+i|eta| phi} d^|eta|/d alpha*^|eta| Y_{jm}   (eta < 0)
    with N = sqrt((j-|eta|)!/(j+|eta|)!), derivatives by central differences
    in extended precision.
    """
    if abs(eta) > j:
        raise ValueError("need |eta| <= j")
    alpha = complex(alpha)
    h = max(1e-4, abs(alpha) * 1e-5)
    k = abs(eta)
    norm = math.sqrt(math.factorial(j - k) / math.factorial(j + k))
    errs, sweep = [], []
    for two_J in two_J_sweep:
        if two_J < j:
            continue
        scale = mpmath.sqrt(mpmath.mpf(two_J) / 4)

        def fun(x, y, scale=scale):
            a = mpmath.mpc(x, y)
            return _harmonic_mp(j, m, abs(a) / scale, -mpmath.arg(a))

        with mpmath.workdps(dps):
            d = wirtinger_fd_mp(fun, alpha.real, alpha.imag, k, conj=eta < 0, h=h, dps=dps)
            theta = abs(alpha) / float(scale)
            if theta - 1e-12 > math.pi:
                raise ValueError("alpha lies outside the sphere for this J")
            phi = -math.atan2(alpha.imag, alpha.real)
            pref = norm * mpmath.mpf(two_J) ** (mpmath.mpf(k) / 2)
            if eta > 0:
                approx = pref * (-1) ** k * mpmath.expj(-k * phi) * d
            else:
                approx = pref * mpmath.expj(k * phi) * d
            approx = complex(approx)
        exact = evaluate(SpinWeightedExpansion.basis(j, m, eta), theta, phi)
        errs.append(abs(exact - approx))
        sweep.append(two_J)
    rep = ConvergenceReport("sph_approx", sweep, errs, expected=-0.5, tolerance=0.2,
                            params={"eta": eta, "j": j, "m": m, "alpha_re": alpha.real, "alpha_im": alpha.imag})
    return rep.fit()


# L2 error of powers of eth_bar on the spin-up Wigner function -------------------

def spin_up_coefficients(two_J: int, s: float, gaussian: bool = False) -> np.ndarray:
    """Coefficients c_j of the spin-up image at (j, 0), j = 0..2J."""
    R = radius(two_J)
    js = np.arange(two_J + 1)
    if gaussian:
        g = np.exp(-js * (js + 1) * (1 - s) / (2.0 * two_J))
    else:
        g = np.array([float(gamma(two_J, j)) ** (1 - s) for j in js])
    return np.sqrt((2 * js + 1) / (4 * np.pi)) * g / (R * R)


def _legendre_ld(n_max: int, x):
    # P_0..P_nmax at x (long double, any real x)
    x = np.asarray(x, dtype=np.longdouble)
    out = np.empty((n_max + 1,) + x.shape, dtype=np.longdouble)
    out[0] = 1
    if n_max >= 1:
        out[1] = x
    for n in range(2, n_max + 1):
        out[n] = ((2 * n - 1) * x * out[n - 1] - (n - 1) * out[n - 2]) / n
    return out


def _axial_u(coeffs, two_J: int, u):
    # g(u) = sum_j c_j Y_j0(theta), theta = sqrt(2u/J), continued analytically to u < 0
    u = np.asarray(u, dtype=np.longdouble)
    t = np.sqrt(np.abs(u) * 4 / np.longdouble(two_J))
    x = np.where(u >= 0, np.cos(t), np.cosh(t))
    P = _legendre_ld(len(coeffs) - 1, x)
    c = np.asarray(coeffs, dtype=np.longdouble)
    return np.tensordot(c, P, axes=1)


def diff_l2_error(n: int, two_J: int, s: float = 0.0, n_quad: int = 400) -> float:
    """L2 distance between (eth_bar/sqrt(2J))^n F_up and (-1)^n r^n g^{(n)}(r^2).

    F_up = g(|alpha|^2) is the axially symmetric spin-up image, r = |alpha|;
    g^{(n)} comes from central differences in u = |alpha|^2.
    """
    c = spin_up_coefficients(two_J, s)
    js = np.arange(two_J + 1)
    ylm_norm = np.sqrt((2 * js + 1) / (4 * np.pi))
    # exact side, through the ladder factors
    body = SpinWeightedExpansion({(int(j), 0): c[j] for j in js}, 0, two_J)
    exact_f = eth_power(body, -n).scale(two_J ** (-n / 2.0))
    # quadrature in theta over the region where the function lives
    tmax = min(math.pi, 14.0 / math.sqrt(two_J / 4.0))
    xg, wg = np.polynomial.legendre.leggauss(n_quad)
    theta = 0.5 * tmax * (xg + 1)
    w = 0.5 * tmax * wg
    ex = evaluate(exact_f, theta, np.zeros_like(theta))
    r = math.sqrt(two_J / 4.0) * theta
    u = r * r
    P = _half_width(n) + 2
    wts = np.array([float(x) for x in fd_weights(n, P)], dtype=np.longdouble)
    hstep = np.longdouble(0.03 * n)  # g varies on the scale u ~ 1; wider steps for high n
    offs = np.arange(-P, P + 1, dtype=np.longdouble) * hstep
    vals = _axial_u(c * ylm_norm, two_J, u[None, :].astype(np.longdouble) + offs[:, None])
    deriv = np.tensordot(wts, vals, axes=1) / hstep ** n
    approx = ((-1) ** n * np.asarray(r, dtype=np.longdouble) ** n * deriv).astype(float)
    R = radius(two_J)
    integrand = np.abs(ex - approx) ** 2 * np.sin(theta) * R * R * 2 * np.pi
    return float(math.sqrt(np.sum(w * integrand)))


def diff_l2_study(n: int, sweep=DIFF_SWEEP, s: float = 0.0) -> ConvergenceReport:
    errs = [diff_l2_error(n, t, s) for t in sweep]
    rep = ConvergenceReport("diff_l2", list(sweep), errs, expected=-1.0, tolerance=0.2, params={"n": n, "s": s})
    return rep.fit()


def excited_state_study(s: float = 0.0, method: str = "approx_eth", sweep=EXCITED_SWEEP) -> ConvergenceReport:
    """L2 distance between exact and approximate excited coherent states.

    The rotation angle scales as theta0 = 1.2/sqrt(J/2), so alpha0 is fixed.
    """
    from .states import excited_coherent

    errs = []
    for t in sweep:
        th0 = 1.2 / math.sqrt(t / 4.0)
        ex = excited_coherent(t, s, th0, 0.0, "exact")
        ap = excited_coherent(t, s, th0, 0.0, method)
        errs.append((ex.body - ap.body).l2_norm(radius(t)))
    rep = ConvergenceReport("excited_state", list(sweep), errs, expected=-1.0, tolerance=0.3,
                            params={"s": s, "method": method})
    return rep.fit()
