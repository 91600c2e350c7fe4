"""Command-line front end.

Exit codes: 0 ok, 2 input/schema error, 3 metadata mismatch, 4 numerical or
fit failure.  All output is deterministic: keys are sorted and floats use the
shortest round-trip representation.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys

import click
import numpy as np

from . import approx, evolution, starprod, states, tensorops
from .expansion import evaluate
from .tensorops import PhaseSpaceFunction

EXIT_PARSE, EXIT_META, EXIT_NUMERIC = 2, 3, 4


class CliFailure(click.ClickException):
    def __init__(self, message, code):
        super().__init__(message)
        self.exit_code = code


def _fail(message, code):
    raise CliFailure(message, code)


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _write(out_path, text: str):
    if out_path in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _read_function(path) -> PhaseSpaceFunction:
    try:
        with open(path) as fh:
            data = json.load(fh)
        return PhaseSpaceFunction.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        _fail(f"{path}: cannot read phase-space function ({exc})", EXIT_PARSE)


def _match(f: PhaseSpaceFunction, g: PhaseSpaceFunction, s=None):
    if f.two_J != g.two_J:
        _fail(f"metadata mismatch in two_j: {f.two_J} vs {g.two_J}", EXIT_META)
    if f.s != g.s:
        _fail(f"metadata mismatch in s: {f.s!r} vs {g.s!r}", EXIT_META)
    if s is not None and s != f.s:
        _fail(f"metadata mismatch in s: operands have {f.s!r}, --s gives {s!r}", EXIT_META)


def _function_payload(F: PhaseSpaceFunction, **meta) -> str:
    d = F.to_dict()
    d.update(meta)
    return _dump_json(d)


@click.group()
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Cap on BLAS/OpenMP threads.")
@click.pass_context
def main(ctx, threads):
    """Spin phase-space functions: star products, states, evolution, convergence data."""
    if threads is not None:
        from threadpoolctl import threadpool_limits

        ctx.with_resource(threadpool_limits(limits=threads))


@main.command()
@click.argument("a_path", type=click.Path())
@click.argument("b_path", type=click.Path())
@click.option("--s", "s", type=float, default=None, help="Expected s of both operands.")
@click.option("--method", default="exact", show_default=True,
              help="exact, via_P, table, or approx:N")
@click.option("--out", "out_path", default="-")
def star(a_path, b_path, s, method, out_path):
    """Star product of two phase-space functions."""
    f, g = _read_function(a_path), _read_function(b_path)
    _match(f, g, s)
    try:
        if method in ("exact", "via_Q"):
            r = starprod.star_general(f, g, "via_Q")
        elif method == "via_P":
            r = starprod.star_general(f, g, "via_P")
        elif method == "table":
            r = starprod.star_table(f, g)
        elif method.startswith("approx:"):
            r = approx.star_approx_general(f, g, int(method.split(":", 1)[1]))
        else:
            _fail(f"unknown method {method!r}", EXIT_PARSE)
    except ValueError as exc:
        _fail(str(exc), EXIT_PARSE)
    _write(out_path, _function_payload(r, method=method))


@main.command()
@click.argument("h_path", type=click.Path())
@click.argument("rho_path", type=click.Path())
@click.option("--t-end", type=float, required=True)
@click.option("--dt", type=float, required=True)
@click.option("--mode", default="exact", show_default=True, help="exact or order:N")
@click.option("--oracle", is_flag=True, help="Compare the final state with Hilbert-space propagation.")
@click.option("--out", "out_path", default="-")
def evolve(h_path, rho_path, t_end, dt, mode, oracle, out_path):
    """RK4 Moyal evolution; writes a long-format trajectory CSV."""
    H, rho = _read_function(h_path), _read_function(rho_path)
    _match(H, rho)
    mode_arg = mode.replace("order:", "") if mode.startswith("order:") else mode
    try:
        traj = evolution.evolve_rk4(H, rho, t_end, dt, mode_arg)
    except evolution.IntegrationError as exc:
        _fail(str(exc), EXIT_NUMERIC)
    except ValueError as exc:
        _fail(str(exc), EXIT_PARSE)
    if oracle:
        Hop = tensorops.phase_to_op(H)
        if np.max(np.abs(Hop.entries - Hop.entries.conj().T)) > 1e-10:
            _fail("--oracle needs a Hermitian H", EXIT_NUMERIC)
        ref = tensorops.op_to_phase(evolution.hilbert_propagate(Hop, tensorops.phase_to_op(rho), traj.times[-1]), H.s)
        gap = (traj.final.body - ref.body).l2_norm(tensorops.radius(H.two_J))
        traj.meta["oracle_l2"] = gap
        click.echo(f"oracle L2 gap at t={traj.times[-1]!r}: {gap!r}", err=True)
    _write(out_path, traj.to_csv())
    if oracle and traj.meta["oracle_l2"] > 1e-6:
        _fail("trajectory deviates from the Hilbert-space oracle by more than 1e-6", EXIT_NUMERIC)


@main.command()
@click.argument("f_path", type=click.Path())
@click.option("--n-theta", type=click.IntRange(min=2), default=64, show_default=True)
@click.option("--n-phi", type=click.IntRange(min=2), default=128, show_default=True)
@click.option("--projection", type=click.Choice(["sphere", "arc_plane"]), default="sphere", show_default=True)
@click.option("--out", "out_path", default="-")
def sample(f_path, n_theta, n_phi, projection, out_path):
    """Evaluate a function on a theta x phi grid (theta in [0,pi], phi in [0,2pi))."""
    F = _read_function(f_path)
    theta = np.linspace(0.0, math.pi, n_theta)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    vals = evaluate(F.body, T, P)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if projection == "sphere":
        w.writerow(["theta", "phi", "re", "im"])
        for t, p, v in zip(T.ravel(), P.ravel(), vals.ravel()):
            w.writerow([repr(float(t)), repr(float(p)), repr(float(v.real)), repr(float(v.imag))])
    else:
        alpha = approx.sphere_to_alpha(T, P, F.two_J)
        w.writerow(["x", "y", "re", "im"])
        for a, v in zip(alpha.ravel(), vals.ravel()):
            w.writerow([repr(float(a.real)), repr(float(a.imag)), repr(float(v.real)), repr(float(v.imag))])
    _write(out_path, buf.getvalue())


def _parse_params(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            _fail(f"parameter {item!r} is not key=value", EXIT_PARSE)
        k, v = item.split("=", 1)
        if k == "sweep":
            try:
                out[k] = tuple(int(x) for x in v.split(","))
            except ValueError:
                _fail(f"bad sweep {v!r}", EXIT_PARSE)
        elif k == "method":
            out[k] = v
        else:
            try:
                out[k] = float(v) if any(ch in v for ch in ".eE") else int(v)
            except ValueError:
                _fail(f"bad value for {k}: {v!r}", EXIT_PARSE)
    return out


STUDIES = {
    "lambda": (approx.lambda_study, {"eta", "s_pm", "sweep"}),
    "gamma": (approx.gamma_study, {"j", "sweep"}),
    "sph_approx": (None, {"eta", "j", "m", "alpha_re", "alpha_im", "sweep"}),
    "diff_l2": (approx.diff_l2_study, {"n", "s", "sweep"}),
    "excited_state": (approx.excited_state_study, {"s", "method", "sweep"}),
}


@main.command()
@click.argument("study", type=click.Choice(sorted(STUDIES)))
@click.option("--param", "params", multiple=True, help="key=value, e.g. eta=5 or sweep=16,32,64")
@click.option("--out", "out_path", default="-", help="CSV destination")
@click.option("--json-out", default=None, help="Also write the fit summary as JSON here.")
def convergence(study, params, out_path, json_out):
    """Error-vs-J sweep with a log-log slope fit."""
    fn, allowed = STUDIES[study]
    kw = _parse_params(params)
    unknown = set(kw) - allowed
    if unknown:
        _fail(f"unknown parameters for {study}: {sorted(unknown)}", EXIT_PARSE)
    if "sweep" in kw and len(kw["sweep"]) < 5:
        _fail("a sweep needs at least 5 points", EXIT_PARSE)
    try:
        if study == "sph_approx":
            alpha = complex(kw.pop("alpha_re", 1.2 * math.cos(2.1)), kw.pop("alpha_im", 1.2 * math.sin(2.1)))
            if "sweep" in kw:
                kw["two_J_sweep"] = kw.pop("sweep")
            kw.setdefault("eta", -4)
            kw.setdefault("j", 4)
            kw.setdefault("m", 4)
            rep = approx.planar_fd_error(alpha=alpha, **kw)
        else:
            rep = fn(**kw)
    except approx.ConvergenceError as exc:
        _fail(f"slope fit failed: {exc}", EXIT_NUMERIC)
    except (TypeError, ValueError) as exc:
        _fail(str(exc), EXIT_PARSE)
    _write(out_path, rep.to_csv())
    summary = {"study": rep.study, "slope": rep.slope, "intercept": rep.intercept, "points": rep.used,
               "expected": rep.expected, "tolerance": rep.tolerance, "ok": rep.ok, "params": rep.params}
    if json_out:
        _write(json_out, _dump_json(summary))
    elif out_path not in (None, "-"):
        click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.argument("spec_path", type=click.Path())
@click.option("--out", "out_path", default="-")
def state(spec_path, out_path):
    """Build a state from a StateSpec JSON file."""
    try:
        with open(spec_path) as fh:
            spec = states.StateSpec.from_dict(json.load(fh))
    except (OSError, ValueError, TypeError) as exc:
        _fail(f"{spec_path}: bad state spec ({exc})", EXIT_PARSE)
    try:
        F = states.build_state(spec)
    except ZeroDivisionError as exc:
        _fail(str(exc), EXIT_NUMERIC)
    except ValueError as exc:
        _fail(str(exc), EXIT_PARSE)
    _write(out_path, _function_payload(F, hermitian=states.is_real_function(F, 1e-10)))


@main.command()
@click.argument("f_path", type=click.Path())
@click.option("--s-param", type=float, required=True, help="Apply Delta^(s'): type s -> s + s' - 1.")
@click.option("--out", "out_path", default="-")
def transform(f_path, s_param, out_path):
    """Change representation with the diagonal Delta operator."""
    F = _read_function(f_path)
    try:
        G = starprod.delta_apply(F, s_param)
    except (ValueError, ZeroDivisionError) as exc:
        _fail(str(exc), EXIT_NUMERIC)
    _write(out_path, _function_payload(G))


@main.command()
@click.argument("kind", type=click.Choice(["K", "lambda", "gamma", "c_n"]))
@click.option("--two-j", type=click.IntRange(min=1), required=True)
@click.option("--s", "s", type=float, default=0.0, show_default=True, help="s for the c_n table")
@click.option("--order", type=click.IntRange(min=0), default=3, show_default=True, help="max n for c_n")
@click.option("--out", "out_path", default="-")
def table(kind, two_j, s, order, out_path):
    """Dump coefficient tables as CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if kind == "K":
        K = tensorops.k_coefficient_table(two_j)
        idx = tensorops.basis_index(two_j)
        w.writerow(["j", "m", "jp", "mp", "l", "value"])
        for a, (j, m) in enumerate(idx):
            for b, (jp, mp) in enumerate(idx):
                for l in range(K.shape[2]):
                    v = float(K[a, b, l])
                    if abs(v) > 1e-15:
                        w.writerow([j, m, jp, mp, l, repr(v)])
    elif kind == "lambda":
        w.writerow(["eta", "s_pm", "value"])
        for s_pm in (-1, 1):
            for eta in range(two_j + 1):
                w.writerow([eta, s_pm, repr(float(starprod.lambda_coeff(two_j, eta, s_pm)))])
    elif kind == "gamma":
        w.writerow(["j", "value"])
        for j in range(two_j + 1):
            w.writerow([j, repr(float(tensorops.gamma(two_j, j)))])
    else:
        w.writerow(["n", "m", "c_nm", "c_nm_over_2j_pow_n"])
        for n in range(order + 1):
            for m in range(n + 1):
                c = approx.c_nm(s, n, m)
                w.writerow([n, m, repr(c), repr(c / two_j ** n)])
    _write(out_path, buf.getvalue())


if __name__ == "__main__":
    sys.exit(main())
