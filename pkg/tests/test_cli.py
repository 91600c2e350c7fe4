import csv
import io
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from spinphase.cli import main
from spinphase.starprod import lambda_coeff
from spinphase.states import StateSpec
from spinphase.tensorops import PhaseSpaceFunction, SpinOperator, gamma, identity, op_to_phase, radius, tensor_op


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)

    return invoke


def write_fn(path, F):
    path.write_text(json.dumps(F.to_dict()))
    return path


def write_spec(path, **kw):
    path.write_text(StateSpec(**kw).to_json())
    return path


def read_fn(text):
    return PhaseSpaceFunction.from_dict(json.loads(text))


def worked_inputs(tmp_path, two_J=6):
    a = write_fn(tmp_path / "h.json", op_to_phase(tensor_op(two_J, 3, 3), 0.0))
    b = write_fn(tmp_path / "rho.json", op_to_phase(tensor_op(two_J, 1, 0), 0.0))
    return a, b


# star -----------------------------------------------------------------------------

def test_star_worked_example(run, tmp_path):
    two_J = 6
    a, b = worked_inputs(tmp_path, two_J)
    res = run("star", a, b, "--s", "0")
    assert res.exit_code == 0
    out = read_fn(res.output).body
    R, g = radius(two_J), lambda j: float(gamma(two_J, j))
    l1 = float(lambda_coeff(two_J, 1, 1))
    c33 = l1 * 3 * math.sqrt(3) / (2 * math.sqrt(math.pi)) / (R * R * g(1))
    assert out.coeff(3, 3) == pytest.approx(c33, abs=1e-12)
    for method in ("via_P", "table"):
        other = read_fn(run("star", a, b, "--method", method).output).body
        assert (other - out).l2_norm() < 1e-10


def test_star_identity_echo(run, tmp_path):
    rng = np.random.default_rng(0)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    F = op_to_phase(SpinOperator(3, A), 0.5)
    a = write_fn(tmp_path / "a.json", F)
    one = write_fn(tmp_path / "one.json", op_to_phase(identity(3), 0.5))
    out = read_fn(run("star", a, one).output)
    assert (out.body - F.body).l2_norm() < 1e-10


def test_star_approx_differs(run, tmp_path):
    a, b = worked_inputs(tmp_path)
    ex = read_fn(run("star", a, b).output).body
    ap = read_fn(run("star", a, b, "--method", "approx:1").output).body
    assert (ex - ap).l2_norm() > 1e-3


def test_star_errors(run, tmp_path):
    a, _ = worked_inputs(tmp_path, 6)
    other = write_fn(tmp_path / "o.json", op_to_phase(tensor_op(4, 1, 0), 0.0))
    res = run("star", a, other)
    assert res.exit_code == 3 and "two_j" in res.output
    s_other = write_fn(tmp_path / "s.json", op_to_phase(tensor_op(6, 1, 0), 0.5))
    res = run("star", a, s_other)
    assert res.exit_code == 3 and "in s" in res.output
    res = run("star", a, a, "--s", "1")
    assert res.exit_code == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("star", a, bad).exit_code == 2
    bad.write_text(json.dumps({"two_j": 6}))
    assert run("star", a, bad).exit_code == 2
    assert run("star", a, a, "--method", "fancy").exit_code == 2


# evolve ------------------------------------------------------------------------------

def parse_traj(text):
    lines = text.splitlines()
    meta = json.loads(lines[0][2:])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    return meta, rows


def test_evolve_worked_example(run, tmp_path):
    two_J, dt = 6, 1e-4
    a, b = worked_inputs(tmp_path, two_J)
    res = run("evolve", a, b, "--t-end", dt, "--dt", dt)
    assert res.exit_code == 0
    meta, rows = parse_traj(res.output)
    assert meta["steps"] == 1
    coeff = {}
    for r in rows:
        coeff[(float(r["t"]), int(r["j"]), int(r["m"]))] = complex(float(r["re"]), float(r["im"]))
    delta = {k[1:]: v - coeff.get((0.0,) + k[1:], 0) for k, v in coeff.items() if k[0] > 0}
    R = radius(two_J)
    rate = -1j * 3 * math.sqrt(3) / math.sqrt(math.pi) * float(lambda_coeff(two_J, 1, 1)) / (
        R * R * float(gamma(two_J, 1)))
    # the initial motion is along Y_33 only; everything else enters at O(dt^2)
    assert delta[(3, 3)] / dt == pytest.approx(rate, rel=1e-3)
    others = max(abs(v) for k, v in delta.items() if k != (3, 3))
    assert others < 1e-3 * abs(delta[(3, 3)])


def test_evolve_oracle_and_zero(run, tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = write_fn(tmp_path / "H.json", op_to_phase(SpinOperator(2, X + X.conj().T), 0.0))
    rho = write_fn(tmp_path / "r.json", op_to_phase(SpinOperator(2, np.diag([0.5, 0.3, 0.2]).astype(complex)), 0.0))
    res = CliRunner().invoke(main, ["evolve", str(H), str(rho), "--t-end", "1", "--dt", "1e-3",
                                                    "--oracle"])
    assert res.exit_code == 0
    assert "oracle L2 gap" in res.stderr
    meta, _ = parse_traj(res.stdout)
    assert meta["oracle_l2"] < 1e-6
    meta, rows = parse_traj(run("evolve", H, rho, "--t-end", "0", "--dt", "1e-3").output)
    assert {r["t"] for r in rows} == {"0.0"}
    assert run("evolve", H, rho, "--t-end", "1", "--dt", "0").exit_code == 2


# sample ------------------------------------------------------------------------------

def test_sample_constant(run, tmp_path):
    # P-function of the identity for 2J = 3 is the constant (2J + 1) / 2J
    f = write_fn(tmp_path / "one.json", op_to_phase(identity(3), 1.0))
    rows = list(csv.DictReader(io.StringIO(run("sample", f, "--n-theta", 5, "--n-phi", 6).output)))
    assert len(rows) == 30
    vals = {round(float(r["re"]), 12) for r in rows}
    assert len(vals) == 1 and vals.pop() == pytest.approx(4 / 3, abs=1e-12)


def test_sample_spin_up_peak(run, tmp_path):
    from spinphase.states import spin_up_phase
    f = write_fn(tmp_path / "up.json", spin_up_phase(6, -1.0))
    rows = list(csv.DictReader(io.StringIO(run("sample", f, "--n-theta", 19, "--n-phi", 8).output)))
    best = max(rows, key=lambda r: float(r["re"]))
    assert float(best["theta"]) == 0.0
    arc = list(csv.DictReader(io.StringIO(run("sample", f, "--projection", "arc_plane", "--n-theta", 3,
                                              "--n-phi", 4).output)))
    assert set(arc[0]) == {"x", "y", "re", "im"}
    assert float(arc[0]["x"]) == 0.0 and float(arc[0]["y"]) == 0.0


def test_sample_bad_grid(run, tmp_path):
    f = write_fn(tmp_path / "one.json", op_to_phase(identity(3), 1.0))
    assert run("sample", f, "--n-theta", 1).exit_code == 2


# convergence ---------------------------------------------------------------------------

def test_convergence_lambda(run, tmp_path):
    js = tmp_path / "fit.json"
    res = run("convergence", "lambda", "--param", "eta=5", "--param", "s_pm=1",
              "--param", "sweep=200,400,800,1600,3200,6400", "--json-out", js)
    assert res.exit_code == 0
    assert res.output.splitlines()[1] == "two_j,error"
    fit = json.loads(js.read_text())
    assert fit["slope"] == pytest.approx(-6, abs=0.3)
    assert fit["ok"] and fit["points"] == 6


def test_convergence_errors(run):
    assert run("convergence", "lambda", "--param", "sweep=10,20,40").exit_code == 2
    assert run("convergence", "lambda", "--param", "colour=3").exit_code == 2
    assert run("convergence", "lambda", "--param", "eta").exit_code == 2
    # every planar error at eta = 0 sits at the floor: fit is under-determined
    res = run("convergence", "sph_approx", "--param", "eta=0", "--param", "j=0", "--param", "m=0",
              "--param", "sweep=16,32,64,128,256")
    assert res.exit_code == 4


# state / transform / table ---------------------------------------------------------------

def test_state_dicke_equals_spin_up(run, tmp_path):
    a = run("state", write_spec(tmp_path / "a.json", kind="dicke", two_j=4, s=0.0, m1=2)).output
    b = run("state", write_spec(tmp_path / "b.json", kind="spin_up", two_j=4, s=0.0)).output
    assert a == b


def test_state_projector_flag(run, tmp_path):
    out = json.loads(run("state", write_spec(tmp_path / "p.json", kind="projector", two_j=4, m1=2, m2=1)).output)
    assert out["hermitian"] is False
    out = json.loads(run("state", write_spec(tmp_path / "d.json", kind="dicke", two_j=4, m1=1)).output)
    assert out["hermitian"] is True


def test_state_excited_methods_differ(run, tmp_path):
    ex = read_fn(run("state", write_spec(tmp_path / "e.json", kind="excited_coherent", two_j=8,
                                         theta0=0.5)).output)
    ap = read_fn(run("state", write_spec(tmp_path / "a.json", kind="excited_coherent", two_j=8, theta0=0.5,
                                         method="approx_eth")).output)
    gap = (ex.body - ap.body).l2_norm(radius(8)) / ex.body.l2_norm(radius(8))
    assert 1e-3 < gap < 1.0


def test_state_errors(run, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "dicke", "two_j": 2, "bogus": 1}))
    assert run("state", bad).exit_code == 2
    assert run("state", write_spec(tmp_path / "x.json", kind="dicke", two_j=2, m1=5)).exit_code == 2
    assert run("state", write_spec(tmp_path / "y.json", kind="excited_coherent", two_j=2,
                                   theta0=math.pi)).exit_code == 2


def test_transform(run, tmp_path):
    from spinphase.starprod import delta_apply
    from spinphase.states import spin_up_phase
    F = spin_up_phase(5, 1.0)
    f = write_fn(tmp_path / "p.json", F)
    out = read_fn(run("transform", f, "--s-param", "-1").output)
    assert out.s == -1.0
    assert (out.body - delta_apply(F, -1.0).body).l2_norm() < 1e-14
    assert (out.body - spin_up_phase(5, -1.0).body).l2_norm() < 1e-10


def test_tables(run):
    rows = list(csv.DictReader(io.StringIO(run("table", "gamma", "--two-j", 1).output)))
    assert float(rows[0]["value"]) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    rows = list(csv.DictReader(io.StringIO(run("table", "lambda", "--two-j", 4).output)))
    assert len(rows) == 10
    rows = list(csv.DictReader(io.StringIO(run("table", "K", "--two-j", 1).output)))
    k000 = [r for r in rows if r["j"] == r["jp"] == r["l"] == "0"]
    assert float(k000[0]["value"]) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    rows = list(csv.DictReader(io.StringIO(run("table", "c_n", "--two-j", 4, "--order", 2).output)))
    assert len(rows) == 6


def test_deterministic_output(run, tmp_path):
    a, b = worked_inputs(tmp_path)
    spec = write_spec(tmp_path / "e.json", kind="excited_coherent", two_j=6, theta0=0.4, method="approx_planar")
    for args in [("star", a, b), ("evolve", a, b, "--t-end", "0.003", "--dt", "0.001"),
                 ("state", spec), ("table", "K", "--two-j", 3), ("sample", a, "--n-theta", 4, "--n-phi", 4)]:
        assert run(*args).output == run(*args).output


def test_json_round_trip(run, tmp_path):
    a, b = worked_inputs(tmp_path)
    text = run("star", a, b).output
    F = read_fn(text)
    again = json.loads(json.dumps(F.to_dict()))
    payload = json.loads(text)
    payload.pop("method")
    assert again == payload
