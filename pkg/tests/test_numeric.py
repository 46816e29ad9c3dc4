import io
import math

import numpy as np
import pytest

from lamsym.expr import Const, Var, compile_expr, evaluate, parse
from lamsym.mechanics import PhaseSystem, canonical_equations
from lamsym.numeric import (
    IntegrationError,
    compare_with_scalar_ode,
    integrate_euler_lagrange,
    integrate_first_order,
    integrate_hamiltonian,
    monitor,
    trajectory_to_csv,
)
from lamsym.lagrangian import LagrangianSystem, conjugate_momenta
from fractions import Fraction


def oscillator():
    return PhaseSystem(1, parse("(p1^2+q1^2)/2"))


# ------------------------------------------------------------- hamiltonian

def test_oscillator_full_period_accuracy():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 2 * math.pi, 1e-3)
    t_end = traj.times[-1]
    assert abs(traj.states[-1][0] - math.cos(t_end)) < 1e-9
    assert abs(traj.states[-1][1] + math.sin(t_end)) < 1e-9


def test_constant_hamiltonian_freezes_the_state():
    sys = PhaseSystem(1, Const(Fraction(5)))
    traj = integrate_hamiltonian(sys, [0.3, 0.7], 0.0, 1.0, 1e-2)
    assert np.allclose(traj.states, [0.3, 0.7])


def test_crossed_system_exponential_integral_is_flat():
    sys = PhaseSystem(2, parse("-(q1*p2+q2*p1) + (p1-p2)^2/2"))
    traj = integrate_hamiltonian(sys, [0.4, 0.3, 0.2, 0.1], 0.0, 1.0, 1e-3)
    series = monitor(traj, [parse("(q1+q2)*exp(t)")])[0]
    assert np.max(np.abs(series.values - series.values[0])) < 1e-8


def test_convergence_order_of_the_integrator():
    errs = []
    for k in (6, 7, 8, 9):
        h = 2 * math.pi / 2 ** k
        traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 2 * math.pi, h)
        errs.append(abs(traj.states[-1][0] - 1.0) + abs(traj.states[-1][1]))
    orders = [math.log(errs[i] / errs[i + 1], 2) for i in range(len(errs) - 1)]
    assert min(orders) >= 3.8


def test_grid_is_exact():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 0.01, 1e-3)
    assert np.array_equal(traj.times, traj.t0 + traj.h * np.arange(11))


def test_safety_box_truncates_blowup():
    traj = integrate_first_order([parse("y1^2")], ["y1"], [2.0], 0.0, 5.0, 1e-3,
                                 system="blowup")
    assert traj.truncated
    assert "safety box" in traj.reason
    assert len(traj.states) < 5001


def test_domain_error_truncates_with_diagnostic():
    traj = integrate_first_order([parse("log(y1)")], ["y1"], [0.5], 0.0, 5.0, 1e-2)
    assert traj.truncated
    assert "domain error" in traj.reason


# ------------------------------------------------------------- euler-lagrange

def test_free_particle_is_a_straight_line():
    lag = LagrangianSystem(1, parse("dq1^2/2"))
    traj = integrate_euler_lagrange(lag, [0.2], [0.5], 0.0, 1.0, 1e-2)
    assert np.max(np.abs(traj.states[:, 0] - (0.2 + 0.5 * traj.times))) < 1e-12


def test_exponential_lagrangian_matches_hamiltonian_flow():
    lag = LagrangianSystem(1, parse("(dq1/q1 + 1)^2*exp(-2*q1)/2"))
    sys = PhaseSystem(1, parse("q1^2*p1^2*exp(2*q1)/2 - q1*p1"))
    q0, dq0 = 0.5, 0.1
    el = integrate_euler_lagrange(lag, [q0], [dq0], 0.0, 1.0, 1e-3)
    assert not el.truncated
    mom = conjugate_momenta(lag)[0]
    p0 = evaluate(mom, {"t": 0.0, "q1": q0, "dq1": dq0})
    ham = integrate_hamiltonian(sys, [q0, p0], 0.0, 1.0, 1e-3)
    assert np.max(np.abs(el.states[:, 0] - ham.states[:, 0])) < 1e-6
    fn = compile_expr(mom, ("t", "q1", "dq1"))
    p_along = np.array([fn(t, *row) for t, row in zip(el.times, el.states)])
    assert np.max(np.abs(p_along - ham.states[:, 1])) < 1e-6


def test_two_dof_lagrangian_momenta_map_onto_hamiltonian_flow():
    lag = LagrangianSystem(
        2, parse("(dq1/q1 - q1)^2/2 + (dq1 - q1*dq2)^2*exp(-2*q2)/2 + q1*exp(-q2)"))
    h = ("q1^2*p1^2/2 + q1^2*p1 + q1*p1*p2 + q1*p2 + p2^2/2"
         " + p2^2*exp(2*q2)/(2*q1^2) - q1*exp(-q2)")
    sys = PhaseSystem(2, parse(h))
    q0, dq0 = [0.8, 0.4], [0.3, 0.2]
    el = integrate_euler_lagrange(lag, q0, dq0, 0.0, 0.5, 1e-3)
    assert not el.truncated
    moms = conjugate_momenta(lag)
    point = {"t": 0.0, "q1": q0[0], "q2": q0[1], "dq1": dq0[0], "dq2": dq0[1]}
    p0 = [evaluate(m, point) for m in moms]
    ham = integrate_hamiltonian(sys, q0 + p0, 0.0, 0.5, 1e-3)
    assert np.max(np.abs(el.states[:, :2] - ham.states[:, :2])) < 1e-6


def test_singular_hessian_aborts():
    lag = LagrangianSystem(1, parse("dq1^3/3"))
    with pytest.raises(IntegrationError, match="condition"):
        integrate_euler_lagrange(lag, [0.5], [0.0], 0.0, 0.1, 1e-2)


# ------------------------------------------------------------- monitors

def test_monitor_energy_is_conserved():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 1.0, 1e-3)
    series = monitor(traj, [parse("(p1^2+q1^2)/2")], labels=["H"])[0]
    assert series.label == "H"
    assert np.max(np.abs(series.values - 0.5)) < 1e-9


def test_monitor_decaying_quantity_follows_exponential():
    eps = 0.1
    sys = PhaseSystem(1, parse(f"-q1*p1 + ({eps})*q1*p1 - ({eps})*q1*p1*log(p1)"))
    traj = integrate_hamiltonian(sys, [0.8, 0.9], 0.0, 1.0, 1e-3)
    series = monitor(traj, [parse("2*q1*p1")])[0]
    expected = series.values[0] * np.exp(-eps * series.times)
    assert np.max(np.abs(series.values - expected)) < 1e-6


def test_monitor_truncates_on_domain_error():
    traj = integrate_first_order([parse("-1+0*y1")], ["y1"], [0.5], 0.0, 1.0, 1e-2)
    series = monitor(traj, [parse("log(y1)")])[0]
    assert series.truncated_at is not None
    assert len(series.values) == series.truncated_at


def test_monitor_rejects_unknown_variables():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 0.1, 1e-2)
    with pytest.raises(ValueError, match="unknown"):
        monitor(traj, [parse("q1+w3")])


# ------------------------------------------------------------- scalar law

def test_scalar_law_matches_monitored_decay():
    sys = PhaseSystem(2, parse("-(q1*p2+q2*p1) + (p1-p2)^2/2"))
    traj = integrate_hamiltonian(sys, [0.4, 0.3, 0.2, 0.1], 0.0, 1.0, 1e-3)
    series = monitor(traj, [parse("q1+q2")])[0]
    dev = compare_with_scalar_ode(series, parse("-G"), series.values[0], 1e-3)
    assert dev < 1e-7


def test_zero_law_against_conserved_series():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 1.0, 1e-3)
    series = monitor(traj, [parse("(p1^2+q1^2)/2")])[0]
    dev = compare_with_scalar_ode(series, parse("0*G"), 0.5, 1e-3)
    assert dev < 1e-12


def test_wrong_scalar_law_is_rejected():
    # two-scale system: dG/dt = -(w1^2+w2^2)/2 differs from -G^2/2 off the
    # diagonal w1 = w2; start with w1 != w2
    h = ("q1^2*p1^2*log(q1)/2 + q2^2*p2^2*log(q2)/2"
         " + log(q1/q2)*(q1*p1+q2*p2)")
    sys = PhaseSystem(2, parse(h))
    traj = integrate_hamiltonian(sys, [0.9, 0.6, 0.9, 0.3], 0.0, 1.0, 1e-3)
    series = monitor(traj, [parse("q1*p1+q2*p2")])[0]
    dev = compare_with_scalar_ode(series, parse("-G^2/2"), series.values[0], 1e-3)
    assert dev > 1e-3


def test_grid_mismatch_is_an_error():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 1.0, 1e-3)
    series = monitor(traj, [Var("q1")])[0]
    with pytest.raises(ValueError, match="grid"):
        compare_with_scalar_ode(series, parse("0*G"), 1.0, 2e-3)


# ------------------------------------------------------------- csv export

def test_csv_export_full_precision_round_trip():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 0.01, 1e-3)
    buf = io.StringIO()
    trajectory_to_csv(traj, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "t,q1,p1"
    assert len(lines) == len(traj.states) + 1
    cells = lines[-1].split(",")
    assert float(cells[1]) == traj.states[-1][0]
    assert float(cells[2]) == traj.states[-1][1]


def test_csv_export_with_monitor_columns():
    traj = integrate_hamiltonian(oscillator(), [1.0, 0.0], 0.0, 0.01, 1e-3)
    series = monitor(traj, [parse("(p1^2+q1^2)/2")], labels=["energy"])
    buf = io.StringIO()
    trajectory_to_csv(traj, buf, series)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "t,q1,p1,energy"
    assert float(lines[1].split(",")[3]) == pytest.approx(0.5, abs=1e-12)
