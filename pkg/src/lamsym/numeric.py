"""Deterministic fixed-step integration and trajectory monitoring.

The integrator is the classical 4th-order one-step method with a fixed
step, chosen over adaptive or symplectic schemes so that identical runs
produce identical grids and values on every platform; the monitored
quantities here are deliberately non-conserved, so structure
preservation would buy nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import EvalDomainError, Expr, compile_expr, free_vars

DEFAULT_STEP = 1e-3
DEFAULT_HORIZON = 1.0
SAFETY_LIMIT = 1e6
HESSIAN_CONDITION_LIMIT = 1e12


class IntegrationError(RuntimeError):
    """Integration could not proceed (singular or ill-conditioned system)."""


@dataclass(frozen=True)
class Trajectory:
    """States on the uniform grid t0 + k*h, one row per grid point."""

    names: tuple
    t0: float
    h: float
    states: np.ndarray
    system: str = ""
    initial: tuple = ()
    order: int = 4
    truncated: bool = False
    reason: Optional[str] = None

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self.states))

    def row(self, k: int) -> dict:
        return dict(zip(self.names, self.states[k]))


@dataclass(frozen=True)
class MonitorSeries:
    """Pointwise values of one expression along a trajectory."""

    label: str
    t0: float
    h: float
    values: np.ndarray
    truncated_at: Optional[int] = None

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self.values))


def _grid_steps(t0: float, t1: float, h: float) -> int:
    if h <= 0 or t1 <= t0:
        raise ValueError("need h > 0 and t1 > t0")
    steps = int(round((t1 - t0) / h))
    return max(steps, 1)


def _rk4_loop(rhs: Callable[[float, np.ndarray], np.ndarray], y0: Sequence[float],
              t0: float, t1: float, h: float,
              safety: float = SAFETY_LIMIT):
    """Fixed-step integration; returns (states, reason) where reason is a
    diagnostic when the trajectory left the safety box or hit a domain
    error and was truncated."""
    steps = _grid_steps(t0, t1, h)
    y = np.asarray(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    out = [y.copy()]
    for k in range(steps):
        t = t0 + k * h
        try:
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + (h / 2) * k1)
            k3 = rhs(t + h / 2, y + (h / 2) * k2)
            k4 = rhs(t + h, y + h * k3)
        except EvalDomainError as err:
            return np.array(out), f"domain error at t={t:.6g}: {err}"
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > safety:
            return np.array(out), f"state left safety box at t={t + h:.6g}"
        out.append(y.copy())
    return np.array(out), None


def compile_rhs(exprs: Sequence[Expr], names: Sequence[str]):
    """Compile du/dt expressions over (t, state...) into an array function."""
    fns = [compile_expr(e, ("t",) + tuple(names)) for e in exprs]

    def rhs(t, y):
        return np.array([f(t, *y) for f in fns])

    return rhs


def integrate_first_order(exprs: Sequence[Expr], names: Sequence[str],
                          y0: Sequence[float], t0: float = 0.0,
                          t1: float = DEFAULT_HORIZON, h: float = DEFAULT_STEP,
                          system: str = "", safety: float = SAFETY_LIMIT) -> Trajectory:
    """Integrate dy/dt = f(t, y) given componentwise expressions."""
    states, reason = _rk4_loop(compile_rhs(exprs, names), y0, t0, t1, h, safety)
    return Trajectory(tuple(names), t0, h, states, system=system,
                      initial=tuple(float(v) for v in y0),
                      truncated=reason is not None, reason=reason)


def integrate_hamiltonian(sys, u0: Sequence[float], t0: float = 0.0,
                          t1: float = DEFAULT_HORIZON, h: float = DEFAULT_STEP,
                          safety: float = SAFETY_LIMIT) -> Trajectory:
    """Integrate the canonical equations from u0 = (q..., p...)."""
    from .mechanics import canonical_equations
    if len(u0) != 2 * sys.n:
        raise ValueError(f"initial state needs {2*sys.n} components")
    return integrate_first_order(canonical_equations(sys), sys.u, u0, t0, t1, h,
                                 system=f"hamiltonian n={sys.n}", safety=safety)


def integrate_euler_lagrange(lag, q0: Sequence[float], dq0: Sequence[float],
                             t0: float = 0.0, t1: float = DEFAULT_HORIZON,
                             h: float = DEFAULT_STEP,
                             safety: float = SAFETY_LIMIT) -> Trajectory:
    """Integrate the variational equations of a regular Lagrangian.

    At every stage the accelerations solve the linear system
    M(t,q,dq) ddq = dL/dq - d2L/dtddq - (d2L/dqddq) dq with M the velocity
    Hessian, solved numerically; a condition estimate above 1e12 aborts.
    """
    from .expr import differentiate
    n = lag.n
    if len(q0) != n or len(dq0) != n:
        raise ValueError(f"initial state needs {n} positions and {n} velocities")
    names = lag.q + lag.dq
    argnames = ("t",) + names
    l_expr = lag.lagrangian
    dv = [differentiate(l_expr, v) for v in lag.dq]
    hess = [[compile_expr(differentiate(dv[a], vb), argnames) for vb in lag.dq]
            for a in range(n)]
    rhs_parts = []
    for a in range(n):
        parts = [compile_expr(differentiate(l_expr, lag.q[a]), argnames),
                 compile_expr(differentiate(dv[a], "t"), argnames)]
        parts.extend(compile_expr(differentiate(dv[a], qb), argnames) for qb in lag.q)
        rhs_parts.append(parts)

    def rhs(t, y):
        args = (t, *y)
        m = np.array([[hess[a][b](*args) for b in range(n)] for a in range(n)])
        if np.linalg.cond(m) > HESSIAN_CONDITION_LIMIT:
            raise IntegrationError(
                f"velocity Hessian condition exceeds {HESSIAN_CONDITION_LIMIT:g} at t={t:.6g}")
        b_vec = np.array([
            parts[0](*args) - parts[1](*args)
            - sum(parts[2 + j](*args) * y[n + j] for j in range(n))
            for parts in rhs_parts])
        ddq = np.linalg.solve(m, b_vec)
        return np.concatenate([y[n:], ddq])

    states, reason = _rk4_loop(rhs, list(q0) + list(dq0), t0, t1, h, safety)
    return Trajectory(tuple(names), t0, h, states, system=f"lagrangian n={n}",
                      initial=tuple(float(v) for v in list(q0) + list(dq0)),
                      truncated=reason is not None, reason=reason)


def monitor(traj: Trajectory, exprs: Sequence[Expr],
            labels: Optional[Sequence[str]] = None) -> list:
    """Evaluate expressions pointwise along a trajectory.

    A domain error at a grid point truncates that series and records the
    offending index.
    """
    out = []
    names = ("t",) + traj.names
    for i, e in enumerate(exprs):
        missing = free_vars(e) - set(names)
        if missing:
            raise ValueError(f"monitor expression uses unknown variables {sorted(missing)}")
        fn = compile_expr(e, names)
        label = labels[i] if labels else f"m{i+1}"
        values = []
        truncated_at = None
        for k, row in enumerate(traj.states):
            try:
                values.append(fn(traj.t0 + k * traj.h, *row))
            except EvalDomainError:
                truncated_at = k
                break
        out.append(MonitorSeries(label, traj.t0, traj.h, np.array(values), truncated_at))
    return out


def compare_with_scalar_ode(series: MonitorSeries, gamma: Expr, g0: float,
                            h: float) -> float:
    """Integrate dG/dt = gamma(t, G) on the series' grid and return the
    maximum absolute deviation from the monitored values."""
    if abs(series.h - h) > 1e-15 * max(1.0, abs(h)):
        raise ValueError(f"grid mismatch: series step {series.h} vs {h}")
    extra = free_vars(gamma) - {"t", "G"}
    if extra:
        raise ValueError(f"scalar law may only use (t, G), found {sorted(extra)}")
    fn = compile_expr(gamma, ("t", "G"))
    rhs = lambda t, y: np.array([fn(t, y[0])])
    n_steps = len(series.values) - 1
    if n_steps < 1:
        raise ValueError("series too short to compare")
    states, reason = _rk4_loop(rhs, [g0], series.t0, series.t0 + n_steps * h, h)
    if reason is not None:
        raise IntegrationError(f"scalar law integration failed: {reason}")
    return float(np.max(np.abs(states[:, 0] - series.values)))


def trajectory_to_csv(traj: Trajectory, stream, monitors: Sequence[MonitorSeries] = ()) -> None:
    """Write the grid as CSV with full double precision."""
    header = ["t"] + list(traj.names) + [m.label for m in monitors]
    stream.write(",".join(header) + "\n")
    times = traj.times
    for k in range(len(traj.states)):
        cells = [f"{times[k]:.17g}"] + [f"{v:.17g}" for v in traj.states[k]]
        for m in monitors:
            cells.append(f"{m.values[k]:.17g}" if k < len(m.values) else "")
        stream.write(",".join(cells) + "\n")
