"""Matrix-perturbed (lambda) symmetries of canonical equations.

A square matrix Lambda of smooth functions modifies the prolongation of
a vector field; the perturbed symmetry condition, the controlled
conservation laws for the quantities G and S, the scalar reduction
Lambda.Phi = lambda.Phi, and the invariant-chart reduction of the
equations are verified here.  Lambda entries may reference the velocity
symbols dq*/dp*, which are always substituted with the equations of
motion before any check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .expr import (
    DomainBox,
    Expr,
    Var,
    ZERO,
    ZeroTestConfig,
    ZeroVerdict,
    add,
    coerce,
    differentiate,
    div,
    free_vars,
    is_identically_zero,
    mul,
    neg,
    simplify,
    substitute,
)
from .mechanics import (
    PhaseSystem,
    PhaseVectorField,
    canonical_equations,
    on_shell_map,
    total_time_derivative,
)
from .symmetry import SymmetryVerdict, compute_S, check_first_integral, generating_function_test

HAMILTONIAN_SIDE = "hamiltonian"
LAGRANGIAN_SIDE = "lagrangian"


class ChartError(ValueError):
    """A reduction chart failed verification or is incomplete."""


def _velocity_names(side: str, size: int):
    if side == LAGRANGIAN_SIDE:
        return tuple(f"dq{i+1}" for i in range(size))
    n = size // 2
    return tuple(f"dq{i+1}" for i in range(n)) + tuple(f"dp{i+1}" for i in range(n))


@dataclass(frozen=True)
class LambdaMatrix:
    """Square matrix of expressions perturbing the prolongation.

    Hamiltonian-side matrices are 2n x 2n and act on the full phase
    components; Lagrangian-side matrices are n x n and act on the
    configuration coefficients.
    """

    entries: tuple
    side: str = HAMILTONIAN_SIDE
    velocity_dependent: bool = False

    def __post_init__(self):
        rows = tuple(tuple(coerce(e) for e in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        size = len(rows)
        if size == 0 or any(len(r) != size for r in rows):
            raise ValueError("lambda matrix must be square and non-empty")
        if self.side not in (HAMILTONIAN_SIDE, LAGRANGIAN_SIDE):
            raise ValueError(f"unknown side {self.side!r}")
        if self.side == HAMILTONIAN_SIDE and size % 2:
            raise ValueError("hamiltonian-side matrix must have even size")
        if not self.velocity_dependent:
            vel = set(_velocity_names(self.side, size))
            for row in rows:
                for e in row:
                    hit = free_vars(e) & vel
                    if hit:
                        raise ValueError(
                            f"velocity symbols {sorted(hit)} require velocity_dependent=True")

    @property
    def size(self) -> int:
        return len(self.entries)

    @classmethod
    def zeros(cls, size: int, side: str = HAMILTONIAN_SIDE) -> "LambdaMatrix":
        return cls(tuple((ZERO,) * size for _ in range(size)), side)

    @classmethod
    def diagonal(cls, diag: Sequence, side: str = HAMILTONIAN_SIDE,
                 velocity_dependent: bool = False) -> "LambdaMatrix":
        d = [coerce(e) for e in diag]
        rows = tuple(tuple(d[i] if i == j else ZERO for j in range(len(d)))
                     for i in range(len(d)))
        return cls(rows, side, velocity_dependent)

    def vec(self, v: Sequence[Expr]) -> tuple:
        if len(v) != self.size:
            raise ValueError(f"vector length {len(v)} does not match matrix size {self.size}")
        return tuple(add(*[mul(self.entries[i][j], v[j]) for j in range(self.size)])
                     for i in range(self.size))

    def on_shell(self, sys: PhaseSystem) -> "LambdaMatrix":
        """Substitute velocity symbols with the equations of motion."""
        if not self.velocity_dependent:
            return self
        shell = on_shell_map(sys)
        rows = tuple(tuple(substitute(e, shell) for e in row) for row in self.entries)
        return LambdaMatrix(rows, self.side, velocity_dependent=False)


@dataclass(frozen=True)
class ReductionChart:
    """Invariant coordinates w1..w_{2n-1}, the coordinate z rectifying the
    field (Xz = 1), and the explicit inverse map (t, w, z) -> (q, p)."""

    w: tuple
    z: Expr
    inverse: Mapping[str, Expr]

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(coerce(e) for e in self.w))
        object.__setattr__(self, "z", coerce(self.z))
        object.__setattr__(self, "inverse",
                           {k: coerce(v) for k, v in dict(self.inverse).items()})

    @property
    def w_names(self) -> tuple:
        return tuple(f"w{j+1}" for j in range(len(self.w)))

    @property
    def z_name(self) -> str:
        return "z"

    def variables(self) -> tuple:
        return ("t",) + self.w_names + (self.z_name,)


def _require_autonomous(x: PhaseVectorField):
    if simplify(x.tau) != ZERO:
        raise ValueError("lambda machinery requires tau = 0")


def _require_side(sys: PhaseSystem, lam: LambdaMatrix):
    if lam.side != HAMILTONIAN_SIDE or lam.size != 2 * sys.n:
        raise ValueError(
            f"need a hamiltonian-side {2*sys.n}x{2*sys.n} matrix, "
            f"got {lam.side} {lam.size}x{lam.size}")


def lambda_prolongation(sys: PhaseSystem, x: PhaseVectorField,
                        lam: LambdaMatrix) -> tuple:
    """Velocity-direction coefficients of the perturbed first prolongation:
    D_t Phi_a + (Lambda Phi)_a, expanded along solutions."""
    _require_autonomous(x)
    _require_side(sys, lam)
    lam_phi = lam.on_shell(sys).vec(x.components)
    return tuple(simplify(add(total_time_derivative(sys, c), lp))
                 for c, lp in zip(x.components, lam_phi))


def check_lambda_symmetry(sys: PhaseSystem, x: PhaseVectorField, lam: LambdaMatrix,
                          box: Optional[DomainBox] = None,
                          cfg: Optional[ZeroTestConfig] = None) -> SymmetryVerdict:
    """Perturbed symmetry condition: [F, Phi]_a + dPhi_a/dt = -(Lambda Phi)_a."""
    _require_autonomous(x)
    _require_side(sys, lam)
    rhs = canonical_equations(sys)
    comps = x.components
    lam_phi = lam.on_shell(sys).vec(comps)
    verdicts = []
    for a in range(2 * sys.n):
        parts = [differentiate(comps[a], sys.t), lam_phi[a]]
        for b, v in enumerate(sys.u):
            parts.append(mul(rhs[b], differentiate(comps[a], v)))
            parts.append(neg(mul(comps[b], differentiate(rhs[a], v))))
        verdicts.append(is_identically_zero(simplify(add(*parts)), box, cfg))
    return SymmetryVerdict(tuple(verdicts))


def scalar_lambda_reduction(sys: PhaseSystem, x: PhaseVectorField, lam: LambdaMatrix,
                            box: Optional[DomainBox] = None,
                            cfg: Optional[ZeroTestConfig] = None) -> Optional[Expr]:
    """Return the scalar function lambda with Lambda Phi = lambda Phi, if one
    exists, else None.  The scalar is read off the first component where Phi
    does not vanish on the box and cross-validated against all others."""
    _require_autonomous(x)
    _require_side(sys, lam)
    comps = x.components
    lam_phi = lam.on_shell(sys).vec(comps)
    nonzero = [not is_identically_zero(c, box, cfg).ok for c in comps]
    if not any(nonzero):
        raise ValueError("all phase components of the field vanish on the box")
    for a in range(2 * sys.n):
        for b in range(a + 1, 2 * sys.n):
            cross = add(mul(lam_phi[a], comps[b]), neg(mul(lam_phi[b], comps[a])))
            if not is_identically_zero(cross, box, cfg).ok:
                return None
    pivot = nonzero.index(True)
    scalar = simplify(div(lam_phi[pivot], comps[pivot]))
    for b in range(2 * sys.n):
        resid = add(lam_phi[b], neg(mul(scalar, comps[b])))
        if not is_identically_zero(resid, box, cfg).ok:
            return None
    return scalar


def _apply_j(sys: PhaseSystem, v: Sequence[Expr]) -> tuple:
    n = sys.n
    return tuple(v[n:]) + tuple(neg(c) for c in v[:n])


@dataclass(frozen=True)
class LambdaConstantGReport:
    """Controlled conservation of a generating function G:
    grad(dG/dt along solutions) = J Lambda J grad G, componentwise; when
    Lambda Phi = lambda Phi also grad(rate) = -lambda grad G."""

    g: Expr
    rate: Expr
    gradient_checks: tuple
    scalar: Optional[Expr] = None
    scalar_checks: tuple = ()

    @property
    def holds(self) -> bool:
        return all(v.ok for _, v in self.gradient_checks)

    @property
    def scalar_holds(self) -> Optional[bool]:
        if not self.scalar_checks:
            return None
        return all(v.ok for _, v in self.scalar_checks)


def check_lambda_constant_G(sys: PhaseSystem, x: PhaseVectorField, lam: LambdaMatrix,
                            g: Expr, box: Optional[DomainBox] = None,
                            cfg: Optional[ZeroTestConfig] = None) -> LambdaConstantGReport:
    """Verify the deviation law for a generating function G of X."""
    _require_autonomous(x)
    _require_side(sys, lam)
    rep = generating_function_test(sys, x, box, candidate_g=g, cfg=cfg)
    if not rep.g_verified:
        raise ValueError("the candidate is not a generating function of the field")
    gv = rep.verified_g
    rate = simplify(total_time_derivative(sys, gv))
    grad_g = [differentiate(gv, v) for v in sys.u]
    target = _apply_j(sys, lam.on_shell(sys).vec(_apply_j(sys, grad_g)))
    checks = tuple(
        (f"d(rate)/d{v}", is_identically_zero(
            add(differentiate(rate, v), neg(target[a])), box, cfg))
        for a, v in enumerate(sys.u))

    scalar = None
    scalar_checks = ()
    try:
        scalar = scalar_lambda_reduction(sys, x, lam, box, cfg)
    except ValueError:
        scalar = None
    if scalar is not None:
        scalar_checks = tuple(
            (f"d(rate)/d{v}+lambda*dG/d{v}", is_identically_zero(
                add(differentiate(rate, v), mul(scalar, grad_g[a])), box, cfg))
            for a, v in enumerate(sys.u))
    return LambdaConstantGReport(gv, rate, checks, scalar, scalar_checks)


@dataclass(frozen=True)
class LambdaConstantSReport:
    """Controlled conservation of the divergence quantity S:
    dS/dt along solutions = -div(Lambda Phi)."""

    s: Expr
    rate: Expr
    divergence: Expr
    verdict: ZeroVerdict

    @property
    def holds(self) -> bool:
        return self.verdict.ok


def check_lambda_constant_S(sys: PhaseSystem, x: PhaseVectorField, lam: LambdaMatrix,
                            box: Optional[DomainBox] = None,
                            cfg: Optional[ZeroTestConfig] = None) -> LambdaConstantSReport:
    _require_autonomous(x)
    _require_side(sys, lam)
    s = compute_S(sys, x)
    rate = simplify(total_time_derivative(sys, s))
    lam_phi = lam.on_shell(sys).vec(x.components)
    divergence = simplify(add(*[differentiate(c, v) for c, v in zip(lam_phi, sys.u)]))
    verdict = is_identically_zero(add(rate, divergence), box, cfg)
    return LambdaConstantSReport(s, rate, divergence, verdict)


@dataclass(frozen=True)
class ChartReport:
    invariance: tuple
    rectification: ZeroVerdict
    inversion: tuple

    @property
    def holds(self) -> bool:
        return (all(v.ok for _, v in self.invariance)
                and self.rectification.ok
                and all(v.ok for _, v in self.inversion))


def verify_chart(sys: PhaseSystem, x: PhaseVectorField, chart: ReductionChart,
                 box: Optional[DomainBox] = None,
                 cfg: Optional[ZeroTestConfig] = None) -> ChartReport:
    """Check X w_j = 0, X z = 1, and that the inverse map really inverts
    the chart (forward after inverse is the identity on (w, z))."""
    _require_autonomous(x)
    if len(chart.w) != 2 * sys.n - 1:
        raise ChartError(f"need {2*sys.n - 1} invariants, got {len(chart.w)}")
    missing = [v for v in sys.u if v not in chart.inverse]
    if missing:
        raise ChartError(f"inverse map misses variables: {missing}")
    invariance = tuple(
        (f"X{name}", is_identically_zero(x.apply(sys, wj), box, cfg))
        for name, wj in zip(chart.w_names, chart.w))
    rect = is_identically_zero(add(x.apply(sys, chart.z), coerce(-1)), box, cfg)
    inversion = []
    for name, wj in zip(chart.w_names, chart.w):
        resid = add(substitute(wj, chart.inverse), neg(Var(name)))
        inversion.append((f"{name} after inverse", is_identically_zero(resid, box, cfg)))
    resid = add(substitute(chart.z, chart.inverse), neg(Var(chart.z_name)))
    inversion.append(("z after inverse", is_identically_zero(resid, box, cfg)))
    return ChartReport(invariance, rect, tuple(inversion))


@dataclass(frozen=True)
class ReducedSystem:
    """Equations of motion rewritten in chart variables: dw_j/dt = W_j,
    dz/dt = Z, with the z-dependence certificates M."""

    w_rhs: tuple
    z_rhs: Expr
    m: tuple
    dz_checks: tuple
    z_free: tuple

    @property
    def holds(self) -> bool:
        return all(v.ok for _, v in self.dz_checks)


def reduced_system(sys: PhaseSystem, x: PhaseVectorField, lam: LambdaMatrix,
                   chart: ReductionChart, box: Optional[DomainBox] = None,
                   cfg: Optional[ZeroTestConfig] = None) -> ReducedSystem:
    """Rewrite the flow in chart coordinates and certify that the explicit
    z-dependence of each right-hand side equals the matrix term M."""
    report = verify_chart(sys, x, chart, box, cfg)
    if not report.holds:
        raise ChartError("chart verification failed; reduction is undefined")
    chart_vars = set(chart.variables())

    def to_chart(e: Expr, what: str) -> Expr:
        out = simplify(substitute(simplify(e), chart.inverse))
        stray = free_vars(out) - chart_vars
        if stray:
            raise ChartError(f"{what} still contains phase variables {sorted(stray)}")
        return out

    lam_phi = lam.on_shell(sys).vec(x.components)
    w_rhs, m_terms = [], []
    for name, wj in zip(chart.w_names, chart.w):
        w_rhs.append(to_chart(total_time_derivative(sys, wj), f"d{name}/dt"))
        mj = add(*[mul(differentiate(wj, v), lam_phi[a]) for a, v in enumerate(sys.u)])
        m_terms.append(to_chart(mj, f"M for {name}"))
    z_rhs = to_chart(total_time_derivative(sys, chart.z), "dz/dt")
    mz = add(*[mul(differentiate(chart.z, v), lam_phi[a]) for a, v in enumerate(sys.u)])
    m_terms.append(to_chart(mz, "M for z"))

    checks = []
    for name, wj, mj in zip(chart.w_names, w_rhs, m_terms):
        checks.append((f"d({name} rate)/dz", is_identically_zero(
            add(differentiate(wj, chart.z_name), neg(mj)), box, cfg)))
    checks.append(("d(z rate)/dz", is_identically_zero(
        add(differentiate(z_rhs, chart.z_name), neg(m_terms[-1])), box, cfg)))
    z_free = tuple(is_identically_zero(mj, box, cfg).ok for mj in m_terms)
    return ReducedSystem(tuple(w_rhs), z_rhs, tuple(m_terms), tuple(checks), z_free)


@dataclass(frozen=True)
class SeparatedGReport:
    """When Lambda Phi = lambda Phi and G is a chart coordinate, its
    reduced equation closes: dG/dt = gamma(t, G)."""

    gamma: Optional[Expr]
    checks: tuple

    @property
    def holds(self) -> bool:
        return self.gamma is not None and all(v.ok for _, v in self.checks)


def check_separated_G(sys: PhaseSystem, x: PhaseVectorField, lam: LambdaMatrix,
                      chart: ReductionChart, g_index: int,
                      box: Optional[DomainBox] = None,
                      cfg: Optional[ZeroTestConfig] = None) -> SeparatedGReport:
    """Verify that the reduced equation for the chart coordinate at
    g_index involves only (t, G); returns gamma with G as the variable."""
    if not 0 <= g_index < len(chart.w):
        raise ValueError(f"g_index {g_index} out of range")
    scalar = scalar_lambda_reduction(sys, x, lam, box, cfg)
    if scalar is None:
        raise ValueError("Lambda Phi is not a scalar multiple of Phi; "
                         "no separated equation is implied")
    rs = reduced_system(sys, x, lam, chart, box, cfg)
    rate = rs.w_rhs[g_index]
    checks = []
    for name in chart.w_names:
        if name == chart.w_names[g_index]:
            continue
        checks.append((f"d(G rate)/d{name}", is_identically_zero(
            differentiate(rate, name), box, cfg)))
    checks.append(("d(G rate)/dz", is_identically_zero(
        differentiate(rate, chart.z_name), box, cfg)))
    if not all(v.ok for _, v in checks):
        return SeparatedGReport(None, tuple(checks))
    gamma = simplify(substitute(rate, {chart.w_names[g_index]: Var("G")}))
    return SeparatedGReport(gamma, tuple(checks))


def verify_time_dependent_integral(sys: PhaseSystem, integral: Expr,
                                   box: Optional[DomainBox] = None,
                                   cfg: Optional[ZeroTestConfig] = None) -> ZeroVerdict:
    """Zero verdict on the total time derivative of an explicitly
    time-dependent candidate integral."""
    return check_first_integral(sys, integral, box, cfg)
