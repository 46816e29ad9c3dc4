import random

import pytest

from lamsym.expr import (
    Const,
    Var,
    evaluate,
    is_identically_zero,
    neg,
    parse,
    simplify,
)
from lamsym.lambda_symmetry import (
    LAGRANGIAN_SIDE,
    LambdaMatrix,
    check_lambda_constant_G,
    check_lambda_constant_S,
    check_lambda_symmetry,
)
from lamsym.lagrangian import (
    ConfigVectorField,
    LagrangianSystem,
    check_lagrangian_lambda_invariance,
    check_scalar_condition,
    check_noether_lambda,
    config_scalar_reduction,
    conjugate_momenta,
    extend_lambda,
    extend_vector_field,
    extend_vector_field_velocity_dependent,
    hessian_regularity,
    partial_reduction_check,
    verify_legendre,
)
from lamsym.mechanics import PhaseSystem, canonical_equations
from fractions import Fraction

ZERO = Const(Fraction(0))


def two_scale_lagrangian():
    return LagrangianSystem(
        2, parse("(dq1/q1 - q1)^2/2 + (dq1 - q1*dq2)^2*exp(-2*q2)/2 + q1*exp(-q2)"))


def two_scale_field():
    return ConfigVectorField((parse("q1"), parse("1")))


def two_scale_matrix():
    return LambdaMatrix.diagonal([parse("q1"), parse("q1")], LAGRANGIAN_SIDE)


TWO_SCALE_H = parse(
    "q1^2*p1^2/2 + q1^2*p1 + q1*p1*p2 + q1*p2 + p2^2/2"
    " + p2^2*exp(2*q2)/(2*q1^2) - q1*exp(-q2)")
TWO_SCALE_VMAP = (parse("q1^2*p1+q1^2+q1*p2"),
                  parse("q1*p1+q1+p2+p2*exp(2*q2)/q1^2"))


def log_pair_lagrangian():
    return LagrangianSystem(
        2, parse("(dq1/q1 - log(q1))^2/2 + (dq1/q1 + dq2/q2)^2/2"))


def log_pair_field():
    return ConfigVectorField((parse("q1"), parse("-q2")))


def log_pair_matrix():
    return LambdaMatrix.diagonal([parse("1"), parse("1")], LAGRANGIAN_SIDE)


LOG_PAIR_H = parse(
    "q1^2*p1^2/2 + q2^2*p2^2 + (q1*p1-q2*p2)*log(q1) - q1*q2*p1*p2")
LOG_PAIR_VMAP = (parse("q1*(q1*p1 - q2*p2 + log(q1))"),
                 parse("q2*(2*q2*p2 - q1*p1 - log(q1))"))


def exponential_lagrangian():
    return LagrangianSystem(1, parse("(dq1/q1 + 1)^2*exp(-2*q1)/2"))


def exponential_field():
    return ConfigVectorField((parse("q1"),))


def exponential_matrix():
    return LambdaMatrix(((parse("q1+dq1"),),), LAGRANGIAN_SIDE, velocity_dependent=True)


EXPONENTIAL_H = parse("q1^2*p1^2*exp(2*q1)/2 - q1*p1")
EXPONENTIAL_VMAP = (parse("q1^2*p1*exp(2*q1) - q1"),)


# ------------------------------------------------------------- invariance

def test_two_scale_lagrangian_is_matrix_invariant():
    assert check_lagrangian_lambda_invariance(
        two_scale_lagrangian(), two_scale_field(), two_scale_matrix()).ok


def test_exponential_lagrangian_velocity_dependent_invariance():
    assert check_lagrangian_lambda_invariance(
        exponential_lagrangian(), exponential_field(), exponential_matrix()).ok


def test_log_pair_is_not_exactly_invariant():
    v = check_lagrangian_lambda_invariance(
        log_pair_lagrangian(), log_pair_field(),
        LambdaMatrix.zeros(2, LAGRANGIAN_SIDE))
    assert not v.ok


def test_log_pair_is_matrix_invariant():
    assert check_lagrangian_lambda_invariance(
        log_pair_lagrangian(), log_pair_field(), log_pair_matrix()).ok


# ------------------------------------------------------------- momenta

def test_free_particle_momentum():
    lag = LagrangianSystem(1, parse("dq1^2/2"))
    assert conjugate_momenta(lag) == (Var("dq1"),)


def test_exponential_momentum_formula_and_finite_differences():
    lag = exponential_lagrangian()
    mom = conjugate_momenta(lag)[0]
    assert is_identically_zero(mom - parse("(dq1/q1 + 1)*exp(-2*q1)/q1")).ok
    rng = random.Random(2)
    for _ in range(5):
        point = {"q1": rng.uniform(0.3, 1.1), "dq1": rng.uniform(0.3, 1.1)}
        h = 1e-6
        up = evaluate(lag.lagrangian, {**point, "dq1": point["dq1"] + h})
        dn = evaluate(lag.lagrangian, {**point, "dq1": point["dq1"] - h})
        assert abs((up - dn) / (2 * h) - evaluate(mom, point)) < 1e-7


def test_missing_velocity_gives_zero_momentum_and_singular_hessian():
    lag = LagrangianSystem(2, parse("dq1^2/2 + q2^2"))
    moms = conjugate_momenta(lag)
    assert moms[1] == ZERO
    regular, _ = hessian_regularity(lag)
    assert not regular


# ------------------------------------------------------------- legendre

def test_free_particle_legendre():
    lag = LagrangianSystem(1, parse("dq1^2/2"))
    rep = verify_legendre(lag, [Var("p1")], parse("p1^2/2"))
    assert rep.holds


def test_log_pair_legendre_against_printed_hamiltonian():
    rep = verify_legendre(log_pair_lagrangian(), LOG_PAIR_VMAP, LOG_PAIR_H)
    assert rep.holds


def test_two_scale_legendre_and_canonical_equations():
    rep = verify_legendre(two_scale_lagrangian(), TWO_SCALE_VMAP, TWO_SCALE_H)
    assert rep.holds
    f = canonical_equations(PhaseSystem(2, TWO_SCALE_H))
    displayed = (
        "q1^2*p1+q1^2+q1*p2",
        "p2*exp(2*q2)/q1^2 + q1*p1 + q1 + p2",
        "-q1*p1^2 - 2*q1*p1 + p2^2*exp(2*q2)/q1^3 - p1*p2 - p2 + exp(-q2)",
        "-p2^2*exp(2*q2)/q1^2 - q1*exp(-q2)",
    )
    for got, want in zip(f, displayed):
        assert is_identically_zero(got - parse(want)).ok


def test_legendre_rejects_wrong_hamiltonian():
    lag = LagrangianSystem(1, parse("dq1^2/2"))
    rep = verify_legendre(lag, [Var("p1")], parse("p1^2"))
    assert not rep.holds


def test_legendre_rejects_singular_lagrangian():
    lag = LagrangianSystem(1, parse("q1*dq1"))
    with pytest.raises(ValueError, match="singular"):
        verify_legendre(lag, [Var("p1")], parse("p1^2/2"))


# ------------------------------------------------------------- extensions

def test_two_scale_field_extension():
    x, g = extend_vector_field(two_scale_field())
    assert [simplify(c) for c in x.components] == [
        parse("q1"), Const(Fraction(1)), simplify(parse("-p1")), ZERO]
    assert g == simplify(parse("q1*p1+p2"))


def test_log_pair_field_extension():
    x, g = extend_vector_field(log_pair_field())
    assert [simplify(c) for c in x.components] == [
        parse("q1"), simplify(parse("-q2")), simplify(parse("-p1")), Var("p2")]
    assert g == simplify(parse("q1*p1-q2*p2"))


def test_constant_field_extension_has_zero_momentum_part():
    x, g = extend_vector_field(ConfigVectorField((Const(Fraction(1)), Const(Fraction(2)))))
    assert x.psi == (ZERO, ZERO)
    assert g == simplify(parse("p1+2*p2"))


def test_velocity_dependent_extension_exponential():
    x = extend_vector_field_velocity_dependent(
        exponential_lagrangian(), exponential_field(), exponential_matrix(),
        velocity_map=EXPONENTIAL_VMAP)
    assert is_identically_zero(x.psi[0] - parse("-q1*p1-p1")).ok


def test_velocity_free_matrix_extension_agrees_with_plain_extension():
    x1 = extend_vector_field_velocity_dependent(
        two_scale_lagrangian(), two_scale_field(), two_scale_matrix())
    x2, _ = extend_vector_field(two_scale_field())
    for a, b in zip(x1.components, x2.components):
        assert is_identically_zero(a - b).ok


def test_two_scale_matrix_extension_entrywise():
    rep = extend_lambda(two_scale_field(), two_scale_matrix())
    assert rep.solved and rep.holds
    displayed = (
        ("q1", "0", "0", "0"),
        ("0", "q1", "0", "0"),
        ("-p1", "-p2", "q1", "0"),
        ("0", "0", "0", "0"),
    )
    for row, want_row in zip(rep.matrix.entries, displayed):
        for e, want in zip(row, want_row):
            assert is_identically_zero(e - parse(want)).ok


def test_log_pair_matrix_extension_is_identity():
    rep = extend_lambda(log_pair_field(), log_pair_matrix())
    assert rep.solved and rep.holds
    for i, row in enumerate(rep.matrix.entries):
        for j, e in enumerate(row):
            assert simplify(e) == (Const(Fraction(1)) if i == j else ZERO)


def test_zero_matrix_extension_is_zero():
    rep = extend_lambda(two_scale_field(), LambdaMatrix.zeros(2, LAGRANGIAN_SIDE))
    assert all(simplify(e) == ZERO for row in rep.matrix.entries for e in row)


def test_matrix_extension_accepts_verified_candidate():
    rep = extend_lambda(two_scale_field(), two_scale_matrix(),
                        candidate_lambda2=[[parse("q1"), ZERO], [ZERO, ZERO]])
    assert rep.holds and not rep.solved


def test_matrix_extension_rejects_bad_candidate():
    rep = extend_lambda(two_scale_field(), two_scale_matrix(),
                        candidate_lambda2=[[parse("q2"), ZERO], [ZERO, ZERO]])
    assert not rep.holds


# ------------------------------------------------------------- noether check

def test_two_scale_noether_rate_along_trajectories():
    rep = check_noether_lambda(
        two_scale_lagrangian(), two_scale_field(), two_scale_matrix(),
        initial_conditions=[(0.8, 0.4, 0.3, 0.2), (1.0, 0.6, -0.2, 0.1),
                            (0.9, 0.3, 0.1, -0.3)])
    assert rep.holds
    assert rep.max_residual < 1e-5


def test_exact_invariance_conserves_momentum():
    lag = LagrangianSystem(2, parse("dq1^2/2 + dq2^2/2 + q2^2/2"))
    xl = ConfigVectorField((Const(Fraction(1)), ZERO))
    rep = check_noether_lambda(lag, xl, LambdaMatrix.zeros(2, LAGRANGIAN_SIDE),
                               initial_conditions=[(0.5, 0.5, 0.3, -0.2)])
    assert rep.max_residual < 1e-10


def test_exponential_noether_rate():
    rep = check_noether_lambda(
        exponential_lagrangian(), exponential_field(), exponential_matrix(),
        initial_conditions=[(0.5, 0.1), (0.8, -0.2)])
    assert rep.holds


# ------------------------------------------------------------- scalar condition

def test_log_pair_scalar_is_constant_and_extends():
    rep = check_scalar_condition(log_pair_field(), log_pair_matrix())
    assert rep.scalar == Const(Fraction(1))
    assert rep.is_constant
    assert rep.holds
    assert len(rep.extended_checks) == 4


def test_two_scale_scalar_is_not_constant():
    rep = check_scalar_condition(two_scale_field(), two_scale_matrix())
    assert rep.scalar == Var("q1")
    assert not rep.is_constant
    assert rep.extended_checks == ()


def test_zero_matrix_scalar_is_zero():
    rep = check_scalar_condition(two_scale_field(),
                                    LambdaMatrix.zeros(2, LAGRANGIAN_SIDE))
    assert rep.scalar == ZERO
    assert rep.is_constant
    assert rep.holds


def test_non_proportional_matrix_has_no_scalar():
    laml = LambdaMatrix.diagonal([parse("q1"), parse("q2")], LAGRANGIAN_SIDE)
    assert config_scalar_reduction(log_pair_field(), laml) is None


# ------------------------------------------------------------- partial reduction

def test_log_pair_partial_reduction():
    rep = partial_reduction_check(
        log_pair_lagrangian(), log_pair_field(), log_pair_matrix(),
        eta=[parse("q1*q2")], theta=parse("dq1/q1 - log(q1)"),
        reduced_l=parse("theta^2/2 + deta1^2/(2*eta1^2)"),
        particular=[parse("q1*log(q1)"), parse("q2*(1/2 - log(q1))")])
    assert rep.holds
    assert rep.el_residual < 1e-5


def test_exponential_partial_reduction_consistent_branch():
    rep = partial_reduction_check(
        exponential_lagrangian(), exponential_field(), exponential_matrix(),
        eta=[], theta=parse("(dq1/q1)*exp(-q1) + exp(-q1)"),
        reduced_l=parse("theta^2/2"),
        particular=[parse("-q1")])
    assert rep.holds


def test_exponential_partial_reduction_opposite_branch():
    # the opposite sign satisfies the full equations numerically but does
    # not come from the first-order condition d(reduced L)/d(theta) = 0
    rep = partial_reduction_check(
        exponential_lagrangian(), exponential_field(), exponential_matrix(),
        eta=[], theta=parse("(dq1/q1)*exp(-q1) + exp(-q1)"),
        reduced_l=parse("theta^2/2"),
        particular=[parse("q1")])
    assert not rep.annihilation.ok
    assert rep.el_residual < 1e-5
    assert not rep.holds


def test_partial_reduction_rejects_non_invariant_theta():
    rep = partial_reduction_check(
        log_pair_lagrangian(), log_pair_field(), log_pair_matrix(),
        eta=[parse("q1*q2")], theta=parse("dq1/q1 - log(q1) + q1"),
        reduced_l=parse("theta^2/2 + deta1^2/(2*eta1^2)"),
        particular=[parse("q1*log(q1)"), parse("q2*(1/2 - log(q1))")])
    bad = [lbl for lbl, v in rep.invariance if not v.ok]
    assert "X theta" in bad
    assert not rep.holds


# ------------------------------------------------------------- end to end

def test_extension_chain_two_scale():
    # matrix-invariant Lagrangian -> extended field and matrix make the
    # canonical equations matrix-symmetric, and G = phi . p obeys the
    # deviation law with rate -q1 G
    sys = PhaseSystem(2, TWO_SCALE_H)
    x, g = extend_vector_field(two_scale_field())
    ext = extend_lambda(two_scale_field(), two_scale_matrix())
    assert check_lambda_symmetry(sys, x, ext.matrix).holds
    rep = check_lambda_constant_G(sys, x, ext.matrix, g)
    assert rep.holds
    assert is_identically_zero(rep.rate + parse("q1") * rep.g).ok


def test_extension_chain_log_pair():
    sys = PhaseSystem(2, LOG_PAIR_H)
    x, g = extend_vector_field(log_pair_field())
    ext = extend_lambda(log_pair_field(), log_pair_matrix())
    assert check_lambda_symmetry(sys, x, ext.matrix).holds
    rep = check_lambda_constant_G(sys, x, ext.matrix, g)
    assert rep.holds
    assert is_identically_zero(rep.rate + rep.g).ok
    assert rep.scalar == Const(Fraction(1))


def test_extension_chain_exponential_velocity_dependent():
    sys = PhaseSystem(1, EXPONENTIAL_H)
    x = extend_vector_field_velocity_dependent(
        exponential_lagrangian(), exponential_field(), exponential_matrix(),
        velocity_map=EXPONENTIAL_VMAP)
    ext = extend_lambda(exponential_field(), exponential_matrix(),
                        candidate_lambda2=[[parse("q1+dq1")]])
    assert check_lambda_symmetry(sys, x, ext.matrix).holds
    rep = check_lambda_constant_S(sys, x, ext.matrix)
    assert rep.holds
    assert simplify(rep.s) == simplify(parse("-q1"))


def test_extension_generating_function_regenerates_the_field():
    sys = PhaseSystem(2, TWO_SCALE_H)
    from lamsym.mechanics import hamiltonian_vector_field
    x, g = extend_vector_field(two_scale_field())
    regenerated = hamiltonian_vector_field(sys, g)
    for a, b in zip(regenerated.components, x.components):
        assert is_identically_zero(a - b).ok
