## Exact point symmetries of the harmonic oscillator: the symmetry
## condition, the divergence quantity S, and how a symmetry is classified
## by the conserved structure it carries.

from lamsym import (
    PhaseSystem,
    PhaseVectorField,
    check_first_integral,
    check_point_symmetry,
    classify_symmetry_case,
    compute_S,
    format_expr,
    generating_function_test,
    hamiltonian_vector_field,
    parse,
    scale_field,
)

sys = PhaseSystem(1, parse("(p1^2+q1^2)/2"))

## The scaling field q d/dq + p d/dp is a symmetry, but S is the constant 2:
## no first integral comes from it.
x = PhaseVectorField((parse("q1"),), (parse("p1"),))
print("scaling is a symmetry:", check_point_symmetry(sys, x).holds)
print("S =", format_expr(compute_S(sys, x)))
print("classified as:", classify_symmetry_case(sys, x).tag)

## Multiplying by the first integral 2H gives a new symmetry whose S is
## itself a first integral (S1 = 8H).
x1 = scale_field(x, parse("p1^2+q1^2"))
s1 = compute_S(sys, x1)
print("\nscaled field S1 =", format_expr(s1))
print("S1 conserved:", check_first_integral(sys, s1).ok)
print("classified as:", classify_symmetry_case(sys, x1).tag)

## The flow of H itself is generated by G = H: gradients match and the
## rate of change of G is a pure function of t (here zero).
flow = hamiltonian_vector_field(sys, sys.hamiltonian)
rep = generating_function_test(sys, flow, candidate_g=sys.hamiltonian)
print("\nflow generated by H:", rep.holds)
print("classified as:", classify_symmetry_case(sys, flow, candidate_g=sys.hamiltonian).tag)

## In two degrees of freedom the opposite scaling has S = 0 and still no
## generating function: the closedness conditions fail.
sys2 = PhaseSystem(2, parse("(p1^2+q1^2)/2 + (p2^2+q2^2)/2"))
x2 = PhaseVectorField((parse("q1"), parse("-q2")), (parse("p1"), parse("-p2")))
print("\nopposite scaling S =", format_expr(compute_S(sys2, x2)))
rep2 = generating_function_test(sys2, x2)
print("closedness holds:", rep2.closed)
print("classified as:", classify_symmetry_case(sys2, x2).tag)
