from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from unarycm.phase_space import (
    PhasePolynomial,
    Y,
    Z,
    check_semidirect_relations,
    liouvillian,
    poisson_bracket,
    standard_operators,
)

Qs, Ps = sp.symbols("q p")

coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=6)
monomials = st.tuples(st.integers(0, 3), st.integers(0, 3))
polys = st.dictionaries(monomials, coeffs, max_size=4).map(PhasePolynomial)


def to_sympy(u: PhasePolynomial):
    return sum((sp.Rational(c.real.numerator, c.real.denominator) * Qs**i * Ps**j for (i, j), c in u.terms.items()), sp.Integer(0))


def sympy_bracket(u, v):
    """Independent oracle: {u, v} = u_p v_q - u_q v_p."""
    return sp.expand(sp.diff(u, Ps) * sp.diff(v, Qs) - sp.diff(u, Qs) * sp.diff(v, Ps))


def test_bracket_sign_convention():
    q, p = PhasePolynomial.q(), PhasePolynomial.p()
    assert poisson_bracket(p, q) == 1
    assert poisson_bracket(q, p) == -1
    assert poisson_bracket(p, q * q) == 2 * q


@given(polys, polys)
def test_bracket_matches_sympy(u, v):
    assert sp.expand(to_sympy(poisson_bracket(u, v)) - sympy_bracket(to_sympy(u), to_sympy(v))) == 0


@given(polys, polys, polys)
def test_semidirect_relations(u, v, w):
    assert check_semidirect_relations(u, v, w).ok


@given(polys, polys, polys)
def test_jacobi_and_leibniz(u, v, w):
    jac = poisson_bracket(u, poisson_bracket(v, w)) + poisson_bracket(v, poisson_bracket(w, u)) + poisson_bracket(w, poisson_bracket(u, v))
    assert jac.is_zero()
    assert poisson_bracket(u, v * w) == poisson_bracket(u, v) * w + v * poisson_bracket(u, w)
    assert poisson_bracket(u, v) == -poisson_bracket(v, u)


@pytest.mark.parametrize("u, v", [("q^2", "p^2"), ("q p", "q^2"), ("p^3", "q")])
def test_semidirect_examples(u, v):
    rep = check_semidirect_relations(u, v, "q^2 p + 3 p")
    assert rep.ok, rep.residuals


def test_standard_operators_act_as_derivatives():
    ops = standard_operators()
    u = PhasePolynomial.parse("q^3 p^2")
    assert ops["Q"](u) == u.dq()
    assert ops["P"](u) == u.dp()
    assert ops["q"](u) == PhasePolynomial.parse("q^4 p^2")
    # [Q, q] = 1 as operators
    assert ops["Q"](ops["q"](u)) - ops["q"](ops["Q"](u)) == u


def test_composition_applies_right_to_left():
    comp = Z("p") @ Y("q")
    assert comp(PhasePolynomial.constant(1)) == 1  # d/dq (q * 1)
    assert (Y("q") @ Z("p"))(PhasePolynomial.constant(1)).is_zero()


def test_liouvillian_of_oscillator_rotates():
    L = liouvillian(PhasePolynomial.parse("1/2 q^2 + 1/2 p^2"))
    assert L(PhasePolynomial.q()) == PhasePolynomial.p()
    assert L(PhasePolynomial.p()) == -PhasePolynomial.q()


def test_parse_and_str_round_trip():
    u = PhasePolynomial.parse("3/2 q^2 p - j p^3 + 4")
    assert PhasePolynomial.parse(str(u)) == u
    assert u.degree() == 3
    assert PhasePolynomial().degree() == -1


def test_evaluate_matches_terms():
    u = PhasePolynomial({(2, 1): Fraction(1, 2), (0, 0): 3})
    q, p = np.array([1.0, 2.0]), np.array([3.0, -1.0])
    assert np.allclose(u.evaluate(q, p), 0.5 * q**2 * p + 3)


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        PhasePolynomial({(-1, 0): 1})
