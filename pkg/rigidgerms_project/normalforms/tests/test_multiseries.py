from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from ..exceptions import ConstantTermError, DimensionMismatch, SingularLinearPartError
from ..germlang import parse_expr
from ..multiseries import (
    EXACT_FIELD,
    FLOAT_FIELD,
    TruncatedSeries,
    add,
    compose,
    compose_maps,
    identity_map,
    invert_diffeo,
    monomial_pow,
    mul,
    multi_indices,
    unit_exp,
    unit_log,
    unit_pow_matrix,
)
from .factories import (
    exact_diffeos,
    exact_maps,
    exact_series,
    exact_units,
    monomial_matrices,
    q,
    series,
)

MATRIX_ENTRIES = (-1, 0, Fraction(1, 2), 1, 2)


class SeriesArithmeticTests(SimpleTestCase):

    def test_difference_of_squares(self):
        x = TruncatedSeries.variable(0, 2, 4, EXACT_FIELD)
        self.assertEqual((1 + x) * (1 - x), 1 - x ** 2)

    def test_products_are_cut_at_truncation(self):
        x = TruncatedSeries.variable(0, 1, 3, EXACT_FIELD)
        self.assertTrue((x ** 4).is_zero())
        self.assertEqual((x ** 3).coefficient((3,)), q(1))

    def test_mixed_truncation_uses_the_smaller_degree(self):
        a = series('x + x^3', trunc=3)
        b = series('y', trunc=2)
        self.assertEqual((a + b).trunc, 2)
        self.assertEqual((a + b).coefficient((3, 0)), q(0))

    def test_dimension_mismatch(self):
        a = TruncatedSeries.variable(0, 2, 3, EXACT_FIELD)
        b = TruncatedSeries.variable(0, 3, 3, EXACT_FIELD)
        with self.assertRaises(DimensionMismatch):
            a + b

    def test_module_level_operations(self):
        a, b = series('x + y'), series('x - y')
        self.assertEqual(add(a, b), series('2*x'))
        self.assertEqual(mul(a, b), series('x^2 - y^2'))

    def test_unit_inverse(self):
        u = series('1 + x + y^2')
        self.assertEqual(u * u.unit_inverse(), TruncatedSeries.constant(1, 2, 6, EXACT_FIELD))

    def test_non_unit_has_no_inverse(self):
        with self.assertRaises(ConstantTermError):
            series('x + y').unit_inverse()

    def test_float_zero_test_uses_tolerance(self):
        s = TruncatedSeries(1, 2, {(1,): 1e-15, (2,): 1.0}, FLOAT_FIELD)
        self.assertEqual(s.support(), [(2,)])

    def test_multi_indices_graded_order(self):
        self.assertEqual(list(multi_indices(2, 2)), [(2, 0), (1, 1), (0, 2)])

    @settings(max_examples=30, deadline=None)
    @given(exact_series(), exact_series(), exact_series())
    def test_distributivity(self, a, b, c):
        self.assertEqual(a * (b + c), a * b + a * c)

    @settings(max_examples=30, deadline=None)
    @given(exact_units())
    def test_inverse_of_random_unit(self, u):
        self.assertEqual(u * u.unit_inverse(), TruncatedSeries.constant(1, 2, 5, EXACT_FIELD))


class CompositionTests(SimpleTestCase):

    def test_compose_polynomial(self):
        outer = series('x^2 + y')
        inner = [series('x + y'), series('y')]
        self.assertEqual(compose(outer, inner), series('(x + y)^2 + y'))

    def test_identity_is_neutral(self):
        f = [series('x/2 + y^2'), series('y/3 + x*y')]
        self.assertEqual(compose_maps(f, identity_map(2, 6, EXACT_FIELD)), f)

    def test_monomial_pow_columns(self):
        x, y = identity_map(2, 6, EXACT_FIELD)
        out = monomial_pow([x, y], [[2, 0], [1, 1]])
        self.assertEqual(out, [series('x^2*y'), series('y')])

    def test_invert_diffeo(self):
        f = [series('x + y^2'), series('y + x^2')]
        g = invert_diffeo(f)
        self.assertEqual(compose_maps(f, g), identity_map(2, 6, EXACT_FIELD))
        self.assertEqual(compose_maps(g, f), identity_map(2, 6, EXACT_FIELD))

    def test_invert_diffeo_with_linear_part(self):
        f = [series('2*x + y + x*y'), series('y/3 + x^3')]
        g = invert_diffeo(f)
        self.assertEqual(compose_maps(f, g), identity_map(2, 6, EXACT_FIELD))

    def test_invert_singular(self):
        with self.assertRaises(SingularLinearPartError):
            invert_diffeo([series('x + y'), series('2*x + 2*y')])

class MapPropertyTests(SimpleTestCase):

    @settings(max_examples=25, deadline=None)
    @given(exact_maps(), exact_maps(), exact_maps())
    def test_composition_is_associative(self, f, g, h):
        self.assertEqual(compose_maps(f, compose_maps(g, h)),
                         compose_maps(compose_maps(f, g), h))

    @settings(max_examples=30, deadline=None)
    @given(monomial_matrices(), monomial_matrices())
    def test_monomial_maps_multiply_exponents(self, A, B):
        x = identity_map(2, 12, EXACT_FIELD)
        AB = (np.array(A, dtype=int) @ np.array(B, dtype=int)).tolist()
        self.assertEqual(monomial_pow(monomial_pow(x, A), B), monomial_pow(x, AB))

    @settings(max_examples=20, deadline=None)
    @given(exact_units(trunc=4), exact_units(trunc=4),
           st.lists(st.sampled_from(MATRIX_ENTRIES), min_size=4, max_size=4),
           st.lists(st.sampled_from(MATRIX_ENTRIES), min_size=4, max_size=4))
    def test_unit_powers_multiply_exponents(self, u, w, first, second):
        Q1 = [first[:2], first[2:]]
        Q2 = [second[:2], second[2:]]
        Q = [[sum(Q1[l][m] * Q2[m][k] for m in range(2)) for k in range(2)] for l in range(2)]
        self.assertEqual(unit_pow_matrix(unit_pow_matrix([u, w], Q1), Q2),
                         unit_pow_matrix([u, w], Q))

    @settings(max_examples=25, deadline=None)
    @given(exact_diffeos())
    def test_inverse_of_random_diffeo(self, f):
        g = invert_diffeo(f)
        identity = identity_map(2, 4, EXACT_FIELD)
        self.assertEqual(compose_maps(f, g), identity)
        self.assertEqual(compose_maps(g, f), identity)



class UnitFunctionTests(SimpleTestCase):

    @settings(max_examples=25, deadline=None)
    @given(exact_units())
    def test_exp_inverts_log(self, u):
        self.assertEqual(unit_exp(unit_log(u)), u)

    def test_log_needs_constant_one(self):
        with self.assertRaises(ConstantTermError):
            unit_log(series('2 + x'))

    def test_integer_matrix_power(self):
        u, w = series('1 + x'), series('1 + y')
        out = unit_pow_matrix([u, w], [[2, 0], [1, 1]])
        self.assertEqual(out, [u * u * w, w])

    def test_fractional_matrix_power(self):
        u = series('1 + x')
        half = unit_pow_matrix([u], [[Fraction(1, 2)]])[0]
        self.assertEqual(half * half, u)


class CalculusTests(SimpleTestCase):

    def test_partial_lowers_truncation(self):
        d = series('x^3 + x*y').partial(0)
        self.assertEqual(d.trunc, 5)
        self.assertEqual(d, series('3*x^2 + y', trunc=5))

    def test_tau_integral_scales_by_degree(self):
        s = series('1 + x + x^2*y')
        self.assertEqual(s.tau_integral(0), series('1 + x/2 + x^2*y/3'))

    @settings(max_examples=30, deadline=None)
    @given(exact_series(trunc=5))
    def test_tau_integral_recovers_the_increment(self, s):
        # y * integral of d/dy s(x, tau y) = s(x, y) - s(x, 0)
        y = TruncatedSeries.variable(1, 2, 5, EXACT_FIELD)
        left = y * s.partial(1).tau_integral(1)
        self.assertEqual(left, (s - s.substitute_zero(1)).truncate(4))

    @settings(max_examples=20, deadline=None)
    @given(exact_series(dim=3, trunc=6, max_terms=4), exact_maps(dim=3, trunc=6, max_terms=3))
    def test_tau_integral_of_a_composition(self, psi, f):
        # the integral over tau of d/dtau psi(f(x, y, tau z)) is psi o f - (psi o f)|z=0
        z = TruncatedSeries.variable(2, 3, 6, EXACT_FIELD)
        psi_f = compose(psi, f)
        chain = TruncatedSeries.zero(3, 5, EXACT_FIELD)
        for i in range(3):
            chain = chain + compose(psi.partial(i), f) * f[i].partial(2)
        left = z * chain.tau_integral(2)
        self.assertEqual(left, (psi_f - psi_f.substitute_zero(2)).truncate(5))


class RenderingTests(SimpleTestCase):

    def test_exact_render(self):
        self.assertEqual(EXACT_FIELD.render(q(Fraction(-3, 4))), '-3/4')
        self.assertEqual(EXACT_FIELD.render(q(5)), '5')
        self.assertEqual(EXACT_FIELD.render(EXACT_FIELD.convert((Fraction(1, 2), -1))), '1/2-1i')
        self.assertEqual(EXACT_FIELD.render(EXACT_FIELD.convert((0, 2))), '2i')

    def test_float_render_has_seventeen_digits(self):
        self.assertEqual(FLOAT_FIELD.render(FLOAT_FIELD.convert(0.1)), '0.10000000000000001')

    def test_expression_of_zero(self):
        self.assertEqual(TruncatedSeries.zero(2, 3, EXACT_FIELD).to_expression(), '0')

    @settings(max_examples=40, deadline=None)
    @given(exact_series(trunc=4))
    def test_expression_reads_back(self, s):
        text = s.to_expression(['x', 'y'])
        self.assertEqual(parse_expr(text, ['x', 'y'], 4, EXACT_FIELD), s)

    def test_complex_expression_reads_back(self):
        s = TruncatedSeries(1, 3, {(1,): (Fraction(1, 2), -1), (3,): (0, 2)}, EXACT_FIELD)
        self.assertEqual(parse_expr(s.to_expression(['t']), ['t'], 3, EXACT_FIELD), s)
