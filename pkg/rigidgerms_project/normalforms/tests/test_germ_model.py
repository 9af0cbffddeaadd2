from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings

from ..exceptions import (
    ArityError,
    ConstantTermError,
    ContractionIndeterminateError,
    NonInjectiveActionError,
    NotRigidError,
    TruncationTooLowError,
)
from ..germ_model import (
    GermMap,
    arrange,
    detect_blocks,
    is_contracting,
    is_periodic,
    jacobian_det,
    jordan_split,
    jordan_transform,
    monomial_unit_factor,
    rigidity_check,
)
from ..germlang import parse_germ_file
from ..multiseries import EXACT_FIELD, identity_map, monomial_pow
from ..normalizer import verify_conjugacy
from .factories import exact_config, fixture_path, make_germ, monomial_matrices, q, series


def load(name):
    with open(fixture_path(name), 'rb') as handle:
        return parse_germ_file(handle.read(), exact_config())[0]


class GermMapTests(SimpleTestCase):

    def test_component_count_must_match_dimension(self):
        with self.assertRaises(ArityError):
            GermMap([series('x')])

    def test_components_fix_the_origin(self):
        with self.assertRaises(ConstantTermError):
            GermMap([series('1 + x'), series('y')])

    def test_permuted_renames_coordinates(self):
        f = make_germ(['x/2', 'y/3 + x^2', 'z/5'])
        g = f.permuted([1, 0, 2])
        self.assertEqual(g.names, ['y', 'x', 'z'])
        self.assertEqual(g[0], series('y/3 + x^2', ('y', 'x', 'z')))
        self.assertEqual(g[1], series('x/2', ('y', 'x', 'z')))

    def test_iterate(self):
        f = make_germ(['x/2', 'y/3', 'z/5'])
        self.assertEqual(list(f.iterate(2)), list(make_germ(['x/4', 'y/9', 'z/25'])))


class RigidityTests(SimpleTestCase):

    def test_jacobian_of_curve_germ(self):
        f = load('anycurve.json')
        self.assertEqual(jacobian_det(f), series('x^2/2 + 3*x^2*y/4', ('x', 'y', 'z'), trunc=5))

    def test_certificate(self):
        cert = rigidity_check(load('anycurve.json'))
        self.assertEqual(cert.jacobian_monomial, (2, 0, 0))
        self.assertEqual(cert.pullback_exponents, [[1]])
        self.assertEqual(cert.unit_constants, [q(Fraction(1, 2))])
        self.assertEqual(cert.verified_to_degree, 5)
        self.assertEqual(cert.unreachable, [])

    def test_not_rigid(self):
        with self.assertRaises(NotRigidError) as ctx:
            rigidity_check(load('nonrigid2d.json'))
        self.assertEqual(ctx.exception.exit_status, 3)

    def test_jacobian_monomial_beyond_truncation(self):
        f = make_germ(['x^2/2', 'x*y^2', 'x*y*z/3 + x^2'], critical_count=2, trunc=5)
        self.assertTrue(jacobian_det(f).is_zero())
        self.assertEqual(jacobian_det(f, 5), series('2*x^3*y^2/3', ('x', 'y', 'z'), trunc=5))
        cert = rigidity_check(f)
        self.assertEqual(cert.jacobian_monomial, (3, 2, 0))
        self.assertEqual(cert.pullback_exponents, [[2, 1], [0, 2]])
        self.assertEqual(cert.verified_to_degree, 4)

    def test_jacobian_lost_to_truncation(self):
        with self.assertRaises(TruncationTooLowError) as ctx:
            rigidity_check(make_germ(['x/2', 'x/3'], ('x', 'y')))
        self.assertEqual(ctx.exception.exit_status, 4)
        self.assertEqual(ctx.exception.code, 'truncation-too-low')

    def test_critical_count_too_small(self):
        with self.assertRaises(NotRigidError):
            rigidity_check(make_germ(['x^2', 'y/2'], ('x', 'y'), critical_count=0))

    def test_monomial_unit_factor(self):
        m, unit = monomial_unit_factor(series('x^2*y + 3*x^3*y'))
        self.assertEqual(m, (2, 1))
        self.assertEqual(unit, series('1 + 3*x', trunc=3))


class BlockTests(SimpleTestCase):

    def test_non_periodic_block(self):
        f = make_germ(['y^2*z', 'y', 'x/2'], ('y', 'z', 'x'), critical_count=2)
        blocks = detect_blocks(f, rigidity_check(f))
        self.assertEqual((blocks.r, blocks.p), (0, 2))
        self.assertEqual(blocks.D, ((2, 1), (1, 0)))
        self.assertEqual(blocks.order, (0, 1, 2))

    def test_two_cycle(self):
        f = make_germ(['y/2', 'x/8', 'x*y*z + y^2'], critical_count=2)
        blocks = detect_blocks(f, rigidity_check(f))
        self.assertEqual(blocks.cycles, ((0, 1),))
        self.assertEqual(blocks.eta, 2)
        self.assertEqual(blocks.alpha, (q(Fraction(1, 2)), q(Fraction(1, 8))))

    def test_periodic_coordinates_come_first(self):
        f = make_germ(['x^2*z', 'y/3', 'x'], critical_count=3)
        blocks = detect_blocks(f, rigidity_check(f))
        self.assertEqual(blocks.order, (1, 0, 2))
        self.assertEqual((blocks.r, blocks.p), (1, 2))
        self.assertEqual(blocks.internal_action, [[1, 0, 0], [0, 2, 1], [0, 1, 0]])

    def test_singular_internal_action(self):
        f = load('manyimages.json')
        with self.assertRaises(NonInjectiveActionError) as ctx:
            detect_blocks(f, rigidity_check(f))
        self.assertEqual(ctx.exception.exit_status, 5)

    def test_is_periodic(self):
        A = [[0, 1, 0], [1, 0, 0], [0, 0, 2]]
        self.assertTrue(is_periodic(A, 0))
        self.assertTrue(is_periodic(A, 1))
        self.assertFalse(is_periodic(A, 2))

    def test_cycle_as_long_as_the_periodic_block(self):
        A = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]
        self.assertTrue(all(is_periodic(A, k) for k in range(3)))
        f = make_germ(['y/2', 'z/3', 'x/5', 'x*y*z*w'], ('x', 'y', 'z', 'w'), critical_count=3)
        blocks = detect_blocks(f, rigidity_check(f))
        self.assertEqual(blocks.r, 3)
        self.assertEqual(blocks.eta, 3)

    @settings(max_examples=20, deadline=None)
    @given(monomial_matrices(dim=2))
    def test_iterates_act_by_matrix_powers(self, A):
        # exponents of f^n are A^n for a monomial map f = x^A
        trunc = 400
        x = identity_map(2, trunc, EXACT_FIELD)
        f = GermMap(monomial_pow(x, A), critical_count=2)
        expected = np.identity(2, dtype=int)
        for n in range(1, 4):
            expected = expected @ np.array(A, dtype=int)
            iterate = f.iterate(n)
            if any(s.is_zero() for s in iterate):
                break
            for k in range(2):
                m, _ = monomial_unit_factor(iterate[k])
                self.assertEqual(list(m), [int(expected[l][k]) for l in range(2)])


class SpectrumTests(SimpleTestCase):

    def test_contracting(self):
        result = is_contracting(make_germ(['x/2', 'y/3 + x^2', 'x*y']))
        self.assertTrue(result.contracting)
        self.assertAlmostEqual(result.radius, 0.5)

    def test_expanding(self):
        result = is_contracting(make_germ(['2*x', 'y/3'], ('x', 'y')))
        self.assertFalse(result.contracting)
        self.assertAlmostEqual(result.radius, 2.0)

    def test_neutral_eigenvalue_is_indeterminate(self):
        with self.assertRaises(ContractionIndeterminateError):
            is_contracting(make_germ(['x', 'y/2'], ('x', 'y')))

    def test_exact_jordan_diagonalizes(self):
        f = make_germ(['x/2 + y', 'y/4'], ('x', 'y'))
        blocks = detect_blocks(f, rigidity_check(f))
        g, phi = jordan_transform(arrange(f, blocks), blocks)
        self.assertEqual(g.blocks.e, 2)
        self.assertEqual(g.blocks.mu, (q(Fraction(1, 2)), q(Fraction(1, 4))))
        self.assertEqual(g.linear_part()[0][1], EXACT_FIELD.zero)
        self.assertEqual(verify_conjugacy(f, g, phi), 0.0)

    def test_jordan_moves_nilpotent_part_last(self):
        f = make_germ(['x^2*(1 + y)', 'x*y', 'z/3 + y'], critical_count=1)
        blocks = detect_blocks(f, rigidity_check(f))
        g, phi = jordan_transform(arrange(f, blocks), blocks)
        self.assertEqual((g.blocks.e, g.blocks.s), (1, 1))
        self.assertEqual(g.blocks.mu, (q(Fraction(1, 3)),))
        self.assertEqual(g.names, ['y', 'x', 'z'])
        self.assertEqual(verify_conjugacy(f, g, phi), 0.0)

    def test_jordan_split_returns_the_split_germ(self):
        f = make_germ(['x/2 + y', 'y/4'], ('x', 'y'))
        blocks = detect_blocks(f, rigidity_check(f))
        g = jordan_split(arrange(f, blocks), blocks)
        self.assertEqual(g.blocks.e, 2)
        self.assertEqual(g.linear_part()[0][1], EXACT_FIELD.zero)

    def test_float_jordan_chains_for_a_nilpotent_block(self):
        # y -> z -> 0 is upper triangular in the given coordinates
        f = make_germ(['x/2', 'z', 'x*y'], critical_count=1, mode='float')
        blocks = detect_blocks(f, rigidity_check(f))
        g, phi = jordan_transform(arrange(f, blocks), blocks)
        self.assertEqual(g.blocks.e, 0)
        L = g.linear_part()
        self.assertLess(abs(L[1][2]), 1e-12)
        self.assertGreater(abs(L[2][1]), 0.5)
        self.assertLess(verify_conjugacy(f, g, phi), 1e-10)
