from fractions import Fraction

from django.test import SimpleTestCase

from ..exceptions import GermFileError
from ..germ_model import BlockStructure
from ..normalizer import normalize_full
from ..resonance import (
    PrimaryResonance,
    ResonanceReport,
    SecondaryResonance,
    degree_bound,
    eta_eigenvalues,
    primary_resonances,
    resonance_report,
    secondary_resonances,
)
from .factories import exact_config, float_config, make_germ


def split(components, variables, critical_count, config):
    """Resonance report of a germ after the Jordan stage."""
    f = make_germ(components, variables, critical_count, config.trunc, config.mode)
    return normalize_full(f, config, until='jordan')


class EigenvalueTests(SimpleTestCase):

    def test_two_cycle_uses_the_cycle_product(self):
        blocks = BlockStructure(d=2, q=2, r=2, p=0, B=((0, 1), (1, 0)), C=((), ()), D=(),
                                alpha=(0.5, 0.125), beta=(), eta=2, order=(0, 1),
                                cycles=((0, 1),))
        self.assertEqual(eta_eigenvalues(blocks), [0.0625, 0.0625])

    def test_v_values_are_raised_to_eta(self):
        blocks = BlockStructure(d=3, q=1, r=1, p=0, B=((1,),), C=((),), D=(),
                                alpha=(0.5,), beta=(), eta=1, order=(0, 1, 2),
                                cycles=((0,),), e=1, mu=(0.25,))
        self.assertEqual(eta_eigenvalues(blocks), [0.5, 0.25])


class DegreeBoundTests(SimpleTestCase):

    def test_nothing_to_bound(self):
        blocks = BlockStructure(d=2, q=2, r=2, p=0, B=((1, 0), (0, 1)), C=((), ()), D=(),
                                alpha=(0.5, 0.25), beta=(), eta=1, order=(0, 1),
                                cycles=((0,), (1,)))
        self.assertEqual(degree_bound(blocks, [0.5, 0.25]), 0)

    def test_primary_bound(self):
        cert = split(['u/2', 'v/4 + u^2', 'u*z'], ('u', 'v', 'z'), 1, exact_config())
        # (1/2)^3 is the first power strictly below 1/4
        self.assertEqual(cert.resonances.degree_bound, 3)


class PrimaryResonanceTests(SimpleTestCase):

    def test_square_of_the_critical_eigenvalue(self):
        cert = split(['u/2', 'v/4 + u^2 + u^3', 'u*z'], ('u', 'v', 'z'), 1, exact_config())
        self.assertEqual(cert.resonances.primaries, [PrimaryResonance(1, (2,), (0,))])
        self.assertTrue(cert.resonances.is_primary(0, (2, 0)))
        self.assertFalse(cert.resonances.is_primary(0, (3, 0)))
        self.assertEqual(cert.resonances.equality_mode, 'exact')

    def test_equal_v_eigenvalues_resonate_with_each_other(self):
        cert = split(['x/2', 'y/2', 'z/3'], ('x', 'y', 'z'), 0, exact_config())
        primaries = primary_resonances(cert.blocks, exact_config())
        self.assertIn(PrimaryResonance(1, (), (0, 1, 0)), primaries)
        self.assertIn(PrimaryResonance(2, (), (1, 0, 0)), primaries)
        self.assertNotIn(PrimaryResonance(1, (), (1, 0, 0)), primaries)

    def test_no_v_block(self):
        cert = split(['x/2', 'y^2', 'x*y*z/3 + y'], ('x', 'y', 'z'), 2, exact_config())
        self.assertEqual(cert.resonances.primaries, [])


class SecondaryResonanceTests(SimpleTestCase):

    def test_irrational_root_is_found_at_degree_one(self):
        cert = split(['y^2*z*(1 + x)', 'y', '(1 - 1.4142135623730951)*x'], ('y', 'z', 'x'), 2,
                     float_config(trunc=4))
        self.assertEqual(cert.resonances.secondaries, [SecondaryResonance((1,))])
        self.assertEqual(cert.resonances.degree_bound, 2)
        self.assertEqual(cert.resonances.equality_mode, 'tolerance')

    def test_rational_multiplier_has_none(self):
        cert = split(['y^2*z', 'y', 'x/2'], ('y', 'z', 'x'), 2, exact_config(trunc=4))
        self.assertEqual(cert.resonances.secondaries, [])
        self.assertEqual(secondary_resonances(cert.blocks, exact_config(trunc=4)), [])

    def test_declared_resonances_replace_detection(self):
        cert = split(['y^2*z', 'y', 'x/2'], ('y', 'z', 'x'), 2, exact_config(trunc=4))
        report = resonance_report(cert.blocks, cert.contraction.eigenvalues, exact_config(),
                                  declared={'secondary': [[2]]})
        self.assertTrue(report.declared)
        self.assertTrue(report.is_secondary((2,)))

    def test_declared_rows_must_fit_the_blocks(self):
        cert = split(['u/2', 'v/4 + u^2', 'u*z'], ('u', 'v', 'z'), 1, exact_config())
        with self.assertRaises(GermFileError) as ctx:
            resonance_report(cert.blocks, cert.contraction.eigenvalues, exact_config(),
                             declared={'primary': [[1, 2]], 'secondary': [[1, 0, 0]]})
        self.assertEqual(ctx.exception.exit_status, 2)
        self.assertEqual([name for name, _ in ctx.exception.errors],
                         ['declared_resonances.primary', 'declared_resonances.secondary'])

    def test_declared_coordinate_must_be_a_v_coordinate(self):
        cert = split(['u/2', 'v/4 + u^2', 'u*z'], ('u', 'v', 'z'), 1, exact_config())
        with self.assertRaises(GermFileError):
            resonance_report(cert.blocks, cert.contraction.eigenvalues, exact_config(),
                             declared={'primary': [[2, 2, 0]]})
        report = resonance_report(cert.blocks, cert.contraction.eigenvalues, exact_config(),
                                  declared={'primary': [[1, 2, 0]]})
        self.assertTrue(report.is_primary(0, (2, 0)))


class ReportTests(SimpleTestCase):

    def test_lookup_counts_v_coordinates_from_zero(self):
        report = ResonanceReport(
            primaries=[PrimaryResonance(2, (1,), (0, 0))], secondaries=[],
            degree_bound=3, eta=1, equality_mode='exact')
        self.assertTrue(report.is_primary(1, (1, 0, 0)))
        self.assertFalse(report.is_primary(0, (1, 0, 0)))

    def test_exact_values_compare_exactly(self):
        cert = split(['x/3', 'y/9'], ('x', 'y'), 0, exact_config(trunc=4))
        self.assertEqual(cert.resonances.primaries,
                         [PrimaryResonance(2, (), (2, 0))])
        self.assertEqual(cert.blocks.mu[1], exact_config().field().convert(Fraction(1, 9)))
