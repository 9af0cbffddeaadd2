from django.test import SimpleTestCase
from hypothesis import given, settings

from ..exceptions import GermFileError, GermSyntaxError, NonUnitDivisionError, NotAtOriginError
from ..germlang import germ_document, parse_expr, parse_germ_file
from ..multiseries import EXACT_FIELD, FLOAT_FIELD, TruncatedSeries
from .factories import exact_config, expression_texts, series


class ExpressionTests(SimpleTestCase):

    def test_powers_both_spellings(self):
        self.assertEqual(parse_expr('x**2 + 3*x^3', ['x'], 4, 'exact'),
                         parse_expr('x^2 + 3*x^3', ['x'], 4, 'exact'))

    def test_division_by_a_unit(self):
        self.assertEqual(parse_expr('x/(1 - x)', ['x'], 4, 'exact'),
                         parse_expr('x + x^2 + x^3 + x^4', ['x'], 4, 'exact'))

    def test_imaginary_unit(self):
        s = parse_expr('I*x + (1 - I)*x^2', ['x'], 2, 'exact')
        self.assertEqual(s.coefficient((1,)), EXACT_FIELD.convert((0, 1)))
        self.assertEqual(s.coefficient((2,)), EXACT_FIELD.convert((1, -1)))

    def test_decimals_are_exact_in_exact_mode(self):
        self.assertEqual(parse_expr('0.5*x', ['x'], 2, 'exact'),
                         parse_expr('x/2', ['x'], 2, 'exact'))

    def test_float_mode(self):
        s = parse_expr('(1 - 1.4142135623730951)*x', ['x'], 2, 'float')
        self.assertEqual(s.field, FLOAT_FIELD)
        self.assertAlmostEqual(s.coefficient((1,)).real, 1 - 2 ** 0.5)

    def test_unary_minus(self):
        self.assertEqual(series('-x - -y'), series('y - x'))

    def test_truncation_applies_while_parsing(self):
        self.assertTrue(parse_expr('x^5', ['x'], 4, 'exact').is_zero())


class SyntaxErrorTests(SimpleTestCase):

    def test_unexpected_character_position(self):
        with self.assertRaises(GermSyntaxError) as ctx:
            parse_expr('x1 $ 2', ['x1'], 3)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (1, 4))
        self.assertIn("'$'", ctx.exception.message)

    def test_unknown_variable_position(self):
        with self.assertRaises(GermSyntaxError) as ctx:
            parse_expr('x1 + w', ['x1'], 3)
        self.assertEqual(ctx.exception.column, 6)
        self.assertIn("'w'", ctx.exception.message)

    def test_dangling_operator(self):
        with self.assertRaises(GermSyntaxError) as ctx:
            parse_expr('x1/2 +', ['x1'], 3)
        self.assertEqual(ctx.exception.line, 1)
        self.assertEqual(ctx.exception.exit_status, 2)

    def test_division_by_non_unit(self):
        with self.assertRaises(NonUnitDivisionError):
            parse_expr('1/x1', ['x1'], 3)

    @settings(max_examples=200, deadline=None)
    @given(expression_texts())
    def test_any_token_sequence_parses_or_fails_cleanly(self, text):
        try:
            result = parse_expr(text, ['x', 'y'], 3, 'exact')
        except GermSyntaxError as e:
            self.assertEqual(e.exit_status, 2)
            self.assertEqual(e.code, 'parse')
        else:
            self.assertIsInstance(result, TruncatedSeries)
            self.assertEqual((result.dim, result.trunc), (2, 3))


class GermFileTests(SimpleTestCase):

    def test_defaults_and_overrides(self):
        doc = {'dim': 2, 'trunc': 6, 'components': ['x1/2', 'x2/3 + x1^2']}
        germ, options = parse_germ_file(doc, exact_config(), trunc=3)
        self.assertEqual(germ.trunc, 3)
        self.assertEqual(options.config.trunc, 3)
        self.assertEqual(options.config.mode, 'exact')
        self.assertEqual(germ.names, ['x1', 'x2'])
        self.assertEqual(germ.critical_count, 0)
        self.assertIsNone(options.declared)

    def test_file_values_override_the_base(self):
        doc = {'dim': 1, 'mode': 'float', 'tolerances': {'res': 1e-6}, 'components': ['x1/2']}
        _, options = parse_germ_file(doc, exact_config())
        self.assertEqual(options.config.mode, 'float')
        self.assertEqual(options.config.tol_res, 1e-6)

    def test_json_bytes(self):
        germ, _ = parse_germ_file(b'{"dim": 1, "components": ["x1/2"]}', exact_config())
        self.assertEqual(germ.dim, 1)

    def test_every_schema_problem_is_listed(self):
        with self.assertRaises(GermFileError) as ctx:
            parse_germ_file({'trunc': 0}, exact_config())
        fields = {name for name, _ in ctx.exception.errors}
        self.assertEqual(fields, {'dim', 'trunc', 'components'})

    def test_component_count(self):
        with self.assertRaises(GermFileError) as ctx:
            parse_germ_file({'dim': 2, 'components': ['x1']}, exact_config())
        self.assertEqual([name for name, _ in ctx.exception.errors], ['components'])

    def test_components_must_fix_the_origin(self):
        doc = {'dim': 2, 'variables': ['x', 'y'], 'components': ['1 + x/2', 'y/3 - 2']}
        with self.assertRaises(NotAtOriginError) as ctx:
            parse_germ_file(doc, exact_config())
        self.assertEqual(ctx.exception.exit_status, 2)
        self.assertEqual([name for name, _ in ctx.exception.errors],
                         ['components[0]', 'components[1]'])
        self.assertIn('-2', ctx.exception.errors[1][1])

    def test_reserved_variable_name(self):
        with self.assertRaises(GermFileError) as ctx:
            parse_germ_file({'dim': 2, 'variables': ['x', 'I'], 'components': ['x', 'I']},
                            exact_config())
        self.assertEqual(ctx.exception.errors[0][0], 'variables')

    def test_declared_index_starts_at_one(self):
        doc = {'dim': 1, 'components': ['x1/2'], 'declared_resonances': {'primary': [[0, 2]]}}
        with self.assertRaises(GermFileError) as ctx:
            parse_germ_file(doc, exact_config())
        self.assertEqual(ctx.exception.errors[0][0], 'declared_resonances.primary')

    def test_declared_resonances_are_passed_on(self):
        doc = {'dim': 1, 'components': ['x1/2'], 'declared_resonances': {'secondary': [[1]]}}
        _, options = parse_germ_file(doc, exact_config())
        self.assertEqual(options.declared['secondary'], [[1]])

    def test_broken_json(self):
        with self.assertRaises(GermFileError) as ctx:
            parse_germ_file(b'{"dim": ', exact_config())
        self.assertEqual(ctx.exception.errors[0][0], 'document')

    def test_syntax_error_names_the_component(self):
        with self.assertRaises(GermSyntaxError) as ctx:
            parse_germ_file({'dim': 2, 'components': ['x1/2', 'x2 +']}, exact_config())
        self.assertEqual(ctx.exception.details['component'], 2)
        self.assertTrue(ctx.exception.message.startswith('component 2:'))

    def test_document_reads_back(self):
        doc = {'dim': 2, 'trunc': 4, 'mode': 'exact', 'critical_count': 1,
               'variables': ['u', 'w'], 'components': ['u*(1 + w)/2', 'w/3 + (1 + 2*I)*u^2']}
        germ, options = parse_germ_file(doc, exact_config())
        again, _ = parse_germ_file(germ_document(germ, options.config), exact_config())
        self.assertEqual(list(again), list(germ))
        self.assertEqual(again.names, ['u', 'w'])
        self.assertEqual(again.critical_count, 1)
