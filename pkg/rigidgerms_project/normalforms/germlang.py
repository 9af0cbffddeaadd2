"""
Germ description language.

Expressions are polynomials over rational or decimal literals and the
imaginary unit ``I``, with + - * / ^ and parentheses. Division is allowed
only by units (nonzero constant term) and is evaluated through the inverse
series. Germ files are JSON documents validated by GermFileSerializer.
"""
import io
import logging
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Optional

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser

from .conf import NumericConfig
from .exceptions import (
    GermFileError,
    GermSyntaxError,
    NonUnitDivisionError,
    NotAtOriginError,
    SeriesError,
)
from .germ_model import GermMap
from .multiseries import CoefficientField, TruncatedSeries

logger = logging.getLogger(__name__)

GRAMMAR = r"""
?start: sum

?sum: product
    | sum "+" product   -> add
    | sum "-" product   -> sub

?product: unary
    | product "*" unary -> mul
    | product "/" unary -> div

?unary: power
    | "-" unary         -> neg
    | "+" unary

?power: atom
    | atom ("^" | "**") EXPONENT -> pow

?atom: NUMBER           -> number
    | "I"               -> imag
    | NAME              -> var
    | "(" sum ")"

NUMBER: /(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?/
EXPONENT: /\d+/
NAME: /[A-Za-z_][A-Za-z0-9_]*/

%import common.WS
%ignore WS
"""

PARSER = Lark(GRAMMAR, parser='lalr', propagate_positions=True, maybe_placeholders=False)

RESERVED_NAMES = {'I'}


class SeriesBuilder(Transformer):
    """Evaluate a parse tree into a TruncatedSeries."""

    def __init__(self, variables, trunc, field):
        super().__init__()
        self.index = {name: i for i, name in enumerate(variables)}
        self.dim = len(variables)
        self.trunc = trunc
        self.field = field

    def _constant(self, value):
        return TruncatedSeries.constant(value, self.dim, self.trunc, self.field)

    def number(self, items):
        text = str(items[0])
        value = Fraction(text) if self.field.exact else float(text)
        return self._constant(value)

    def imag(self, items):
        return self._constant((0, 1))

    def var(self, items):
        token = items[0]
        name = str(token)
        if name not in self.index:
            raise GermSyntaxError(f"unknown variable {name!r}", token.line, token.column)
        return TruncatedSeries.variable(self.index[name], self.dim, self.trunc, self.field)

    def add(self, items):
        return items[0] + items[1]

    def sub(self, items):
        return items[0] - items[1]

    def mul(self, items):
        return items[0] * items[1]

    @v_args(meta=True)
    def div(self, meta, items):
        numerator, denominator = items
        if self.field.is_zero(denominator.constant_term()):
            raise NonUnitDivisionError(
                "division by a series without constant term", meta.line, meta.column)
        return numerator * denominator.unit_inverse()

    def neg(self, items):
        return -items[0]

    def pow(self, items):
        return items[0] ** int(items[1])


def _field_for(mode, tol_coeff=1e-12):
    if isinstance(mode, CoefficientField):
        return mode
    return CoefficientField(mode, tol_coeff)


def parse_expr(src, variables, trunc, mode='float'):
    """
    Parse expression text into a truncated series.

    Args:
        src: expression text
        variables: variable names, in coordinate order
        trunc: truncation degree
        mode: 'exact', 'float' or a CoefficientField

    Returns:
        TruncatedSeries in len(variables) variables

    Raises:
        GermSyntaxError: on bad syntax or an unknown variable (with position)
        NonUnitDivisionError: when dividing by a non-unit
    """
    field = _field_for(mode)
    try:
        tree = PARSER.parse(src)
    except UnexpectedEOF as e:
        raise GermSyntaxError("unexpected end of expression", 1, len(src) + 1) from e
    except UnexpectedCharacters as e:
        raise GermSyntaxError(f"unexpected character {src[e.pos_in_stream]!r}",
                              e.line, e.column) from e
    except UnexpectedInput as e:
        token = getattr(e, 'token', None)
        text = f"unexpected token {str(token)!r}" if token is not None else "unexpected input"
        raise GermSyntaxError(text, e.line, e.column) from e
    try:
        return SeriesBuilder(variables, trunc, field).transform(tree)
    except VisitError as e:
        raise e.orig_exc


@dataclass
class GermOptions:
    """Everything a germ file sets besides the map itself."""

    config: NumericConfig
    declared: Optional[dict] = None
    variables: list = dataclass_field(default_factory=list)


def load_document(raw):
    """Parse JSON bytes with DRF's JSONParser into a dict."""
    if isinstance(raw, str):
        raw = raw.encode('utf-8')
    try:
        return JSONParser().parse(io.BytesIO(raw))
    except ParseError as e:
        raise GermFileError([('document', str(e.detail))])


def parse_germ_file(doc, config=None, **overrides):
    """
    Validate a germ file and build its GermMap.

    Args:
        doc: JSON bytes/text or an already decoded dict
        config: base NumericConfig (defaults to the settings)
        overrides: command-line values, applied over the file's own

    Returns:
        (GermMap, GermOptions)

    Raises:
        GermFileError: listing every schema violation at once
        NotAtOriginError: for components with a nonzero constant term
        GermSyntaxError: for the first component that does not parse
    """
    from .serializers import GermFileSerializer

    data = doc if isinstance(doc, dict) else load_document(doc)
    serializer = GermFileSerializer(data=data)
    if not serializer.is_valid():
        raise GermFileError(flatten_errors(serializer.errors))
    values = serializer.validated_data

    base = config or NumericConfig.from_settings()
    tolerances = values.get('tolerances') or {}
    from_file = {
        'mode': values.get('mode'),
        'trunc': values.get('trunc'),
        'tol_coeff': tolerances.get('coeff'),
        'tol_res': tolerances.get('res'),
        'tol_eig': tolerances.get('eig'),
        'tol_residual': tolerances.get('residual'),
        'tol_series': tolerances.get('series'),
    }
    run = base.merged(**from_file).merged(**overrides)
    field = run.field()
    dim = values['dim']
    variables = values.get('variables') or [f"x{i + 1}" for i in range(dim)]
    components = []
    for k, text in enumerate(values['components']):
        try:
            components.append(parse_expr(text, variables, run.trunc, field))
        except GermSyntaxError as e:
            e.details['component'] = k + 1
            e.message = f"component {k + 1}: {e.message}"
            raise
    off_origin = [(f"components[{k}]",
                   f"constant term {field.render(s.constant_term())}; "
                   f"the germ must fix the origin")
                  for k, s in enumerate(components) if not field.is_zero(s.constant_term())]
    if off_origin:
        raise NotAtOriginError(off_origin)
    try:
        germ = GermMap(components, values.get('critical_count', 0), variables)
    except SeriesError as e:
        raise GermFileError([('components', str(e))]) from e
    logger.info("Parsed germ: d=%d q=%d N=%d mode=%s", dim, germ.critical_count,
                run.trunc, run.mode)
    return germ, GermOptions(config=run, declared=values.get('declared_resonances'),
                             variables=variables)


def flatten_errors(errors, prefix=''):
    """DRF's nested error dict as a flat list of (field, message)."""
    out = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = prefix if key == 'non_field_errors' else (f"{prefix}.{key}" if prefix else key)
            out.extend(flatten_errors(value, name or 'document'))
    elif isinstance(errors, list):
        for i, value in enumerate(errors):
            if isinstance(value, (dict, list)):
                out.extend(flatten_errors(value, f"{prefix}[{i}]"))
            else:
                out.append((prefix or 'document', str(value)))
    else:
        out.append((prefix or 'document', str(errors)))
    return out


def germ_document(germ, config, declared=None):
    """The germ file describing ``germ`` (the inverse of parse_germ_file)."""
    doc = {
        'dim': germ.dim,
        'trunc': germ.trunc,
        'mode': config.mode,
        'critical_count': germ.critical_count,
        'variables': list(germ.names),
        'components': [s.to_expression(germ.names) for s in germ.components],
    }
    if declared:
        doc['declared_resonances'] = declared
    return doc
