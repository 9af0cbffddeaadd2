"""
Germ builders and hypothesis strategies shared by the tests.
"""
from fractions import Fraction
from pathlib import Path

from hypothesis import strategies as st

from ..conf import NumericConfig
from ..germ_model import GermMap, integer_det
from ..germlang import parse_expr
from ..multiseries import EXACT_FIELD, FLOAT_FIELD, TruncatedSeries, unit_index

FIXTURES = Path(__file__).resolve().parent.parent / 'fixtures'


def fixture_path(name):
    return str(FIXTURES / name)


def exact_config(trunc=6, **kwargs):
    return NumericConfig(mode='exact', trunc=trunc, **kwargs)


def float_config(trunc=6, **kwargs):
    return NumericConfig(mode='float', trunc=trunc, **kwargs)


def series(text, variables=('x', 'y'), trunc=6, mode='exact'):
    field = EXACT_FIELD if mode == 'exact' else FLOAT_FIELD
    return parse_expr(text, list(variables), trunc, field)


def make_germ(components, variables=('x', 'y', 'z'), critical_count=0, trunc=6, mode='exact'):
    comps = [series(text, variables, trunc, mode) for text in components]
    return GermMap(comps, critical_count, list(variables))


def q(value):
    """Exact coefficient from anything Fraction accepts."""
    return EXACT_FIELD.convert(Fraction(value))


# ==========================================
# Strategies
# ==========================================

small_fractions = st.fractions(min_value=-3, max_value=3, max_denominator=6)


def exponents(dim, max_total, min_total=0):
    return st.tuples(*[st.integers(0, max_total)] * dim).filter(
        lambda n: min_total <= sum(n) <= max_total)


@st.composite
def exact_series(draw, dim=2, trunc=5, min_degree=0, max_terms=6):
    terms = draw(st.dictionaries(exponents(dim, trunc, min_degree), small_fractions,
                                 max_size=max_terms))
    return TruncatedSeries(dim, trunc, terms, EXACT_FIELD)


@st.composite
def exact_units(draw, dim=2, trunc=5):
    """Series with constant term 1."""
    tail = draw(exact_series(dim, trunc, min_degree=1))
    return tail + 1


@st.composite
def monomial_matrices(draw, dim=2, max_entry=2):
    """Exponent matrices whose columns are all nonzero (A[l][k], l the variable)."""
    columns = [draw(st.lists(st.integers(0, max_entry), min_size=dim, max_size=dim)
                    .filter(any)) for _ in range(dim)]
    return [[columns[k][l] for k in range(dim)] for l in range(dim)]


@st.composite
def exact_maps(draw, dim=2, trunc=4, max_terms=4):
    """Origin-fixing maps with random exact coefficients."""
    return [draw(exact_series(dim, trunc, min_degree=1, max_terms=max_terms))
            for _ in range(dim)]


@st.composite
def exact_diffeos(draw, dim=2, trunc=4):
    """Origin-fixing maps with an invertible integer linear part."""
    L = draw(st.lists(st.lists(st.integers(-2, 2), min_size=dim, max_size=dim),
                      min_size=dim, max_size=dim).filter(lambda M: integer_det(M) != 0))
    out = []
    for i in range(dim):
        linear = TruncatedSeries(dim, trunc, {unit_index(j, dim): Fraction(L[i][j])
                                              for j in range(dim) if L[i][j]}, EXACT_FIELD)
        out.append(linear + draw(exact_series(dim, trunc, min_degree=2, max_terms=3)))
    return out


# decreasing moduli; some tuples carry resonances such as 1/4 = (1/2)^2
EIGENVALUES = (
    (Fraction(1, 2), Fraction(1, 3)),
    (Fraction(2, 3), Fraction(1, 5)),
    (Fraction(1, 2), Fraction(1, 4)),
    (Fraction(1, 3), Fraction(1, 9)),
    (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)),
    (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)),
    (Fraction(3, 5), Fraction(2, 7), Fraction(1, 11)),
)


@st.composite
def diagonal_germs(draw, trunc=5):
    """Contracting germs with a diagonal linear part and a random nonlinear tail."""
    values = draw(st.sampled_from(EIGENVALUES))
    dim = len(values)
    comps = [TruncatedSeries(dim, trunc, {unit_index(i, dim): lam}, EXACT_FIELD)
             + draw(exact_series(dim, trunc, min_degree=2, max_terms=4))
             for i, lam in enumerate(values)]
    return GermMap(comps, 0, ['x', 'y', 'z'][:dim])


EXPRESSION_TOKENS = ('x', 'y', 'z', 'I', '2 ', '3 ', '1/3 ', '0.5 ', '+', '-', '*', '/',
                     '^', '**', '(', ')', ' ')


def expression_texts(max_tokens=12):
    """Token soup over the expression alphabet; exponents stay single digits."""
    return st.lists(st.sampled_from(EXPRESSION_TOKENS), max_size=max_tokens).map(''.join)
