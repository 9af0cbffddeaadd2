"""
Truncated multivariate formal power series.

Series are sparse tables from exponent tuples to coefficients, cut at a total
degree. Coefficients live in one of two backends chosen per run: exact
Gaussian rationals (sympy's QQ_I) or double precision complex floats with a
tolerance for every zero test.
"""
import logging
import operator
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from .exceptions import (
    ArityError,
    ConstantTermError,
    DimensionMismatch,
    NegativeExponentError,
    SingularLinearPartError,
    VariableIndexError,
)

logger = logging.getLogger(__name__)


# ==========================================
# Multi-indices
# ==========================================

def degree(n: Sequence[int]) -> int:
    """Total degree |n| of an exponent tuple."""
    return sum(n)


def graded_key(n: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sort key for the graded lexicographic order (x before y within a degree)."""
    return (sum(n), tuple(-e for e in n))


def unit_index(i: int, dim: int) -> Tuple[int, ...]:
    return tuple(1 if j == i else 0 for j in range(dim))


def multi_indices(dim: int, total: int) -> Iterator[Tuple[int, ...]]:
    """Yield every exponent tuple of the given total degree, in graded order."""
    if dim == 0:
        if total == 0:
            yield ()
        return
    found = []
    for combo in combinations_with_replacement(range(dim), total):
        n = [0] * dim
        for i in combo:
            n[i] += 1
        found.append(tuple(n))
    yield from sorted(found, key=graded_key)


def divides(m: Sequence[int], n: Sequence[int]) -> bool:
    """True when x^m divides x^n."""
    return all(a <= b for a, b in zip(m, n))


# ==========================================
# Coefficient backends
# ==========================================

class CoefficientField:
    """
    Service class for coefficient arithmetic in one run.

    Exact mode works in QQ_I (Gaussian rationals) with decidable equality;
    float mode uses Python complex numbers and treats anything within
    ``tol_coeff`` of zero as zero.
    """

    def __init__(self, mode='float', tol_coeff=1e-12):
        if mode not in ('exact', 'float'):
            raise ValueError(f"unknown coefficient mode {mode!r}")
        self.mode = mode
        self.tol_coeff = tol_coeff
        self.exact = mode == 'exact'
        self.zero = QQ_I.zero if self.exact else 0j
        self.one = QQ_I.one if self.exact else 1 + 0j

    def __repr__(self):
        if self.exact:
            return "CoefficientField('exact')"
        return f"CoefficientField('float', tol_coeff={self.tol_coeff!r})"

    def __eq__(self, other):
        return (isinstance(other, CoefficientField) and self.mode == other.mode
                and self.tol_coeff == other.tol_coeff)

    def __hash__(self):
        return hash((self.mode, self.tol_coeff))

    @staticmethod
    def _rational(value):
        if isinstance(value, float):
            value = Fraction(repr(value))
        elif not isinstance(value, int):
            value = Fraction(value)
        if isinstance(value, int):
            return QQ(value)
        return QQ(value.numerator, value.denominator)

    def convert(self, value):
        """
        Bring a number into this backend.

        Args:
            value: int, Fraction, float, complex, (re, im) pair or a
                coefficient of either backend

        Returns:
            The coefficient in the active representation
        """
        if self.exact:
            if isinstance(value, QQ_I.dtype):
                return value
            if isinstance(value, tuple):
                re, im = value
                return QQ_I(self._rational(re), self._rational(im))
            if isinstance(value, complex):
                return QQ_I(self._rational(value.real), self._rational(value.imag))
            return QQ_I(self._rational(value), QQ(0))
        if isinstance(value, QQ_I.dtype):
            return complex(float(value.x), float(value.y))
        if isinstance(value, tuple):
            return complex(float(value[0]), float(value[1]))
        return complex(value)

    def is_zero(self, c):
        if self.exact:
            return not c
        return abs(c) <= self.tol_coeff

    def equal(self, a, b):
        return self.is_zero(a - b)

    def to_complex(self, c):
        if self.exact:
            return complex(float(c.x), float(c.y))
        return complex(c)

    def modulus(self, c):
        return abs(self.to_complex(c))

    # ------------------------------------------
    # Rendering
    # ------------------------------------------

    @staticmethod
    def _render_rational(q):
        num, den = int(q.numerator), int(q.denominator)
        return str(num) if den == 1 else f"{num}/{den}"

    def render(self, c):
        """Report text: "p/q" (exact) or 17 significant digits (float)."""
        if self.exact:
            re, im = c.x, c.y
            fmt = self._render_rational
        else:
            re, im = c.real, c.imag
            fmt = lambda v: format(v, '.17g')  # noqa: E731
        if not im:
            return fmt(re)
        sign = '-' if im < 0 else '+'
        mag = fmt(-im if im < 0 else im)
        if not re:
            return f"{'-' if im < 0 else ''}{mag}i"
        return f"{fmt(re)}{sign}{mag}i"

    def expression(self, c):
        """Coefficient as expression text readable by the germ parser."""
        if self.exact:
            re, im = c.x, c.y
            fmt = self._render_rational
        else:
            re, im = c.real, c.imag
            fmt = lambda v: format(v, '.17g')  # noqa: E731
        if not im:
            return f"({fmt(re)})"
        return f"({fmt(re)}+({fmt(im)})*I)"

    # ------------------------------------------
    # Dense linear algebra
    # ------------------------------------------

    def matrix(self, rows):
        return [[self.convert(v) for v in row] for row in rows]

    def _domain_matrix(self, rows):
        n = len(rows)
        m = len(rows[0]) if n else 0
        return DomainMatrix([[self.convert(v) for v in row] for row in rows], (n, m), QQ_I)

    def det(self, rows):
        if not rows:
            return self.one
        if self.exact:
            return self._domain_matrix(rows).det()
        return complex(np.linalg.det(np.array(rows, dtype=complex)))

    def is_singular(self, rows, tol):
        """Rank test: exact determinant, or smallest singular value against tol."""
        if not rows:
            return False
        if self.exact:
            return self._domain_matrix(rows).rank() < len(rows)
        sv = np.linalg.svd(np.array(rows, dtype=complex), compute_uv=False)
        return sv[-1] <= tol * max(1.0, sv[0])

    def solve(self, rows, rhs, tol=None):
        """
        Solve the square system rows·x = rhs.

        Raises:
            SingularLinearPartError: if the matrix is (numerically) singular
        """
        n = len(rows)
        if n == 0:
            return []
        tol = self.tol_coeff if tol is None else tol
        if self.is_singular(rows, tol):
            raise SingularLinearPartError("singular linear system")
        if self.exact:
            b = DomainMatrix([[self.convert(v)] for v in rhs], (n, 1), QQ_I)
            sol = self._domain_matrix(rows).lu_solve(b)
            return [row[0] for row in sol.to_list()]
        x = np.linalg.solve(np.array(rows, dtype=complex), np.array(rhs, dtype=complex))
        return [complex(v) for v in x]

    def inverse(self, rows, tol=None):
        n = len(rows)
        if n == 0:
            return []
        tol = self.tol_coeff if tol is None else tol
        if self.is_singular(rows, tol):
            raise SingularLinearPartError("linear part is not invertible")
        if self.exact:
            return self._domain_matrix(rows).inv().to_list()
        inv = np.linalg.inv(np.array(rows, dtype=complex))
        return [[complex(v) for v in row] for row in inv]


FLOAT_FIELD = CoefficientField('float')
EXACT_FIELD = CoefficientField('exact')


# ==========================================
# Truncated series
# ==========================================

class TruncatedSeries:
    """
    A formal power series in ``dim`` variables known modulo degree ``trunc + 1``.

    Terms are stored sparsely; no stored term exceeds the truncation degree
    and no stored coefficient is (tolerance-)zero. Values are immutable.
    """

    __slots__ = ('dim', 'trunc', 'terms', 'field')

    def __init__(self, dim, trunc, terms=None, field=None):
        if dim < 0 or trunc < 0:
            raise ValueError("dimension and truncation must be nonnegative")
        field = field or FLOAT_FIELD
        clean = {}
        for n, c in (terms or {}).items():
            n = tuple(int(e) for e in n)
            if len(n) != dim:
                raise DimensionMismatch(f"exponent {n} does not have {dim} entries")
            if any(e < 0 for e in n):
                raise NegativeExponentError(f"negative exponent in {n}")
            if sum(n) > trunc:
                continue
            c = field.convert(c)
            if n in clean:
                c = clean[n] + c
            clean[n] = c
        self._assign(dim, trunc, clean, field)

    def _assign(self, dim, trunc, terms, field):
        self.dim = dim
        self.trunc = trunc
        self.field = field
        self.terms = {n: c for n, c in terms.items() if not field.is_zero(c)}

    @classmethod
    def _make(cls, dim, trunc, terms, field):
        obj = cls.__new__(cls)
        obj._assign(dim, trunc, terms, field)
        return obj

    # ------------------------------------------
    # Constructors
    # ------------------------------------------

    @classmethod
    def zero(cls, dim, trunc, field=None):
        return cls._make(dim, trunc, {}, field or FLOAT_FIELD)

    @classmethod
    def constant(cls, value, dim, trunc, field=None):
        field = field or FLOAT_FIELD
        return cls._make(dim, trunc, {(0,) * dim: field.convert(value)}, field)

    @classmethod
    def variable(cls, index, dim, trunc, field=None):
        if not 0 <= index < dim:
            raise VariableIndexError(f"variable {index} out of range for dimension {dim}")
        field = field or FLOAT_FIELD
        if trunc < 1:
            return cls.zero(dim, trunc, field)
        return cls._make(dim, trunc, {unit_index(index, dim): field.one}, field)

    @classmethod
    def monomial(cls, exponents, coefficient, trunc, field=None):
        exponents = tuple(exponents)
        return cls(len(exponents), trunc, {exponents: coefficient}, field)

    def like(self, terms, trunc=None):
        """A series with this one's dimension and backend."""
        return TruncatedSeries._make(self.dim, self.trunc if trunc is None else trunc,
                                     terms, self.field)

    # ------------------------------------------
    # Inspection
    # ------------------------------------------

    def __repr__(self):
        return f"TruncatedSeries(dim={self.dim}, trunc={self.trunc}, {self.to_expression()})"

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if self.dim != other.dim or self.trunc != other.trunc:
            return False
        return (self - other).is_zero()

    __hash__ = None

    def is_zero(self):
        return not self.terms

    def coefficient(self, n):
        return self.terms.get(tuple(n), self.field.zero)

    def constant_term(self):
        return self.coefficient((0,) * self.dim)

    def support(self):
        return sorted(self.terms, key=graded_key)

    def items(self):
        """Terms in graded lexicographic order."""
        return [(n, self.terms[n]) for n in self.support()]

    def order(self):
        """Lowest total degree present, or None for the zero series."""
        if not self.terms:
            return None
        return min(sum(n) for n in self.terms)

    def max_abs(self):
        if not self.terms:
            return 0.0
        return max(self.field.modulus(c) for c in self.terms.values())

    def homogeneous(self, total):
        return {n: c for n, c in self.terms.items() if sum(n) == total}

    def depends_only_on(self, variables):
        allowed = set(variables)
        return all(e == 0 or i in allowed for n in self.terms for i, e in enumerate(n))

    # ------------------------------------------
    # Truncation and restriction
    # ------------------------------------------

    def truncate(self, trunc):
        """Forget every term above ``trunc`` (never raises the truncation)."""
        trunc = min(trunc, self.trunc)
        return self.like({n: c for n, c in self.terms.items() if sum(n) <= trunc}, trunc)

    def with_trunc(self, trunc):
        """Relabel the truncation degree; missing higher terms are taken as zero."""
        return self.like({n: c for n, c in self.terms.items() if sum(n) <= trunc}, trunc)

    def substitute_zero(self, var):
        """Restriction to the hyperplane x_var = 0."""
        self._check_index(var)
        return self.like({n: c for n, c in self.terms.items() if n[var] == 0})

    def filter(self, predicate):
        return self.like({n: c for n, c in self.terms.items() if predicate(n)})

    def permuted(self, order):
        """Rename variables so that new variable i is old variable order[i]."""
        if sorted(order) != list(range(self.dim)):
            raise ArityError(f"{order} is not a permutation of {self.dim} variables")
        return self.like({tuple(n[j] for j in order): c for n, c in self.terms.items()})

    def _check_index(self, var):
        if not 0 <= var < self.dim:
            raise VariableIndexError(f"variable {var} out of range for dimension {self.dim}")

    def _check_dim(self, other):
        if self.dim != other.dim:
            raise DimensionMismatch(f"dimensions {self.dim} and {other.dim} differ")

    # ------------------------------------------
    # Ring operations
    # ------------------------------------------

    def __neg__(self):
        return self.like({n: -c for n, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other, self.dim, self.trunc, self.field)
        self._check_dim(other)
        trunc = min(self.trunc, other.trunc)
        terms = {n: c for n, c in self.terms.items() if sum(n) <= trunc}
        zero = self.field.zero
        for n, c in other.terms.items():
            if sum(n) <= trunc:
                terms[n] = terms.get(n, zero) + c
        return self.like(terms, trunc)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other, self.dim, self.trunc, self.field)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, value):
        c = self.field.convert(value)
        return self.like({n: c * v for n, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check_dim(other)
        trunc = min(self.trunc, other.trunc)
        zero = self.field.zero
        right = sorted(((sum(m), m, c) for m, c in other.terms.items()), key=lambda t: t[0])
        out = {}
        for n, a in self.terms.items():
            room = trunc - sum(n)
            if room < 0:
                continue
            for dm, m, b in right:
                if dm > room:
                    break
                key = tuple(map(operator.add, n, m))
                out[key] = out.get(key, zero) + a * b
        return self.like(out, trunc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.unit_inverse()
        c = self.field.convert(other)
        if self.field.is_zero(c):
            raise ZeroDivisionError("division of a series by zero")
        return self.scale(self.field.one / c)

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("series powers take integer exponents")
        if k < 0:
            return self.unit_inverse() ** (-k)
        result = TruncatedSeries.constant(self.field.one, self.dim, self.trunc, self.field)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def unit_inverse(self):
        """1/s for a unit s (nonzero constant term)."""
        c0 = self.constant_term()
        if self.field.is_zero(c0):
            raise ConstantTermError("only units can be inverted")
        inv0 = self.field.one / c0
        w = self.scale(inv0) - 1
        total = TruncatedSeries.constant(self.field.one, self.dim, self.trunc, self.field)
        power = total
        for _ in range(self.trunc):
            power = power * (-w)
            if power.is_zero():
                break
            total = total + power
        return total.scale(inv0)

    # ------------------------------------------
    # Calculus
    # ------------------------------------------

    def partial(self, var):
        return partial_derivative(self, var)

    def tau_integral(self, var):
        return tau_integral(self, var)

    # ------------------------------------------
    # Printing
    # ------------------------------------------

    def to_expression(self, names=None):
        """Expression text (graded order) that the germ parser reads back."""
        if names is None:
            names = [f"x{i + 1}" for i in range(self.dim)]
        if not self.terms:
            return '0'
        parts = []
        for n, c in self.items():
            factors = [self.field.expression(c)]
            for name, e in zip(names, n):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            parts.append('*'.join(factors))
        return ' + '.join(parts)


# ==========================================
# Module-level operations
# ==========================================

def add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a + b


def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a * b


class CompositionTable:
    """
    Memoized images of monomials under a fixed inner tuple.

    The image of x^n is the image of its predecessor (first nonzero exponent
    lowered by one) times one inner component, so composing many outer
    series with the same inner tuple shares all products.
    """

    def __init__(self, inner, trunc=None):
        if not inner:
            raise ArityError("composition needs at least one inner series")
        dim = inner[0].dim
        for s in inner:
            if s.dim != dim:
                raise DimensionMismatch("inner series have different dimensions")
            if not s.field.is_zero(s.constant_term()):
                raise ConstantTermError("inner series must fix the origin")
        self.trunc = min(s.trunc for s in inner)
        if trunc is not None:
            self.trunc = min(self.trunc, trunc)
        self.dim = dim
        self.field = inner[0].field
        self.inner = [s.truncate(self.trunc) for s in inner]
        one = TruncatedSeries.constant(self.field.one, dim, self.trunc, self.field)
        self._images = {(0,) * len(inner): one}

    def image(self, n):
        chain = []
        while n not in self._images:
            i = next(j for j, e in enumerate(n) if e)
            chain.append((n, i))
            n = n[:i] + (n[i] - 1,) + n[i + 1:]
        result = self._images[n]
        for m, i in reversed(chain):
            result = result * self.inner[i]
            self._images[m] = result
        return result

    def apply(self, outer):
        if outer.dim != len(self.inner):
            raise ArityError(f"outer series takes {outer.dim} arguments, got {len(self.inner)}")
        trunc = min(outer.trunc, self.trunc)
        zero = self.field.zero
        acc = {}
        for n, c in outer.terms.items():
            if sum(n) > trunc:
                continue
            for m, v in self.image(n).terms.items():
                if sum(m) <= trunc:
                    acc[m] = acc.get(m, zero) + c * v
        return TruncatedSeries._make(self.dim, trunc, acc, self.field)

    def apply_all(self, outers):
        return [self.apply(s) for s in outers]


def compose(outer: TruncatedSeries, inner: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """outer(inner_1, ..., inner_d), truncated at the smaller truncation."""
    return CompositionTable(inner).apply(outer)


def compose_maps(outers: Sequence[TruncatedSeries],
                 inner: Sequence[TruncatedSeries]) -> List[TruncatedSeries]:
    """Componentwise composition of two maps sharing one table."""
    return CompositionTable(inner).apply_all(outers)


def identity_map(dim: int, trunc: int,
                 field: Optional[CoefficientField] = None) -> List[TruncatedSeries]:
    return [TruncatedSeries.variable(i, dim, trunc, field) for i in range(dim)]


def monomial_pow(variables: Sequence[TruncatedSeries],
                 M: Sequence[Sequence[int]]) -> List[TruncatedSeries]:
    """
    Monomial map x^M: component k is the product of variables[l]**M[l][k].

    Args:
        variables: series x_1..x_m
        M: m-row nonnegative integer matrix; its column count is the output arity

    Returns:
        List of series, one per column of M
    """
    if not variables:
        return []
    if len(M) != len(variables):
        raise ArityError(f"exponent matrix has {len(M)} rows for {len(variables)} series")
    cols = len(M[0]) if M else 0
    for row in M:
        if len(row) != cols:
            raise ArityError("exponent matrix is not rectangular")
        if any(e < 0 for e in row):
            raise NegativeExponentError("monomial maps need nonnegative exponents")
    first = variables[0]
    out = []
    for k in range(cols):
        term = TruncatedSeries.constant(first.field.one, first.dim, first.trunc, first.field)
        for l, s in enumerate(variables):
            e = int(M[l][k])
            if e:
                term = term * (s ** e)
        out.append(term)
    return out


def unit_log(u: TruncatedSeries) -> TruncatedSeries:
    """log(u) for a series with constant term 1."""
    field = u.field
    if not field.equal(u.constant_term(), field.one):
        raise ConstantTermError("logarithm needs constant term 1")
    w = u - 1
    total = TruncatedSeries.zero(u.dim, u.trunc, field)
    power = TruncatedSeries.constant(field.one, u.dim, u.trunc, field)
    for k in range(1, u.trunc + 1):
        power = power * w
        if power.is_zero():
            break
        coeff = Fraction(1 if k % 2 else -1, k)
        total = total + power.scale(coeff)
    return total


def unit_exp(s: TruncatedSeries) -> TruncatedSeries:
    """exp(s) for a series with zero constant term."""
    field = s.field
    if not field.is_zero(s.constant_term()):
        raise ConstantTermError("exponential needs zero constant term")
    total = TruncatedSeries.constant(field.one, s.dim, s.trunc, field)
    power = total
    for k in range(1, s.trunc + 1):
        power = power * s.scale(Fraction(1, k))
        if power.is_zero():
            break
        total = total + power
    return total


def _is_integer(value):
    if isinstance(value, int):
        return True
    if isinstance(value, Fraction):
        return value.denominator == 1
    if isinstance(value, float):
        return value.is_integer()
    return False


def unit_pow_matrix(units: Sequence[TruncatedSeries],
                    Q: Sequence[Sequence]) -> List[TruncatedSeries]:
    """
    Matrix power of a unit vector: component k is the product of units[l]**Q[l][k].

    Integer exponents use repeated products; any other exponent goes
    through exp(sum_l Q[l][k] log units[l]).
    """
    if not units:
        return []
    if len(Q) != len(units):
        raise ArityError(f"exponent matrix has {len(Q)} rows for {len(units)} units")
    field = units[0].field
    for u in units:
        if not field.equal(u.constant_term(), field.one):
            raise ConstantTermError("matrix powers need units with constant term 1")
    cols = len(Q[0]) if Q else 0
    first = units[0]
    if all(_is_integer(v) for row in Q for v in row):
        out = []
        for k in range(cols):
            term = TruncatedSeries.constant(field.one, first.dim, first.trunc, field)
            for l, u in enumerate(units):
                e = int(Q[l][k])
                if e:
                    term = term * (u ** e)
            out.append(term)
        return out
    logs = [unit_log(u) for u in units]
    out = []
    for k in range(cols):
        acc = TruncatedSeries.zero(first.dim, first.trunc, field)
        for l, lg in enumerate(logs):
            if Q[l][k]:
                acc = acc + lg.scale(Q[l][k])
        out.append(unit_exp(acc))
    return out


def linear_part(components: Sequence[TruncatedSeries]) -> List[list]:
    """Matrix L with L[i][j] the coefficient of x_j in component i."""
    if not components:
        return []
    dim = components[0].dim
    return [[s.coefficient(unit_index(j, dim)) for j in range(dim)] for s in components]


def apply_linear(M: Sequence[Sequence],
                 components: Sequence[TruncatedSeries]) -> List[TruncatedSeries]:
    """The tuple (sum_j M[i][j] * components[j])_i."""
    out = []
    for row in M:
        acc = TruncatedSeries.zero(components[0].dim, min(s.trunc for s in components),
                                   components[0].field)
        for c, s in zip(row, components):
            if not s.field.is_zero(s.field.convert(c)):
                acc = acc + s.scale(c)
        out.append(acc)
    return out


def invert_diffeo(f: Sequence[TruncatedSeries],
                  tol: Optional[float] = None) -> List[TruncatedSeries]:
    """
    Compositional inverse of an origin-fixing map modulo its truncation.

    Solves g = L^{-1}(x - H(g)) with H the nonlinear part of f, one degree
    per round at increasing truncation.

    Raises:
        SingularLinearPartError: if the linear part of f is not invertible
    """
    if not f:
        return []
    dim, field = f[0].dim, f[0].field
    if len(f) != dim:
        raise ArityError("a diffeomorphism needs as many components as variables")
    for s in f:
        if not field.is_zero(s.constant_term()):
            raise ConstantTermError("the map must fix the origin")
    trunc = min(s.trunc for s in f)
    L = linear_part(f)
    L_inv = field.inverse(L, tol)
    nonlinear = [s.filter(lambda n: sum(n) >= 2).truncate(trunc) for s in f]
    g = apply_linear(L_inv, identity_map(dim, 1, field))
    for level in range(2, trunc + 1):
        x = identity_map(dim, level, field)
        g_level = [s.with_trunc(level) for s in g]
        h = compose_maps([s.truncate(level) for s in nonlinear], g_level)
        g = apply_linear(L_inv, [xi - hi for xi, hi in zip(x, h)])
    return [s.with_trunc(trunc) for s in g]


def partial_derivative(s: TruncatedSeries, var: int) -> TruncatedSeries:
    """Formal partial derivative in x_var, truncation lowered by one."""
    s._check_index(var)
    terms = {}
    for n, c in s.terms.items():
        e = n[var]
        if e:
            m = n[:var] + (e - 1,) + n[var + 1:]
            terms[m] = c * e
    return s.like(terms, max(s.trunc - 1, 0))


def tau_integral(s: TruncatedSeries, var: int) -> TruncatedSeries:
    """The integral over tau in [0, 1] of s with x_var scaled by tau."""
    s._check_index(var)
    return s.like({n: c * s.field.convert(Fraction(1, n[var] + 1)) for n, c in s.terms.items()})


def max_difference(first: Sequence[TruncatedSeries],
                   second: Sequence[TruncatedSeries]) -> float:
    """Largest coefficient modulus of first - second over all components."""
    if len(first) != len(second):
        raise ArityError("maps have different arities")
    return max(((a - b).max_abs() for a, b in zip(first, second)), default=0.0)
