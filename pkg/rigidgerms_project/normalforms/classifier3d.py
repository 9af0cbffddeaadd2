"""
Classification of normalized contracting rigid germs in dimension 3.

A normalized germ is read in table coordinates X, Y, Z: first the
coordinates with nonzero eigenvalues by decreasing modulus (ties by
position), then the non-periodic critical ones, then the rest. The row is
selected by (q, r, s, eta) and the letters of the critical hyperplanes.
"""
import logging
from dataclasses import dataclass, field as dataclass_field
from itertools import combinations
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .conf import NumericConfig
from .exceptions import ClassificationError, UnresolvedClassError
from .germ_model import GermMap, monomial_unit_factor
from .germlang import parse_expr
from .serializers import render_number

logger = logging.getLogger(__name__)

LETTERS = 'XYZ'


@dataclass
class ClassRow:
    q: int
    r: int
    s: int
    eta: int
    crit_shape: str
    form_id: str
    form: str
    parameters: dict = dataclass_field(default_factory=dict)

    @property
    def key(self):
        return (self.q, self.r, self.s, self.eta, self.crit_shape)


@dataclass(frozen=True)
class TableRow:
    q: int
    r: int
    s: int
    eta: int
    crit_shape: str
    form_id: str
    form: str
    resolved: bool = True
    exponents: Tuple[Tuple[str, str, str], ...] = ()
    constraints: Tuple[Tuple[str, Callable], ...] = ()
    omega: Optional[str] = None
    rescale: Optional[str] = None
    unit_names: Tuple[str, ...] = ()

    @property
    def key(self):
        return (self.q, self.r, self.s, self.eta, self.crit_shape)


def _d(i, j):
    """Name, component and variable of the exponent d_i^j."""
    return (f"d{i}{j}", LETTERS[j - 1], LETTERS[i - 1])


def _d_shifted(i, j, offset):
    return (f"d{i}{j}", LETTERS[j - 1 + offset], LETTERS[i - 1 + offset])


def _det2(v, a, b, c, d):
    return v[a] * v[d] - v[b] * v[c]


TABLE = (
    TableRow(0, 0, 3, 1, '', 'q0-r0-s3',
             '(l1 X, l2 Y + rho1(X), l3 Z + rho2(X, Y))'),
    TableRow(1, 0, 0, 1, 'X', 'q1-r0-s0', '(beta X^d, ?, ?)', resolved=False),
    TableRow(1, 0, 1, 1, 'Y', 'q1-r0-s1', '(l1 X, Y^d, nu Y^m Z + omega(X, Y))',
             exponents=(('d', 'Y', 'Y'), ('m', 'Z', 'Y')),
             constraints=(('d >= 2', lambda v: v['d'] >= 2), ('m >= 1', lambda v: v['m'] >= 1)),
             omega='epsilon', unit_names=('beta:Y',)),
    TableRow(1, 0, 2, 1, 'Z', 'q1-r0-s2', '(l1 X, l2 Y + rho X^n, Z^d)',
             exponents=(('d', 'Z', 'Z'),),
             constraints=(('d >= 2', lambda v: v['d'] >= 2),),
             unit_names=('beta:Z',)),
    TableRow(1, 1, 1, 1, 'X', 'q1-r1-s1', '(l1 X, ?, ?)', resolved=False),
    TableRow(1, 1, 2, 1, 'X', 'q1-r1-s2-X', '(l1 X, l2 Y + rho X^n, X^l Z + omega(X, Y))',
             exponents=(('l', 'Z', 'X'),),
             constraints=(('l >= 1', lambda v: v['l'] >= 1),),
             omega='m2', unit_names=('nu',)),
    TableRow(1, 1, 2, 1, 'Y', 'q1-r1-s2-Y', '(l1 X, l2 Y, Y^l Z + omega(X, Y))',
             exponents=(('l', 'Z', 'Y'),),
             constraints=(('l >= 1', lambda v: v['l'] >= 1),),
             omega='m2', unit_names=('nu',)),
    TableRow(2, 0, 0, 1, 'XY', 'q2-r0-s0',
             '(beta1 X^d11 Y^d21, beta2 X^d12 Y^d22, nu X^l Y^m Z + omega(X, Y))',
             exponents=(_d(1, 1), _d(2, 1), _d(1, 2), _d(2, 2), ('l', 'Z', 'X'), ('m', 'Z', 'Y')),
             constraints=(
                 ('d11 d22 != d12 d21', lambda v: _det2(v, 'd11', 'd12', 'd21', 'd22') != 0),
                 ('d12 + d22 >= 2', lambda v: v['d12'] + v['d22'] >= 2),
                 ('max(d11 - 1, d21) >= 1', lambda v: max(v['d11'] - 1, v['d21']) >= 1),
                 ('l + m >= 1', lambda v: v['l'] + v['m'] >= 1),
             ),
             omega='m2', rescale='beta-nu-rank'),
    TableRow(2, 0, 1, 1, 'YZ', 'q2-r0-s1',
             '(l1 X, beta1 Y^d11 Z^d21 (1 + g X^n), beta2 Y^d12 Z^d22)',
             exponents=(_d_shifted(1, 1, 1), _d_shifted(2, 1, 1), _d_shifted(1, 2, 1),
                        _d_shifted(2, 2, 1)),
             constraints=(
                 ('d11 d22 != d12 d21', lambda v: _det2(v, 'd11', 'd12', 'd21', 'd22') != 0),
                 ('max(d11 - 1, d21) >= 1', lambda v: max(v['d11'] - 1, v['d21']) >= 1),
             ),
             rescale='d-minus-identity'),
    TableRow(2, 1, 1, 1, 'XY', 'q2-r1-s1', '(l1 X, X^c Y^d, nu X^l Y^m Z + omega(X, Y))',
             exponents=(('c', 'Y', 'X'), ('d', 'Y', 'Y'), ('l', 'Z', 'X'), ('m', 'Z', 'Y')),
             constraints=(
                 ('c + d >= 2', lambda v: v['c'] + v['d'] >= 2),
                 ('l + m >= 1', lambda v: v['l'] + v['m'] >= 1),
                 ('c + l >= 1', lambda v: v['c'] + v['l'] >= 1),
                 ('d >= 1', lambda v: v['d'] >= 1),
                 ('d + m >= 2', lambda v: v['d'] + v['m'] >= 2),
             ),
             omega='epsilon', rescale='c-l-determinant', unit_names=('beta:Y',)),
    TableRow(2, 1, 2, 1, 'XZ', 'q2-r1-s2-XZ', '(l1 X, l2 Y + rho X^n, X^c Z^d)',
             exponents=(('c', 'Z', 'X'), ('d', 'Z', 'Z')),
             constraints=(('c >= 1', lambda v: v['c'] >= 1), ('d >= 2', lambda v: v['d'] >= 2)),
             unit_names=('beta:Z',)),
    TableRow(2, 1, 2, 1, 'YZ', 'q2-r1-s2-YZ', '(l1 X, l2 Y, Y^c Z^d)',
             exponents=(('c', 'Z', 'Y'), ('d', 'Z', 'Z')),
             constraints=(('c >= 1', lambda v: v['c'] >= 1), ('d >= 2', lambda v: v['d'] >= 2)),
             unit_names=('beta:Z',)),
    TableRow(2, 2, 2, 1, 'XY', 'q2-r2-s2-eta1', '(l1 X, l2 Y, X^l Y^m Z + omega(X, Y))',
             exponents=(('l', 'Z', 'X'), ('m', 'Z', 'Y')),
             constraints=(('l >= 1', lambda v: v['l'] >= 1), ('m >= 1', lambda v: v['m'] >= 1)),
             omega='m2', unit_names=('nu',)),
    TableRow(2, 2, 2, 2, 'XY', 'q2-r2-s2-eta2', '(a1 Y, a2 X, X^l Y^m Z + omega(X, Y))',
             exponents=(('l', 'Z', 'X'), ('m', 'Z', 'Y')),
             constraints=(('l >= 1', lambda v: v['l'] >= 1), ('m >= 1', lambda v: v['m'] >= 1)),
             omega='m2', unit_names=('nu',)),
    TableRow(3, 0, 0, 1, 'XYZ', 'q3-r0-s0',
             '(beta1 X^d11 Y^d21 Z^d31, beta2 X^d12 Y^d22 Z^d32, beta3 X^d13 Y^d23 Z^d33)',
             exponents=tuple(_d(i, j) for j in (1, 2, 3) for i in (1, 2, 3)),
             constraints=(
                 ('det D != 0', lambda v: round(float(np.linalg.det(np.array(
                     [[v[f"d{i}{j}"] for j in (1, 2, 3)] for i in (1, 2, 3)], dtype=float))))
                  != 0),
                 ('column degrees >= 2', lambda v: all(
                     v[f"d1{j}"] + v[f"d2{j}"] + v[f"d3{j}"] >= 2 for j in (1, 2, 3))),
             ),
             rescale='d-minus-identity'),
    TableRow(3, 1, 1, 1, 'XYZ', 'q3-r1-s1',
             '(l1 X, beta1 X^c1 Y^d11 Z^d21 (1 + g X^n), beta2 X^c2 Y^d12 Z^d22)',
             exponents=(('c1', 'Y', 'X'), ('c2', 'Z', 'X'), _d_shifted(1, 1, 1),
                        _d_shifted(2, 1, 1), _d_shifted(1, 2, 1), _d_shifted(2, 2, 1)),
             constraints=(
                 ('d11 d22 != d12 d21', lambda v: _det2(v, 'd11', 'd12', 'd21', 'd22') != 0),
                 ('c1 + c2 >= 1', lambda v: v['c1'] + v['c2'] >= 1),
                 ('column degrees >= 2', lambda v: v['c1'] + v['d11'] + v['d21'] >= 2
                  and v['c2'] + v['d12'] + v['d22'] >= 2),
             ),
             rescale='d-minus-identity'),
    TableRow(3, 2, 2, 1, 'XYZ', 'q3-r2-s2-eta1', '(l1 X, l2 Y, X^c1 Y^c2 Z^d)',
             exponents=(('c1', 'Z', 'X'), ('c2', 'Z', 'Y'), ('d', 'Z', 'Z')),
             constraints=(('c1 >= 1', lambda v: v['c1'] >= 1), ('c2 >= 1', lambda v: v['c2'] >= 1),
                          ('d >= 2', lambda v: v['d'] >= 2)),
             unit_names=('beta:Z',)),
    TableRow(3, 2, 2, 2, 'XYZ', 'q3-r2-s2-eta2', '(a1 Y, a2 X, X^c1 Y^c2 Z^d)',
             exponents=(('c1', 'Z', 'X'), ('c2', 'Z', 'Y'), ('d', 'Z', 'Z')),
             constraints=(('c1 >= 1', lambda v: v['c1'] >= 1), ('c2 >= 1', lambda v: v['c2'] >= 1),
                          ('d >= 2', lambda v: v['d'] >= 2)),
             unit_names=('beta:Z',)),
)

ROWS_BY_KEY = {row.key: row for row in TABLE}


# ==========================================
# Table coordinates
# ==========================================

class TableView:
    """A normalized germ read in the coordinates X, Y, Z of the table."""

    def __init__(self, germ, blocks):
        self.germ = germ
        self.blocks = blocks
        self.field = germ.field
        to_complex = self.field.to_complex
        # exact eigenvalues where the table has them, complex roots for 2-cycles
        self.exact_eigen = {}
        eigen = {}
        for cycle in blocks.cycles:
            if len(cycle) == 1:
                self.exact_eigen[cycle[0]] = blocks.alpha[cycle[0]]
                eigen[cycle[0]] = to_complex(blocks.alpha[cycle[0]])
                continue
            product = 1 + 0j
            for j in cycle:
                product *= to_complex(blocks.alpha[j])
            for j in cycle:
                eigen[j] = product ** (1.0 / len(cycle))
        for i in blocks.v_idx:
            value = germ[i].coefficient(tuple(1 if j == i else 0 for j in range(germ.dim)))
            self.exact_eigen[i] = value
            eigen[i] = to_complex(value)
        nonzero = sorted(blocks.u_idx + blocks.v_idx, key=lambda i: (-abs(eigen[i]), i))
        self.eigen = eigen
        self.coords = nonzero + blocks.y_idx + blocks.z_idx
        self.letter = {c: LETTERS[i] for i, c in enumerate(self.coords)}
        self.role = {}
        for i in blocks.u_idx:
            self.role[self.letter[i]] = 'u'
        for i in blocks.v_idx:
            self.role[self.letter[i]] = 'v'
        for i in blocks.y_idx:
            self.role[self.letter[i]] = 'y'
        for i in blocks.z_idx:
            self.role[self.letter[i]] = 'z'

    def eigen_value(self, index):
        return self.exact_eigen.get(index, self.eigen[index])

    @property
    def crit_shape(self):
        return ''.join(sorted(self.letter[i] for i in self.blocks.u_idx + self.blocks.y_idx))

    def component(self, letter):
        return self.germ[self.coords[LETTERS.index(letter)]]

    def exponents(self, n):
        return {self.letter[i]: e for i, e in enumerate(n) if e}

    def render(self, value):
        return render_number(value, self.field)

    def monomial(self, letter):
        """(coefficient, exponents, unit) of a critical component x^m * unit."""
        m, unit = monomial_unit_factor(self.component(letter))
        return unit.constant_term(), self.exponents(m), unit

    def z_split(self, letter):
        """(nu, exponents of the z-linear monomial, omega) of an affine component."""
        index = self.coords[LETTERS.index(letter)]
        series = self.component(letter)
        linear = [(n, c) for n, c in series.terms.items() if n[index] == 1]
        if len(linear) != 1 or any(n[index] > 1 for n in series.terms):
            raise ClassificationError(
                f"component {letter} is not of the form nu x^l y^m {letter} + omega",
                stage='classify')
        n, nu = linear[0]
        exps = self.exponents(n)
        exps.pop(letter, None)
        omega = series.filter(lambda k: k[index] == 0)
        return nu, exps, omega


def _exponent(values, comp, var):
    return values.get(comp, {}).get(var, 0)


def _rescale(row, named, view):
    """Coefficient names the diagonal rescale can set to 1."""
    chosen = set(row.unit_names)
    if row.rescale == 'beta-nu-rank':
        M = np.array([[named['d11'] - 1, named['d12'], named['l']],
                      [named['d21'], named['d22'] - 1, named['m']]], dtype=float)
        labels = ('beta:X', 'beta:Y', 'nu')
        rank = np.linalg.matrix_rank(M)
        if rank == 2:
            for a, b in combinations(range(3), 2):
                if round(float(np.linalg.det(M[:, [a, b]]))) != 0:
                    chosen.update((labels[a], labels[b]))
                    break
        elif rank == 1:
            chosen.add('nu' if M[:, 2].any() else labels[int(np.flatnonzero(M.any(axis=0))[0])])
    elif row.rescale == 'c-l-determinant':
        if named['c'] * named['m'] - named['l'] * (named['d'] - 1) != 0:
            chosen.add('nu')
    elif row.rescale == 'd-minus-identity':
        letters = [view.letter[i] for i in view.blocks.y_idx]
        D = np.array(view.blocks.D, dtype=float) - np.eye(len(letters))
        picked = []
        for j, letter in enumerate(letters):
            trial = D[:, picked + [j]]
            if np.linalg.matrix_rank(trial) == len(picked) + 1:
                picked.append(j)
                chosen.add(f"beta:{letter}")
    return chosen


def classify(cert) -> ClassRow:
    """
    Match a normalized 3-dimensional germ against the table.

    Args:
        cert: ConjugacyCertificate from normalize_full

    Returns:
        ClassRow with the extracted parameters

    Raises:
        UnresolvedClassError: for the rows the table leaves open
        ClassificationError: if the normal form matches no row
    """
    germ, blocks = cert.normalized, cert.blocks
    if germ.dim != 3:
        raise ClassificationError(f"classification covers d = 3 only, got d = {germ.dim}",
                                  stage='classify')
    view = TableView(germ, blocks)
    key = (blocks.q, blocks.r, blocks.s, blocks.eta, view.crit_shape)
    row = ROWS_BY_KEY.get(key)
    if row is None:
        raise ClassificationError(
            f"no table row for q={blocks.q} r={blocks.r} s={blocks.s} eta={blocks.eta} "
            f"critical set {view.crit_shape or 'empty'}", stage='classify')
    if not row.resolved:
        raise UnresolvedClassError(
            f"row {row.form_id} {row.form} has no explicit classification: the images of "
            f"the critical set can be any curve or an infinite sequence of curves",
            stage='classify', form_id=row.form_id, q=row.q, r=row.r, s=row.s)

    parameters = _parameters(view, row)
    logger.info("Classified as %s", row.form_id)
    return ClassRow(row.q, row.r, row.s, row.eta, row.crit_shape, row.form_id, row.form,
                    parameters)


def _parameters(view, row):
    blocks, render = view.blocks, view.render
    params = {'letters': {view.letter[i]: view.germ.names[i] for i in view.coords}}
    params['lambda'] = [render_number(view.eigen_value(view.coords[i]), view.field)
                        for i in range(blocks.s)]
    if blocks.eta == 2:
        cycle = blocks.cycles[0]
        alphas = [blocks.alpha[j] for j in cycle]
        params['alpha'] = [render(a) for a in alphas]
        root = view.eigen[cycle[0]]
        params['lambda'] = [render_number(root), render_number(-root)]
        params['alpha_product'] = render(alphas[0] * alphas[1])
        params['lambda_product'] = render_number(-(root * root))

    exponents, beta_raw = {}, {}
    g_terms = {}
    for i in blocks.y_idx:
        letter = view.letter[i]
        coefficient, exps, unit = view.monomial(letter)
        exponents[letter] = exps
        beta_raw[letter] = coefficient
        g_terms[letter] = [
            {'n': view.exponents(n), 'raw': render(c / coefficient)}
            for n, c in unit.items() if sum(n)]
    nu_raw = None
    omega_linear = {}
    for i in blocks.z_idx:
        if blocks.s + blocks.p != 2:
            break
        letter = view.letter[i]
        nu_raw, exps, omega = view.z_split(letter)
        exponents[letter] = exps
        omega_linear = {view.letter[j]: c for n, c in omega.items() if sum(n) == 1
                        for j in range(len(n)) if n[j]}
    rho_terms = {}
    for i in blocks.v_idx:
        letter = view.letter[i]
        rho_terms[letter] = [
            {'n': view.exponents(n), 'raw': render(c)}
            for n, c in view.germ[i].items() if sum(n) > 1 or view.letter[n.index(1)] != letter]

    named = {name: _exponent(exponents, comp, var) for name, comp, var in row.exponents}
    failed = [text for text, check in row.constraints if not check(named)]
    if failed:
        raise ClassificationError(
            f"row {row.form_id} constraints fail: {', '.join(failed)} (exponents {named})",
            stage='classify')
    params.update(named)
    params['exponents'] = exponents

    units = _rescale(row, named, view)
    if beta_raw:
        params['beta_raw'] = {k: render(v) for k, v in beta_raw.items()}
        params['beta'] = {k: '1' if f"beta:{k}" in units else render(v)
                          for k, v in beta_raw.items()}
    if nu_raw is not None:
        params['nu_raw'] = render(nu_raw)
        params['nu'] = '1' if 'nu' in units else render(nu_raw)

    if row.form_id == 'q0-r0-s3':
        params['rho'] = rho_terms
    else:
        params['rho'] = {k: [dict(t, value=1) for t in terms] for k, terms in rho_terms.items()
                         if terms}
    params['g'] = {k: [dict(t, value=1) for t in terms] for k, terms in g_terms.items() if terms}

    unmet = []
    if row.omega == 'epsilon':
        params['epsilon'] = 1 if 'Y' in omega_linear else 0
        if set(omega_linear) - {'Y'}:
            unmet.append("omega - epsilon Y in m^2")
    elif row.omega == 'm2' and omega_linear:
        unmet.append("omega in m^2")
    for text in unmet:
        logger.warning("Row %s: normal form does not satisfy %s", row.form_id, text)
    params['constraints_unmet'] = unmet
    return params


# ==========================================
# Fixtures
# ==========================================

@dataclass
class TableFixture:
    name: str
    germ: GermMap
    expected: str
    perturbed: bool = False
    unresolved: bool = False


FIXTURE_SPECS = (
    ('q0-r0-s3', ['x', 'y', 'z'], 0,
     ['x/2', 'y/4 + x^2', 'z/5 + x*y'],
     ['x/2 + x^3', 'y/4 + x^2 + x*y', 'z/5 + x*y + z^2']),
    ('q1-r0-s1', ['y', 'x', 'z'], 1,
     ['y^2', 'x/2', 'y*z/3 + y + x^2'],
     ['y^2*(1 + x)', 'x/2 + x^2', 'y*z*(1 + z)/3 + y + x^2 + x^2*y^3']),
    ('q1-r0-s2', ['z', 'x', 'y'], 1,
     ['z^2', 'x/2', 'y/4 + x^2'],
     ['z^2*(1 + x + y)', 'x/2 + x^3', 'y/4 + x^2 + x*y']),
    ('q1-r1-s2-X', ['x', 'y', 'z'], 1,
     ['x/2', 'y/4 + x^2', 'x*z + y^2'],
     ['x*(1 + y)/2', 'y/4 + x^2 + x^3', 'x*z*(1 + z) + y^2 + x^2*y']),
    ('q1-r1-s2-Y', ['y', 'x', 'z'], 1,
     ['y/4', 'x/2', 'y*z + x^2'],
     ['y*(1 + x)/4', 'x/2 + x^3', 'y*z*(1 + z) + x^2 + y^3']),
    ('q2-r0-s0', ['x', 'y', 'z'], 2,
     ['x^2/2', 'x*y^2', 'x*y*z/3 + x^2'],
     ['x^2*(1 + y)/2', 'x*y^2*(1 + x)', 'x*y*z*(1 + z)/3 + x^2 + x^2*y^3']),
    ('q2-r0-s1', ['y', 'z', 'x'], 2,
     ['y^2*z', 'y', 'x/2'],
     ['y^2*z*(1 + x)', 'y*(1 + x^2)', 'x/2 + x^3']),
    ('q2-r1-s1', ['x', 'y', 'z'], 2,
     ['x/2', 'x*y^2', 'x*z/3 + y + y^3'],
     ['x*(1 + x)/2', 'x*y^2*(1 + x)', 'x*z*(1 + z)/3 + y + y^3 + x^2*y^2']),
    ('q2-r1-s2-XZ', ['x', 'z', 'y'], 2,
     ['x/2', 'x*z^2', 'y/4 + x^2'],
     ['x*(1 + y)/2', 'x*z^2*(1 + y)', 'y/4 + x^2 + x^3 + x*y']),
    ('q2-r1-s2-YZ', ['y', 'z', 'x'], 2,
     ['y/4', 'y*z^2', 'x/2'],
     ['y*(1 + x)/4', 'y*z^2*(1 + x)', 'x/2 + x^2']),
    ('q2-r2-s2-eta1', ['x', 'y', 'z'], 2,
     ['x/2', 'y/3', 'x*y*z + x^2'],
     ['x*(1 + y)/2', 'y*(1 + x)/3', 'x*y*z*(1 + z) + x^2 + x*y^3']),
    ('q2-r2-s2-eta2', ['x', 'y', 'z'], 2,
     ['y/2', 'x/8', 'x*y*z + y^2'],
     ['y*(1 + x)/2', 'x*(1 + y)/8', 'x*y*z*(1 + z) + y^2 + x^3']),
    ('q3-r0-s0', ['x', 'y', 'z'], 3,
     ['x^2*y/2', 'y^2*z/3', 'z^2*x'],
     ['x^2*y*(1 + z)/2', 'y^2*z*(1 + x)/3', 'z^2*x*(1 + y)']),
    ('q3-r1-s1', ['x', 'y', 'z'], 3,
     ['x/2', 'x*y^2*z', 'x^2*y*z'],
     ['x*(1 + x)/2', 'x*y^2*z*(1 + x)', 'x^2*y*z*(1 + x + y)']),
    ('q3-r2-s2-eta1', ['x', 'y', 'z'], 3,
     ['x/2', 'y/3', 'x*y*z^2'],
     ['x*(1 + x)/2', 'y*(1 + y)/3', 'x*y*z^2*(1 + x + y)']),
    ('q3-r2-s2-eta2', ['x', 'y', 'z'], 3,
     ['y/2', 'x/8', 'x*y*z^2'],
     ['y*(1 + y)/2', 'x*(1 + x)/8', 'x*y*z^2*(1 + z)']),
)

UNRESOLVED_SPECS = (
    ('q1-r1-s1', ['x', 'y', 'z'], 1,
     ['x/2', 'x*y + z^2', 'x*z + x*y*(3/2)*z + z^3']),
    ('q1-r0-s0', ['x', 'y', 'z'], 1,
     ['x^2/2', 'x*y + z^2', 'x*z + x*y*(3/2)*z + z^3']),
)


def build_germ(variables: Sequence[str], critical_count: int, components: Sequence[str],
               trunc: int = 5, mode: str = 'exact') -> GermMap:
    field = NumericConfig(mode=mode, trunc=trunc).field()
    series = [parse_expr(text, variables, trunc, field) for text in components]
    return GermMap(series, critical_count, variables)


def table_fixtures(trunc: int = 5, mode: str = 'exact') -> List[TableFixture]:
    """
    One germ per fully specified row plus a perturbed variant, and the open rows.

    Returns:
        list of TableFixture
    """
    out = []
    for form_id, variables, q, plain, perturbed in FIXTURE_SPECS:
        out.append(TableFixture(form_id, build_germ(variables, q, plain, trunc, mode), form_id))
        out.append(TableFixture(f"{form_id}+perturbed",
                                build_germ(variables, q, perturbed, trunc, mode), form_id,
                                perturbed=True))
    for form_id, variables, q, components in UNRESOLVED_SPECS:
        out.append(TableFixture(form_id, build_germ(variables, q, components, trunc, mode),
                                form_id, unresolved=True))
    return out
