"""
Rigid germs in prepared coordinates.

A germ is a tuple of truncated series fixing the origin whose first
``critical_count`` coordinate hyperplanes carry the generalized critical set.
This module certifies rigidity, reads off the internal action, splits the
critical coordinates into periodic and non-periodic ones and brings the
linear part of the remaining coordinates to Jordan form.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field as dataclass_field, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.polys.domains import QQ_I, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.polyerrors import CoercionFailed

from .exceptions import (
    ArityError,
    ConstantTermError,
    ContractionIndeterminateError,
    FactorizationError,
    JordanError,
    NonInjectiveActionError,
    NotRigidError,
    TriangularityError,
    TruncationTooLowError,
    ZeroSeriesError,
)
from .multiseries import (
    TruncatedSeries,
    apply_linear,
    compose_maps,
    identity_map,
    linear_part,
    partial_derivative,
)

logger = logging.getLogger(__name__)


# ==========================================
# Germs and block data
# ==========================================

@dataclass(frozen=True)
class BlockStructure:
    """
    Coordinate blocks of a prepared germ.

    Layout is (u, v, y, z): r periodic critical coordinates, e coordinates
    with extra nonzero eigenvalues, p non-periodic critical coordinates and
    the remaining ones. Before the Jordan split e is 0 and z holds every
    non-critical coordinate.
    """

    d: int
    q: int
    r: int
    p: int
    B: Tuple[Tuple[int, ...], ...]
    C: Tuple[Tuple[int, ...], ...]
    D: Tuple[Tuple[int, ...], ...]
    alpha: tuple
    beta: tuple
    eta: int
    order: Tuple[int, ...]
    cycles: Tuple[Tuple[int, ...], ...]
    e: int = 0
    mu: tuple = ()
    jordan: bool = False
    coupled: bool = False

    @property
    def s(self):
        return self.r + self.e

    @property
    def t(self):
        return self.d - self.q

    @property
    def z(self):
        return self.d - self.q - self.e

    @property
    def u_idx(self):
        return list(range(0, self.r))

    @property
    def v_idx(self):
        return list(range(self.r, self.s))

    @property
    def x_idx(self):
        return list(range(0, self.s))

    @property
    def y_idx(self):
        return list(range(self.s, self.s + self.p))

    @property
    def z_idx(self):
        return list(range(self.s + self.p, self.d))

    @property
    def sigma(self):
        """sigma[k] is the u-coordinate that u_k o f is proportional to."""
        return [next(l for l in range(self.r) if self.B[l][k]) for k in range(self.r)]

    @property
    def E(self):
        """x-exponents of the y-components: C on top of e zero rows."""
        return [list(row) for row in self.C] + [[0] * self.p for _ in range(self.e)]

    @property
    def P(self):
        size = self.s
        rows = [[0] * size for _ in range(size)]
        for l in range(self.r):
            for k in range(self.r):
                rows[l][k] = self.B[l][k]
        for i in range(self.r, size):
            rows[i][i] = 1
        return rows

    @property
    def gamma(self):
        return tuple(self.alpha) + tuple(self.mu)

    @property
    def internal_action(self):
        """A = [[B, C], [0, D]] in arranged order."""
        rows = [list(self.B[i]) + list(self.C[i]) for i in range(self.r)]
        rows += [[0] * self.r + list(self.D[i]) for i in range(self.p)]
        return rows


class GermMap:
    """An origin-fixing germ: d truncated series in d variables."""

    def __init__(self, components, critical_count=0, names=None, blocks=None):
        components = list(components)
        if not components:
            raise ArityError("a germ needs at least one component")
        dim = components[0].dim
        if len(components) != dim:
            raise ArityError(f"{len(components)} components for {dim} variables")
        for k, s in enumerate(components):
            if s.dim != dim:
                raise ArityError(f"component {k} has dimension {s.dim}, expected {dim}")
            if not s.field.is_zero(s.constant_term()):
                raise ConstantTermError(f"component {k} does not fix the origin")
        if not 0 <= critical_count <= dim:
            raise ValueError(f"critical_count must lie in [0, {dim}]")
        self.components = components
        self.critical_count = critical_count
        self.names = list(names) if names else [f"x{i + 1}" for i in range(dim)]
        self.blocks = blocks

    def __repr__(self):
        body = ', '.join(s.to_expression(self.names) for s in self.components)
        return f"GermMap(q={self.critical_count}, ({body}))"

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, k):
        return self.components[k]

    @property
    def dim(self):
        return len(self.components)

    @property
    def trunc(self):
        return min(s.trunc for s in self.components)

    @property
    def field(self):
        return self.components[0].field

    def linear_part(self):
        return linear_part(self.components)

    def with_components(self, components, blocks=None):
        return GermMap(components, self.critical_count, self.names,
                       self.blocks if blocks is None else blocks)

    def with_trunc(self, trunc):
        return self.with_components([s.with_trunc(trunc) for s in self.components])

    def compose(self, inner):
        """self o inner."""
        return self.with_components(compose_maps(self.components, list(inner)))

    def iterate(self, n):
        result = GermMap(identity_map(self.dim, self.trunc, self.field), self.critical_count)
        for _ in range(n):
            result = self.compose(result)
        return result

    def permuted(self, order):
        """Conjugate by the coordinate permutation: new coordinate i is old order[i]."""
        comps = [self.components[j].permuted(order) for j in order]
        names = [self.names[j] for j in order]
        return GermMap(comps, self.critical_count, names, self.blocks)


@dataclass
class RigidityCertificate:
    jacobian_monomial: Tuple[int, ...]
    jacobian_unit_constant: object
    pullback_exponents: List[List[int]]
    unit_constants: list
    verified_to_degree: int
    units: list = dataclass_field(default_factory=list)
    unreachable: List[int] = dataclass_field(default_factory=list)


class Contraction(NamedTuple):
    contracting: bool
    radius: float
    eigenvalues: list


# ==========================================
# Jacobian and factorization
# ==========================================

def jacobian_det(f: GermMap, trunc: Optional[int] = None) -> TruncatedSeries:
    """
    det df by cofactor expansion with memoized minors.

    The result is truncated at N - 1. With ``trunc`` the stored terms are
    read as polynomials and the determinant is expanded up to that degree.
    """
    if trunc is not None:
        f = f.with_trunc(trunc + 1)
    d = f.dim
    J = [[partial_derivative(f[i], j) for j in range(d)] for i in range(d)]
    trunc = max(f.trunc - 1, 0)
    one = TruncatedSeries.constant(f.field.one, d, trunc, f.field)
    memo = {}

    def minor(row, cols):
        if row == d:
            return one
        key = (row, cols)
        if key in memo:
            return memo[key]
        total = TruncatedSeries.zero(d, trunc, f.field)
        for pos, c in enumerate(cols):
            entry = J[row][c]
            if entry.is_zero():
                continue
            term = entry * minor(row + 1, cols[:pos] + cols[pos + 1:])
            total = total + term if pos % 2 == 0 else total - term
        memo[key] = total
        return total

    return minor(0, tuple(range(d)))


def monomial_unit_factor(s: TruncatedSeries) -> Tuple[Tuple[int, ...], TruncatedSeries]:
    """
    Write s = x^m * u with u(0) != 0.

    Returns:
        (m, u) with m the entrywise minimum exponent over the support

    Raises:
        ZeroSeriesError: if s vanishes to its truncation degree
        FactorizationError: if the quotient by x^m is not a unit
    """
    if s.is_zero():
        raise ZeroSeriesError("cannot factor the zero series")
    m = tuple(min(n[i] for n in s.terms) for i in range(s.dim))
    shift = sum(m)
    quotient = {tuple(a - b for a, b in zip(n, m)): c for n, c in s.terms.items()}
    unit = s.like(quotient, s.trunc - shift)
    if s.field.is_zero(unit.constant_term()):
        raise FactorizationError(
            f"quotient by the monomial {m} has zero constant term")
    return m, unit


def polynomial_jacobian_degree(f: GermMap) -> int:
    """Top degree of det df when the stored terms are read as polynomials."""
    top = sum(max((sum(n) for n in s.terms), default=0) for s in f)
    return max(top - f.dim, f.trunc - 1, 0)


def _critical_closure(seed, A, q):
    """Critical hyperplanes reached from ``seed`` by repeated pullback."""
    reached = set(seed)
    frontier = list(seed)
    while frontier:
        l = frontier.pop()
        for j in range(q):
            if A[j][l] and j not in reached:
                reached.add(j)
                frontier.append(j)
    return reached


def rigidity_check(f: GermMap) -> RigidityCertificate:
    """
    Certify that f is rigid in its given coordinates.

    Args:
        f: GermMap with critical_count q

    Returns:
        RigidityCertificate carrying the pullback exponent matrix

    Raises:
        NotRigidError: if det df or a critical component is not a monomial
            times a unit, or a monomial involves a non-critical variable
        TruncationTooLowError: if det df vanishes on every stored term
    """
    stage = 'rigidity'
    q = f.critical_count
    jac = jacobian_det(f)
    verified = jac.trunc
    if jac.is_zero():
        jac = jacobian_det(f, polynomial_jacobian_degree(f))
        logger.info("det df vanishes up to degree %d; expanded the stored terms to degree %d",
                    verified, jac.trunc)
    try:
        m, unit = monomial_unit_factor(jac)
    except ZeroSeriesError:
        raise TruncationTooLowError(
            f"det df vanishes on the stored terms up to degree {jac.trunc}; "
            f"raise trunc above {f.trunc}", stage=stage, trunc=f.trunc)
    except FactorizationError as e:
        raise NotRigidError(
            f"det df is not a monomial times a unit ({e}); the germ is not rigid "
            f"in these coordinates", stage=stage)
    outside = [f.names[i] for i in range(q, f.dim) if m[i]]
    if outside:
        raise NotRigidError(
            f"det df vanishes on non-critical hyperplanes {outside}; "
            f"critical_count {q} is wrong", stage=stage)

    A = [[0] * q for _ in range(q)]
    units, constants = [], []
    for k in range(q):
        try:
            m_k, u_k = monomial_unit_factor(f[k])
        except (ZeroSeriesError, FactorizationError) as e:
            raise NotRigidError(
                f"component {f.names[k]} is not a monomial times a unit: {e}", stage=stage)
        touched = [f.names[i] for i in range(q, f.dim) if m_k[i]]
        if touched:
            raise NotRigidError(
                f"component {f.names[k]} vanishes on non-critical hyperplanes {touched}",
                stage=stage)
        for l in range(q):
            A[l][k] = m_k[l]
        units.append(u_k)
        constants.append(u_k.constant_term())

    reached = _critical_closure([i for i in range(q) if m[i]], A, q)
    unreachable = [i for i in range(q) if i not in reached]
    if unreachable:
        logger.warning(
            "Declared critical hyperplanes %s are not reached from the Jacobian "
            "support by pullback", [f.names[i] for i in unreachable])
    logger.info("Rigidity certified to degree %d, jacobian monomial %s", verified, m)
    return RigidityCertificate(
        jacobian_monomial=m,
        jacobian_unit_constant=unit.constant_term(),
        pullback_exponents=A,
        unit_constants=constants,
        verified_to_degree=verified,
        units=units,
        unreachable=unreachable,
    )


# ==========================================
# Internal action and blocks
# ==========================================

def _int_matvec(A, v):
    return [sum(A[i][j] * v[j] for j in range(len(v))) for i in range(len(A))]


def is_periodic(A: Sequence[Sequence[int]], k: int) -> bool:
    """
    A^n e_k = e_k for some n <= q, in exact integer arithmetic.

    Every periodic coordinate lies on a cycle of length at most q, and eta
    in detect_blocks is the lcm of these cycle lengths.
    """
    q = len(A)
    target = [1 if i == k else 0 for i in range(q)]
    v = target
    for _ in range(q):
        v = _int_matvec(A, v)
        if v == target:
            return True
    return False


def integer_det(M: Sequence[Sequence[int]]) -> int:
    if not M:
        return 1
    return int(DomainMatrix([[ZZ(int(v)) for v in row] for row in M], (len(M), len(M)), ZZ).det())


def detect_blocks(f: GermMap, cert: RigidityCertificate) -> BlockStructure:
    """
    Split the critical coordinates into periodic and non-periodic blocks.

    Raises:
        NonInjectiveActionError: if the non-periodic block D is singular
    """
    q, d = f.critical_count, f.dim
    A = cert.pullback_exponents
    periodic = [k for k in range(q) if is_periodic(A, k)]
    rest = [k for k in range(q) if k not in periodic]
    order = tuple(periodic + rest + list(range(q, d)))
    r, p = len(periodic), len(rest)
    crit = order[:q]
    arranged = [[A[crit[i]][crit[j]] for j in range(q)] for i in range(q)]
    B = tuple(tuple(arranged[i][:r]) for i in range(r))
    C = tuple(tuple(arranged[i][r:]) for i in range(r))
    D = tuple(tuple(arranged[r + i][r:]) for i in range(p))
    if integer_det(D) == 0:
        raise NonInjectiveActionError(
            f"det D = 0 for D = {[list(row) for row in D]}: the internal action is not "
            f"injective and the resulting resonances are not handled", stage='blocks')

    sigma = [next(l for l in range(r) if B[l][k]) for k in range(r)]
    seen, cycles = set(), []
    for start in range(r):
        if start in seen:
            continue
        cycle, k = [], start
        while k not in seen:
            seen.add(k)
            cycle.append(k)
            k = sigma[k]
        cycles.append(tuple(cycle))
    eta = math.lcm(*[len(c) for c in cycles]) if cycles else 1
    constants = [cert.unit_constants[k] for k in crit]
    logger.info("Blocks detected: r=%d p=%d eta=%d order=%s", r, p, eta, order)
    return BlockStructure(
        d=d, q=q, r=r, p=p, B=B, C=C, D=D,
        alpha=tuple(constants[:r]), beta=tuple(constants[r:]),
        eta=eta, order=order, cycles=tuple(cycles),
    )


def arrange(f: GermMap, blocks: BlockStructure) -> GermMap:
    """Germ in (u, y, t) order with the block data attached."""
    g = f.permuted(list(blocks.order))
    g.blocks = blocks
    return g


def arrange_phi(f: GermMap, order: Sequence[int]) -> List[TruncatedSeries]:
    """The coordinate change realizing a permutation as a map."""
    x = identity_map(f.dim, f.trunc, f.field)
    return [x[j] for j in order]


# ==========================================
# Spectrum
# ==========================================

def is_contracting(f: GermMap, tol_eig: float = 1e-9) -> Contraction:
    """
    Spectral test on df at the origin.

    Raises:
        ContractionIndeterminateError: if an eigenvalue modulus is within
            tol_eig of 1
    """
    L = np.array([[f.field.to_complex(c) for c in row] for row in f.linear_part()],
                 dtype=complex)
    eig = np.linalg.eigvals(L) if L.size else np.array([])
    moduli = [abs(v) for v in eig]
    near = [m for m in moduli if abs(m - 1.0) <= tol_eig]
    if near:
        raise ContractionIndeterminateError(
            f"eigenvalue modulus {near[0]!r} is within {tol_eig} of 1", stage='contraction')
    radius = max(moduli, default=0.0)
    return Contraction(radius < 1.0, float(radius), [complex(v) for v in eig])


def _eigen_key(value, index, tol):
    modulus = abs(value)
    if modulus <= tol:
        return (1, 0.0, 0.0, index)
    return (0, -modulus, cmath.phase(value), index)


def _ordered_lower(M, tol):
    """Already lower triangular, sorted and with the nonzero part decoupled."""
    n = len(M)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(M[i][j]) > tol:
                return None
    diag = [M[i][i] for i in range(n)]
    e = sum(1 for v in diag if abs(v) > tol)
    if any(abs(v) <= tol for v in diag[:e]):
        return None
    moduli = [abs(v) for v in diag[:e]]
    if any(moduli[i + 1] > moduli[i] + tol for i in range(e - 1)):
        return None
    for i in range(e, n):
        for j in range(e):
            if abs(M[i][j]) > tol:
                return None
    return e


def _nullspace_columns(M, count, tol):
    _, sv, vh = np.linalg.svd(M)
    if count and sv[-count] > tol * max(1.0, sv[0]):
        return None
    basis = vh[-count:].conj().T if count else np.zeros((M.shape[0], 0))
    cols = []
    for col in basis.T:
        pivot = col[np.argmax(np.abs(col))]
        cols.append(col / pivot)
    return cols


def _kernel_basis(M, tol):
    """Orthonormal columns spanning ker M, rank decided relative to the top singular value."""
    _, sv, vh = np.linalg.svd(M)
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    return vh[rank:].conj().T


def _outside_span(vector, span, tol):
    if span.shape[1] == 0:
        return np.linalg.norm(vector) > tol
    coeffs = np.linalg.lstsq(span, vector, rcond=None)[0]
    return np.linalg.norm(vector - span @ coeffs) > tol * max(1.0, np.linalg.norm(vector))


def _nilpotent_chains(M, size, tol):
    """
    Jordan chains spanning the generalized kernel of M.

    Each chain is listed from its generator w down to the eigenvector
    M^(j-1) w, so M maps every column to the next one of its chain and the
    matrix in this basis is lower triangular.

    Returns:
        list of columns, or None when the kernels of the powers of M do not
        grow to ``size``
    """
    n = M.shape[0]
    kernels = [np.zeros((n, 0), dtype=complex)]
    power = np.eye(n, dtype=complex)
    while kernels[-1].shape[1] < size:
        power = power @ M
        basis = _kernel_basis(power, tol)
        if basis.shape[1] <= kernels[-1].shape[1] or basis.shape[1] > size:
            return None
        kernels.append(basis)
    columns = []
    used = np.zeros((n, 0), dtype=complex)
    for level in range(len(kernels) - 1, 0, -1):
        for candidate in kernels[level].T:
            if not _outside_span(candidate, np.column_stack([kernels[level - 1], used]), tol):
                continue
            chain = [candidate / candidate[np.argmax(np.abs(candidate))]]
            for _ in range(level - 1):
                chain.append(M @ chain[-1])
            columns.extend(chain)
            used = np.column_stack([used] + chain)
    return columns if len(columns) == size else None


def _float_jordan_basis(L, tol_eig):
    M = np.array(L, dtype=complex)
    n = M.shape[0]
    identity = np.eye(n)
    if _ordered_lower(L, tol_eig) is not None:
        return identity
    clusters = []
    for value in sorted(np.linalg.eigvals(M), key=lambda v: (abs(v), cmath.phase(v))):
        for cluster in clusters:
            rep = cluster[0]
            if abs(value - rep) <= tol_eig * max(1.0, abs(rep)):
                cluster.append(value)
                break
        else:
            clusters.append([value])
    zero = [c for c in clusters if abs(np.mean(c)) <= tol_eig]
    nonzero = sorted((c for c in clusters if abs(np.mean(c)) > tol_eig),
                     key=lambda c: (-abs(np.mean(c)), cmath.phase(np.mean(c))))
    rank_tol = math.sqrt(tol_eig)
    columns = []
    for cluster in nonzero:
        rep = complex(np.mean(cluster))
        cols = _nullspace_columns(M - rep * identity, len(cluster), rank_tol)
        if cols is None:
            logger.warning(
                "Eigenvalue %s has a nontrivial nilpotent coupling in float mode", rep)
            raise JordanError(
                f"eigenvalue cluster near {rep} is defective; supply coordinates where "
                f"this block is already lower triangular, or use exact mode",
                stage='jordan')
        columns.extend(cols)
    nilpotent = sum(len(c) for c in zero)
    if nilpotent:
        cols = _nilpotent_chains(M, nilpotent, rank_tol)
        if cols is None:
            raise JordanError("could not build Jordan chains for the nilpotent part of the "
                              "linear map; use exact mode", stage='jordan')
        columns.extend(cols)
    T = np.column_stack(columns)
    if np.linalg.cond(T) > 1.0 / rank_tol:
        logger.warning("Ill-conditioned eigenbasis (cond %.3g)", np.linalg.cond(T))
        raise JordanError(
            "eigenvectors are nearly dependent: a defective cluster split numerically; "
            "supply a similarity transform or use exact mode", stage='jordan')
    return T


def _exact_jordan_basis(L):
    n = len(L)
    M = sympy.Matrix([[QQ_I.to_sympy(c) for c in row] for row in L])
    try:
        P, J = M.jordan_form()
    except Exception as e:
        raise JordanError(f"Jordan form failed: {str(e)}", stage='jordan')
    blocks, start = [], 0
    for i in range(n):
        if i == n - 1 or J[i, i + 1] == 0:
            try:
                value = QQ_I.from_sympy(J[start, start])
            except CoercionFailed:
                raise JordanError(
                    f"eigenvalue {J[start, start]} is not a Gaussian rational; "
                    f"use float mode", stage='jordan')
            blocks.append((start, i + 1, value))
            start = i + 1
    blocks.sort(key=lambda b: _eigen_key(complex(float(b[2].x), float(b[2].y)), b[0], 0.0))
    columns = []
    for a, b, _ in blocks:
        columns.extend(reversed(range(a, b)))
    try:
        return [[QQ_I.from_sympy(P[i, j]) for j in columns] for i in range(n)]
    except CoercionFailed:
        raise JordanError("Jordan basis is not Gaussian rational; use float mode",
                          stage='jordan')


def jordan_transform(f: GermMap, blocks: BlockStructure,
                     tol_eig: float = 1e-9) -> Tuple[GermMap, List[TruncatedSeries]]:
    """
    Bring the linear part on the non-critical block to lower Jordan form.

    Returns:
        (germ in (u, v, y, z) layout with refined blocks, coordinate change phi)
    """
    field, d, q = f.field, f.dim, blocks.q
    t_idx = list(range(q, d))
    L = f.linear_part()
    L_tt = [[L[i][j] for j in t_idx] for i in t_idx]
    if not t_idx:
        refined = replace(blocks, jordan=True)
        g = f.with_components(list(f.components), blocks=refined)
        return g, identity_map(d, f.trunc, field)

    if field.exact:
        T = _exact_jordan_basis(L_tt)
    else:
        T = [[complex(v) for v in row] for row in
             _float_jordan_basis([[field.to_complex(c) for c in row] for row in L_tt], tol_eig)]
    T = field.matrix(T)
    T_inv = field.inverse(T)
    S = field.matrix([[1 if i == j else 0 for j in range(d)] for i in range(d)])
    S_inv = field.matrix([[1 if i == j else 0 for j in range(d)] for i in range(d)])
    for a, i in enumerate(t_idx):
        for b, j in enumerate(t_idx):
            S[i][j] = T[a][b]
            S_inv[i][j] = T_inv[a][b]

    x = identity_map(d, f.trunc, field)
    changed = apply_linear(S_inv, compose_maps(f.components, apply_linear(S, x)))
    M = linear_part(changed)
    M_tt = [[M[i][j] for j in t_idx] for i in t_idx]
    tol = 0.0 if field.exact else max(field.tol_coeff, tol_eig)
    check = [[field.to_complex(c) for c in row] for row in M_tt]
    e = _ordered_lower(check, tol)
    if e is None:
        raise TriangularityError(
            "linear part on the non-critical block is not lower triangular after the "
            "Jordan change", stage='jordan')

    order = (list(range(blocks.r)) + list(range(q, q + e))
             + list(range(blocks.r, q)) + list(range(q + e, d)))
    mu = tuple(M_tt[i][i] for i in range(e))
    coupled = any(not field.is_zero(M_tt[i][j]) for i in range(e) for j in range(i))
    refined = replace(blocks, e=e, mu=mu, jordan=True, coupled=coupled)
    g = GermMap(changed, f.critical_count, f.names, refined).permuted(order)
    phi_linear = apply_linear(S_inv, x)
    phi = [phi_linear[j] for j in order]
    logger.info("Jordan split: e=%d nilpotent=%d mu=%s", e, d - q - e,
                [field.render(m) for m in mu])
    return g, phi


def jordan_split(f: GermMap, blocks: BlockStructure, tol_eig: float = 1e-9) -> GermMap:
    """The split germ in (u, v, y, z) layout; ``germ.blocks`` carries e and mu."""
    return jordan_transform(f, blocks, tol_eig)[0]
