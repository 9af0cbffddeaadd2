"""
Conjugation passes bringing a contracting rigid germ to normal form.

The passes run in order: linear (kills the unit factor of the periodic
critical components), Jordan split, primary (v-block Poincare-Dulac
normalization), secondary (unit factor of the non-periodic critical
components) and affine (scalar z-component). Each pass returns a
ConjugacyCertificate with the change of coordinates Phi satisfying
Phi o f = f~ o Phi modulo the truncation degree.
"""
import logging
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .conf import NumericConfig
from .degree_solver import StructuredSolver, degree_weight
from .exceptions import (
    FactorizationError,
    InconsistentSystemError,
    NonConvergenceError,
    NotContractingError,
    PreconditionError,
    SingularLinearPartError,
    SolverError,
    TriangularityError,
    ZeroSeriesError,
)
from .germ_model import (
    BlockStructure,
    GermMap,
    arrange,
    arrange_phi,
    detect_blocks,
    is_contracting,
    jordan_transform,
    monomial_unit_factor,
    rigidity_check,
)
from .multiseries import (
    CompositionTable,
    TruncatedSeries,
    compose,
    compose_maps,
    identity_map,
    invert_diffeo,
    max_difference,
    multi_indices,
    partial_derivative,
    tau_integral,
    unit_exp,
    unit_index,
    unit_log,
)
from .resonance import ResonanceReport, resonance_report

logger = logging.getLogger(__name__)

PASS_ORDER = ('linear', 'jordan', 'primary', 'secondary', 'affine')


@dataclass
class ConjugacyCertificate:
    phi: list
    normalized: GermMap
    residual: float
    passes_applied: List[str]
    blocks: object = None
    resonances: object = None
    rigidity: object = None
    contraction: object = None
    weight_trace: list = dataclass_field(default_factory=list)
    violations: List[str] = dataclass_field(default_factory=list)
    stage_residuals: dict = dataclass_field(default_factory=dict)
    kept_slots: list = dataclass_field(default_factory=list)

    def support(self, indices=None):
        """Monomials present in the normalized components, per component."""
        comps = self.normalized.components
        indices = range(len(comps)) if indices is None else indices
        return {k: set(comps[k].terms) for k in indices}


@dataclass
class TargetShape:
    """
    Allowed shape of a conjugacy and its normal form.

    phi_free(k, n): Phi_k may carry the monomial x^n (degree >= 2)
    slot(k, n): the normal form component k may carry x^n (degree >= 2)
    """

    phi_free: Callable
    slot: Callable
    name: str = 'custom'


# ==========================================
# Helpers
# ==========================================

def verify_conjugacy(f: Sequence[TruncatedSeries], f_tilde: Sequence[TruncatedSeries],
                     phi: Sequence[TruncatedSeries]) -> float:
    """Largest coefficient of Phi o f - f~ o Phi at the truncation degree."""
    f_comps = list(f)
    g_comps = list(f_tilde)
    if len(f_comps) != len(g_comps) or len(phi) != len(f_comps):
        raise PreconditionError("maps have different dimensions", stage='verify')
    return max_difference(compose_maps(list(phi), f_comps), compose_maps(g_comps, list(phi)))


def transport(f: Sequence[TruncatedSeries],
              phi: Sequence[TruncatedSeries]) -> List[TruncatedSeries]:
    """Components of Phi o f o Phi^{-1}."""
    phi_inv = invert_diffeo(list(phi))
    return compose_maps(list(phi), compose_maps(list(f), phi_inv))


def _identity_certificate(f, stage, blocks=None):
    return ConjugacyCertificate(
        phi=identity_map(f.dim, f.trunc, f.field),
        normalized=f,
        residual=0.0,
        passes_applied=[stage],
        blocks=blocks,
    )


def _scaled_unit(phi, x, trunc):
    """x * (1 + phi) known to ``trunc``."""
    return x * (phi + 1).with_trunc(trunc)


def _iterate(step, start, config, stage):
    """Picard iteration until the increment drops below tol_series."""
    current = start
    increment = float('inf')
    for count in range(1, config.n_max + 1):
        following = step(current)
        increment = max_difference(following, current)
        scale = max([1.0] + [s.max_abs() for s in following])
        current = following
        if increment <= config.tol_series * scale:
            logger.debug("%s: fixed point after %d iterations", stage, count)
            return current
    raise NonConvergenceError(
        f"no convergence within n_max={config.n_max} iterations, last increment "
        f"{increment:.3g}", stage=stage)


def _geometric_tail(first, table, factor, config, stage):
    """sum_{n >= 1} factor**n * first o f^(n-1) for a scalar factor."""
    total = first.like({})
    term, weight = first, factor
    for _ in range(config.n_max):
        increment = term.scale(weight)
        total = total + increment
        if increment.max_abs() <= config.tol_series * max(1.0, total.max_abs()):
            return total
        term = table.apply(term)
        weight = weight * factor
    raise NonConvergenceError(
        f"tail sum did not converge within n_max={config.n_max} terms", stage=stage)


def _add_terms(series, coefficients):
    terms = dict(series.terms)
    zero = series.field.zero
    for n, c in coefficients.items():
        terms[n] = terms.get(n, zero) + c
    return series.like(terms)


def _block_coefficients(found, size):
    out = [dict() for _ in range(size)]
    for (k, n), c in found.items():
        out[k][n] = c
    return out


def _residual_table(E, total):
    return {(k, n): c for k, s in enumerate(E) for n, c in s.homogeneous(total).items()}


def _lambda_max(f, tol):
    eig = is_contracting(f, tol).eigenvalues
    return max([abs(v) for v in eig if abs(v) > tol], default=0.0)


# ==========================================
# Linear pass
# ==========================================

def pass_linear(f: GermMap, blocks: BlockStructure,
                config: Optional[NumericConfig] = None) -> ConjugacyCertificate:
    """
    Make the periodic critical components exactly alpha * u^B.

    Args:
        f: germ arranged in (u, y, t) order
        blocks: BlockStructure from detect_blocks
        config: NumericConfig of the run

    Returns:
        ConjugacyCertificate for Phi = (u (1 + phi), y, t)
    """
    stage = 'linear'
    config = config or NumericConfig()
    r, d, N, field = blocks.r, f.dim, f.trunc, f.field
    if r == 0:
        return _identity_certificate(f, stage, blocks)
    sigma = blocks.sigma
    sigma_inv = [sigma.index(i) for i in range(r)]
    x = identity_map(d, N, field)

    theta = []
    for j in range(r):
        try:
            m, unit = monomial_unit_factor(f[j])
        except (ZeroSeriesError, FactorizationError) as e:
            raise PreconditionError(f"u-component {j + 1} is not a monomial times a unit: {e}",
                                    stage=stage)
        if m != unit_index(sigma[j], d):
            raise PreconditionError(
                f"u-component {j + 1} is not proportional to u{sigma[j] + 1}", stage=stage)
        theta.append((unit.scale(field.one / blocks.alpha[j]) - 1).with_trunc(N - 1))

    table = CompositionTable(f.components)

    def step(phi):
        out = []
        for i in range(r):
            j = sigma_inv[i]
            out.append(theta[j] + (theta[j] + 1) * table.apply(phi[j]))
        return out

    zero = [TruncatedSeries.zero(d, N - 1, field) for _ in range(r)]
    if field.exact:
        A = [[-1 if m == sigma_inv[i] else 0 for m in range(r)] for i in range(r)]
        K = [[1 if i == m else 0 for m in range(r)] for i in range(r)]
        linear_forms = [s.filter(lambda n: sum(n) == 1) for s in f.components]
        solver = StructuredSolver(field, linear_forms, A, K, tol_res=config.tol_res, stage=stage)
        phi = zero
        for total in range(1, N):
            E = [p - q for p, q in zip(phi, step(phi))]
            found, _ = solver.solve_degree(total, _residual_table(E, total))
            phi = [_add_terms(s, c) for s, c in zip(phi, _block_coefficients(found, r))]
        trace = solver.trace
    else:
        phi = _iterate(step, zero, config, stage)
        trace = []

    Phi = [_scaled_unit(phi[j], x[j], N) for j in range(r)] + x[r:]
    moved = transport(f.components, Phi)
    normalized = [TruncatedSeries(d, N, {unit_index(sigma[j], d): blocks.alpha[j]}, field)
                  for j in range(r)] + moved[r:]
    g = f.with_components(normalized)
    residual = verify_conjugacy(f, g, Phi)
    logger.info("Linear pass done, residual %.3g", residual)
    return ConjugacyCertificate(Phi, g, residual, [stage], blocks=blocks, weight_trace=trace)


# ==========================================
# Primary pass
# ==========================================

def _lower_triangular(M, field):
    return all(field.is_zero(M[i][j]) for i in range(len(M)) for j in range(i + 1, len(M)))


def pass_primary(f: GermMap, blocks: BlockStructure, res: ResonanceReport,
                 config: Optional[NumericConfig] = None) -> ConjugacyCertificate:
    """
    Reduce the v-block to mu v + rho(u, v) with rho primary resonant.

    Returns:
        ConjugacyCertificate for Phi = (u, v + phi, y, z)

    Raises:
        TriangularityError: if the linear part on v is not lower triangular
        ResonanceMismatch: if a non-resonant key gives a singular system
    """
    stage = 'primary'
    config = config or NumericConfig()
    e, s, d, N, field = blocks.e, blocks.s, f.dim, f.trunc, f.field
    if e == 0:
        return _identity_certificate(f, stage, blocks)
    v_idx = blocks.v_idx
    L = f.linear_part()
    Lvv = [[L[i][j] for j in v_idx] for i in v_idx]
    if not _lower_triangular(Lvv, field):
        raise TriangularityError("linear part on the v-block is not lower triangular",
                                 stage=stage)
    x = identity_map(d, N, field)

    def lv(k, vector):
        acc = TruncatedSeries.zero(d, N, field)
        for m in range(e):
            if not field.is_zero(Lvv[k][m]):
                acc = acc + vector[m].scale(Lvv[k][m])
        return acc

    v_vars = [x[i] for i in v_idx]
    R = [f[v_idx[k]] - lv(k, v_vars) for k in range(e)]

    def inner(phi):
        out = list(x)
        for k, i in enumerate(v_idx):
            out[i] = x[i] + phi[k]
        return out

    def is_slot(k, n):
        return not any(n[s:]) and res.is_primary(k, n[:s])

    def is_fixed(k, n):
        return sum(n) == 1 and blocks.r <= n.index(1) < s

    table = CompositionTable(f.components)

    def equations(phi, rho):
        tables = CompositionTable(inner(phi))
        return [R[k] + table.apply(phi[k]) - lv(k, phi) - tables.apply(rho[k])
                for k in range(e)]

    slot_degrees = [sum(p.n_x) for p in res.primaries]
    if field.exact:
        formal = N
    else:
        formal = min(N, max([res.degree_bound - 1, 1] + slot_degrees))

    solver = StructuredSolver(
        field, [c.filter(lambda n: sum(n) == 1) for c in f.components],
        A=[[1 if i == j else 0 for j in range(e)] for i in range(e)],
        K=[[-Lvv[i][j] for j in range(e)] for i in range(e)],
        slot_sign=-1, is_slot=is_slot, is_fixed=is_fixed,
        weight=lambda k, n: degree_weight(k, n, e), tol_res=config.tol_res, stage=stage)
    phi = [TruncatedSeries.zero(d, N, field) for _ in range(e)]
    rho = [TruncatedSeries.zero(d, N, field) for _ in range(e)]
    for total in range(1, formal + 1):
        E = equations(phi, rho)
        slot_table = None
        if total > 1:
            linear = [c.truncate(1).with_trunc(total) for c in inner(phi)]
            slot_table = CompositionTable(linear, trunc=total)
        found, slots = solver.solve_degree(total, _residual_table(E, total), slot_table)
        phi = [_add_terms(c, t) for c, t in zip(phi, _block_coefficients(found, e))]
        rho = [_add_terms(c, t) for c, t in zip(rho, _block_coefficients(slots, e))]

    Phi = inner(phi)
    if formal < N:
        Phi = _primary_tail(f, blocks, Phi, rho, Lvv, config)
    moved = transport(f.components, Phi)
    normalized = list(moved)
    for k, i in enumerate(v_idx):
        normalized[i] = lv(k, v_vars) + rho[k]
    g = f.with_components(normalized)
    residual = verify_conjugacy(f, g, Phi)
    logger.info("Primary pass done: %d resonant terms kept, residual %.3g",
                sum(len(c.terms) for c in rho), residual)
    return ConjugacyCertificate(Phi, g, residual, [stage], blocks=blocks, resonances=res,
                                weight_trace=list(solver.trace),
                                kept_slots=list(solver.kept_slots))


def _primary_tail(f, blocks, Phi, rho, Lvv, config):
    """Kill the remainder above the formal degree with psi_k = -sum mu_k^-n S_k o f^(n-1)."""
    stage = 'primary'
    field, d, N = f.field, f.dim, f.trunc
    v_idx, e = blocks.v_idx, blocks.e
    f1 = transport(f.components, Phi)
    table = CompositionTable(f1)
    x = identity_map(d, N, field)
    psi = [TruncatedSeries.zero(d, N, field) for _ in range(e)]
    for k in range(e):
        linear = sum((x[v_idx[m]].scale(Lvv[k][m]) for m in range(e)
                      if not field.is_zero(Lvv[k][m])), TruncatedSeries.zero(d, N, field))
        remainder = f1[v_idx[k]] - linear - rho[k]
        shifted = list(x)
        for m, i in enumerate(v_idx):
            shifted[i] = x[i] + psi[m]
        S = (sum((psi[m].scale(Lvv[k][m]) for m in range(k)), TruncatedSeries.zero(d, N, field))
             + compose(rho[k], shifted) - rho[k] - remainder)
        psi[k] = -_geometric_tail(S, table, field.one / Lvv[k][k], config, stage)
    Phi2 = list(x)
    for m, i in enumerate(v_idx):
        Phi2[i] = x[i] + psi[m]
    return compose_maps(Phi2, Phi)


# ==========================================
# Secondary pass
# ==========================================

def _y_factors(f, blocks, stage):
    """(beta_k, unit_k / beta_k) for every y-component, checking x^E y^D."""
    d = f.dim
    E, s = blocks.E, blocks.s
    out = []
    for k, i in enumerate(blocks.y_idx):
        try:
            m, unit = monomial_unit_factor(f[i])
        except (ZeroSeriesError, FactorizationError) as e:
            raise PreconditionError(f"y-component {k + 1} is not a monomial times a unit: {e}",
                                    stage=stage)
        expected = [0] * d
        for l in range(s):
            expected[l] = E[l][k]
        for l in range(blocks.p):
            expected[s + l] = blocks.D[l][k]
        if list(m) != expected:
            raise PreconditionError(
                f"y-component {k + 1} has monomial {m}, expected {tuple(expected)}", stage=stage)
        beta = unit.constant_term()
        out.append((beta, m, unit.scale(f.field.one / beta)))
    return out


def pass_secondary(f: GermMap, blocks: BlockStructure, res: ResonanceReport,
                   config: Optional[NumericConfig] = None) -> ConjugacyCertificate:
    """
    Reduce the y-block to beta x^E y^D (1 + g(x)) with g secondary resonant.

    Returns:
        ConjugacyCertificate for Phi = (x, y (1 + phi), z)
    """
    stage = 'secondary'
    config = config or NumericConfig()
    p, s, d, N, field = blocks.p, blocks.s, f.dim, f.trunc, f.field
    if p == 0:
        return _identity_certificate(f, stage, blocks)
    D = blocks.D
    y_idx = blocks.y_idx
    factors = _y_factors(f, blocks, stage)
    units = [u.with_trunc(N - 1) for _, _, u in factors]
    x = identity_map(d, N, field)
    table = CompositionTable(f.components)

    def equations(phi, g):
        ones = [c + 1 for c in phi]
        out = []
        for k in range(p):
            product = TruncatedSeries.constant(field.one, d, N - 1, field)
            for m in range(p):
                if D[m][k]:
                    product = product * ones[m] ** D[m][k]
            out.append(units[k] * (table.apply(phi[k]) + 1) - product * (g[k] + 1))
        return out

    def is_slot(k, n):
        return not any(n[s:]) and res.is_secondary(n[:s])

    slot_degrees = [sum(r.n_x) for r in res.secondaries]
    if field.exact:
        formal = N - 1
    else:
        lam = _lambda_max(f, config.tol_eig)
        d_inv = float(np.linalg.norm(np.linalg.inv(np.array(D, dtype=float)), 2))
        tail_start = max(res.degree_bound, 1)
        while lam and d_inv * lam ** tail_start >= 1:
            tail_start += 1
        formal = min(N - 1, max([tail_start - 1] + slot_degrees))

    solver = StructuredSolver(
        field, [c.filter(lambda n: sum(n) == 1) for c in f.components],
        A=[[1 if i == j else 0 for j in range(p)] for i in range(p)],
        K=[[-D[m][k] for m in range(p)] for k in range(p)],
        slot_sign=-1, is_slot=is_slot, tol_res=config.tol_res, stage=stage)
    phi = [TruncatedSeries.zero(d, N - 1, field) for _ in range(p)]
    g = [TruncatedSeries.zero(d, N - 1, field) for _ in range(p)]
    for total in range(1, formal + 1):
        E = equations(phi, g)
        found, slots = solver.solve_degree(total, _residual_table(E, total))
        phi = [_add_terms(c, t) for c, t in zip(phi, _block_coefficients(found, p))]
        g = [_add_terms(c, t) for c, t in zip(g, _block_coefficients(slots, p))]

    Phi = list(x)
    for k, i in enumerate(y_idx):
        Phi[i] = _scaled_unit(phi[k], x[i], N)
    if formal < N - 1:
        Phi = _secondary_tail(f, blocks, Phi, g, factors, config)
    moved = transport(f.components, Phi)
    normalized = list(moved)
    for k, i in enumerate(y_idx):
        beta, m, _ = factors[k]
        normalized[i] = TruncatedSeries(d, N, {m: beta}, field) * (g[k] + 1).with_trunc(N)
    result = f.with_components(normalized)
    residual = verify_conjugacy(f, result, Phi)
    logger.info("Secondary pass done: %d resonant terms kept, residual %.3g",
                sum(len(c.terms) for c in g), residual)
    return ConjugacyCertificate(Phi, result, residual, [stage], blocks=blocks, resonances=res,
                                weight_trace=list(solver.trace),
                                kept_slots=list(solver.kept_slots))


def _secondary_tail(f, blocks, Phi, g, factors, config):
    """log(1 + psi) = sum_{n >= 1} log(1 + e) o f^(n-1) D^-n, solved above the formal degree."""
    stage = 'secondary'
    field, d, N, p = f.field, f.dim, f.trunc, blocks.p
    f1 = transport(f.components, Phi)
    moved = GermMap(f1, f.critical_count, f.names, blocks)
    logs = []
    for k, (beta, _, unit) in enumerate(_y_factors(moved, blocks, stage)):
        ratio = unit.with_trunc(N - 1) / (g[k] + 1)
        logs.append(unit_log(ratio))
    table = CompositionTable(f1)
    D_inv = np.linalg.inv(np.array(blocks.D, dtype=float))
    power = np.eye(p)
    total = [TruncatedSeries.zero(d, N - 1, field) for _ in range(p)]
    terms = logs
    for _ in range(config.n_max):
        power = power @ D_inv
        increments = []
        for k in range(p):
            acc = TruncatedSeries.zero(d, N - 1, field)
            for m in range(p):
                if power[m][k]:
                    acc = acc + terms[m].scale(float(power[m][k]))
            increments.append(acc)
        total = [a + b for a, b in zip(total, increments)]
        size = max(c.max_abs() for c in increments)
        if size <= config.tol_series * max([1.0] + [c.max_abs() for c in total]):
            break
        terms = [table.apply(c) for c in terms]
    else:
        raise NonConvergenceError(
            f"secondary tail product did not converge within n_max={config.n_max} terms",
            stage=stage)
    x = identity_map(d, N, field)
    Phi2 = list(x)
    for k, i in enumerate(blocks.y_idx):
        Phi2[i] = x[i] * unit_exp(total[k]).with_trunc(N)
    return compose_maps(Phi2, Phi)


# ==========================================
# Affine pass
# ==========================================

def affine_preparation(f: GermMap, blocks: BlockStructure) -> tuple:
    """
    Split the z-component as nu x^l y^m z (1 + eps) + omega(x, y).

    Returns:
        (nu, monomial exponent, eps, omega, zeta) with zeta = eps + z d(eps)/dz
    """
    stage = 'affine'
    d, N, field = f.dim, f.trunc, f.field
    if blocks.s + blocks.p != d - 1:
        raise PreconditionError(
            f"the affine pass needs exactly one z-coordinate (s + p = {blocks.s + blocks.p}, "
            f"d = {d})", stage=stage)
    z = d - 1
    for i in range(z):
        if any(n[z] for n in f[i].terms):
            raise PreconditionError(
                f"component {f.names[i]} depends on the z-coordinate", stage=stage)
    h = f[z]
    try:
        mono, V = monomial_unit_factor(partial_derivative(h, z))
    except (ZeroSeriesError, FactorizationError) as e:
        raise PreconditionError(f"dh/dz is not a monomial times a unit: {e}", stage=stage)
    if any(mono[i] for i in blocks.v_idx) or mono[z]:
        raise PreconditionError(
            f"dh/dz has monomial {mono}, which must involve only u and y", stage=stage)
    averaged = tau_integral(V, z)
    nu = averaged.constant_term()
    eps = (averaged.scale(field.one / nu) - 1).with_trunc(N - 1)
    omega = h.substitute_zero(z)
    z_var = TruncatedSeries.variable(z, d, N - 1, field)
    zeta = eps + z_var * partial_derivative(eps, z).with_trunc(N - 1)
    return nu, mono, eps, omega, zeta


def affine_operator(f: GermMap, eps: TruncatedSeries, omega: TruncatedSeries,
                    zeta: TruncatedSeries) -> Callable[[TruncatedSeries], TruncatedSeries]:
    """The linear operator T of the affine fixed-point equation phi = eps + T phi."""
    d, N = f.dim, f.trunc
    z = d - 1
    table = CompositionTable(f.components)
    omega = omega.with_trunc(N - 1)

    def T(psi):
        moved = table.apply(psi)
        slope = table.apply(partial_derivative(psi, z)) * (zeta + 1)
        integral = tau_integral(slope, z).with_trunc(N - 1)
        return (eps + 1) * moved + omega * integral

    return T


def pass_affine(f: GermMap, blocks: BlockStructure,
                config: Optional[NumericConfig] = None) -> ConjugacyCertificate:
    """
    Make the scalar z-component affine in z: nu x^l y^m z + omega~(x, y).

    Returns:
        ConjugacyCertificate for Phi = (x, y, z (1 + phi))
    """
    stage = 'affine'
    config = config or NumericConfig()
    d, N, field = f.dim, f.trunc, f.field
    z = d - 1
    nu, mono, eps, omega, zeta = affine_preparation(f, blocks)
    T = affine_operator(f, eps, omega, zeta)
    zero = TruncatedSeries.zero(d, N - 1, field)
    if field.exact:
        phi = zero
        for total in range(1, N):
            rhs = (eps + T(phi)).homogeneous(total)
            monomials = list(multi_indices(d, total))
            columns = [T(TruncatedSeries(d, N - 1, {a: 1}, field)).homogeneous(total)
                       for a in monomials]
            rows = [[(field.one if a == b else field.zero) - columns[j].get(b, field.zero)
                     for j, a in enumerate(monomials)] for b in monomials]
            try:
                values = field.solve(rows, [rhs.get(b, field.zero) for b in monomials])
            except SingularLinearPartError as e:
                raise SolverError(f"affine system singular at degree {total}: {e}", stage=stage)
            phi = _add_terms(phi, dict(zip(monomials, values)))
    else:
        phi = _iterate(lambda c: [eps + T(c[0])], [zero], config, stage)[0]

    x = identity_map(d, N, field)
    Phi = list(x)
    Phi[z] = _scaled_unit(phi, x[z], N)
    restricted = compose(phi, f.components).substitute_zero(z).with_trunc(N)
    omega_new = omega * (restricted + 1)
    linear = TruncatedSeries(d, N, {tuple(mono[i] + (1 if i == z else 0) for i in range(d)): nu},
                             field)
    normalized = list(f.components)
    normalized[z] = linear + omega_new
    g = f.with_components(normalized)
    residual = verify_conjugacy(f, g, Phi)
    logger.info("Affine pass done, residual %.3g", residual)
    return ConjugacyCertificate(Phi, g, residual, [stage], blocks=blocks)


# ==========================================
# Shape predicates
# ==========================================

def normal_form_violations(f: GermMap, blocks: BlockStructure,
                           res: Optional[ResonanceReport] = None,
                           passes: Sequence[str] = PASS_ORDER) -> List[str]:
    """Term-table shape contracts of the applied passes, as readable strings."""
    out = []
    field, d = f.field, f.dim
    s, p = blocks.s, blocks.p
    if 'linear' in passes:
        for j, k in enumerate(blocks.sigma):
            expected = {unit_index(k, d)}
            if set(f[j].terms) != expected:
                out.append(f"u-component {j + 1} is not alpha * u{k + 1}")
    if 'primary' in passes and blocks.e:
        for k, i in enumerate(blocks.v_idx):
            for n in f[i].terms:
                if sum(n) == 1 and n.index(1) in blocks.v_idx:
                    if n.index(1) > i:
                        out.append(f"v-component {k + 1} has an upper linear term {n}")
                    continue
                if any(n[s:]) or res is None or not res.is_primary(k, n[:s]):
                    out.append(f"v-component {k + 1} has non-resonant term {n}")
                elif any(n[j] for j in blocks.v_idx if j >= i):
                    out.append(f"v-component {k + 1} term {n} breaks triangularity")
    if 'secondary' in passes and p:
        E = blocks.E
        for k, i in enumerate(blocks.y_idx):
            try:
                m, unit = monomial_unit_factor(f[i])
            except (ZeroSeriesError, FactorizationError):
                out.append(f"y-component {k + 1} is not a monomial times a unit")
                continue
            expected = tuple([E[l][k] for l in range(s)] + [blocks.D[l][k] for l in range(p)]
                             + [0] * (d - s - p))
            if m != expected:
                out.append(f"y-component {k + 1} has monomial {m}, expected {expected}")
            for n in unit.terms:
                if sum(n) == 0:
                    continue
                if any(n[s:]) or res is None or not res.is_secondary(n[:s]):
                    out.append(f"y-component {k + 1} unit has non-resonant term {n}")
    if 'affine' in passes and s + p == d - 1:
        if any(n[d - 1] > 1 for n in f[d - 1].terms):
            out.append("z-component is not affine in z")
    x_vars, xy_vars = blocks.x_idx, blocks.x_idx + blocks.y_idx
    if 'primary' in passes and not all(f[i].depends_only_on(x_vars) for i in x_vars):
        out.append("x-components depend on y or z")
    if 'secondary' in passes and not all(f[i].depends_only_on(xy_vars) for i in blocks.y_idx):
        out.append("y-components depend on z")
    return out


def normal_form_shape(blocks: BlockStructure, res: ResonanceReport,
                      affine: Optional[bool] = None) -> TargetShape:
    """TargetShape of the full normal form for the oracle."""
    d, s, p = blocks.d, blocks.s, blocks.p
    u_idx, v_idx, y_idx = set(blocks.u_idx), set(blocks.v_idx), set(blocks.y_idx)
    if affine is None:
        affine = s + p == d - 1
    z = d - 1
    E = blocks.E

    def phi_free(k, n):
        if k in u_idx or k in y_idx:
            return n[k] >= 1
        if k in v_idx:
            return True
        return affine and n[z] >= 1

    def slot(k, n):
        if k in u_idx:
            return False
        if k in v_idx:
            return not any(n[s:]) and res.is_primary(k - blocks.r, n[:s])
        if k in y_idx:
            j = k - s
            if any(n[l] != blocks.D[l - s][j] for l in y_idx) or any(n[s + p:]):
                return False
            shift = [n[l] - E[l][j] for l in range(s)]
            if any(v < 0 for v in shift):
                return False
            return not any(shift) or res.is_secondary(tuple(shift))
        return not affine or n[z] <= 1

    return TargetShape(phi_free, slot, name='normal-form')


# ==========================================
# Pipeline
# ==========================================

def normalize_full(f: GermMap, config: Optional[NumericConfig] = None,
                   declared: Optional[dict] = None, until: str = 'all') -> ConjugacyCertificate:
    """
    Run every applicable stage on a germ in prepared coordinates.

    Args:
        f: GermMap with its critical_count
        config: NumericConfig of the run
        declared: declared resonances from the germ file
        until: last stage to run ('linear', 'jordan', 'primary', 'secondary',
            'affine' or 'all')

    Returns:
        ConjugacyCertificate from the original coordinates to the normal form
    """
    config = config or NumericConfig()
    last = len(PASS_ORDER) if until == 'all' else PASS_ORDER.index(until) + 1
    wanted = PASS_ORDER[:last]

    rigidity = rigidity_check(f)
    contraction = is_contracting(f, config.tol_eig)
    if not contraction.contracting:
        raise NotContractingError(
            f"spectral radius {contraction.radius!r} is not below 1", stage='contraction')
    blocks = detect_blocks(f, rigidity)
    g = arrange(f, blocks)
    Phi = arrange_phi(f, blocks.order)
    applied, trace, kept, stage_residuals = [], [], [], {}
    res = None

    def absorb(cert):
        nonlocal g, Phi
        g = cert.normalized
        Phi = compose_maps(cert.phi, Phi)
        applied.extend(cert.passes_applied)
        trace.extend(cert.weight_trace)
        kept.extend(cert.kept_slots)
        stage_residuals[cert.passes_applied[0]] = cert.residual

    absorb(pass_linear(g, blocks, config))
    if 'jordan' in wanted:
        g, phi = jordan_transform(g, blocks, config.tol_eig)
        blocks = g.blocks
        Phi = compose_maps(phi, Phi)
        applied.append('jordan')
        res = resonance_report(blocks, contraction.eigenvalues, config, declared)
    if 'primary' in wanted and blocks.e:
        absorb(pass_primary(g, blocks, res, config))
    if 'secondary' in wanted and blocks.p:
        absorb(pass_secondary(g, blocks, res, config))
    if 'affine' in wanted and blocks.s + blocks.p == f.dim - 1:
        absorb(pass_affine(g, blocks, config))

    g.blocks = blocks
    residual = verify_conjugacy(f, g, Phi)
    violations = normal_form_violations(g, blocks, res, applied)
    for item in violations:
        logger.warning("Normal form shape: %s", item)
    limit = 0.0 if f.field.exact else config.tol_residual
    if residual > limit:
        raise SolverError(f"conjugacy residual {residual:.3g} exceeds {limit:.3g}",
                          stage='verify')
    logger.info("Normalization finished: passes %s, residual %.3g", applied, residual)
    return ConjugacyCertificate(
        phi=Phi, normalized=g, residual=residual, passes_applied=applied,
        blocks=blocks, resonances=res, rigidity=rigidity, contraction=contraction,
        weight_trace=trace, violations=violations, stage_residuals=stage_residuals,
        kept_slots=kept)


# ==========================================
# Brute-force oracle
# ==========================================

def oracle_solve(f: GermMap, target_shape: TargetShape,
                 config: Optional[NumericConfig] = None) -> ConjugacyCertificate:
    """
    Solve Phi o f = f~ o Phi with dense least-norm systems, degree by degree.

    The linear part of f is kept; Phi = x + phi and f~ = L x + rho where phi
    and rho range over the monomials the target shape allows.

    Raises:
        InconsistentSystemError: if some degree has no solution
    """
    stage = 'oracle'
    config = config or NumericConfig()
    field = config.merged(mode='float').field()
    d, N = f.dim, f.trunc
    comps = [TruncatedSeries(d, N, {n: field.convert(c) for n, c in s.terms.items()}, field)
             for s in f.components]
    if N > 5 or d > 3:
        logger.warning("Oracle on d=%d, N=%d is meant for small instances", d, N)
    x = identity_map(d, N, field)
    linear = [c.filter(lambda n: sum(n) == 1) for c in comps]
    phi = [TruncatedSeries.zero(d, N, field) for _ in range(d)]
    rho = [TruncatedSeries.zero(d, N, field) for _ in range(d)]
    def mismatch(phi, rho):
        Phi = [a + b for a, b in zip(x, phi)]
        tilde = [a + b for a, b in zip(linear, rho)]
        return [a - b for a, b in zip(compose_maps(Phi, comps), compose_maps(tilde, Phi))]

    for total in range(2, N + 1):
        monomials = list(multi_indices(d, total))
        rows_keys = [(k, n) for k in range(d) for n in monomials]
        row_of = {key: i for i, key in enumerate(rows_keys)}
        free = [(k, n) for k in range(d) for n in monomials if target_shape.phi_free(k, n)]
        slots = [(k, n) for k in range(d) for n in monomials if target_shape.slot(k, n)]
        M = np.zeros((len(rows_keys), len(free) + len(slots)), dtype=complex)
        lin_table = CompositionTable([c.with_trunc(total) for c in linear], trunc=total)
        for col, (k, n) in enumerate(free):
            for m, c in lin_table.image(n).terms.items():
                M[row_of[(k, m)], col] += complex(c)
            for i in range(d):
                coeff = linear[i].coefficient(unit_index(k, d))
                if coeff:
                    M[row_of[(i, n)], col] -= complex(coeff)
        for col, (k, n) in enumerate(slots, start=len(free)):
            M[row_of[(k, n)], col] -= 1.0
        current = mismatch(phi, rho)
        b = np.array([-complex(current[k].coefficient(n)) for k, n in rows_keys])
        if M.shape[1]:
            solution, *_ = np.linalg.lstsq(M, b, rcond=None)
        else:
            solution = np.zeros(0, dtype=complex)
        leftover = float(np.max(np.abs(M @ solution - b))) if len(b) else 0.0
        if leftover > config.tol_residual * max(1.0, float(np.max(np.abs(b), initial=0.0))):
            raise InconsistentSystemError(
                f"degree {total} system is inconsistent (leftover {leftover:.3g})", stage=stage)
        found_phi = [dict() for _ in range(d)]
        found_rho = [dict() for _ in range(d)]
        for value, (k, n) in zip(solution[:len(free)], free):
            found_phi[k][n] = complex(value)
        for value, (k, n) in zip(solution[len(free):], slots):
            found_rho[k][n] = complex(value)
        phi = [_add_terms(c, t) for c, t in zip(phi, found_phi)]
        rho = [_add_terms(c, t) for c, t in zip(rho, found_rho)]

    Phi = [a + b for a, b in zip(x, phi)]
    normalized = GermMap([a + b for a, b in zip(linear, rho)], f.critical_count, f.names,
                         f.blocks)
    source = GermMap(comps, f.critical_count, f.names, f.blocks)
    residual = verify_conjugacy(source, normalized, Phi)
    return ConjugacyCertificate(Phi, normalized, residual, [stage], blocks=f.blocks)
