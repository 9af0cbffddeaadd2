"""
Per-degree structured solver for the conjugacy equations.

Every pass linearizes to the same shape at total degree D. For a block of
components indexed by k the equation at key (k, n), |n| = D, reads

    sum_m A[k][m] * [phi_m o L]_n + sum_m K[k][m] * phi_{m,n}
        + slot_sign * rho_{k,n} + R_{k,n} = 0

where L is the linear part of the germ and R collects everything already
known from lower degrees. Each key carries exactly one unknown: the
conjugacy coefficient phi, or the normal form coefficient rho when the key
is a resonant slot. The coupling graph is condensed into strongly connected
groups which are solved in a weight-respecting topological order.
"""
import logging
from fractions import Fraction

import networkx as nx

from .exceptions import ResonanceMismatch, SingularSystemError, SolverError
from .multiseries import CompositionTable, graded_key, multi_indices

logger = logging.getLogger(__name__)


def degree_weight(k, n, e=None):
    """|n| for the secondary and linear passes, |n| + k/e (k from 1) for the primary one."""
    if e:
        return sum(n) + Fraction(k + 1, e)
    return Fraction(sum(n))


class StructuredSolver:
    """
    Service class for solving one pass degree by degree.

    Args:
        field: CoefficientField of the run
        linear_forms: linear part of the germ as d series
        A, K: block coupling matrices (size x size)
        slot_sign: coefficient of a slot unknown in its own equation
        is_slot: predicate (k, n) -> bool for resonant keys
        is_fixed: predicate (k, n) -> bool for keys left out entirely
        weight: function (k, n) -> sortable weight
        tol_res: rank tolerance in float mode
        stage: pass name for diagnostics
    """

    def __init__(self, field, linear_forms, A, K, slot_sign=-1, is_slot=None,
                 is_fixed=None, weight=None, tol_res=1e-9, stage='solver'):
        self.field = field
        self.dim = len(linear_forms)
        self.linear_forms = linear_forms
        self.size = len(A)
        self.A = [[field.convert(v) for v in row] for row in A]
        self.K = [[field.convert(v) for v in row] for row in K]
        self.slot_sign = field.convert(slot_sign)
        self.is_slot = is_slot or (lambda k, n: False)
        self.is_fixed = is_fixed or (lambda k, n: False)
        self.weight = weight or degree_weight
        self.tol_res = tol_res
        self.stage = stage
        self.trace = []
        self.kept_slots = []

    # ------------------------------------------
    # System assembly
    # ------------------------------------------

    def keys(self, total):
        return [(k, n) for n in multi_indices(self.dim, total) for k in range(self.size)
                if not self.is_fixed(k, n)]

    def _table(self, total):
        forms = [s.with_trunc(total) for s in self.linear_forms]
        return CompositionTable(forms, trunc=total)

    def phi_column(self, key, table):
        """Equations touched by the conjugacy unknown at ``key``."""
        m, i = key
        field = self.field
        col = {}
        image = table.image(i)
        for k in range(self.size):
            a = self.A[k][m]
            if field.is_zero(a):
                continue
            for n, c in image.terms.items():
                if sum(n) == sum(i):
                    col[(k, n)] = col.get((k, n), field.zero) + a * c
        for k in range(self.size):
            c = self.K[k][m]
            if not field.is_zero(c):
                col[(k, i)] = col.get((k, i), field.zero) + c
        return {b: c for b, c in col.items() if not field.is_zero(c)}

    def slot_column(self, key, slot_table=None):
        k, m = key
        if slot_table is None:
            return {key: self.slot_sign}
        image = slot_table.image(m)
        return {(k, n): self.slot_sign * c for n, c in image.terms.items()
                if sum(n) == sum(m) and not self.field.is_zero(c)}

    def assemble(self, total, slot_table=None):
        """
        Columns of the degree-``total`` system.

        Returns:
            (keys, columns, phi_columns, slots) where columns use the slot
            unknown at resonant keys and phi_columns always use phi
        """
        keys = self.keys(total)
        table = self._table(total)
        keyset = set(keys)
        phi_columns, columns, slots = {}, {}, set()
        for key in keys:
            phi_col = {b: c for b, c in self.phi_column(key, table).items() if b in keyset}
            phi_columns[key] = phi_col
            if self.is_slot(*key):
                slots.add(key)
                columns[key] = {b: c for b, c in self.slot_column(key, slot_table).items()
                                if b in keyset}
            else:
                columns[key] = phi_col
        return keys, columns, phi_columns, slots

    def _sort_key(self, key):
        k, n = key
        return (self.weight(k, n), k, graded_key(n))

    def groups(self, keys, columns):
        """Strongly connected groups in weight-respecting topological order."""
        graph = nx.DiGraph()
        graph.add_nodes_from(keys)
        for a, col in columns.items():
            for b in col:
                if b != a:
                    graph.add_edge(a, b)
        condensed = nx.condensation(graph)
        members = {c: sorted(condensed.nodes[c]['members'], key=self._sort_key)
                   for c in condensed.nodes}
        order = nx.lexicographical_topological_sort(
            condensed, key=lambda c: self._sort_key(members[c][0]))
        return [members[c] for c in order]

    # ------------------------------------------
    # Solving
    # ------------------------------------------

    def solve_degree(self, total, residual, slot_table=None):
        """
        Solve the degree-``total`` system.

        Args:
            total: the degree D
            residual: {(k, n): R_{k,n}} evaluated with degree-D unknowns at zero
            slot_table: CompositionTable giving slot columns, or None for unit columns

        Returns:
            (phi, rho): dicts from keys to coefficients
        """
        field = self.field
        keys, columns, phi_columns, slots = self.assemble(total, slot_table)
        known = {}
        pending = {}
        for group in self.groups(keys, columns):
            rows = [[columns[a].get(b, field.zero) for a in group] for b in group]
            rhs = [-(residual.get(b, field.zero) + pending.get(b, field.zero)) for b in group]
            group_slots = [a for a in group if a in slots]
            if field.is_singular(rows, self.tol_res):
                labels = [(k + 1, n) for k, n in group]
                if group_slots:
                    raise SingularSystemError(
                        f"singular system at degree {total} for keys {labels}", stage=self.stage)
                raise ResonanceMismatch(
                    f"keys {labels} were classified non-resonant but their system is "
                    f"singular; check tol_res or declare the resonance", stage=self.stage)
            if group_slots:
                phi_rows = [[phi_columns[a].get(b, field.zero) for a in group] for b in group]
                if not field.is_singular(phi_rows, self.tol_res):
                    self.kept_slots.extend(group_slots)
                    logger.warning(
                        "%s: resonant slots %s kept although their system is invertible",
                        self.stage, [(k + 1, n) for k, n in group_slots])
            values = field.solve(rows, rhs, self.tol_res)
            for a, x in zip(group, values):
                known[a] = x
                for b, c in columns[a].items():
                    if b not in group:
                        pending[b] = pending.get(b, field.zero) + c * x
            self.trace.append(self._sort_key(group[0])[0])
            logger.debug("%s degree %d: solved group %s", self.stage, total, group)
        if any(self.trace[i] > self.trace[i + 1] for i in range(len(self.trace) - 1)):
            raise SolverError("keys were not solved in order of weight", stage=self.stage)
        phi = {a: x for a, x in known.items() if a not in slots and not field.is_zero(x)}
        rho = {a: x for a, x in known.items() if a in slots and not field.is_zero(x)}
        return phi, rho
