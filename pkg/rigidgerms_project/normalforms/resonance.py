"""
Primary and secondary resonance enumeration.
"""
import logging
import math
from dataclasses import dataclass, field as dataclass_field
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from .conf import NumericConfig
from .exceptions import GermFileError, NotContractingError
from .germ_model import BlockStructure
from .germlang import flatten_errors
from .multiseries import multi_indices, unit_index
from .serializers import DeclaredResonancesSerializer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrimaryResonance:
    """Resonant monomial u^{n_u} v^{n_v} for the v-coordinate ``coordinate_k`` (from 1)."""

    coordinate_k: int
    n_u: Tuple[int, ...]
    n_v: Tuple[int, ...]

    @property
    def n_x(self):
        return tuple(self.n_u) + tuple(self.n_v)


@dataclass(frozen=True)
class SecondaryResonance:
    n_x: Tuple[int, ...]


@dataclass
class ResonanceReport:
    primaries: List[PrimaryResonance]
    secondaries: List[SecondaryResonance]
    degree_bound: int
    eta: int
    equality_mode: str
    tol_res: float = 0.0
    declared: bool = False
    near_misses: list = dataclass_field(default_factory=list)

    def __post_init__(self):
        self._primary = {(res.coordinate_k - 1, res.n_x) for res in self.primaries}
        self._secondary = {res.n_x for res in self.secondaries}

    def is_primary(self, k: int, n_x: Sequence[int]) -> bool:
        """k counts v-coordinates from 0."""
        return (k, tuple(n_x)) in self._primary

    def is_secondary(self, n_x: Sequence[int]) -> bool:
        return tuple(n_x) in self._secondary


def eta_eigenvalues(blocks: BlockStructure) -> list:
    """
    Eigenvalues of the eta-th iterate on x = (u, v).

    A u-coordinate on a cycle of length l with multiplier product xi gets
    xi**(eta / l); a v-coordinate gets mu**eta.
    """
    values = [None] * blocks.r
    for cycle in blocks.cycles:
        xi = blocks.alpha[cycle[0]]
        for j in cycle[1:]:
            xi = xi * blocks.alpha[j]
        power = xi ** (blocks.eta // len(cycle))
        for j in cycle:
            values[j] = power
    return values + [m ** blocks.eta for m in blocks.mu]


def monomial_value(values: Sequence, n: Sequence[int], one: Any) -> Any:
    result = one
    for v, e in zip(values, n):
        if e:
            result = result * v ** e
    return result


def internal_power(blocks: BlockStructure) -> List[List[int]]:
    """D**eta as an integer matrix."""
    p = blocks.p
    result = [[1 if i == j else 0 for j in range(p)] for i in range(p)]
    for _ in range(blocks.eta):
        result = [[sum(result[i][l] * blocks.D[l][j] for l in range(p)) for j in range(p)]
                  for i in range(p)]
    return result


def degree_bound(blocks: BlockStructure, lambda_all: Sequence, tol: float = 1e-12) -> int:
    """
    Smallest N with Lambda**N below every resonance target.

    Lambda is the largest nonzero eigenvalue modulus of df at the origin; the
    targets are |mu_k|**eta, the moduli of Spec(D**eta) and 1.

    Raises:
        NotContractingError: if Lambda >= 1
    """
    if blocks.e == 0 and blocks.p == 0:
        return 0
    moduli = [abs(_as_complex(v)) for v in lambda_all]
    nonzero = [m for m in moduli if m > tol]
    lam = max(nonzero, default=0.0)
    if lam >= 1.0:
        raise NotContractingError(
            f"largest eigenvalue modulus {lam!r} is not below 1", stage='resonances')
    targets = [1.0]
    targets += [abs(_as_complex(m)) ** blocks.eta for m in blocks.mu]
    if blocks.p:
        spectrum = np.linalg.eigvals(np.array(internal_power(blocks), dtype=float))
        targets.append(float(min(abs(spectrum))))
    target = min(targets) * (1 - 1e-12)
    if lam == 0.0:
        return 1
    n = max(1, math.floor(math.log(target) / math.log(lam)))
    while lam ** n >= target:
        n += 1
    while n > 1 and lam ** (n - 1) < target:
        n -= 1
    return n


def _as_complex(value):
    if hasattr(value, 'x') and hasattr(value, 'y'):
        return complex(float(value.x), float(value.y))
    return complex(value)


class _Comparator:
    """Equality of resonance values under the active mode."""

    def __init__(self, field, tol_res):
        self.field = field
        self.tol_res = tol_res
        self.near_misses = []

    def close(self, value, target, label):
        if self.field.exact:
            return not (value - target)
        gap = abs(value - target)
        scale = max(abs(target), 1e-300)
        if gap <= self.tol_res * scale:
            return True
        if gap <= 10 * self.tol_res * scale:
            logger.warning("Pseudo-resonance at %s: relative gap %.3g", label, gap / scale)
            self.near_misses.append({'key': label, 'gap': gap / scale})
        return False

    def vanishes(self, det_value, scale, label):
        if self.field.exact:
            return not det_value
        gap = abs(det_value)
        if gap <= self.tol_res * scale:
            return True
        if gap <= 10 * self.tol_res * scale:
            logger.warning("Pseudo-resonance at %s: determinant %.3g", label, gap)
            self.near_misses.append({'key': label, 'gap': gap})
        return False


def primary_resonances(blocks: BlockStructure, config: Optional[NumericConfig] = None,
                       bound: Optional[int] = None, comparator: Optional[_Comparator] = None,
                       lambda_all: Optional[Sequence] = None) -> List[PrimaryResonance]:
    """
    Every primary resonance (k, n_u, n_v) with 1 <= |n| <= bound.

    The trivial key (k, v_k) is left out; v_l with l != k and an equal
    eta-power eigenvalue is listed.
    """
    config = config or NumericConfig()
    field = config.field()
    comparator = comparator or _Comparator(field, config.tol_res)
    if blocks.e == 0:
        return []
    if bound is None:
        bound = degree_bound(blocks, lambda_all if lambda_all is not None
                             else list(blocks.gamma), config.tol_eig)
    values = [field.convert(v) for v in eta_eigenvalues(blocks)]
    s, r = blocks.s, blocks.r
    found = []
    for total in range(1, bound + 1):
        for n in multi_indices(s, total):
            value = monomial_value(values, n, field.one)
            for k in range(blocks.e):
                if total == 1 and n == unit_index(r + k, s):
                    continue
                if comparator.close(value, values[r + k], ('primary', k + 1, n)):
                    found.append(PrimaryResonance(k + 1, n[:r], n[r:]))
    found.sort(key=lambda res: (res.coordinate_k, sum(res.n_x), tuple(-e for e in res.n_x)))
    return found


def secondary_resonances(blocks: BlockStructure, config: Optional[NumericConfig] = None,
                         bound: Optional[int] = None, comparator: Optional[_Comparator] = None,
                         lambda_all: Optional[Sequence] = None) -> List[SecondaryResonance]:
    """Every n_x with 1 <= |n| <= bound and det(D**eta - Lambda**n) = 0."""
    config = config or NumericConfig()
    field = config.field()
    comparator = comparator or _Comparator(field, config.tol_res)
    if blocks.p == 0 or blocks.s == 0:
        return []
    if bound is None:
        bound = degree_bound(blocks, lambda_all if lambda_all is not None
                             else list(blocks.gamma), config.tol_eig)
    values = [field.convert(v) for v in eta_eigenvalues(blocks)]
    power = internal_power(blocks)
    p = blocks.p
    scale = max(1.0, float(np.linalg.norm(np.array(power, dtype=float), 2))) ** p
    found = []
    for total in range(1, bound + 1):
        for n in multi_indices(blocks.s, total):
            value = monomial_value(values, n, field.one)
            rows = [[field.convert(power[i][j]) - (value if i == j else field.zero)
                     for j in range(p)] for i in range(p)]
            if comparator.vanishes(field.det(rows), scale, ('secondary', n)):
                found.append(SecondaryResonance(n))
    return found


def resonance_report(blocks: BlockStructure, lambda_all: Sequence,
                     config: Optional[NumericConfig] = None,
                     declared: Optional[dict] = None) -> ResonanceReport:
    """
    Resonances of a split germ, or the declared ones when a file lists them.

    Args:
        blocks: BlockStructure after the Jordan split
        lambda_all: eigenvalues of df at the origin
        config: NumericConfig of the run
        declared: optional {'primary': [[k, n...]], 'secondary': [[n...]]}

    Returns:
        ResonanceReport

    Raises:
        GermFileError: when declared rows do not fit the block sizes
    """
    config = config or NumericConfig()
    field = config.field()
    comparator = _Comparator(field, config.tol_res)
    bound = degree_bound(blocks, lambda_all, config.tol_eig)
    declared = declared or {}
    if declared.get('primary') is not None or declared.get('secondary') is not None:
        checked = DeclaredResonancesSerializer(data=declared, context={'blocks': blocks})
        if not checked.is_valid():
            raise GermFileError(flatten_errors(checked.errors, 'declared_resonances'))
    if declared.get('primary') is not None:
        primaries = [PrimaryResonance(int(row[0]), tuple(row[1:1 + blocks.r]),
                                      tuple(row[1 + blocks.r:])) for row in declared['primary']]
    else:
        primaries = primary_resonances(blocks, config, bound, comparator)
    if declared.get('secondary') is not None:
        secondaries = [SecondaryResonance(tuple(row)) for row in declared['secondary']]
    else:
        secondaries = secondary_resonances(blocks, config, bound, comparator)
    report = ResonanceReport(
        primaries=primaries,
        secondaries=secondaries,
        degree_bound=bound,
        eta=blocks.eta,
        equality_mode='exact' if field.exact else 'tolerance',
        tol_res=0.0 if field.exact else config.tol_res,
        declared=bool(declared.get('primary') is not None
                      or declared.get('secondary') is not None),
        near_misses=comparator.near_misses,
    )
    logger.info("Resonances: %d primary, %d secondary, degree bound %d",
                len(primaries), len(secondaries), bound)
    return report
