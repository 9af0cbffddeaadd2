"""
Numeric configuration for one pipeline run.

Defaults come from Django settings (which read the environment); germ files
and command-line flags override them in that order.
"""
from dataclasses import dataclass, fields, replace
from django.conf import settings

MODES = ('exact', 'float')


@dataclass(frozen=True)
class NumericConfig:
    mode: str = 'float'
    trunc: int = 8
    tol_coeff: float = 1e-12
    tol_res: float = 1e-9
    tol_eig: float = 1e-9
    tol_residual: float = 1e-8
    tol_series: float = 1e-14
    n_max: int = 2000

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.trunc < 1:
            raise ValueError("truncation degree must be at least 1")

    @classmethod
    def from_settings(cls, **overrides):
        """Build a config from settings, applying non-None overrides."""
        base = cls(
            mode=settings.GERM_MODE,
            trunc=settings.GERM_TRUNCATION,
            tol_coeff=settings.GERM_TOL_COEFF,
            tol_res=settings.GERM_TOL_RES,
            tol_eig=settings.GERM_TOL_EIG,
            tol_residual=settings.GERM_TOL_RESIDUAL,
            tol_series=settings.GERM_TOL_SERIES,
            n_max=settings.GERM_N_MAX,
        )
        return base.merged(**overrides)

    def merged(self, **overrides):
        known = {f.name for f in fields(self)}
        values = {k: v for k, v in overrides.items() if k in known and v is not None}
        return replace(self, **values)

    @property
    def exact(self):
        return self.mode == 'exact'

    def field(self):
        """Return the coefficient backend for this run."""
        from .multiseries import CoefficientField
        return CoefficientField(self.mode, self.tol_coeff)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}
