"""Exact-arithmetic toolkit for Rota-type operators on right Leibniz algebras."""

from .algebra import (
    AlgebraTable,
    CatalogError,
    bind_params,
    catalog_map,
    leibniz_residual,
    load_catalog,
    load_errata,
    lower_central_series,
    sample_bindings,
)
from .compat import compat_scan, is_compatible, load_claimed_pairs, \
    mixed_residual
from .exact import (
    DenominatorVanishes,
    ExactError,
    ExprSyntaxError,
    NonInvertibleDenominator,
    NonRealValue,
    Poly,
    RatExpr,
    Scalar,
    parse_expr,
    reduce_mod_p,
    substitute,
)
from .fp import (
    DEFAULT_BUDGET,
    FpMatrix,
    RefusedSize,
    chart_membership,
    coverage,
    dual_path_check,
    enumerate_solutions,
    solution_indices,
)
from .operators import (
    KIND_NAMES,
    OperatorFamily,
    OperatorKind,
    audit_families,
    audit_summary,
    build_system,
    dimension_report,
    load_families,
    make_kind,
    operator_residual,
    verify_family,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraTable",
    "CatalogError",
    "DEFAULT_BUDGET",
    "DenominatorVanishes",
    "ExactError",
    "ExprSyntaxError",
    "FpMatrix",
    "KIND_NAMES",
    "NonInvertibleDenominator",
    "NonRealValue",
    "OperatorFamily",
    "OperatorKind",
    "Poly",
    "RatExpr",
    "RefusedSize",
    "Scalar",
    "audit_families",
    "audit_summary",
    "bind_params",
    "build_system",
    "catalog_map",
    "chart_membership",
    "compat_scan",
    "coverage",
    "dimension_report",
    "dual_path_check",
    "enumerate_solutions",
    "is_compatible",
    "leibniz_residual",
    "load_catalog",
    "load_claimed_pairs",
    "load_errata",
    "load_families",
    "lower_central_series",
    "make_kind",
    "mixed_residual",
    "operator_residual",
    "parse_expr",
    "reduce_mod_p",
    "sample_bindings",
    "solution_indices",
    "substitute",
    "verify_family",
    "__version__",
]
