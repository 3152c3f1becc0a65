"""Electricity market laboratory with a central reliability insurer.

The compiled core exposes the main operations; see `help(eimlab._core)`.
"""

from ._core import (  # noqa: F401
    annuity_factor,
    cvar,
    expected_value_premium,
    reference_dispatch,
    regenerate_report,
    run_case,
    wacc,
    ward_cluster,
)

__all__ = [
    "annuity_factor",
    "cvar",
    "expected_value_premium",
    "reference_dispatch",
    "regenerate_report",
    "run_case",
    "wacc",
    "ward_cluster",
]
