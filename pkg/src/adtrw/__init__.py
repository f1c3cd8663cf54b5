"""Asymmetric discrete-time random walks driven by discrete-time renewal processes."""

from adtrw.dtrp_core import (
    StateTable,
    TailClass,
    WaitingTimeDensity,
    expected_arrivals,
    geometric,
    lambda_poly,
    make_density,
    shifted_poisson,
    sibuya,
    state_table,
    survival,
    tabulated,
    trivial,
)
from adtrw.errors import AdtrwError, EnvelopeError, ParameterError

__version__ = "0.1.0"

__all__ = [
    "AdtrwError",
    "EnvelopeError",
    "ParameterError",
    "StateTable",
    "TailClass",
    "WaitingTimeDensity",
    "expected_arrivals",
    "geometric",
    "lambda_poly",
    "make_density",
    "shifted_poisson",
    "sibuya",
    "state_table",
    "survival",
    "tabulated",
    "trivial",
]
