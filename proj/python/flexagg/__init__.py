"""Robust aggregation of distribution-level DER flexibility.

Thin wrapper over the C++ core in ``flexagg._core``.
"""

from ._core import (
    FlexaggError,
    Model,
    __version__,
    aggregate_flexibility,
    load_model,
    monte_carlo_verify,
    run,
    solve_apa,
    solve_arpa,
    solve_pd,
)

__all__ = [
    "FlexaggError",
    "Model",
    "__version__",
    "aggregate_flexibility",
    "load_model",
    "monte_carlo_verify",
    "run",
    "solve_apa",
    "solve_arpa",
    "solve_pd",
]
