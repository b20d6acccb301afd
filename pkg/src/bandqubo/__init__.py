"""Banded portfolio optimization compiled to QUBO form.

Discrete Markowitz-style portfolio selection with per-asset investment
bands, a full-budget penalty, and a linearized target-volatility
penalty, expressed over bit variables and solved with a deterministic
multi-replica simulated annealer (plus an exhaustive oracle for small
instances).
"""

from .encoding import (
    BandSpec,
    EncodingSpec,
    decode,
    decode_batch,
    encode_nearest,
    make_encoding,
    sector_to_asset_bands,
)
from .errors import (
    BandQuboError,
    ConfigError,
    EncodingError,
    FeasibilityError,
    InsufficientDataError,
    ParseError,
    SolverCapError,
    ValidationError,
)
from .evaluator import (
    Portfolio,
    evaluate,
    ewi_return,
    random_cloud,
    write_composition_csv,
    write_frontier_csv,
    write_sweep_csv,
)
from .market_data import (
    MarketInputs,
    PriceSeries,
    annualize,
    estimate_inputs,
    load_prices,
    log_returns,
)
from .qubo import (
    ModelConfig,
    Qubo,
    build_qubo,
    constraint_value,
    cost_direct,
    default_budget_multiplier,
    default_linear_weights,
    refine_linear_weights,
)
from .solver import (
    AnnealSchedule,
    Solution,
    anneal,
    default_schedule,
    exhaustive_solve,
    incremental_delta,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule",
    "BandQuboError",
    "BandSpec",
    "ConfigError",
    "EncodingError",
    "EncodingSpec",
    "FeasibilityError",
    "InsufficientDataError",
    "MarketInputs",
    "ModelConfig",
    "ParseError",
    "Portfolio",
    "PriceSeries",
    "Qubo",
    "Solution",
    "SolverCapError",
    "ValidationError",
    "anneal",
    "annualize",
    "build_qubo",
    "constraint_value",
    "cost_direct",
    "decode",
    "decode_batch",
    "default_budget_multiplier",
    "default_linear_weights",
    "default_schedule",
    "encode_nearest",
    "estimate_inputs",
    "evaluate",
    "ewi_return",
    "exhaustive_solve",
    "incremental_delta",
    "load_prices",
    "log_returns",
    "make_encoding",
    "random_cloud",
    "refine_linear_weights",
    "sector_to_asset_bands",
    "write_composition_csv",
    "write_frontier_csv",
    "write_sweep_csv",
]
