"""Portfolio metrics, random baselines, and plot-data emission.

Decoded solutions become :class:`Portfolio` records carrying return,
volatility (sqrt of w' Sigma w, same Sigma as the optimization), budget
residual and band compliance. Baselines: a cloud of random in-band
portfolios repaired to full investment, and the equally weighted index
(EWI) buy-and-hold return.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import BandSpec, EncodingSpec, make_encoding
from .errors import FeasibilityError, ValidationError
from .market_data import MarketInputs, PriceSeries
from .qubo import ModelConfig

_BAND_TOL = 1e-9

# Budget repair gives up after this many redraws per requested sample.
_REPAIR_ATTEMPT_FACTOR = 100


@dataclass(frozen=True)
class Portfolio:
    """A weight vector with its financial metrics."""

    weights: np.ndarray
    expected_return: float
    volatility: float
    budget_residual: float
    vol_gap: float
    band_ok: bool

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)


def evaluate(
    weights,
    inputs: MarketInputs,
    cfg: ModelConfig,
    bands: BandSpec,
) -> Portfolio:
    """Populate all portfolio metrics from a weight vector."""
    w = np.asarray(weights, dtype=float)
    n = inputs.n_assets
    if w.shape != (n,) or bands.n_assets != n:
        raise ValidationError(
            f"dimension mismatch: weights {w.shape}, inputs {n}, bands {bands.n_assets}"
        )
    variance = float(w @ inputs.sigma_mat @ w)
    vol = float(np.sqrt(max(variance, 0.0)))
    band_ok = bool(
        np.all(w >= bands.w_min - _BAND_TOL) and np.all(w <= bands.w_max + _BAND_TOL)
    )
    return Portfolio(
        weights=w,
        expected_return=float(inputs.mu @ w),
        volatility=vol,
        budget_residual=float(w.sum()) - 1.0,
        vol_gap=vol - cfg.sigma_target,
        band_ok=band_ok,
    )


def _repair_units(units, deltas, target_total, rng) -> bool:
    """Greedy random unit steps toward the target total; False if stuck."""
    total = int(units.sum())
    while total != target_total:
        if total < target_total:
            candidates = np.flatnonzero(units < deltas)
        else:
            candidates = np.flatnonzero(units > 0)
        if candidates.size == 0:
            return False
        pick = candidates[rng.integers(candidates.size)]
        step = 1 if total < target_total else -1
        units[pick] += step
        total += step
    return True


def random_cloud(
    count: int,
    bands: BandSpec,
    spec: EncodingSpec,
    inputs: MarketInputs,
    cfg: ModelConfig,
    seed: int = 0,
    ignore_bands: bool = False,
) -> list[Portfolio]:
    """Random fully invested portfolios on the encoding grid.

    Each sample decodes a uniform random bit vector and then repairs the
    budget by single-unit increments/decrements in random order, never
    leaving the bands. Sample ``s`` uses the derived generator
    ``default_rng(SeedSequence((seed, s)))``, so the cloud is
    deterministic and order-independent. With ``ignore_bands`` the cloud
    roams the whole simplex grid (bands [0, 1] at the same K) while
    metrics still report compliance against the real bands.

    Assumes a natural-depth encoding, where every unit count in
    ``{0, ..., delta}`` is decodable.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    sample_bands = bands
    sample_spec = spec
    if ignore_bands:
        sample_bands = BandSpec(
            assets=bands.assets,
            w_min=np.zeros(bands.n_assets),
            w_max=np.ones(bands.n_assets),
            sectors=bands.sectors,
        )
        sample_spec = make_encoding(sample_bands, spec.k_units)

    k = sample_spec.k_units
    deltas = np.array([sample_spec.delta(n) for n in range(sample_spec.n_assets)])
    target_total = int(round(k * (1.0 - float(sample_bands.w_min.sum()))))
    reachable = 0 <= target_total <= int(deltas.sum())

    out: list[Portfolio] = []
    attempts = 0
    max_attempts = _REPAIR_ATTEMPT_FACTOR * count
    sample_idx = 0
    while len(out) < count:
        if attempts >= max_attempts or not reachable:
            raise FeasibilityError(
                f"could not repair budget after {attempts} attempts; "
                f"bands admit unit totals 0..{int(deltas.sum())}, need {target_total}"
            )
        rng = np.random.default_rng(np.random.SeedSequence((seed, sample_idx)))
        sample_idx += 1
        attempts += 1
        bits = rng.integers(0, 2, size=sample_spec.total_bits)
        units = (sample_spec.unit_matrix() @ bits).astype(np.int64)
        if not _repair_units(units, deltas, target_total, rng):
            continue
        weights = sample_bands.w_min + units / k
        out.append(evaluate(weights, inputs, cfg, bands))
    return out


def _resolve_index(series: PriceSeries, point, default: int) -> int:
    if point is None:
        return default
    if isinstance(point, (int, np.integer)):
        idx = int(point)
        if not 0 <= idx < series.n_dates:
            raise ValidationError(f"date index {idx} out of range 0..{series.n_dates - 1}")
        return idx
    return series.date_index(point)


def ewi_return(
    series: PriceSeries,
    start=None,
    end=None,
    rebalanced: bool = False,
) -> float:
    """Total return of the equally weighted index between two dates.

    Default is buy-and-hold: invest 1/N in every asset at ``start`` and
    keep the shares until ``end``, i.e. the mean of the assets' simple
    returns. The ``rebalanced`` variant resets to equal weights every
    period instead. ``start``/``end`` accept dates or row indices and
    default to the first and last date.
    """
    first = _resolve_index(series, start, 0)
    last = _resolve_index(series, end, series.n_dates - 1)
    if first >= last:
        raise ValidationError(
            f"need start before end, got rows {first} and {last}"
        )
    prices = series.prices[first : last + 1]
    if rebalanced:
        growth = prices[1:] / prices[:-1]
        return float(np.prod(growth.mean(axis=1)) - 1.0)
    return float(np.mean(prices[-1] / prices[0]) - 1.0)


def write_frontier_csv(path, rows):
    """Rows of (volatility, return, label) for risk/return scatter plots."""
    with open(path, "w", newline="\n") as fh:
        fh.write("volatility,return,label\n")
        for vol, ret, label in rows:
            fh.write(f"{vol:.10g},{ret:.10g},{label}\n")


def write_composition_csv(path, bands: BandSpec, weights):
    """Per-asset weights next to their bands, for composition bar plots."""
    weights = np.asarray(weights, dtype=float)
    with open(path, "w", newline="\n") as fh:
        fh.write("asset,sector,weight,w_min,w_max\n")
        for i, asset in enumerate(bands.assets):
            fh.write(
                f"{asset},{bands.sector_of(i)},{weights[i]:.10g},"
                f"{bands.w_min[i]:.10g},{bands.w_max[i]:.10g}\n"
            )


def write_sweep_csv(path, rows):
    """Rows of (realized volatility, constraint value) for penalty curves."""
    with open(path, "w", newline="\n") as fh:
        fh.write("realized_vol,constraint_value\n")
        for vol, value in rows:
            fh.write(f"{vol:.10g},{value:.10g}\n")
