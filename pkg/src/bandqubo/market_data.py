"""Price ingestion and estimation of return/covariance inputs.

Pipeline: a CSV of dated closing prices is loaded into a validated
:class:`PriceSeries`, converted to per-period logarithmic returns, and a
trailing window of those returns yields the expected-return vector and
sample covariance matrix (:class:`MarketInputs`) that parameterize the
cost function downstream.

Conventions fixed here and relied on everywhere else:

- asset order is the CSV column order;
- covariance uses the unbiased divisor (window - 1);
- daily inputs annualize by a plain factor of ``periods_per_year``
  (default 252 trading days), i.e. yearly vol = daily vol * sqrt(252).
"""

from __future__ import annotations

import csv
import datetime as dt
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ParseError, ValidationError

TRADING_DAYS_PER_YEAR = 252

DEFAULT_MAX_FILE_BYTES = 100 * 1024 * 1024

# Tolerances for MarketInputs invariants.
_SYMMETRY_TOL = 1e-12
_PSD_REL_TOL = 1e-10


@dataclass(frozen=True)
class PriceSeries:
    """Dated closing prices, one row per date, one column per asset.

    All prices are strictly positive and dates strictly increasing; both
    are enforced at construction.
    """

    assets: tuple[str, ...]
    dates: tuple[dt.date, ...]
    prices: np.ndarray

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", prices)
        if prices.ndim != 2:
            raise ValidationError("prices must be a 2-D matrix")
        n_dates, n_assets = prices.shape
        if n_dates != len(self.dates) or n_assets != len(self.assets):
            raise ValidationError(
                f"price matrix is {prices.shape}, expected "
                f"({len(self.dates)}, {len(self.assets)})"
            )
        if len(set(self.assets)) != len(self.assets):
            raise ValidationError("duplicate asset identifiers in header")
        for t in range(1, len(self.dates)):
            if self.dates[t] <= self.dates[t - 1]:
                kind = "duplicated" if self.dates[t] == self.dates[t - 1] else "unordered"
                raise ValidationError(
                    f"{kind} date {self.dates[t].isoformat()} at row {t + 1}"
                )
        if not np.all(np.isfinite(prices)):
            t, n = np.argwhere(~np.isfinite(prices))[0]
            raise ValidationError(
                f"non-finite price for {self.assets[n]} on {self.dates[t].isoformat()}"
            )
        if np.any(prices <= 0.0):
            t, n = np.argwhere(prices <= 0.0)[0]
            raise ValidationError(
                f"non-positive price {prices[t, n]!r} for {self.assets[n]} "
                f"on {self.dates[t].isoformat()}"
            )
        prices.setflags(write=False)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    def date_index(self, as_of: dt.date | str) -> int:
        """Index of the last date <= ``as_of`` (the valuation row)."""
        if isinstance(as_of, str):
            as_of = dt.date.fromisoformat(as_of)
        if as_of < self.dates[0]:
            raise InsufficientDataError(
                f"as_of {as_of.isoformat()} precedes first date {self.dates[0].isoformat()}"
            )
        idx = 0
        for t, d in enumerate(self.dates):
            if d <= as_of:
                idx = t
            else:
                break
        return idx


@dataclass(frozen=True)
class MarketInputs:
    """Expected log-returns and their covariance for one trading date.

    ``period_label`` records whether mu/sigma_mat are per trading day or
    per year; the two are related by a linear factor (see :func:`annualize`).
    """

    mu: np.ndarray
    sigma_mat: np.ndarray
    period_label: str = "daily"
    assets: tuple[str, ...] | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma_mat, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma_mat", sigma)
        if self.assets is not None:
            object.__setattr__(self, "assets", tuple(self.assets))
        if self.period_label not in ("daily", "yearly"):
            raise ValidationError(f"unknown period label {self.period_label!r}")
        if mu.ndim != 1:
            raise ValidationError("mu must be a vector")
        n = mu.shape[0]
        if sigma.shape != (n, n):
            raise ValidationError(
                f"sigma_mat shape {sigma.shape} does not match {n} assets"
            )
        if self.assets is not None and len(self.assets) != n:
            raise ValidationError("asset labels do not match mu length")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ValidationError("non-finite market inputs")
        asym = float(np.abs(sigma - sigma.T).max()) if n else 0.0
        if asym > _SYMMETRY_TOL:
            raise ValidationError(f"sigma_mat asymmetric by {asym:.3e}")
        if n:
            ev = np.linalg.eigvalsh(sigma)
            if ev[0] < -_PSD_REL_TOL * ev[-1]:
                raise ValidationError(
                    f"sigma_mat not positive semidefinite "
                    f"(eigenvalues in [{ev[0]:.3e}, {ev[-1]:.3e}])"
                )
        mu.setflags(write=False)
        sigma.setflags(write=False)

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]


def load_prices(
    path,
    missing: str = "reject",
    max_bytes: int = DEFAULT_MAX_FILE_BYTES,
) -> PriceSeries:
    """Load a ``date,TICKER1,TICKER2,...`` CSV into a PriceSeries.

    Dates must be ISO-8601 in the first column and strictly increasing.
    Empty cells are rejected by default; with ``missing='forward_fill'``
    they repeat the previous row's value instead.
    """
    if missing not in ("reject", "forward_fill"):
        raise ValidationError(f"unknown missing-data policy {missing!r}")
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"price file not found: {path}")
    size = os.path.getsize(path)
    if size > max_bytes:
        raise ValidationError(
            f"price file {path} is {size} bytes, exceeds cap {max_bytes}"
        )

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0].lower() != "date":
            raise ParseError(
                f"{path}:1: header must be 'date,TICKER,...', got {','.join(header)!r}"
            )
        assets = tuple(header[1:])

        dates: list[dt.date] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # tolerate blank lines
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                date = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ParseError(
                    f"{path}:{lineno}: bad ISO date {row[0].strip()!r}"
                ) from None
            values: list[float] = []
            for col, cell in enumerate(row[1:]):
                cell = cell.strip()
                if cell == "":
                    if missing == "forward_fill" and rows:
                        values.append(rows[-1][col])
                        continue
                    raise ValidationError(
                        f"{path}:{lineno}: missing price for {assets[col]} "
                        f"on {date.isoformat()} (policy {missing!r})"
                    )
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}:{lineno}: bad price {cell!r} for {assets[col]}"
                    ) from None
            dates.append(date)
            rows.append(values)

    if not rows:
        raise ParseError(f"{path}: no data rows")
    return PriceSeries(assets=assets, dates=tuple(dates), prices=np.array(rows))


def log_returns(series: PriceSeries) -> np.ndarray:
    """Per-period log returns; row t is ln(price[t+1] / price[t])."""
    if series.n_dates < 2:
        raise InsufficientDataError("need at least 2 dates to compute returns")
    return np.diff(np.log(series.prices), axis=0)


def estimate_inputs(
    returns: np.ndarray,
    window: int,
    as_of: int | None = None,
    assets: tuple[str, ...] | None = None,
) -> MarketInputs:
    """Trailing-window mean and sample covariance of log returns.

    ``as_of`` is an exclusive end row into ``returns``; the estimate uses
    rows ``[as_of - window, as_of)``. Default is the final row, i.e. the
    most recent ``window`` periods. Covariance is the unbiased sample
    estimate (divisor ``window - 1``), symmetrized exactly.
    """
    returns = np.asarray(returns, dtype=float)
    if returns.ndim != 2:
        raise ValidationError("returns must be a 2-D matrix")
    n_rows = returns.shape[0]
    if as_of is None:
        as_of = n_rows
    if not 0 < as_of <= n_rows:
        raise InsufficientDataError(
            f"as_of row {as_of} outside available range 1..{n_rows}"
        )
    if window < 2:
        raise InsufficientDataError("window must cover at least 2 periods")
    if window > as_of:
        raise InsufficientDataError(
            f"window {window} exceeds the {as_of} rows available before as_of"
        )
    block = returns[as_of - window : as_of]
    mu = block.mean(axis=0)
    sigma = np.atleast_2d(np.cov(block, rowvar=False, ddof=1))
    sigma = 0.5 * (sigma + sigma.T)
    return MarketInputs(mu=mu, sigma_mat=sigma, period_label="daily", assets=assets)


def annualize(
    inputs: MarketInputs, periods_per_year: int = TRADING_DAYS_PER_YEAR
) -> MarketInputs:
    """Scale daily inputs to yearly units (mu and sigma_mat both linear)."""
    if periods_per_year < 1:
        raise ValidationError("periods_per_year must be positive")
    if inputs.period_label == "yearly":
        warnings.warn("inputs already yearly; annualize is a no-op", stacklevel=2)
        return inputs
    return MarketInputs(
        mu=inputs.mu * periods_per_year,
        sigma_mat=inputs.sigma_mat * periods_per_year,
        period_label="yearly",
        assets=inputs.assets,
    )
