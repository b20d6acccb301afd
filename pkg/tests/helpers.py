"""Shared instance generators for the test suite."""

import datetime as dt

import numpy as np

from bandqubo import BandSpec, MarketInputs, ModelConfig, Qubo, make_encoding


def random_correlation(rng, n, base=0.3):
    """Uniform off-diagonal correlation plus a jitter, kept PSD."""
    corr = np.full((n, n), base) + np.eye(n) * (1.0 - base)
    jitter = rng.normal(0.0, 0.05, size=(n, n))
    jitter = 0.5 * (jitter + jitter.T)
    np.fill_diagonal(jitter, 0.0)
    corr = corr + jitter
    ev, vec = np.linalg.eigh(corr)
    ev = np.clip(ev, 1e-6, None)
    corr = vec @ np.diag(ev) @ vec.T
    d = np.sqrt(np.diag(corr))
    return corr / np.outer(d, d)


def random_inputs(rng, n, vol_lo=0.004, vol_hi=0.016, assets=None):
    """Daily-scale market inputs: vols of a percent, drifts of basis points."""
    vols = rng.uniform(vol_lo, vol_hi, size=n)
    corr = random_correlation(rng, n)
    sigma = corr * np.outer(vols, vols)
    sigma = 0.5 * (sigma + sigma.T)
    mu = rng.normal(5e-4, 5e-4, size=n)
    return MarketInputs(mu=mu, sigma_mat=sigma, period_label="daily", assets=assets)


def bands_for_deltas(rng, deltas, k):
    """Random integral bands whose unit widths are exactly ``deltas``.

    Lower units are drawn so the budget stays feasible:
    sum(u_lo) <= k <= sum(u_lo + delta) and u_lo + delta <= k per asset.
    """
    deltas = list(deltas)
    n = len(deltas)
    caps = [k - d for d in deltas]
    if any(c < 0 for c in caps):
        raise ValueError("delta exceeds k for some asset")
    lo_total = int(rng.integers(max(0, k - sum(deltas)), min(sum(caps), k) + 1))
    u_lo = []
    remaining = lo_total
    for i in range(n):
        rest_cap = sum(caps[i + 1 :])
        low = max(0, remaining - rest_cap)
        high = min(caps[i], remaining)
        pick = int(rng.integers(low, high + 1)) if high >= low else low
        u_lo.append(pick)
        remaining -= pick
    assert remaining == 0
    w_min = np.array(u_lo, dtype=float) / k
    w_max = np.array([u + d for u, d in zip(u_lo, deltas)], dtype=float) / k
    assets = tuple(f"A{i}" for i in range(n))
    return BandSpec(assets=assets, w_min=w_min, w_max=w_max)


def random_banded_instance(rng, n_assets, max_bits, k_range=(10, 60)):
    """Market inputs + bands + encoding with a capped total bit count."""
    delta_pool = (1, 2, 3, 4, 6, 7, 10, 15)
    bits_of = {1: 1, 2: 2, 3: 2, 4: 3, 6: 3, 7: 3, 10: 4, 15: 4}
    while True:
        deltas = [int(rng.choice(delta_pool)) for _ in range(n_assets)]
        if sum(bits_of[d] for d in deltas) <= max_bits:
            break
    k = int(rng.integers(max(k_range[0], max(deltas)), k_range[1] + 1))
    bands = bands_for_deltas(rng, deltas, k)
    spec = make_encoding(bands, k)
    inputs = random_inputs(rng, n_assets, assets=bands.assets)
    return inputs, bands, spec


def random_qubo(rng, n_bits, scale=1.0):
    mat = rng.normal(0.0, scale, size=(n_bits, n_bits))
    mat = 0.5 * (mat + mat.T)
    labels = tuple((0, i) for i in range(n_bits))
    return Qubo(q_matrix=mat, offset=float(rng.normal()), bit_labels=labels)


def model_all_terms(rng, sigma_target):
    """ModelConfig with every cost term active; multipliers sometimes explicit."""
    explicit = rng.random() < 0.5
    return ModelConfig(
        gamma=float(rng.uniform(0.2, 4.0)),
        rho=float(rng.uniform(0.005, 0.1)) if explicit else None,
        lambda_vol=float(rng.uniform(1.0, 100.0)) if explicit else None,
        sigma_target=sigma_target,
        enable_vol_constraint=True,
    )


def write_config(path, options, bands=None, sector_bands=None, sectors=None):
    """Write a run-config file from a dict plus optional band tables."""
    lines = [f"{key} = {value}" for key, value in options.items()]
    if bands:
        lines.append("[bands]")
        lines += [", ".join(str(c) for c in row) for row in bands]
    if sector_bands:
        lines.append("[sector_bands]")
        lines += [", ".join(str(c) for c in row) for row in sector_bands]
    if sectors:
        lines.append("[sectors]")
        lines += [", ".join(str(c) for c in row) for row in sectors]
    path.write_text("\n".join(lines) + "\n")
    return path


def gbm_prices_csv(
    path,
    rng,
    mu_daily,
    sigma_daily,
    n_days,
    assets=None,
    start=dt.date(2021, 1, 4),
):
    """Write a synthetic geometric-random-walk price CSV; returns asset names."""
    mu_daily = np.asarray(mu_daily, dtype=float)
    n = mu_daily.shape[0]
    if assets is None:
        assets = tuple(f"AST{i:02d}" for i in range(n))
    chol = np.linalg.cholesky(
        sigma_daily + 1e-12 * np.eye(n)
    )
    prices = np.empty((n_days, n))
    prices[0] = 100.0
    day = start
    dates = [day]
    for t in range(1, n_days):
        shock = chol @ rng.standard_normal(n)
        prices[t] = prices[t - 1] * np.exp(mu_daily + shock)
        day = day + dt.timedelta(days=1)
        while day.weekday() >= 5:
            day = day + dt.timedelta(days=1)
        dates.append(day)
    with open(path, "w", newline="\n") as fh:
        fh.write("date," + ",".join(assets) + "\n")
        for t in range(n_days):
            cells = ",".join(f"{prices[t, i]:.6f}" for i in range(n))
            fh.write(f"{dates[t].isoformat()},{cells}\n")
    return assets
