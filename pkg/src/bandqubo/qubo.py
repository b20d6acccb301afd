"""Assembly of the portfolio cost function as a QUBO.

The cost in weight space is

    H(w) = -mu . w + (gamma/2) w' Sigma w + rho (sum(w) - 1)^2
           [+ lambda_vol (k' Sigma w - sigma_target^2)^2]

where the optional last term steers the portfolio toward a target
volatility. Replacing one weight factor of the variance by the constant
linear-weight vector ``k`` keeps that term quadratic, so substituting
``w = w_min + C x / K`` (bit vector ``x``, integer coefficient matrix
``C`` from the encoding) yields a plain quadratic form over bits:

    H(x) = x' Q x + offset,

with linear bit terms folded onto the diagonal (x_i^2 = x_i). The offset
is carried so reported energies equal true costs. ``cost_direct`` is the
weight-space ground truth the builder is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .encoding import BandSpec, EncodingSpec
from .errors import ConfigError, ValidationError
from .market_data import MarketInputs

_SYMMETRY_TOL = 1e-12


def default_linear_weights(n_assets: int) -> np.ndarray:
    """Uniform linear weights 1/N, the standard starting guess."""
    if n_assets < 1:
        raise ValidationError("need at least one asset")
    return np.full(n_assets, 1.0 / n_assets)


def refine_linear_weights(k_weights, solution_weights, damping: float) -> np.ndarray:
    """Move the linear weights toward a solved portfolio.

    ``k' = (1 - damping) * k + damping * w``; intended for an outer
    fixed-point loop (solve, refine, rebuild) that sharpens the
    linearized volatility constraint.
    """
    k_weights = np.asarray(k_weights, dtype=float)
    solution_weights = np.asarray(solution_weights, dtype=float)
    if k_weights.shape != solution_weights.shape:
        raise ValidationError("linear weights and solution weights differ in length")
    if not 0.0 <= damping <= 1.0:
        raise ValidationError("damping must lie in [0, 1]")
    return (1.0 - damping) * k_weights + damping * solution_weights


def default_budget_multiplier(inputs: MarketInputs, gamma: float) -> float:
    """Budget penalty scaled to dominate the objective terms."""
    mu_scale = float(np.abs(inputs.mu).max()) if inputs.n_assets else 0.0
    sig_scale = float(np.abs(inputs.sigma_mat).max()) if inputs.n_assets else 0.0
    return 10.0 * (mu_scale + gamma * sig_scale)


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the cost function.

    ``rho`` and ``lambda_vol`` may be left as None, in which case they
    resolve against the market inputs at build time: rho from
    :func:`default_budget_multiplier` and lambda_vol = rho /
    sigma_target^4 (so the volatility penalty dominates at deviations of
    order sigma_target^2). ``sigma_target`` is a plain volatility; it is
    squared internally where the constraint needs it.
    """

    gamma: float = 1.0
    rho: float | None = None
    lambda_vol: float | None = None
    sigma_target: float = 0.0
    k_weights: np.ndarray | None = None
    enable_vol_constraint: bool = False

    def __post_init__(self):
        if self.gamma < 0:
            raise ValidationError("gamma must be >= 0")
        if self.rho is not None and self.rho < 0:
            raise ValidationError("rho must be >= 0")
        if self.lambda_vol is not None and self.lambda_vol < 0:
            raise ValidationError("lambda_vol must be >= 0")
        if self.sigma_target < 0:
            raise ValidationError("sigma_target must be >= 0")
        if self.k_weights is not None:
            k = np.asarray(self.k_weights, dtype=float)
            object.__setattr__(self, "k_weights", k)

    def resolve(self, inputs: MarketInputs) -> "ModelConfig":
        """Fill every None field with its data-dependent default."""
        n = inputs.n_assets
        k = self.k_weights if self.k_weights is not None else default_linear_weights(n)
        if k.shape != (n,):
            raise ValidationError(
                f"k_weights has length {k.shape[0]}, expected {n}"
            )
        rho = self.rho if self.rho is not None else default_budget_multiplier(inputs, self.gamma)
        lam = self.lambda_vol
        if lam is None:
            if self.enable_vol_constraint:
                if self.sigma_target <= 0:
                    raise ConfigError(
                        "sigma_target must be positive to derive lambda_vol"
                    )
                lam = rho / self.sigma_target**4
            else:
                lam = 0.0
        return replace(self, rho=rho, lambda_vol=lam, k_weights=k)


@dataclass(frozen=True)
class Qubo:
    """Symmetric quadratic form over bits plus a scalar offset."""

    q_matrix: np.ndarray
    offset: float
    bit_labels: tuple[tuple[int, int], ...]

    def __post_init__(self):
        q = np.asarray(self.q_matrix, dtype=float)
        object.__setattr__(self, "q_matrix", q)
        object.__setattr__(self, "offset", float(self.offset))
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValidationError("q_matrix must be square")
        if q.shape[0] != len(self.bit_labels):
            raise ValidationError("bit_labels do not match matrix dimension")
        if q.size and float(np.abs(q - q.T).max()) > _SYMMETRY_TOL:
            raise ValidationError("q_matrix must be symmetric")
        if not (np.all(np.isfinite(q)) and np.isfinite(self.offset)):
            raise ValidationError("non-finite QUBO coefficient")
        q.setflags(write=False)

    @property
    def n_bits(self) -> int:
        return self.q_matrix.shape[0]

    def energy(self, bits) -> float:
        x = np.asarray(bits, dtype=float)
        return float(x @ self.q_matrix @ x) + self.offset

    def energies(self, bits_rows) -> np.ndarray:
        x = np.asarray(bits_rows, dtype=float)
        return np.einsum("ij,jk,ik->i", x, self.q_matrix, x) + self.offset

    def export_triplets(self, path):
        """Write ``i j value`` sparse triplets, upper triangle.

        Diagonal entries carry the linear terms; off-diagonal entries are
        doubled so that ``sum of value * x_i * x_j`` over the file equals
        ``x' Q x`` for the symmetric matrix.
        """
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# bits={self.n_bits} offset={self.offset!r}\n")
            for i in range(self.n_bits):
                for j in range(i, self.n_bits):
                    val = float(self.q_matrix[i, j] if i == j else 2.0 * self.q_matrix[i, j])
                    if val != 0.0:
                        fh.write(f"{i} {j} {val!r}\n")


def cost_direct(weights, inputs: MarketInputs, cfg: ModelConfig) -> float:
    """Evaluate the cost function directly in weight space."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (inputs.n_assets,):
        raise ValidationError(
            f"weight vector has length {w.shape}, expected ({inputs.n_assets},)"
        )
    cfg = cfg.resolve(inputs)
    sigma = inputs.sigma_mat
    cost = -float(inputs.mu @ w) + 0.5 * cfg.gamma * float(w @ sigma @ w)
    cost += cfg.rho * (float(w.sum()) - 1.0) ** 2
    if cfg.enable_vol_constraint:
        dev = float(cfg.k_weights @ sigma @ w) - cfg.sigma_target**2
        cost += cfg.lambda_vol * dev**2
    return cost


def constraint_value(weights, inputs: MarketInputs, cfg: ModelConfig) -> float:
    """The volatility penalty term lambda * (k' Sigma w - sigma_target^2)^2."""
    if not cfg.enable_vol_constraint:
        raise ConfigError("volatility constraint is disabled")
    w = np.asarray(weights, dtype=float)
    cfg = cfg.resolve(inputs)
    dev = float(cfg.k_weights @ inputs.sigma_mat @ w) - cfg.sigma_target**2
    return cfg.lambda_vol * dev**2


def build_qubo(
    inputs: MarketInputs,
    cfg: ModelConfig,
    spec: EncodingSpec,
    bands: BandSpec,
) -> Qubo:
    """Expand the cost function over the bit encoding.

    For every bit vector x the identity ``x' Q x + offset ==
    cost_direct(decode(x))`` holds up to floating tolerance; constants go
    to the offset, linear terms to the diagonal, and all cross terms are
    mirrored so Q is exactly symmetric.
    """
    n = inputs.n_assets
    if bands.n_assets != n or spec.n_assets != n:
        raise ValidationError(
            f"dimension mismatch: {n} assets in inputs, {bands.n_assets} in "
            f"bands, {spec.n_assets} in encoding"
        )
    cfg = cfg.resolve(inputs)
    sigma = inputs.sigma_mat
    w_min = bands.w_min
    proj = spec.unit_matrix() / spec.k_units  # (N, B): w = w_min + proj @ x

    sig_proj = sigma @ proj  # (N, B)
    quad = 0.5 * cfg.gamma * (proj.T @ sig_proj)
    quad = 0.5 * (quad + quad.T)
    lin = -proj.T @ inputs.mu + cfg.gamma * (proj.T @ (sigma @ w_min))
    offset = -float(inputs.mu @ w_min) + 0.5 * cfg.gamma * float(w_min @ sigma @ w_min)

    # Budget penalty rho (sum(w) - 1)^2.
    col_sums = proj.sum(axis=0)
    base = float(w_min.sum()) - 1.0
    quad += cfg.rho * np.outer(col_sums, col_sums)
    lin += 2.0 * cfg.rho * base * col_sums
    offset += cfg.rho * base**2

    if cfg.enable_vol_constraint:
        k_sig_proj = cfg.k_weights @ sig_proj  # (B,)
        k_base = float(cfg.k_weights @ sigma @ w_min) - cfg.sigma_target**2
        quad += cfg.lambda_vol * np.outer(k_sig_proj, k_sig_proj)
        lin += 2.0 * cfg.lambda_vol * k_base * k_sig_proj
        offset += cfg.lambda_vol * k_base**2

    with np.errstate(invalid="ignore"):
        np.fill_diagonal(quad, np.diagonal(quad) + lin)
    if not (np.all(np.isfinite(quad)) and np.isfinite(offset)):
        raise ValidationError("QUBO build produced non-finite coefficients")
    return Qubo(q_matrix=quad, offset=offset, bit_labels=spec.bit_labels())
