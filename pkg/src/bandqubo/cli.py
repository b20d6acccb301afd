"""Command-line front door: solve, sweep, frontier, cloud, validate.

Each command reads one config file, runs the full pipeline (load prices,
estimate inputs, resolve bands, encode, build QUBO, solve, evaluate) and
writes plot-ready CSVs plus a key=value summary into the output
directory. Identical config and seed produce byte-identical outputs.

Exit codes: 0 success, 1 bad input or config, 2 infeasible bands,
3 solver refusal. Set BANDQUBO_LOG=debug|info|warning for log verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import encoding, evaluator, market_data, qubo, solver
from .config import RunConfig, parse_config
from .errors import (
    BandQuboError,
    ConfigError,
    EncodingError,
    FeasibilityError,
    SolverCapError,
    ValidationError,
)

logger = logging.getLogger("bandqubo")

# Stream tags for deriving per-purpose solver seeds from the run seed.
_STREAM_SOLVE = 0
_STREAM_SWEEP = 1
_STREAM_FRONTIER = 2
_STREAM_CLOUD = 3

_ENERGY_CHECK_TOL = 1e-9


def _derived_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence((seed, *tags)).generate_state(1)[0])


@dataclass
class Prepared:
    """Everything derived from config + data, shared by the commands."""

    series: market_data.PriceSeries
    inputs: market_data.MarketInputs
    bands: encoding.BandSpec
    spec: encoding.EncodingSpec
    as_of_index: int


def _resolve_bands(cfg: RunConfig, assets: tuple[str, ...]) -> encoding.BandSpec:
    """Merge sector-level and asset-level band tables over the price assets.

    Precedence: full range [0, 1] default, then equal sector splits, then
    explicit per-asset rows.
    """
    order = {a: i for i, a in enumerate(assets)}
    w_min = np.zeros(len(assets))
    w_max = np.ones(len(assets))
    sectors = [""] * len(assets)

    membership: dict[str, str] = {}
    for asset, sector in cfg.memberships:
        if asset not in order:
            raise ConfigError(f"[sectors] names unknown asset {asset!r}")
        membership[asset] = sector
    for asset, _lo, _hi, sector in cfg.asset_bands:
        if asset not in order:
            raise ConfigError(f"[bands] names unknown asset {asset!r}")
        if sector and asset not in membership:
            membership[asset] = sector

    if cfg.sector_bands:
        sector_map = {name: (lo, hi) for name, lo, hi in cfg.sector_bands}
        scoped = {a: s for a, s in membership.items() if s in sector_map}
        split = encoding.sector_to_asset_bands(sector_map, scoped)
        for i, asset in enumerate(split.assets):
            w_min[order[asset]] = split.w_min[i]
            w_max[order[asset]] = split.w_max[i]

    for asset, sector in membership.items():
        sectors[order[asset]] = sector
    for asset, lo, hi, sector in cfg.asset_bands:
        w_min[order[asset]] = lo
        w_max[order[asset]] = hi
    return encoding.BandSpec(
        assets=assets, w_min=w_min, w_max=w_max, sectors=tuple(sectors)
    )


def _prepare(cfg: RunConfig) -> Prepared:
    series = market_data.load_prices(
        cfg.data, missing=cfg.missing_policy, max_bytes=cfg.max_file_bytes
    )
    returns = market_data.log_returns(series)
    end = series.date_index(cfg.as_of) if cfg.as_of is not None else series.n_dates - 1
    inputs = market_data.estimate_inputs(
        returns, cfg.window, as_of=end, assets=series.assets
    )
    if cfg.period == "yearly":
        inputs = market_data.annualize(inputs, cfg.periods_per_year)
    bands = _resolve_bands(cfg, series.assets)
    spec = encoding.make_encoding(bands, cfg.k_units, integral=cfg.integral_bands)
    logger.info(
        "prepared %d assets, %d bits, as of %s",
        series.n_assets,
        spec.total_bits,
        series.dates[end].isoformat(),
    )
    return Prepared(series, inputs, bands, spec, end)


def _base_model(cfg: RunConfig) -> qubo.ModelConfig:
    return qubo.ModelConfig(
        gamma=cfg.gamma,
        rho=cfg.rho,
        lambda_vol=cfg.lambda_vol,
        sigma_target=cfg.sigma_target,
        enable_vol_constraint=cfg.vol_constraint_on(),
    )


def _schedule_for(cfg: RunConfig, q: qubo.Qubo, seed: int) -> solver.AnnealSchedule:
    sched = solver.default_schedule(q, seed=seed)
    overrides = {}
    if cfg.sweeps is not None:
        overrides["sweeps"] = cfg.sweeps
    if cfg.replicas is not None:
        overrides["replicas"] = cfg.replicas
    if cfg.t_start is not None:
        overrides["t_start"] = cfg.t_start
    if cfg.t_end is not None:
        overrides["t_end"] = cfg.t_end
    return dataclasses.replace(sched, **overrides) if overrides else sched


def _solve_qubo(cfg: RunConfig, q: qubo.Qubo, seed: int) -> solver.Solution:
    if cfg.solver == "exhaustive":
        return solver.exhaustive_solve(q, bit_cap=cfg.bit_cap)
    return solver.anneal(q, _schedule_for(cfg, q, seed))


def _solve_model(cfg, prep: Prepared, model: qubo.ModelConfig, seed: int):
    """Build, solve, optionally refine linear weights; returns
    (solution, weights, resolved model, qubo)."""
    resolved = model.resolve(prep.inputs)
    q = qubo.build_qubo(prep.inputs, resolved, prep.spec, prep.bands)
    sol = _solve_qubo(cfg, q, seed)
    weights = encoding.decode(sol.bits, prep.spec, prep.bands)
    refine_rounds = cfg.refine_iters if resolved.enable_vol_constraint else 0
    for _ in range(refine_rounds):
        k_next = qubo.refine_linear_weights(
            resolved.k_weights, weights, cfg.refine_damping
        )
        resolved = dataclasses.replace(resolved, k_weights=k_next)
        q = qubo.build_qubo(prep.inputs, resolved, prep.spec, prep.bands)
        sol = _solve_qubo(cfg, q, seed)
        weights = encoding.decode(sol.bits, prep.spec, prep.bands)
    cost = qubo.cost_direct(weights, prep.inputs, resolved)
    if abs(cost - sol.energy) > _ENERGY_CHECK_TOL * (1.0 + abs(sol.energy)):
        raise ValidationError(
            f"solution energy {sol.energy!r} disagrees with re-evaluated cost {cost!r}"
        )
    return sol, weights, resolved, q


def _write_summary(path: Path, pairs: list[tuple[str, object]]):
    with open(path, "w", newline="\n") as fh:
        for key, value in pairs:
            if isinstance(value, float):
                value = f"{value:.10g}"
            elif isinstance(value, bool):
                value = "true" if value else "false"
            fh.write(f"{key}={value}\n")


def _portfolio_pairs(port: evaluator.Portfolio, sol: solver.Solution):
    return [
        ("energy", sol.energy),
        ("expected_return", port.expected_return),
        ("volatility", port.volatility),
        ("budget_residual", port.budget_residual),
        ("vol_gap", port.vol_gap),
        ("band_ok", port.band_ok),
    ]


def cmd_solve(cfg: RunConfig) -> int:
    prep = _prepare(cfg)
    prep.bands.check_budget_feasible()
    model = _base_model(cfg)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)

    if prep.spec.total_bits == 0:
        # Bands pin every weight; nothing to optimize.
        resolved = model.resolve(prep.inputs)
        q = qubo.build_qubo(prep.inputs, resolved, prep.spec, prep.bands)
        sol = solver.Solution(bits=(), energy=q.offset)
        weights = prep.bands.w_min.copy()
        logger.info("all bands pinned; returning the unique feasible portfolio")
    else:
        sol, weights, resolved, q = _solve_model(
            cfg, prep, model, _derived_seed(cfg.seed, _STREAM_SOLVE)
        )

    port = evaluator.evaluate(weights, prep.inputs, resolved, prep.bands)
    evaluator.write_composition_csv(out / "composition.csv", prep.bands, port.weights)
    q.export_triplets(out / "qubo.txt")
    with open(out / "solution.txt", "w", newline="\n") as fh:
        fh.write(sol.to_record() + "\n")
    pairs = [
        ("experiment", "solve"),
        ("assets", prep.series.n_assets),
        ("bits", prep.spec.total_bits),
        ("solver", cfg.solver),
        ("seed", cfg.seed),
        ("period", cfg.period),
        ("sigma_target", float(cfg.sigma_target)),
    ] + _portfolio_pairs(port, sol)
    _write_summary(out / "summary.txt", pairs)
    print((out / "summary.txt").read_text(), end="")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.vol_constraint_on():
        raise ConfigError("sweep requires the volatility constraint to be enabled")
    if cfg.sweep_points < 1:
        raise ConfigError("sweep_points must be >= 1: the volatility grid is empty")
    prep = _prepare(cfg)
    prep.bands.check_budget_feasible()
    base = _base_model(cfg).resolve(prep.inputs)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)

    gammas = np.geomspace(cfg.sweep_gamma_min, cfg.sweep_gamma_max, cfg.sweep_points)
    rows = []
    for i, gamma in enumerate(gammas):
        candidate_model = qubo.ModelConfig(
            gamma=float(gamma),
            rho=cfg.rho,
            lambda_vol=0.0,
            sigma_target=cfg.sigma_target,
            enable_vol_constraint=False,
        )
        resolved = candidate_model.resolve(prep.inputs)
        q = qubo.build_qubo(prep.inputs, resolved, prep.spec, prep.bands)
        sol = _solve_qubo(cfg, q, _derived_seed(cfg.seed, _STREAM_SWEEP, i))
        weights = encoding.decode(sol.bits, prep.spec, prep.bands)
        vol = float(np.sqrt(max(weights @ prep.inputs.sigma_mat @ weights, 0.0)))
        value = qubo.constraint_value(weights, prep.inputs, base)
        rows.append((vol, value))
        logger.debug("sweep gamma=%g vol=%g constraint=%g", gamma, vol, value)
    rows.sort()
    evaluator.write_sweep_csv(out / "sweep.csv", rows)
    min_vol, min_value = min(rows, key=lambda r: (r[1], r[0]))
    _write_summary(
        out / "summary.txt",
        [
            ("experiment", "sweep"),
            ("points", len(rows)),
            ("sigma_target", float(cfg.sigma_target)),
            ("min_constraint_vol", min_vol),
            ("min_constraint_value", min_value),
        ],
    )
    print((out / "summary.txt").read_text(), end="")
    return 0


def _profile_labels(n: int) -> list[str]:
    if n == 3:
        return ["optimal_low", "optimal_medium", "optimal_high"]
    return [f"optimal_{i + 1}" for i in range(n)]


def cmd_frontier(cfg: RunConfig) -> int:
    if not cfg.frontier_targets:
        raise ConfigError("frontier requires at least one sigma target "
                          "(frontier_targets = t1, t2, ...)")
    prep = _prepare(cfg)
    prep.bands.check_budget_feasible()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)

    targets = sorted(cfg.frontier_targets)
    labels = _profile_labels(len(targets))
    rows = []
    summary_pairs: list[tuple[str, object]] = [
        ("experiment", "frontier"),
        ("targets", ",".join(f"{t:.10g}" for t in targets)),
    ]
    for i, (target, label) in enumerate(zip(targets, labels)):
        model = qubo.ModelConfig(
            gamma=cfg.gamma,
            rho=cfg.rho,
            lambda_vol=cfg.lambda_vol,
            sigma_target=float(target),
            enable_vol_constraint=True,
        )
        sol, weights, resolved, _ = _solve_model(
            cfg, prep, model, _derived_seed(cfg.seed, _STREAM_FRONTIER, i)
        )
        port = evaluator.evaluate(weights, prep.inputs, resolved, prep.bands)
        rows.append((port.volatility, port.expected_return, label))
        summary_pairs += [
            (f"{label}_volatility", port.volatility),
            (f"{label}_return", port.expected_return),
            (f"{label}_energy", sol.energy),
        ]

    cloud_model = _base_model(cfg)
    cloud = evaluator.random_cloud(
        cfg.cloud_points,
        prep.bands,
        prep.spec,
        prep.inputs,
        cloud_model,
        seed=_derived_seed(cfg.seed, _STREAM_CLOUD),
        ignore_bands=cfg.cloud_ignore_bands,
    )
    rows.extend((p.volatility, p.expected_return, "cloud") for p in cloud)

    ewi_ret = evaluator.ewi_return(
        prep.series, start=0, end=prep.as_of_index, rebalanced=cfg.ewi_rebalanced
    )
    equal = np.full(prep.series.n_assets, 1.0 / prep.series.n_assets)
    ewi_vol = float(np.sqrt(max(equal @ prep.inputs.sigma_mat @ equal, 0.0)))
    rows.append((ewi_vol, ewi_ret, "ewi"))
    summary_pairs += [("ewi_return", ewi_ret), ("cloud_points", len(cloud))]

    evaluator.write_frontier_csv(out / "frontier.csv", rows)
    _write_summary(out / "summary.txt", summary_pairs)
    print((out / "summary.txt").read_text(), end="")
    return 0


def cmd_cloud(cfg: RunConfig) -> int:
    prep = _prepare(cfg)
    prep.bands.check_budget_feasible()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    cloud = evaluator.random_cloud(
        cfg.cloud_points,
        prep.bands,
        prep.spec,
        prep.inputs,
        _base_model(cfg),
        seed=_derived_seed(cfg.seed, _STREAM_CLOUD),
        ignore_bands=cfg.cloud_ignore_bands,
    )
    rows = [(p.volatility, p.expected_return, "cloud") for p in cloud]
    evaluator.write_frontier_csv(out / "frontier.csv", rows)
    _write_summary(
        out / "summary.txt",
        [("experiment", "cloud"), ("cloud_points", len(cloud))],
    )
    print((out / "summary.txt").read_text(), end="")
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    """Diagnostics only: report problems, mutate nothing, always exit 0."""
    findings: list[str] = []

    series = None
    if not cfg.data.exists():
        findings.append(f"DATA price file not found: {cfg.data}")
    else:
        try:
            series = market_data.load_prices(
                cfg.data, missing=cfg.missing_policy, max_bytes=cfg.max_file_bytes
            )
        except BandQuboError as exc:
            findings.append(f"DATA {exc}")

    bands = None
    if series is not None:
        try:
            bands = _resolve_bands(cfg, series.assets)
        except FeasibilityError as exc:
            findings.append(f"FEASIBILITY {exc}")
        except BandQuboError as exc:
            findings.append(f"BANDS {exc}")

    if bands is not None:
        lo = float(bands.w_min.sum())
        hi = float(bands.w_max.sum())
        if lo > 1.0 + 1e-12:
            findings.append(f"FEASIBILITY band minimums sum to {lo:.6g} > 1")
        if hi < 1.0 - 1e-12:
            findings.append(f"FEASIBILITY band maximums sum to {hi:.6g} < 1")
        try:
            encoding.make_encoding(bands, cfg.k_units, integral=cfg.integral_bands)
        except EncodingError as exc:
            findings.append(f"ENCODING {exc}")
        except BandQuboError as exc:
            findings.append(f"BANDS {exc}")

    inputs = None
    if series is not None:
        try:
            returns = market_data.log_returns(series)
            end = (
                series.date_index(cfg.as_of)
                if cfg.as_of is not None
                else series.n_dates - 1
            )
            inputs = market_data.estimate_inputs(
                returns, cfg.window, as_of=end, assets=series.assets
            )
            if cfg.period == "yearly":
                inputs = market_data.annualize(inputs, cfg.periods_per_year)
        except BandQuboError as exc:
            findings.append(f"PSD {exc}" if "semidefinite" in str(exc) else f"DATA {exc}")

    if inputs is not None:
        try:
            _base_model(cfg).resolve(inputs)
        except BandQuboError as exc:
            findings.append(f"CONFIG {exc}")
        suggested = qubo.default_budget_multiplier(inputs, cfg.gamma)
        if cfg.rho is not None and suggested > 0 and cfg.rho < 0.1 * suggested:
            findings.append(
                f"SCALE rho={cfg.rho:.6g} is far below the suggested "
                f"{suggested:.6g}; budget may not bind"
            )

    if findings:
        for line in findings:
            print(line)
    else:
        print("no issues found")
    return 0


_DISPATCH = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "frontier": cmd_frontier,
    "cloud": cmd_cloud,
    "validate": cmd_validate,
}


class _ArgumentParser(argparse.ArgumentParser):
    # Usage mistakes exit 1; code 2 is reserved for infeasible bands.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="bandqubo",
        description="Banded portfolio optimization via QUBO and simulated annealing",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _DISPATCH:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", required=True, help="path to the run config file")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("BANDQUBO_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        cfg.experiment = args.command
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = Path(args.out)
        return _DISPATCH[args.command](cfg)
    except FeasibilityError as exc:
        print(f"error: infeasible bands: {exc}", file=sys.stderr)
        return 2
    except SolverCapError as exc:
        print(f"error: solver refused: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BandQuboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
