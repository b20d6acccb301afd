"""Run configuration: a flat key = value file with band table sections.

One file fully determines a run (data, bands, model, solver, outputs),
which is what makes reruns byte-reproducible. Lines starting with ``#``
are comments. Three optional sections hold CSV rows:

    [bands]         asset, w_min, w_max[, sector]   per-asset bands
    [sector_bands]  sector, min, max                split equally over members
    [sectors]       asset, sector                   membership (else taken
                                                    from [bands] tags)

Assets present in the price file but not banded anywhere default to the
full range [0, 1]. Numeric keys accept ``auto`` where a data-dependent
default exists (rho, lambda_vol, solver schedule).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

EXPERIMENTS = ("solve", "sweep", "frontier", "cloud", "validate")

_BOOL_WORDS = {
    "true": True, "yes": True, "on": True, "1": True,
    "false": False, "no": False, "off": False, "0": False,
}


@dataclass
class RunConfig:
    """Everything a command needs, with defaults matching the CLI docs."""

    data: Path = Path("prices.csv")
    experiment: str = "solve"
    as_of: dt.date | None = None
    window: int = 60
    k_units: int = 100
    period: str = "daily"  # units of sigma_target and of all reported vols
    periods_per_year: int = 252
    missing_policy: str = "reject"
    max_file_bytes: int = 100 * 1024 * 1024

    gamma: float = 1.0
    rho: float | None = None
    lambda_vol: float | None = None
    sigma_target: float = 0.0
    enable_vol_constraint: bool | None = None  # None: on iff sigma_target > 0
    frontier_targets: tuple[float, ...] = ()
    refine_iters: int = 0
    refine_damping: float = 0.5

    solver: str = "anneal"
    bit_cap: int = 24
    sweeps: int | None = None
    replicas: int | None = None
    t_start: float | None = None
    t_end: float | None = None

    sweep_gamma_min: float = 1e-2
    sweep_gamma_max: float = 1e3
    sweep_points: int = 25

    cloud_points: int = 500
    cloud_ignore_bands: bool = False
    ewi_rebalanced: bool = False
    integral_bands: bool = True

    seed: int = 0
    out_dir: Path = Path("out")

    asset_bands: tuple[tuple[str, float, float, str], ...] = ()
    sector_bands: tuple[tuple[str, float, float], ...] = ()
    memberships: tuple[tuple[str, str], ...] = ()

    def vol_constraint_on(self) -> bool:
        if self.enable_vol_constraint is None:
            return self.sigma_target > 0.0
        return self.enable_vol_constraint


def _parse_bool(key: str, raw: str):
    word = raw.strip().lower()
    if word in _BOOL_WORDS:
        return _BOOL_WORDS[word]
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_float(key: str, raw: str, optional: bool = False):
    word = raw.strip().lower()
    if optional and word == "auto":
        return None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key: str, raw: str, optional: bool = False):
    word = raw.strip().lower()
    if optional and word == "auto":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_date(key: str, raw: str):
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an ISO date, got {raw!r}") from None


def _parse_float_list(key: str, raw: str) -> tuple[float, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(_parse_float(key, part) for part in raw.split(","))


_KEY_PARSERS = {
    "data": lambda v: Path(v.strip()),
    "experiment": lambda v: v.strip().lower(),
    "as_of": lambda v: _parse_date("as_of", v),
    "window": lambda v: _parse_int("window", v),
    "k_units": lambda v: _parse_int("k_units", v),
    "period": lambda v: v.strip().lower(),
    "periods_per_year": lambda v: _parse_int("periods_per_year", v),
    "missing_policy": lambda v: v.strip().lower(),
    "max_file_bytes": lambda v: _parse_int("max_file_bytes", v),
    "gamma": lambda v: _parse_float("gamma", v),
    "rho": lambda v: _parse_float("rho", v, optional=True),
    "lambda_vol": lambda v: _parse_float("lambda_vol", v, optional=True),
    "sigma_target": lambda v: _parse_float("sigma_target", v),
    "enable_vol_constraint": lambda v: (
        None if v.strip().lower() == "auto" else _parse_bool("enable_vol_constraint", v)
    ),
    "frontier_targets": lambda v: _parse_float_list("frontier_targets", v),
    "refine_iters": lambda v: _parse_int("refine_iters", v),
    "refine_damping": lambda v: _parse_float("refine_damping", v),
    "solver": lambda v: v.strip().lower(),
    "bit_cap": lambda v: _parse_int("bit_cap", v),
    "sweeps": lambda v: _parse_int("sweeps", v, optional=True),
    "replicas": lambda v: _parse_int("replicas", v, optional=True),
    "t_start": lambda v: _parse_float("t_start", v, optional=True),
    "t_end": lambda v: _parse_float("t_end", v, optional=True),
    "sweep_gamma_min": lambda v: _parse_float("sweep_gamma_min", v),
    "sweep_gamma_max": lambda v: _parse_float("sweep_gamma_max", v),
    "sweep_points": lambda v: _parse_int("sweep_points", v),
    "cloud_points": lambda v: _parse_int("cloud_points", v),
    "cloud_ignore_bands": lambda v: _parse_bool("cloud_ignore_bands", v),
    "ewi_rebalanced": lambda v: _parse_bool("ewi_rebalanced", v),
    "integral_bands": lambda v: _parse_bool("integral_bands", v),
    "seed": lambda v: _parse_int("seed", v),
    "out": lambda v: Path(v.strip()),
}

_SECTIONS = ("bands", "sector_bands", "sectors")


def parse_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    cfg = RunConfig()
    base = path.parent
    section: str | None = None
    asset_rows: list[tuple[str, float, float, str]] = []
    sector_rows: list[tuple[str, float, float]] = []
    member_rows: list[tuple[str, str]] = []

    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if section is None:
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key not in _KEY_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                parsed = _KEY_PARSERS[key](value)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            attr = "out_dir" if key == "out" else key
            setattr(cfg, attr, parsed)
        else:
            cells = [c.strip() for c in line.split(",")]
            try:
                if section == "bands":
                    if len(cells) not in (3, 4):
                        raise ConfigError("expected 'asset, w_min, w_max[, sector]'")
                    sector = cells[3] if len(cells) == 4 else ""
                    asset_rows.append(
                        (cells[0], float(cells[1]), float(cells[2]), sector)
                    )
                elif section == "sector_bands":
                    if len(cells) != 3:
                        raise ConfigError("expected 'sector, min, max'")
                    sector_rows.append((cells[0], float(cells[1]), float(cells[2])))
                else:  # sectors
                    if len(cells) != 2:
                        raise ConfigError("expected 'asset, sector'")
                    member_rows.append((cells[0], cells[1]))
            except (ValueError, ConfigError) as exc:
                msg = exc if isinstance(exc, ConfigError) else f"bad number in row {line!r}"
                raise ConfigError(f"{path}:{lineno}: {msg}") from None

    cfg.asset_bands = tuple(asset_rows)
    cfg.sector_bands = tuple(sector_rows)
    cfg.memberships = tuple(member_rows)

    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {', '.join(EXPERIMENTS)}, got {cfg.experiment!r}"
        )
    if cfg.period not in ("daily", "yearly"):
        raise ConfigError(f"period must be 'daily' or 'yearly', got {cfg.period!r}")
    if cfg.missing_policy not in ("reject", "forward_fill"):
        raise ConfigError(f"unknown missing_policy {cfg.missing_policy!r}")
    if cfg.solver not in ("anneal", "exhaustive"):
        raise ConfigError(f"solver must be 'anneal' or 'exhaustive', got {cfg.solver!r}")
    if not cfg.data.is_absolute():
        cfg.data = base / cfg.data
    if not cfg.out_dir.is_absolute():
        cfg.out_dir = base / cfg.out_dir
    return cfg
