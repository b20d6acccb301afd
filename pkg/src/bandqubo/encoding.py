"""Mapping between banded fractional weights and fixed-width bit vectors.

Each asset's weight is written as ``w = w_min + units / K`` with
``units`` an integer in ``{0, ..., D}``, ``D = K * (w_max - w_min)``.
The units are carried by a standard binary expansion plus one residual
bit of value ``M``:

    units = sum_q 2^q * x_q + M * x_extra,
    n_q   = max { n : 2^n - 1 <= D },   M = D - (2^n_q - 1).

Choosing the largest depth whose all-ones value still fits makes the
all-ones pattern decode to exactly ``w_max`` and every pattern land
inside ``[w_min, w_max]``, so band constraints hold by construction and
never need a penalty term. When ``M`` is zero the residual bit is
omitted. Every integer in ``{0, ..., D}`` is reachable (surjective onto
the grid), at the price of some interior values having more than one
pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    EncodingError,
    FeasibilityError,
    ValidationError,
)

# K * band edges must be integers to within this in integral mode.
_INTEGRALITY_TOL = 1e-9
_BAND_TOL = 1e-12


@dataclass(frozen=True)
class BandSpec:
    """Per-asset investment bands: fractions ``0 <= w_min <= w_max <= 1``.

    Budget feasibility (``sum w_min <= 1 <= sum w_max``) is deliberately
    not enforced at construction so that diagnostics can inspect an
    infeasible configuration; operations that need a fully invested
    portfolio check it via :meth:`check_budget_feasible`.
    """

    assets: tuple[str, ...]
    w_min: np.ndarray
    w_max: np.ndarray
    sectors: tuple[str, ...] | None = None

    def __post_init__(self):
        w_min = np.asarray(self.w_min, dtype=float)
        w_max = np.asarray(self.w_max, dtype=float)
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "w_min", w_min)
        object.__setattr__(self, "w_max", w_max)
        if self.sectors is not None:
            object.__setattr__(self, "sectors", tuple(self.sectors))
        n = len(self.assets)
        if w_min.shape != (n,) or w_max.shape != (n,):
            raise ValidationError("band vectors do not match asset count")
        if self.sectors is not None and len(self.sectors) != n:
            raise ValidationError("sector tags do not match asset count")
        for i in range(n):
            lo, hi = float(w_min[i]), float(w_max[i])
            if not (0.0 - _BAND_TOL <= lo <= hi <= 1.0 + _BAND_TOL):
                raise ValidationError(
                    f"band for {self.assets[i]} must satisfy "
                    f"0 <= w_min <= w_max <= 1, got ({lo!r}, {hi!r})"
                )
        w_min.setflags(write=False)
        w_max.setflags(write=False)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def budget_feasible(self) -> bool:
        return (
            float(self.w_min.sum()) <= 1.0 + _BAND_TOL
            and float(self.w_max.sum()) >= 1.0 - _BAND_TOL
        )

    def check_budget_feasible(self):
        """Raise FeasibilityError unless some in-band portfolio sums to 1."""
        lo, hi = float(self.w_min.sum()), float(self.w_max.sum())
        if lo > 1.0 + _BAND_TOL:
            raise FeasibilityError(
                f"band minimums sum to {lo:.6g} > 1; no feasible budget"
            )
        if hi < 1.0 - _BAND_TOL:
            raise FeasibilityError(
                f"band maximums sum to {hi:.6g} < 1; no feasible budget"
            )

    def sector_of(self, i: int) -> str:
        return self.sectors[i] if self.sectors is not None else ""

    def to_rows(self) -> list[tuple[str, float, float, str]]:
        """Serialize as ``asset, w_min, w_max, sector`` rows."""
        return [
            (a, float(self.w_min[i]), float(self.w_max[i]), self.sector_of(i))
            for i, a in enumerate(self.assets)
        ]


@dataclass(frozen=True)
class EncodingSpec:
    """Bit layout for every asset: depth, residual coefficient, offsets.

    Bit ranges of distinct assets are disjoint and contiguous; asset n
    occupies ``bit_offsets[n] : bit_offsets[n] + bits_for(n)`` in the
    global vector, lowest power first, residual bit last.
    """

    k_units: int
    n_bits: tuple[int, ...]
    m_coeff: tuple[int, ...]
    bit_offsets: tuple[int, ...]
    total_bits: int

    def __post_init__(self):
        if self.k_units < 1:
            raise ValidationError("K must be a positive integer")
        if any(m < 0 for m in self.m_coeff):
            raise ValidationError("residual coefficient M must be >= 0")
        expect = 0
        for n in range(len(self.n_bits)):
            if self.bit_offsets[n] != expect:
                raise ValidationError("bit ranges must be contiguous")
            expect += self.bits_for(n)
        if expect != self.total_bits:
            raise ValidationError(
                f"total_bits {self.total_bits} != laid-out bits {expect}"
            )

    @property
    def n_assets(self) -> int:
        return len(self.n_bits)

    def delta(self, n: int) -> int:
        """Band width of asset n in investment units."""
        return (1 << self.n_bits[n]) - 1 + self.m_coeff[n]

    def bits_for(self, n: int) -> int:
        return self.n_bits[n] + (1 if self.m_coeff[n] > 0 else 0)

    def bit_slice(self, n: int) -> slice:
        return slice(self.bit_offsets[n], self.bit_offsets[n] + self.bits_for(n))

    def unit_coeffs(self, n: int) -> np.ndarray:
        """Integer value of each of asset n's bits: 1, 2, ..., 2^(n_q-1), M."""
        coeffs = [1 << q for q in range(self.n_bits[n])]
        if self.m_coeff[n] > 0:
            coeffs.append(self.m_coeff[n])
        return np.array(coeffs, dtype=float)

    def unit_matrix(self) -> np.ndarray:
        """(n_assets, total_bits) matrix C with units = C @ bits."""
        mat = np.zeros((self.n_assets, self.total_bits))
        for n in range(self.n_assets):
            mat[n, self.bit_slice(n)] = self.unit_coeffs(n)
        return mat

    def bit_labels(self) -> tuple[tuple[int, int], ...]:
        """(asset index, bit index within asset) for every global bit."""
        labels = []
        for n in range(self.n_assets):
            labels.extend((n, q) for q in range(self.bits_for(n)))
        return tuple(labels)


def sector_to_asset_bands(
    sector_bands: dict[str, tuple[float, float]],
    membership: dict[str, str],
    overrides: dict[str, tuple[float, float]] | None = None,
) -> BandSpec:
    """Distribute sector bands equally among their member assets.

    A sector with ``s`` members and band ``(a, b)`` gives each member the
    band ``(a/s, b/s)``; explicit per-asset ``overrides`` win. Asset
    order follows ``membership`` insertion order.
    """
    overrides = overrides or {}
    members: dict[str, list[str]] = {}
    for asset, sector in membership.items():
        members.setdefault(sector, []).append(asset)

    for sector, (lo, _hi) in sector_bands.items():
        if sector not in members and lo > 0.0:
            raise FeasibilityError(
                f"sector {sector!r} requires minimum investment {lo!r} "
                f"but has no member assets"
            )
    for sector in members:
        if sector not in sector_bands:
            raise ConfigError(f"sector {sector!r} has members but no band")

    assets = list(membership)
    w_min = np.empty(len(assets))
    w_max = np.empty(len(assets))
    for i, asset in enumerate(assets):
        sector = membership[asset]
        count = len(members[sector])
        lo, hi = sector_bands[sector]
        w_min[i], w_max[i] = lo / count, hi / count
        if asset in overrides:
            w_min[i], w_max[i] = overrides[asset]
    return BandSpec(
        assets=tuple(assets),
        w_min=w_min,
        w_max=w_max,
        sectors=tuple(membership[a] for a in assets),
    )


def _units_for(value: float, k: int, what: str, asset: str, integral: bool) -> float:
    scaled = float(value * k)
    nearest = round(scaled)
    if abs(scaled - nearest) <= _INTEGRALITY_TOL * max(1.0, abs(scaled)):
        return float(nearest)
    if integral:
        raise EncodingError(
            f"K*{what} = {scaled!r} for {asset} is not an integer; "
            f"adjust bands or use continuous mode"
        )
    return scaled


def make_encoding(
    bands: BandSpec,
    k_units: int,
    forced_bits: int | None = None,
    integral: bool = True,
) -> EncodingSpec:
    """Choose bit depth and residual coefficient for every asset.

    In integral mode (default) ``K * w_min`` and ``K * w_max`` must be
    integers; in continuous mode the band width in units is rounded down
    instead, which keeps the band hard but may leave ``w_max`` slightly
    unreachable. ``forced_bits`` pins the binary depth for every asset;
    it is rejected whenever the resulting residual coefficient would be
    negative (the all-ones pattern would overshoot the band).
    """
    if k_units < 1:
        raise ValidationError("K must be a positive integer")
    n_bits: list[int] = []
    m_coeff: list[int] = []
    offsets: list[int] = []
    total = 0
    for i, asset in enumerate(bands.assets):
        lo_units = _units_for(bands.w_min[i], k_units, "w_min", asset, integral)
        hi_units = _units_for(bands.w_max[i], k_units, "w_max", asset, integral)
        delta = int(np.floor(hi_units - lo_units + _INTEGRALITY_TOL))
        if forced_bits is None:
            nq = (delta + 1).bit_length() - 1
        else:
            nq = int(forced_bits)
            if nq < 0:
                raise EncodingError("forced bit depth must be >= 0")
        m = delta - ((1 << nq) - 1)
        if m < 0:
            raise EncodingError(
                f"bit depth {nq} cannot fit band width {delta} units for "
                f"{asset}: residual coefficient M = {m} < 0"
            )
        n_bits.append(nq)
        m_coeff.append(m)
        offsets.append(total)
        total += nq + (1 if m > 0 else 0)
    return EncodingSpec(
        k_units=k_units,
        n_bits=tuple(n_bits),
        m_coeff=tuple(m_coeff),
        bit_offsets=tuple(offsets),
        total_bits=total,
    )


def _check_bits(bits, total_bits: int) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != total_bits:
        raise ValidationError(
            f"bit vector has length {bits.shape[-1]}, encoding expects {total_bits}"
        )
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValidationError("bit vector entries must be 0 or 1")
    return bits.astype(float)


def decode(bits, spec: EncodingSpec, bands: BandSpec) -> np.ndarray:
    """Weights ``w_min + (sum 2^q x_q + M x_extra) / K`` per asset."""
    bits = _check_bits(bits, spec.total_bits)
    if bits.ndim != 1:
        raise ValidationError("decode expects a single bit vector; see decode_batch")
    return bands.w_min + (spec.unit_matrix() @ bits) / spec.k_units


def decode_batch(bits_rows, spec: EncodingSpec, bands: BandSpec) -> np.ndarray:
    """Vectorized decode of a (samples, total_bits) array of bit vectors."""
    bits = _check_bits(bits_rows, spec.total_bits)
    if bits.ndim != 2:
        raise ValidationError("decode_batch expects a 2-D bit array")
    return bands.w_min[None, :] + (bits @ spec.unit_matrix().T) / spec.k_units


def encode_nearest(weights, spec: EncodingSpec, bands: BandSpec) -> np.ndarray:
    """Bit vector whose decode is nearest the given in-band weights.

    Greedy per asset: round the weight to the unit grid, then prefer the
    plain binary pattern and use the residual bit only when it strictly
    reduces the error (deterministic tie-break: residual bit off). For
    natural-depth encodings the result is exact to within 1/(2K).
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (bands.n_assets,):
        raise ValidationError("weight vector does not match asset count")
    out = np.zeros(spec.total_bits, dtype=np.int8)
    for n in range(bands.n_assets):
        w = float(weights[n])
        if not (bands.w_min[n] - _INTEGRALITY_TOL <= w <= bands.w_max[n] + _INTEGRALITY_TOL):
            raise ValidationError(
                f"weight {w!r} for {bands.assets[n]} is outside "
                f"[{float(bands.w_min[n])!r}, {float(bands.w_max[n])!r}]"
            )
        target = (w - bands.w_min[n]) * spec.k_units
        delta = spec.delta(n)
        units = min(max(int(round(target)), 0), delta)
        nq, m = spec.n_bits[n], spec.m_coeff[n]
        binary_cap = (1 << nq) - 1
        plain = min(units, binary_cap)
        if m > 0 and units >= m:
            with_extra = m + min(units - m, binary_cap)
            use_extra = abs(with_extra - target) < abs(plain - target)
        else:
            use_extra = False
        value = with_extra if use_extra else plain
        residue = value - (m if use_extra else 0)
        off = spec.bit_offsets[n]
        for q in range(nq):
            out[off + q] = (residue >> q) & 1
        if m > 0 and use_extra:
            out[off + nq] = 1
    return out
