"""Low-energy search over QUBO bit vectors.

Two routes: an exhaustive enumerator for small instances (the oracle)
and a multi-replica simulated annealer for everything else. The annealer
is fully deterministic given its seed: replica ``r`` draws from
``numpy.random.default_rng(SeedSequence((seed, r)))``, replicas never
share state, and the merge picks the lowest energy with ties broken by
replica id, so the result is independent of execution order.

Moves are single-bit-flip Metropolis with the O(1) incremental energy

    delta_i = q_ii (1 - 2 x_i) + 2 (1 - 2 x_i) * sum_{j != i} q_ij x_j

(for symmetric Q), maintained through a local-field vector so a sweep
costs O(B) per accepted flip and O(1) per rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import SolverCapError, ValidationError
from .qubo import Qubo

_EXHAUSTIVE_CHUNK = 1 << 16


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric temperature ladder plus restart and seeding controls."""

    t_start: float
    t_end: float
    sweeps: int
    replicas: int
    seed: int = 0

    def __post_init__(self):
        if not (self.t_start >= self.t_end > 0.0):
            raise ValidationError(
                f"need t_start >= t_end > 0, got ({self.t_start!r}, {self.t_end!r})"
            )
        if self.sweeps < 1:
            raise ValidationError("sweeps must be >= 1")
        if self.replicas < 1:
            raise ValidationError("replicas must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Solution:
    """Best state found, with provenance.

    ``sweep_found`` is 1-based; 0 means the initial random state was
    never improved. Exhaustive solutions report replica 0, sweep 0.
    """

    bits: tuple[int, ...]
    energy: float
    replica_id: int = 0
    sweep_found: int = 0

    def bits_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_record(self) -> str:
        return (
            f"energy={self.energy!r} bits={self.bits_string()} "
            f"replica={self.replica_id} sweep={self.sweep_found}"
        )


def default_schedule(qubo: Qubo, seed: int = 0) -> AnnealSchedule:
    """Problem-scaled schedule: hot enough to melt, cold enough to freeze.

    t_start = max|q_ij| * B, t_end = 1e-3 * median nonzero |q_ij|,
    sweeps = 200 * B, replicas = max(8, B // 4).
    """
    b = max(qubo.n_bits, 1)
    mags = np.abs(qubo.q_matrix)
    peak = float(mags.max()) if mags.size else 0.0
    nonzero = mags[mags > 0.0]
    if peak > 0.0 and nonzero.size:
        t_start = peak * b
        t_end = min(1e-3 * float(np.median(nonzero)), t_start)
    else:
        t_start, t_end = 1.0, 1e-3
    return AnnealSchedule(
        t_start=t_start,
        t_end=t_end,
        sweeps=200 * b,
        replicas=max(8, b // 4),
        seed=seed,
    )


def incremental_delta(qubo: Qubo, bits, flip_index: int) -> float:
    """Energy change from flipping one bit of the given state."""
    x = np.asarray(bits, dtype=float)
    if x.shape != (qubo.n_bits,):
        raise ValidationError("state length does not match QUBO")
    if not 0 <= flip_index < qubo.n_bits:
        raise IndexError(f"flip index {flip_index} out of range 0..{qubo.n_bits - 1}")
    q = qubo.q_matrix
    sign = 1.0 - 2.0 * x[flip_index]
    cross = float(q[flip_index] @ x) - q[flip_index, flip_index] * x[flip_index]
    return float(q[flip_index, flip_index] * sign + 2.0 * sign * cross)


def exhaustive_solve(qubo: Qubo, bit_cap: int = 24) -> Solution:
    """Global minimum by enumeration; ties go to the lexicographically
    smallest bit vector. Refuses instances above ``bit_cap`` bits."""
    b = qubo.n_bits
    if b > bit_cap:
        raise SolverCapError(
            f"{b} bits exceeds exhaustive cap {bit_cap}; raise bit_cap explicitly "
            f"if you really want 2^{b} evaluations"
        )
    if b == 0:
        return Solution(bits=(), energy=qubo.offset)
    # Bit i is read from position (b-1-i) of the counter so that ascending
    # counter order is ascending lexicographic order of (x_0, ..., x_{B-1}).
    shifts = np.arange(b - 1, -1, -1, dtype=np.int64)
    best_energy = math.inf
    best_state = 0
    for lo in range(0, 1 << b, _EXHAUSTIVE_CHUNK):
        hi = min(lo + _EXHAUSTIVE_CHUNK, 1 << b)
        counters = np.arange(lo, hi, dtype=np.int64)
        states = ((counters[:, None] >> shifts[None, :]) & 1).astype(float)
        energies = np.einsum("ij,jk,ik->i", states, qubo.q_matrix, states)
        idx = int(np.argmin(energies))  # first occurrence: lowest counter wins
        if energies[idx] < best_energy:
            best_energy = float(energies[idx])
            best_state = lo + idx
    bits = tuple(int((best_state >> int(s)) & 1) for s in shifts)
    return Solution(bits=bits, energy=best_energy + qubo.offset)


@numba.njit(cache=True)
def _anneal_replica(q, temps, x, uniforms):  # pragma: no cover - jitted
    b = x.shape[0]
    field = np.zeros(b)
    for i in range(b):
        acc = 0.0
        for j in range(b):
            acc += q[i, j] * x[j]
        field[i] = acc
    energy = 0.0
    for i in range(b):
        energy += x[i] * field[i]

    best = np.empty(b, dtype=np.int8)
    for i in range(b):
        best[i] = x[i]
    best_energy = energy
    best_sweep = 0

    for s in range(temps.shape[0]):
        temp = temps[s]
        for i in range(b):
            sign = 1.0 - 2.0 * x[i]
            delta = sign * (q[i, i] + 2.0 * (field[i] - q[i, i] * x[i]))
            accept = delta <= 0.0
            if not accept:
                accept = uniforms[s, i] < math.exp(-delta / temp)
            if accept:
                x[i] = 1 - x[i]
                energy += delta
                for j in range(b):
                    field[j] += sign * q[j, i]
                if energy < best_energy:
                    best_energy = energy
                    best_sweep = s + 1
                    for j in range(b):
                        best[j] = x[j]
    return best, best_energy, best_sweep


def anneal(qubo: Qubo, schedule: AnnealSchedule) -> Solution:
    """Best state visited across all replicas of a Metropolis anneal."""
    b = qubo.n_bits
    if b == 0:
        return Solution(bits=(), energy=qubo.offset)
    temps = np.geomspace(schedule.t_start, schedule.t_end, schedule.sweeps)
    q = np.ascontiguousarray(qubo.q_matrix)
    best: Solution | None = None
    for replica in range(schedule.replicas):
        rng = np.random.default_rng(np.random.SeedSequence((schedule.seed, replica)))
        start = rng.integers(0, 2, size=b).astype(np.int8)
        uniforms = rng.random((schedule.sweeps, b))
        bits, _, sweep = _anneal_replica(q, temps, start, uniforms)
        # Recompute from the bits; the incremental energy drifts by ulps
        # over long runs and the stored energy must match re-evaluation.
        candidate = Solution(
            bits=tuple(int(v) for v in bits),
            energy=qubo.energy(bits),
            replica_id=replica,
            sweep_found=int(sweep),
        )
        if best is None or candidate.energy < best.energy:
            best = candidate
    return best
