import dataclasses
import itertools

import numpy as np
import pytest

from bandqubo import (
    AnnealSchedule,
    Qubo,
    SolverCapError,
    ValidationError,
    anneal,
    default_schedule,
    exhaustive_solve,
    incremental_delta,
)
from helpers import random_qubo


def _qubo(matrix, offset=0.0):
    matrix = np.asarray(matrix, dtype=float)
    labels = tuple((0, i) for i in range(matrix.shape[0]))
    return Qubo(q_matrix=matrix, offset=offset, bit_labels=labels)


def _enumerate_oracle(qubo):
    """Second, independent enumeration: reversed order, python loops."""
    best_energy = None
    argmins = []
    for bits in itertools.product((0, 1), repeat=qubo.n_bits):
        x = np.array(bits, dtype=float)
        energy = float(x @ qubo.q_matrix @ x) + qubo.offset
        if best_energy is None or energy < best_energy - 1e-15:
            best_energy = energy
            argmins = [bits]
        elif abs(energy - best_energy) <= 1e-15:
            argmins.append(bits)
    return best_energy, argmins


class TestExhaustive:
    def test_negative_diagonal_fills_all_ones(self):
        sol = exhaustive_solve(_qubo(-np.eye(3)))
        assert sol.bits == (1, 1, 1)
        assert sol.energy == pytest.approx(-3.0)

    def test_zero_matrix_tie_breaks_to_all_zeros(self):
        sol = exhaustive_solve(_qubo(np.zeros((4, 4)), offset=2.5))
        assert sol.bits == (0, 0, 0, 0)
        assert sol.energy == 2.5

    def test_matches_independent_enumeration(self):
        rng = np.random.default_rng(50)
        for _ in range(5):
            q = random_qubo(rng, 12)
            sol = exhaustive_solve(q)
            best, argmins = _enumerate_oracle(q)
            assert sol.energy == pytest.approx(best, abs=1e-12)
            assert sol.bits == min(argmins)

    def test_refuses_above_cap(self):
        q = random_qubo(np.random.default_rng(0), 10)
        with pytest.raises(SolverCapError, match="exceeds exhaustive cap"):
            exhaustive_solve(q, bit_cap=8)

    def test_empty_problem(self):
        sol = exhaustive_solve(_qubo(np.zeros((0, 0)), offset=1.5))
        assert sol.bits == ()
        assert sol.energy == 1.5


class TestIncrementalDelta:
    def test_flip_and_flip_back_negate(self):
        rng = np.random.default_rng(51)
        q = random_qubo(rng, 8)
        bits = rng.integers(0, 2, size=8)
        for i in range(8):
            fwd = incremental_delta(q, bits, i)
            flipped = bits.copy()
            flipped[i] ^= 1
            back = incremental_delta(q, flipped, i)
            assert fwd == pytest.approx(-back, abs=1e-12)

    def test_zero_matrix_zero_delta(self):
        q = _qubo(np.zeros((5, 5)))
        assert incremental_delta(q, np.ones(5), 2) == 0.0

    def test_matches_full_recomputation_everywhere(self):
        rng = np.random.default_rng(52)
        q = random_qubo(rng, 8)
        for state in itertools.product((0, 1), repeat=8):
            x = np.array(state)
            base = q.energy(x)
            for i in range(8):
                flipped = x.copy()
                flipped[i] ^= 1
                exact = q.energy(flipped) - base
                assert incremental_delta(q, x, i) == pytest.approx(exact, abs=1e-12)

    def test_index_out_of_range(self):
        q = _qubo(np.zeros((3, 3)))
        with pytest.raises(IndexError):
            incremental_delta(q, np.zeros(3), 3)


class TestSchedule:
    def test_validation(self):
        with pytest.raises(ValidationError):
            AnnealSchedule(t_start=0.1, t_end=0.2, sweeps=10, replicas=1)
        with pytest.raises(ValidationError):
            AnnealSchedule(t_start=1.0, t_end=0.0, sweeps=10, replicas=1)
        with pytest.raises(ValidationError):
            AnnealSchedule(t_start=1.0, t_end=0.1, sweeps=0, replicas=1)
        with pytest.raises(ValidationError):
            AnnealSchedule(t_start=1.0, t_end=0.1, sweeps=10, replicas=0)
        with pytest.raises(ValidationError):
            AnnealSchedule(t_start=1.0, t_end=0.1, sweeps=10, replicas=1, seed=-1)

    def test_default_scales_with_problem(self):
        rng = np.random.default_rng(53)
        q = random_qubo(rng, 10, scale=2.0)
        sched = default_schedule(q, seed=9)
        assert sched.t_start == pytest.approx(np.abs(q.q_matrix).max() * 10)
        assert sched.t_end <= sched.t_start
        assert sched.sweeps == 2000
        assert sched.replicas == 8
        assert sched.seed == 9

    def test_default_for_zero_matrix(self):
        sched = default_schedule(_qubo(np.zeros((4, 4))))
        assert sched.t_start >= sched.t_end > 0


class TestAnneal:
    def test_same_seed_same_solution(self):
        rng = np.random.default_rng(54)
        q = random_qubo(rng, 14)
        sched = default_schedule(q, seed=123)
        a = anneal(q, sched)
        b = anneal(q, sched)
        assert a.bits == b.bits
        assert a.energy == b.energy
        assert a.replica_id == b.replica_id
        assert a.sweep_found == b.sweep_found

    def test_finds_optimum_on_most_seeds(self):
        # 12-bit instance, 64 replicas x 2000 sweeps: the optimum must be
        # hit on at least 90 of 100 seeds.
        rng = np.random.default_rng(55)
        q = random_qubo(rng, 12)
        target = exhaustive_solve(q).energy
        base = default_schedule(q)
        hits = 0
        for seed in range(100):
            sched = dataclasses.replace(base, sweeps=2000, replicas=64, seed=seed)
            sol = anneal(q, sched)
            if abs(sol.energy - target) <= 1e-9 * (1 + abs(target)):
                hits += 1
        assert hits >= 90

    def test_energy_matches_bits(self):
        rng = np.random.default_rng(56)
        q = random_qubo(rng, 16)
        sol = anneal(q, default_schedule(q, seed=3))
        assert sol.energy == pytest.approx(q.energy(np.array(sol.bits)), abs=1e-9)

    def test_near_zero_temperature_is_greedy_descent(self):
        # At vanishing temperature no uphill move is ever taken, so after
        # enough sweeps the returned state is a strict local minimum.
        rng = np.random.default_rng(57)
        q = random_qubo(rng, 10)
        sched = AnnealSchedule(
            t_start=1e-12, t_end=1e-12, sweeps=50, replicas=4, seed=11
        )
        sol = anneal(q, sched)
        bits = np.array(sol.bits)
        for i in range(q.n_bits):
            assert incremental_delta(q, bits, i) >= -1e-12

    def test_merge_ties_prefer_lowest_replica(self):
        q = _qubo(np.zeros((6, 6)))
        sol = anneal(q, AnnealSchedule(1.0, 0.5, sweeps=5, replicas=7, seed=1))
        assert sol.replica_id == 0

    def test_empty_problem(self):
        sol = anneal(_qubo(np.zeros((0, 0)), offset=-2.0),
                     AnnealSchedule(1.0, 0.5, sweeps=5, replicas=2))
        assert sol.bits == ()
        assert sol.energy == -2.0

    def test_record_format(self):
        rng = np.random.default_rng(58)
        q = random_qubo(rng, 5)
        sol = anneal(q, default_schedule(q, seed=2))
        record = sol.to_record()
        assert record.startswith("energy=")
        assert f"bits={sol.bits_string()}" in record
        assert len(sol.bits_string()) == 5
