"""Tests for acarmichael.construct."""

import math

import pytest

from acarmichael.ap import NonCoprimeShift
from acarmichael.arith import BudgetExceeded
from acarmichael.construct import (
    BlockSet,
    ConjectureBudgetExceeded,
    ConstructionError,
    ConstructionParams,
    InsufficientPrimes,
    PrimeSlice,
    SmoothPrimeSet,
    assemble,
    build_blocks,
    build_Q,
    explicit_blocks,
    find_best_slice,
    find_P,
    rank_slices,
    resolve_caps,
    run_pipeline,
)
from acarmichael.groups import kkprime_lambda_check
from acarmichael.korselt import check

SEVEN_BLOCKS = (3, 5, 7, 11, 13, 17, 19)
Q_20 = (31, 37, 41, 43, 53, 61, 67, 71, 73, 79, 89)


def strict_params(**overrides):
    values = dict(a=1, mode="strict", y=20, theta=1.5)
    values.update(overrides)
    return ConstructionParams(**values)


def assert_certified(result, a):
    """Every link of the divisibility chain behind n, checked from scratch."""
    modulus = result.L * result.k * result.kprime
    assert result.modulus == modulus
    assert check(result.n, a).verdict
    assert result.certificate.verify()
    assert (result.P - a) % modulus == 0
    assert result.n_prime % modulus == 1
    for p in result.chosen_primes:
        assert modulus % (p - a) == 0
        assert (result.n - a) % (p - a) == 0
    assert result.P not in result.chosen_primes
    assert kkprime_lambda_check(result.L, result.k, result.kprime)


class TestConstructionParams:
    @pytest.mark.parametrize(
        "overrides, message",
        [
            ({"a": 0}, "degenerate"),
            ({"y": 2}, "y must be"),
            ({"theta": 2.0}, "theta"),
            ({"A": 0}, "A must be"),
            ({"alpha": 0}, "alpha"),
            ({"mode": "fast"}, "Invalid mode"),
            ({"subset_strategy": "greedy"}, "Invalid subset_strategy"),
            ({"max_slices": 0}, "max_slices"),
            ({"blocks": (6, 9)}, "pairwise coprime"),
            ({"blocks": (1, 5)}, "blocks must be integers"),
            ({"k_cap": "ten"}, "k_cap must be an integer"),
            ({"kprime_cap": 2.5}, "kprime_cap must be an integer"),
            ({"a": 1.5}, "a must be an integer"),
            ({"a": True}, "a must be an integer"),
            ({"theta": "1.5"}, "theta must be a number"),
            ({"mode": ["relaxed"]}, "must be strings"),
            ({"blocks": [3, "5"]}, "list of integers"),
            ({"blocks": 15}, "list of integers"),
            ({"k_cap": 0}, "k_cap must be >= 1"),
            ({"threads": 0}, "threads must be >= 1"),
        ],
    )
    def test_invalid_values(self, overrides, message):
        values = dict(a=1, k_cap=10, kprime_cap=10)
        values.update(overrides)
        with pytest.raises(ValueError, match=message):
            ConstructionParams(**values)

    def test_relaxed_mode_needs_caps(self):
        with pytest.raises(ValueError, match="k_cap and kprime_cap"):
            ConstructionParams(a=1)

    def test_strict_mode_rejects_blocks(self):
        with pytest.raises(ValueError, match="relaxed mode"):
            ConstructionParams(a=1, mode="strict", blocks=(3, 5))

    def test_blocks_are_normalized(self):
        params = ConstructionParams(a=1, blocks=[3, 5], k_cap=10, kprime_cap=10)
        assert params.blocks == (3, 5)
        assert params.to_dict()["blocks"] == [3, 5]

    def test_strict_needs_no_caps(self):
        assert strict_params().strict


class TestBuildQ:
    def test_y20_theta15(self):
        qset = build_Q(strict_params())
        assert qset.Q == Q_20
        assert qset.omega == 11
        assert qset.L == math.prod(Q_20)
        assert qset.lo == pytest.approx(20**1.5 / math.log(20))

    def test_gcd_filter(self):
        assert build_Q(strict_params(a=31 * 89)).Q == Q_20[1:-1]

    def test_congruence_filter(self):
        # q = -1 mod 4 keeps 31, 43, 67, 71 and 79.
        assert build_Q(strict_params(alpha=4)).Q == (31, 43, 67, 71, 79)

    def test_empty_range(self):
        with pytest.raises(ConstructionError, match="parameters too small") as exc_info:
            build_Q(strict_params(y=3, theta=1.1))
        assert exc_info.value.stage == "build_Q"

    def test_filter_that_removes_everything_is_named(self):
        with pytest.raises(ConstructionError, match="mod 1000"):
            build_Q(strict_params(alpha=1000))


class TestBuildBlocks:
    @staticmethod
    def qset(primes, **overrides):
        params = strict_params(**overrides)
        return SmoothPrimeSet(params, tuple(primes), 0.0, 0.0)

    def test_six_primes(self):
        blockset = build_blocks(self.qset(Q_20[:6]), 1)
        assert blockset.blocks == (31 * 37, 41 * 43, 53 * 61)
        assert blockset.members == ((31, 37), (41, 43), (53, 61))
        assert blockset.leftover == ()

    def test_leftover_is_kept(self):
        blockset = build_blocks(self.qset(Q_20[:7]), 1)
        assert len(blockset.blocks) == 3
        assert blockset.leftover == (67,)

    def test_full_q(self):
        blockset = build_blocks(build_Q(strict_params()), 1)
        assert len(blockset.blocks) == 5
        assert blockset.leftover == (89,)
        assert math.gcd(*blockset.blocks) == 1

    def test_too_few_primes(self):
        with pytest.raises(ConstructionError, match="block size") as exc_info:
            build_blocks(self.qset(Q_20[:2], A=2), 2)
        assert exc_info.value.stage == "build_blocks"

    def test_small_block_is_rejected(self):
        with pytest.raises(ConstructionError, match="does not exceed"):
            build_blocks(self.qset((2, 3)), 1)

    def test_explicit_blocks(self):
        blockset = BlockSet.explicit((6, 35))
        assert blockset.members == ((6,), (35,))
        assert blockset.to_dict() == {"blocks": [6, 35], "members": [[6], [35]], "leftover": []}


class TestFindBestSlice:
    def test_two_blocks(self):
        params = ConstructionParams(a=1, blocks=(6, 35), k_cap=10, kprime_cap=10)
        best = find_best_slice(BlockSet.explicit(params.blocks), params)
        assert best.k == 1
        assert best.hits == ((6, 7), (210, 211))
        assert best.primes == [7, 211]

    def test_ranking(self):
        params = ConstructionParams(a=1, blocks=(6, 35), k_cap=10, kprime_cap=10)
        slices = rank_slices(BlockSet.explicit(params.blocks), params, 10)
        assert [(s.k, len(s)) for s in slices] == [(1, 2), (2, 1)]
        assert slices[1].hits == ((35, 71),)

    def test_single_block(self):
        params = ConstructionParams(a=1, blocks=(6,), k_cap=10, kprime_cap=10)
        assert find_best_slice(BlockSet.explicit((6,)), params).hits == ((6, 7),)

    def test_divisors_sharing_a_factor_with_a_are_skipped(self):
        params = ConstructionParams(a=7, blocks=(7, 4), k_cap=10, kprime_cap=10)
        best = find_best_slice(BlockSet.explicit(params.blocks), params)
        assert (best.k, best.hits) == (1, ((4, 11),))

    def test_slices_whose_k_shares_a_factor_with_a_are_skipped(self):
        # a = -3: d = 2 first hits 2*3 - 3 = 3 at k = 3, and P = -3 mod 10*3 is impossible.
        params = ConstructionParams(a=-3, blocks=(2, 5), k_cap=10, kprime_cap=10)
        slices = rank_slices(BlockSet.explicit(params.blocks), params, 10)
        assert [(s.k, s.hits) for s in slices] == [(1, ((5, 2), (10, 7)))]

    def test_only_unusable_slices(self):
        params = ConstructionParams(a=-3, blocks=(2,), k_cap=10, kprime_cap=10)
        with pytest.raises(ConstructionError) as exc_info:
            find_best_slice(BlockSet.explicit(params.blocks), params)
        assert exc_info.value.stage == "find_best_slice"

    def test_exhausted_cap(self):
        params = ConstructionParams(a=1, blocks=(6, 35), k_cap=10, kprime_cap=10)
        with pytest.raises(ConjectureBudgetExceeded, match="conjecture budget exceeded"):
            find_best_slice(BlockSet.explicit(params.blocks), params, k_cap=1)

    def test_threads_do_not_change_ranking(self, relaxed_params):
        single = relaxed_params(1)
        threaded = relaxed_params(1, threads=4)
        blockset = BlockSet.explicit(SEVEN_BLOCKS)
        assert rank_slices(blockset, single, 64) == rank_slices(blockset, threaded, 64)

    def test_slices_hold_distinct_primes_of_the_right_shape(self, relaxed_params):
        params = relaxed_params(-1)
        for slice_ in rank_slices(BlockSet.explicit(SEVEN_BLOCKS), params, 64):
            assert len(set(slice_.primes)) == len(slice_)
            assert all(p == d * slice_.k - 1 for d, p in slice_.hits)


class TestFindP:
    @pytest.mark.parametrize(
        "L, k, a, expected",
        [(10, 1, 1, (11, 1)), (10, 1, 3, (13, 1)), (4, 2, 1, (17, 2)), (8, 1, -1, (7, 1))],
    )
    def test_examples(self, L, k, a, expected):
        assert find_P(L, k, a, 10) == expected

    def test_exclusion(self):
        assert find_P(10, 1, 1, 10, exclude=[11]) == (31, 3)

    def test_start(self):
        assert find_P(10, 1, 1, 10, start=2) == (31, 3)

    def test_cap_is_inclusive(self):
        assert find_P(8, 1, 1, 2) == (17, 2)
        with pytest.raises(ConjectureBudgetExceeded):
            find_P(8, 1, 1, 1)

    def test_strict_bound(self):
        with pytest.raises(ConjectureBudgetExceeded):
            find_P(8, 1, 1, 10, strict_bound=1.5)

    def test_non_coprime_shift(self):
        with pytest.raises(NonCoprimeShift):
            find_P(10, 1, 5, 10)


class TestAssemble:
    # 63973 = 7 * 13 * 19 * 37, with 7 * 13 * 19 = 1729 = 1 mod 36.
    SLICE = PrimeSlice(1, ((6, 7), (12, 13), (18, 19)))

    @pytest.fixture
    def params(self):
        return ConstructionParams(a=1, k_cap=10, kprime_cap=10)

    def test_hand_built_carmichael(self, params):
        result = assemble(self.SLICE, 37, 1, 36, params)
        assert result.n == 63973
        assert result.chosen_primes == [7, 13, 19]
        assert_certified(result, 1)

    def test_primes_dividing_the_modulus_are_dropped(self, params):
        slice_ = PrimeSlice(1, ((2, 3),) + self.SLICE.hits)
        assert assemble(slice_, 37, 1, 36, params).n == 63973

    def test_insufficient_primes(self, params):
        slice_ = PrimeSlice(1, self.SLICE.hits[:2])
        with pytest.raises(InsufficientPrimes) as exc_info:
            assemble(slice_, 37, 1, 36, params)
        assert exc_info.value.stage == "assemble"
        assert exc_info.value.slice_size == 2
        assert exc_info.value.modulus == 36

    def test_P_among_slice_primes(self, params):
        with pytest.raises(ConstructionError, match="slice primes"):
            assemble(PrimeSlice(1, ((6, 7),)), 7, 1, 6, params)

    def test_empty_slice(self, params):
        with pytest.raises(ConstructionError, match="empty slice"):
            assemble(PrimeSlice(1, ()), 37, 1, 36, params)

    @pytest.mark.parametrize("strategy", ["exhaustive", "meet_in_middle", "randomized"])
    def test_every_strategy_finds_it(self, strategy):
        params = ConstructionParams(a=1, k_cap=10, kprime_cap=10, subset_strategy=strategy)
        assert assemble(self.SLICE, 37, 1, 36, params).n == 63973


class TestResolveCaps:
    def test_strict(self):
        assert resolve_caps(strict_params(), 1000) == (7, 7)
        assert resolve_caps(strict_params(A=2), 1000) == (48, 48)

    def test_relaxed(self, relaxed_params):
        assert resolve_caps(relaxed_params(1), 10**9) == (64, 500)


class TestRunPipeline:
    @pytest.mark.parametrize("a", [1, -1])
    def test_relaxed_end_to_end(self, relaxed_params, a):
        result = run_pipeline(relaxed_params(a))
        assert result.L == math.prod(SEVEN_BLOCKS)
        assert result.blockset.blocks == SEVEN_BLOCKS
        assert result.Q is None
        assert_certified(result, a)
        assert set(result.chosen_primes) <= set(result.slice.primes)

    def test_timings_cover_the_stages(self, relaxed_params):
        result = run_pipeline(relaxed_params(1))
        assert {"find_best_slice", "find_P", "assemble"} <= set(result.timings)
        assert "timings" not in result.to_dict()
        assert set(result.to_dict(include_timings=True)["timings"]) == set(result.timings)

    def test_result_dict(self, relaxed_params):
        data = run_pipeline(relaxed_params(-1)).to_dict()
        assert data["params"]["a"] == -1
        assert data["certificate"]["n"] == data["n"]
        assert data["n"] == data["P"] * math.prod(data["chosen"])

    def test_same_seed_same_result(self, relaxed_params):
        first = run_pipeline(relaxed_params(1, seed=3))
        assert run_pipeline(relaxed_params(1, seed=3)) == first
        assert run_pipeline(relaxed_params(1, seed=3, threads=4)).n == first.n

    def test_stage_is_attached_to_budget_errors(self, relaxed_params):
        with pytest.raises(ConjectureBudgetExceeded) as exc_info:
            run_pipeline(relaxed_params(1, k_cap=1))
        assert exc_info.value.stage == "find_best_slice"

    def test_blocks_sharing_a_factor_with_a_are_dropped(self, relaxed_params):
        assert explicit_blocks(relaxed_params(3)).blocks == (5, 7, 11, 13, 17, 19)
        assert explicit_blocks(relaxed_params(-35)).blocks == (3, 11, 13, 17, 19)
        assert explicit_blocks(relaxed_params(1)).blocks == SEVEN_BLOCKS

    def test_no_usable_block(self, relaxed_params):
        with pytest.raises(ConstructionError) as exc_info:
            run_pipeline(relaxed_params(15, blocks=(3, 5)))
        assert exc_info.value.stage == "build_blocks"

    @pytest.mark.parametrize("a", [3, -3, 5, -5, 7])
    def test_shift_sharing_a_factor_with_a_block(self, relaxed_params, a):
        try:
            result = run_pipeline(relaxed_params(a))
        except (ConstructionError, BudgetExceeded) as exc:
            assert exc.stage in {"find_best_slice", "find_P", "assemble"}
        else:
            assert math.gcd(result.L, a) == 1
            assert_certified(result, a)

    def test_strict_tiny_parameters_fail_in_build_q(self):
        with pytest.raises(ConstructionError) as exc_info:
            run_pipeline(strict_params(y=3, theta=1.1))
        assert exc_info.value.stage == "build_Q"

    def test_strict_mode_never_emits_an_uncertified_n(self):
        try:
            result = run_pipeline(strict_params())
        except (ConstructionError, BudgetExceeded) as exc:
            assert exc.stage in {"find_best_slice", "find_P", "assemble"}
        else:
            assert result.Q == Q_20
            assert_certified(result, 1)
