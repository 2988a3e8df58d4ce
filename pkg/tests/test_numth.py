import math
import random
from fractions import Fraction

import pytest

from collatzcert.numth import (
    MAX_CODEWORD_LEN,
    Residue,
    check_codeword,
    codeword_display,
    codeword_from_display,
    codeword_of_int,
    codeword_to_residue,
    codeword_value,
    inverse_t,
    inverse_t_star_residue,
    stopping_profile,
    t_map,
    trajectory,
)


class TestTMap:
    def test_odd_step(self):
        assert t_map(3) == 5

    def test_even_step(self):
        assert t_map(2) == 1

    @pytest.mark.parametrize("k", range(1, 11))
    def test_powers_of_two_halve(self, k):
        assert t_map(2**k) == 2 ** (k - 1)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            t_map(0)


class TestTrajectory:
    def test_three(self):
        r = trajectory(3)
        assert r.steps == 5
        assert r.parity == "11000"
        assert r.ones_ratio == Fraction(2, 5)
        assert abs(r.log_ratio - 4.5512) < 1e-4

    def test_power_of_two(self):
        r = trajectory(2**10)
        assert r.steps == 10
        assert r.parity == "0" * 10
        assert abs(r.log_ratio - 1 / math.log(2)) < 1e-12

    def test_forty_one(self):
        # forward-iteration oracle values; the odd fraction clears 55/100
        r = trajectory(41)
        assert r.steps == 69
        assert r.ones_ratio == Fraction(40, 69)
        assert r.ones_ratio > Fraction(55, 100)
        assert abs(r.log_ratio - 69 / math.log(41)) < 1e-12

    def test_one_takes_zero_steps(self):
        r = trajectory(1)
        assert r.steps == 0
        assert r.parity == ""
        assert r.ones_ratio is None
        assert r.log_ratio is None

    def test_cap_exhaustion_is_flagged_not_raised(self):
        r = trajectory(27, cap=5)
        assert r.steps is None
        assert r.ones_ratio is None
        assert r.log_ratio is None
        assert not r.converged

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            trajectory(0)
        with pytest.raises(ValueError):
            trajectory(5, cap=0)


class TestInverse:
    def test_class_two_has_two_preimages(self):
        assert inverse_t(2) == {4, 1}

    def test_class_one_has_one_preimage(self):
        assert inverse_t(4) == {8}

    def test_eight(self):
        assert inverse_t(8) == {16, 5}

    def test_round_trip(self):
        for n in range(1, 2000):
            for m in inverse_t(n):
                assert t_map(m) == n


class TestPrunedInverse:
    def test_non_branching_class(self):
        children = inverse_t_star_residue(Residue(5, 2))
        assert children == [(0, Residue(1, 2))]

    def test_branching_class_two(self):
        children = inverse_t_star_residue(Residue(2, 2))
        assert children == [(0, Residue(4, 2)), (1, Residue(1, 1))]

    def test_branching_class_eight_mod_27(self):
        children = inverse_t_star_residue(Residue(8, 3))
        assert children == [(0, Residue(16, 3)), (1, Residue(5, 2))]

    def test_too_coarse_to_branch(self):
        with pytest.raises(ValueError, match="too coarse"):
            inverse_t_star_residue(Residue(2, 1))

    def test_rejects_class_divisible_by_three(self):
        with pytest.raises(ValueError):
            inverse_t_star_residue(Residue(3, 2))

    def test_forward_map_agrees_on_random_lifts(self):
        # a lift of the child class with the edge label's parity must map
        # into the parent class
        rng = random.Random(7)
        for _ in range(1000):
            m = rng.randint(2, 8)
            value = rng.randrange(3**m)
            if value % 3 == 0:
                continue
            parent = Residue(value, m)
            for bit, child in inverse_t_star_residue(parent):
                step = 3**child.exponent
                lift = child.value + rng.randrange(1, 10**6) * step
                if lift % 2 != bit:
                    lift += step            # 3^m is odd, so this flips parity
                assert t_map(lift) % 3**m == value


class TestCodewords:
    def test_residue_and_display(self):
        assert codeword_to_residue((1, 2)) == Residue(7, 2)
        assert codeword_display((1, 2)) == "21"
        assert codeword_to_residue((2, 1)) == Residue(5, 2)
        assert codeword_display((2, 1)) == "12"
        assert codeword_to_residue((1, 2, 2, 2, 0)) == Residue(79, 5)
        assert codeword_display((1, 2, 2, 2, 0)) == "02221"

    def test_display_round_trip(self):
        for disp in ("12", "01", "02221", "102221"):
            assert codeword_display(codeword_from_display(disp)) == disp

    def test_of_int_matches_value(self):
        rng = random.Random(3)
        for _ in range(200):
            n = rng.randrange(1, 3**12)
            c = codeword_of_int(n, 12)
            assert codeword_value(c) == n

    def test_rejects_bad_digits(self):
        with pytest.raises(ValueError):
            check_codeword((1, 3))
        with pytest.raises(ValueError):
            check_codeword((0, 1))          # low digit 0 only as the lone (0,)
        with pytest.raises(ValueError):
            check_codeword(())

    def test_reserved_word_allowed(self):
        assert check_codeword((0,)) == (0,)

    def test_length_cap_enforced(self):
        with pytest.raises(ValueError):
            check_codeword((1,) * (MAX_CODEWORD_LEN + 1))


class TestFamilies:
    @pytest.mark.parametrize("k", range(1, 31))
    def test_all_ones_reaches_power_of_three(self, k):
        n = 2**k - 1
        for _ in range(k):
            n = t_map(n)
        assert n == 3**k - 1

    def test_stopping_profile_matches_trajectory(self):
        steps, ones = stopping_profile(500)
        for n in range(2, 501):
            r = trajectory(n)
            assert steps[n] == r.steps
            assert ones[n] == r.parity.count("1")

    def test_log_bound_small_slice(self):
        # ratio-to-stopping-time bound, checked exactly on a small range
        ln2, ln3 = math.log(2), math.log(3)
        steps, ones = stopping_profile(2000)
        for n in range(2, 2001):
            rho = ones[n] / steps[n]
            if rho >= ln2 / ln3:
                continue
            gamma = steps[n] / math.log(n)
            assert gamma >= 1 / (ln2 - rho * ln3) - 1e-9
