import math

import numpy as np
import pytest

from coalattn.games import (
    Coalition,
    CountingGame,
    EmbeddingGame,
    GibbsTarget,
    TabularGame,
    characteristic_value,
    coalition_energy,
    gibbs_unnormalized_weight,
    log_gibbs_weight,
    marginal_contribution,
    monotonicity_violations,
    pairwise_delta,
    tabulate,
)

from conftest import WORKED_TABLE, additive_table_game, random_table_game


class TestCoalition:
    def test_members_roundtrip(self):
        c = Coalition.from_members([0, 2], 3)
        assert c.mask == 0b101
        assert c.members() == (0, 2)
        assert len(c) == 2
        assert 0 in c and 2 in c and 1 not in c
        assert list(c) == [0, 2]

    def test_with_token(self):
        c = Coalition.empty(3).with_token(1)
        assert c.mask == 0b010

    def test_out_of_range_bits_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            Coalition(0b1000, 3)

    def test_member_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            Coalition.from_members([3], 3)

    def test_token_count_cap(self):
        with pytest.raises(ValueError):
            Coalition(0, 65)


class TestCharacteristicValue:
    def test_worked_pair(self, worked_game):
        assert characteristic_value(worked_game, Coalition.from_members([0, 1], 3)) == 1.2

    def test_empty_is_zero(self, worked_game):
        assert characteristic_value(worked_game, Coalition.empty(3)) == 0.0

    def test_embedding_single_token_is_norm(self):
        game = EmbeddingGame([[3.0, 4.0]], np.eye(2), nonlinearity="identity")
        assert characteristic_value(game, Coalition.full(1)) == pytest.approx(5.0, abs=1e-12)

    def test_token_count_mismatch_rejected(self, worked_game):
        with pytest.raises(ValueError, match="tokens"):
            characteristic_value(worked_game, Coalition.empty(4))

    def test_empty_is_zero_for_random_games(self):
        rng = np.random.default_rng(5)
        for k in range(20):
            game = random_table_game(rng, int(rng.integers(1, 7)))
            assert game.value_by_mask(0) == 0.0
        emb = EmbeddingGame(rng.normal(size=(4, 3)), rng.normal(size=(3, 3)))
        assert emb.value_by_mask(0) == 0.0


class TestCoalitionEnergy:
    def test_single_token(self, worked_game):
        assert coalition_energy(worked_game, Coalition.from_members([1], 3)) == -0.5

    def test_empty(self, worked_game):
        assert coalition_energy(worked_game, Coalition.empty(3)) == 0.0

    def test_grand_coalition(self, worked_game):
        assert coalition_energy(worked_game, Coalition.full(3)) == -1.8


class TestGibbsWeight:
    def test_half(self, worked_game):
        c = Coalition.from_members([1], 3)
        w = gibbs_unnormalized_weight(worked_game, c, GibbsTarget(1.0))
        assert w == pytest.approx(1.65, abs=0.005)

    def test_unit_value(self, worked_game):
        c = Coalition.from_members([1, 2], 3)
        w = gibbs_unnormalized_weight(worked_game, c, GibbsTarget(1.0))
        assert w == pytest.approx(2.72, abs=0.005)

    def test_zero_value(self, worked_game):
        assert gibbs_unnormalized_weight(worked_game, Coalition.empty(3), GibbsTarget(0.37)) == 1.0

    def test_monotone_in_value(self, worked_game):
        target = GibbsTarget(0.8)
        masks = sorted(range(8), key=worked_game.value_by_mask)
        weights = [
            gibbs_unnormalized_weight(worked_game, Coalition(m, 3), target) for m in masks
        ]
        assert all(a <= b for a, b in zip(weights, weights[1:]))

    def test_log_weight_matches(self, worked_game):
        c = Coalition.from_members([0, 1], 3)
        target = GibbsTarget(0.5)
        assert math.exp(log_gibbs_weight(worked_game, c, target)) == pytest.approx(
            gibbs_unnormalized_weight(worked_game, c, target)
        )

    def test_saturates_instead_of_overflowing(self):
        game = additive_table_game([400.0])
        w = gibbs_unnormalized_weight(game, Coalition.full(1), GibbsTarget(0.25))
        assert w == math.inf

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            GibbsTarget(0.0)


class TestMarginalContribution:
    def test_against_pair_context(self, worked_game):
        c = Coalition.from_members([0, 2], 3)
        assert marginal_contribution(worked_game, 1, c) == pytest.approx(1.0)

    def test_against_empty(self, worked_game):
        assert marginal_contribution(worked_game, 1, Coalition.empty(3)) == pytest.approx(0.5)

    def test_additive_game_is_constant(self):
        game = additive_table_game([1.0, 1.0, 1.0, 1.0])
        for mask in (0, 0b0110, 0b1010):
            c = Coalition(mask, 4)
            assert marginal_contribution(game, 0, c) == pytest.approx(1.0)

    def test_member_rejected(self, worked_game):
        with pytest.raises(ValueError, match="already"):
            marginal_contribution(worked_game, 1, Coalition.from_members([1], 3))


class TestPairwiseDelta:
    def test_empty_context(self, worked_game):
        assert pairwise_delta(worked_game, 0, 1, Coalition.empty(3)) == pytest.approx(0.5)

    def test_third_token_context(self, worked_game):
        c = Coalition.from_members([2], 3)
        assert pairwise_delta(worked_game, 0, 1, c) == pytest.approx(0.4)

    def test_additive_game_vanishes(self):
        rng = np.random.default_rng(9)
        game = additive_table_game(rng.normal(size=5))
        for mask in (0, 0b10000, 0b11000):
            val = pairwise_delta(game, 0, 1, Coalition(mask, 5))
            assert val == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_in_tokens(self):
        rng = np.random.default_rng(13)
        game = random_table_game(rng, 5)
        c = Coalition.from_members([4], 5)
        assert pairwise_delta(game, 1, 3, c) == pairwise_delta(game, 3, 1, c)

    def test_rejects_equal_or_member_tokens(self, worked_game):
        with pytest.raises(ValueError):
            pairwise_delta(worked_game, 1, 1, Coalition.empty(3))
        with pytest.raises(ValueError):
            pairwise_delta(worked_game, 0, 1, Coalition.from_members([1], 3))


class TestTabularGameValidation:
    def test_nonzero_empty_value_rejected(self):
        with pytest.raises(ValueError, match="empty coalition"):
            TabularGame([0.1, 1.0])

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            TabularGame([0.0, 1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            TabularGame([0.0, np.nan])

    def test_bound_enforced(self):
        with pytest.raises(ValueError, match="bound"):
            TabularGame([0.0, 5.0], bound=2.0)
        TabularGame([0.0, 5.0], bound=5.0)

    def test_token_cap(self):
        with pytest.raises(ValueError, match="at most 20"):
            TabularGame(np.zeros(1 << 21))


class TestEmbeddingGame:
    def test_projection_shape_checked(self):
        with pytest.raises(ValueError, match="rows"):
            EmbeddingGame(np.ones((2, 3)), np.ones((2, 3)))

    def test_unknown_nonlinearity_rejected(self):
        with pytest.raises(ValueError, match="nonlinearity"):
            EmbeddingGame(np.ones((2, 2)), np.eye(2), nonlinearity="gelu")

    def test_single_token_value_is_projected_norm(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(4, 3))
        w = rng.normal(size=(3, 3))
        game = EmbeddingGame(x, w, nonlinearity="identity")
        for i in range(4):
            expected = float(np.linalg.norm(x[i] @ w))
            got = game.value_by_mask(1 << i)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_relu_equals_identity_on_norms(self):
        rng = np.random.default_rng(22)
        x = rng.normal(size=(4, 3))
        w = rng.normal(size=(3, 3))
        masks = np.arange(16, dtype=np.uint64)
        relu = EmbeddingGame(x, w, "relu").values_by_mask(masks)
        ident = EmbeddingGame(x, w, "identity").values_by_mask(masks)
        np.testing.assert_array_equal(relu, ident)

    def test_tanh_compresses(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=(3, 2)) * 5
        game = EmbeddingGame(x, np.eye(2), "tanh")
        assert np.all(game.values_by_mask(np.arange(8, dtype=np.uint64)) <= 1.0)


def test_tabulate_matches_scalar_path():
    rng = np.random.default_rng(31)
    game = EmbeddingGame(rng.normal(size=(5, 4)), rng.normal(size=(4, 4)))
    table = tabulate(game)
    for mask in range(32):
        assert table[mask] == game.value_by_mask(mask)


def test_tabulate_is_identity_for_tables(worked_game):
    np.testing.assert_array_equal(tabulate(worked_game), np.asarray(WORKED_TABLE))


def test_monotonicity_check_counts_decreases():
    assert monotonicity_violations(TabularGame(WORKED_TABLE)) == 0
    dipped = TabularGame([0.0, 1.0, 1.0, 0.5])  # both singleton additions decrease
    assert monotonicity_violations(dipped) == 2


def test_counting_game_counts_evaluations(worked_game):
    counting = CountingGame(worked_game)
    counting.value_by_mask(3)
    counting.values_by_mask(np.arange(8, dtype=np.uint64))
    assert counting.evaluations == 9
    assert counting.n == 3
