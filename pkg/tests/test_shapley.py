import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdlens.numerics import ACTIVATION_KINDS, activation
from cdlens.shapley import MAX_PLAYERS, SumGame, exact_shapley, shapley_oracle_permutations


def game_of(values, nonlinearity="sigmoid"):
    return SumGame(
        components=[(f"p{i}", np.atleast_1d(np.asarray(v, dtype=float))) for i, v in enumerate(values)],
        nonlinearity=nonlinearity,
    )


class TestSinglePlayer:
    def test_one_component_gets_everything(self):
        contribs, baseline = exact_shapley(game_of([2.0]))
        sig2 = activation("sigmoid", np.array([2.0]))[0]
        sig0 = 0.5
        assert baseline[0] == sig0
        assert contribs["p0"][0] == pytest.approx(sig2 - sig0, abs=1e-15)


class TestTwoPlayers:
    def test_equal_players_split_evenly(self):
        # two players each contributing 1.0: each gets (sigmoid(2)-sigmoid(0))/2
        contribs, baseline = exact_shapley(game_of([1.0, 1.0]))
        expected = 0.19039853898894116  # (sigmoid(2) - 0.5) / 2, high-precision oracle
        assert contribs["p0"][0] == pytest.approx(expected, abs=1e-15)
        assert contribs["p1"][0] == pytest.approx(expected, abs=1e-15)
        assert baseline[0] == 0.5

    def test_hand_computed_asymmetric(self):
        # phi_0 = 1/2 [ (s(a) - s(0)) + (s(a+b) - s(b)) ]
        a, b = 0.7, -1.3
        s = lambda z: activation("sigmoid", np.array([z]))[0]
        contribs, _ = exact_shapley(game_of([a, b]))
        assert contribs["p0"][0] == pytest.approx(0.5 * ((s(a) - s(0)) + (s(a + b) - s(b))), abs=1e-15)
        assert contribs["p1"][0] == pytest.approx(0.5 * ((s(b) - s(0)) + (s(a + b) - s(a))), abs=1e-15)


vec3 = st.lists(
    st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=3, max_size=3
).map(lambda v: np.array(v))


class TestAxioms:
    @given(st.lists(vec3, min_size=2, max_size=4), st.sampled_from(sorted(ACTIVATION_KINDS)))
    @settings(max_examples=60, deadline=None)
    def test_efficiency(self, vectors, kind):
        game = game_of(vectors, kind)
        contribs, baseline = exact_shapley(game)
        total = baseline + sum(contribs.values())
        np.testing.assert_allclose(total, activation(kind, sum(vectors)), atol=1e-12)

    @given(vec3, vec3)
    @settings(max_examples=40, deadline=None)
    def test_symmetry(self, a, b):
        game = SumGame(components=[("x", a), ("y", b), ("x2", a.copy())], nonlinearity="tanh")
        contribs, _ = exact_shapley(game)
        np.testing.assert_allclose(contribs["x"], contribs["x2"], atol=1e-13)

    @given(st.lists(vec3, min_size=1, max_size=3))
    @settings(max_examples=40, deadline=None)
    def test_null_player(self, vectors):
        game = game_of(vectors + [np.zeros(3)], "gelu")
        contribs, _ = exact_shapley(game)
        np.testing.assert_allclose(contribs[f"p{len(vectors)}"], 0.0, atol=1e-13)


class TestOracleAgreement:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("kind", sorted(ACTIVATION_KINDS))
    def test_matches_permutation_average(self, n, kind):
        rng = np.random.default_rng(n * 31 + hash(kind) % 97)
        game = game_of([rng.normal(size=4) for _ in range(n)], kind)
        fast, base_f = exact_shapley(game)
        slow, base_s = shapley_oracle_permutations(game)
        np.testing.assert_array_equal(base_f, base_s)
        for name in fast:
            np.testing.assert_allclose(fast[name], slow[name], atol=1e-10, rtol=0)


class TestValidation:
    def test_zero_players_rejected(self):
        with pytest.raises(ValueError, match="1.."):
            SumGame(components=[], nonlinearity="sigmoid")

    def test_too_many_players_rejected(self):
        with pytest.raises(ValueError):
            game_of([1.0] * (MAX_PLAYERS + 1))

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            SumGame(
                components=[("a", np.zeros(2)), ("a", np.ones(2))],
                nonlinearity="sigmoid",
            )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            SumGame(
                components=[("a", np.zeros(2)), ("b", np.zeros(3))],
                nonlinearity="sigmoid",
            )

    def test_unknown_nonlinearity_fails_on_use(self):
        with pytest.raises(ValueError, match="unknown activation"):
            exact_shapley(game_of([1.0], "relu"))
