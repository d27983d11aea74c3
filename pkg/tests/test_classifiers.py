"""Prediction, logits, analytic gradients, and representation conversions."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from advgame import (
    AllPairsClassifier,
    ClassifierSet,
    LinearClassifier,
    MLPClassifier,
    MLPLayer,
    MixedStrategy,
    average_ensemble,
    convert_all_pairs,
    convert_multivector,
)


class TestLinearClassifier:
    def test_positive_side_is_class_zero(self):
        c = LinearClassifier.from_binary(np.array([1.0, 0.0]), 0.0)
        assert c.predict(np.array([2.0, 1.0])) == 0

    def test_tie_prefers_lowest_index(self):
        c = LinearClassifier.from_binary(np.array([1.0, 0.0]), 0.0)
        assert c.predict(np.array([0.0, 5.0])) == 0

    def test_one_vs_all_argmax(self):
        c = LinearClassifier(np.eye(3), np.zeros(3))
        assert c.predict(np.array([0.1, 0.9, 0.3])) == 1

    def test_logits_affine(self):
        c = LinearClassifier(np.eye(2), np.array([0.5, -0.5]))
        assert_allclose(c.logits(np.array([1.0, 1.0])), [1.5, 0.5], rtol=0, atol=0)

    def test_binary_canonical_rows(self):
        c = LinearClassifier.from_binary(np.array([1.0, 2.0]), 0.5)
        assert_allclose(c.weights, [[1.0, 2.0], [-1.0, -2.0]])
        assert_allclose(c.biases, [0.5, -0.5])

    def test_binary_form_round_trip(self):
        w, b = np.array([0.3, -1.7]), 0.25
        c = LinearClassifier.from_binary(w, b)
        w2, b2 = c.binary_form()
        assert_allclose(w2, w)
        assert b2 == pytest.approx(b)

    def test_logit_gradient_is_weight_row(self):
        c = LinearClassifier(np.array([[2.0, 3.0], [0.0, 1.0]]), np.zeros(2))
        assert_allclose(c.logit_gradient(np.array([5.0, -1.0]), 0), [2.0, 3.0])

    def test_dimension_mismatch_rejected(self):
        c = LinearClassifier(np.eye(2), np.zeros(2))
        with pytest.raises(ValueError):
            c.predict(np.array([1.0, 2.0, 3.0]))

    def test_invalid_construction_rejected(self):
        with pytest.raises(ValueError):
            LinearClassifier(np.eye(2), np.zeros(3))
        with pytest.raises(ValueError):
            LinearClassifier(np.array([[1.0, np.nan], [0.0, 1.0]]), np.zeros(2))
        with pytest.raises(ValueError):
            LinearClassifier(np.ones((1, 2)), np.zeros(1))


class TestMLPClassifier:
    def test_identity_single_layer(self):
        c = MLPClassifier([MLPLayer(np.eye(2), np.zeros(2), "identity")])
        assert_allclose(c.logits(np.array([3.0, -2.0])), [3.0, -2.0])
        assert_allclose(c.logit_gradient(np.array([3.0, -2.0]), 1), [0.0, 1.0])

    def test_relu_hand_example(self):
        # hidden = relu(x - 1) = (1, 0) at x=(2, 0.5); identity readout.
        c = MLPClassifier([
            MLPLayer(np.eye(2), np.array([-1.0, -1.0]), "relu"),
            MLPLayer(np.eye(2), np.zeros(2), "identity"),
        ])
        assert_allclose(c.logits(np.array([2.0, 0.5])), [1.0, 0.0])

    def test_relu_gradient_is_zero_at_kink(self):
        c = MLPClassifier([
            MLPLayer(np.array([[1.0]]), np.array([0.0]), "relu"),
            MLPLayer(np.array([[1.0], [0.0]]), np.array([0.0, 0.0]),
                     "identity"),
        ])
        assert_allclose(c.logit_gradient(np.array([0.0]), 0), [0.0])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        layers = [
            MLPLayer(rng.normal(size=(6, 4)), rng.normal(size=6), "relu"),
            MLPLayer(rng.normal(size=(3, 6)), rng.normal(size=3), "identity"),
        ]
        c = MLPClassifier(layers)
        h = 1e-5
        checked = 0
        while checked < 20:
            x = rng.normal(size=4)
            pre = layers[0].weights @ x + layers[0].biases
            if np.min(np.abs(pre)) < 1e-3:
                continue  # too close to a relu kink for a clean difference
            j = int(rng.integers(0, 3))
            g = c.logit_gradient(x, j)
            fd = np.empty(4)
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                fd[i] = (c.logits(x + e)[j] - c.logits(x - e)[j]) / (2 * h)
            assert np.linalg.norm(fd - g) <= 1e-4 * max(np.linalg.norm(fd), 1e-12)
            checked += 1

    def test_layer_width_mismatch_rejected(self):
        with pytest.raises(ValueError):
            MLPClassifier([
                MLPLayer(np.ones((3, 2)), np.zeros(3), "relu"),
                MLPLayer(np.ones((2, 4)), np.zeros(2), "identity"),
            ])

    def test_unknown_activation_rejected(self):
        with pytest.raises(ValueError):
            MLPClassifier([MLPLayer(np.eye(2), np.zeros(2), "tanh")])


class TestAllPairsConversion:
    def test_binary_case(self):
        ap = AllPairsClassifier(2, 2, {(0, 1): (np.array([1.0, 2.0]), 0.5)})
        c = convert_all_pairs(ap)
        assert_allclose(c.weights, [[1.0, 2.0], [-1.0, -2.0]])
        assert_allclose(c.biases, [0.5, -0.5])

    def test_random_equivalence(self):
        rng = np.random.default_rng(3)
        predictors = {
            (i, j): (rng.normal(size=3), float(rng.normal()))
            for i in range(3) for j in range(i + 1, 3)
        }
        ap = AllPairsClassifier(3, 3, predictors)
        c = convert_all_pairs(ap)
        for _ in range(100):
            x = rng.normal(size=3)
            assert ap.predict(x) == c.predict(x)

    def test_zero_predictors_tie_to_class_zero(self):
        predictors = {(i, j): (np.zeros(2), 0.0)
                      for i in range(3) for j in range(i + 1, 3)}
        ap = AllPairsClassifier(3, 2, predictors)
        c = convert_all_pairs(ap)
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = rng.normal(size=2)
            assert ap.predict(x) == 0
            assert c.predict(x) == 0

    def test_wrong_predictor_count_rejected(self):
        with pytest.raises(ValueError):
            AllPairsClassifier(3, 2, {(0, 1): (np.zeros(2), 0.0)})


class TestMultivectorConversion:
    def test_slicing(self):
        c = convert_multivector(np.array([1.0, 0.0, -1.0, 0.0]), 2, 1)
        assert_allclose(c.weights, [[1.0], [-1.0]])
        assert_allclose(c.biases, [0.0, 0.0])

    def test_predict_example(self):
        c = convert_multivector(np.array([1.0, 0, 0, 0, 1.0, 0]), 2, 2)
        assert c.predict(np.array([2.0, 1.0])) == 0

    def test_random_equivalence(self):
        # The flat-parameter rule scores class j by <w_j, x> + b_j where
        # block j of the flat vector is (w_j, b_j).
        rng = np.random.default_rng(8)
        flat = rng.normal(size=3 * 5)
        c = convert_multivector(flat, 3, 4)
        blocks = flat.reshape(3, 5)
        for _ in range(100):
            x = rng.normal(size=4)
            scores = blocks[:, :4] @ x + blocks[:, 4]
            assert c.predict(x) == int(np.argmax(scores))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            convert_multivector(np.zeros(7), 2, 3)


class TestClassifierSet:
    def test_all_linear_flag(self):
        lin = LinearClassifier.from_binary(np.array([1.0, 0.0]), 0.0)
        mlp = MLPClassifier([MLPLayer(np.eye(2), np.zeros(2), "identity")])
        assert ClassifierSet([lin, lin]).all_linear
        assert not ClassifierSet([lin, mlp]).all_linear

    def test_mismatched_members_rejected(self):
        a = LinearClassifier(np.eye(2), np.zeros(2))
        b = LinearClassifier(np.eye(3), np.zeros(3))
        with pytest.raises(ValueError):
            ClassifierSet([a, b])
        with pytest.raises(ValueError):
            ClassifierSet([])


class TestAverageEnsemble:
    def test_linear_average_weights(self):
        c1 = LinearClassifier.from_binary(np.array([1.0, 0.0]), 0.0)
        c2 = LinearClassifier.from_binary(np.array([0.0, 1.0]), 0.0)
        ens = average_ensemble(ClassifierSet([c1, c2]),
                               MixedStrategy(np.array([0.5, 0.5])))
        w, b = ens.binary_form()
        assert_allclose(w, [0.5, 0.5])
        assert b == pytest.approx(0.0)

    def test_single_member_identity(self):
        c = LinearClassifier(np.arange(6.0).reshape(2, 3), np.array([1.0, -1.0]))
        ens = average_ensemble(ClassifierSet([c]), MixedStrategy(np.array([1.0])))
        x = np.array([0.2, -0.4, 1.0])
        assert_allclose(ens.logits(x), c.logits(x), rtol=0, atol=0)

    def test_mlp_weighted_logits(self):
        rng = np.random.default_rng(4)
        nets = []
        for _ in range(2):
            nets.append(MLPClassifier([
                MLPLayer(rng.normal(size=(5, 3)), rng.normal(size=5), "relu"),
                MLPLayer(rng.normal(size=(2, 5)), rng.normal(size=2), "identity"),
            ]))
        weights = MixedStrategy(np.array([0.3, 0.7]))
        ens = average_ensemble(ClassifierSet(nets), weights)
        for _ in range(20):
            x = rng.normal(size=3)
            want = 0.3 * nets[0].logits(x) + 0.7 * nets[1].logits(x)
            assert_allclose(ens.logits(x), want, atol=1e-12)

    def test_linear_logit_linearity(self):
        rng = np.random.default_rng(9)
        members = [LinearClassifier(rng.normal(size=(3, 4)), rng.normal(size=3))
                   for _ in range(3)]
        probs = rng.dirichlet(np.ones(3))
        ens = average_ensemble(ClassifierSet(members), MixedStrategy(probs))
        for _ in range(20):
            x = rng.normal(size=4)
            want = sum(p * m.logits(x) for p, m in zip(probs, members))
            assert_allclose(ens.logits(x), want, atol=1e-12)

    def test_invalid_weights_rejected(self):
        c = LinearClassifier.from_binary(np.array([1.0, 0.0]), 0.0)
        cset = ClassifierSet([c, c])
        with pytest.raises(ValueError):
            average_ensemble(cset, MixedStrategy(np.array([0.5, 0.4])))
        with pytest.raises(ValueError):
            average_ensemble(cset, MixedStrategy(np.array([1.5, -0.5])))
