import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beedance.classifiers import (
    LogisticModel,
    TrainConfig,
    deserialize_model,
    fit_model,
    predict,
    predict_many,
    serialize_model,
    train_logistic,
    train_mlp,
)
from beedance.classifiers import logistic, mlp
from beedance.classifiers.base import one_hot, softmax
from beedance.classifiers.svm import SvmRbfModel, dual_objective, rbf_kernel, smo
from beedance.errors import ConvergenceFailure, DegenerateLabels, InvalidConfig, ParseError, ShapeError, UnsupportedVersion
from beedance.features import FeatureVector
from beedance.signal import MoveLabel

from conftest import table_from

H = 1e-5


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    denom = max(np.linalg.norm(a) + np.linalg.norm(b), 1e-8)
    return np.linalg.norm(a - b) / denom


def numeric_grad(f, arr):
    g = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        arr[idx] = old + H
        up = f()
        arr[idx] = old - H
        down = f()
        arr[idx] = old
        g[idx] = (up - down) / (2 * H)
    return g


def random_problem(rng, n=None):
    n = n or int(rng.integers(3, 25))
    X = rng.normal(size=(n, 2))
    cols = rng.integers(0, 3, n)
    return X, one_hot(cols)


def logistic_grad_error(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_problem(rng)
    W, b = rng.normal(size=(3, 2)), rng.normal(size=3)
    lam = float(rng.uniform(0, 0.1))
    _, gW, gb = logistic.loss_and_grad(W, b, X, Y, lam)
    nW = numeric_grad(lambda: logistic.loss_and_grad(W, b, X, Y, lam)[0], W)
    nb = numeric_grad(lambda: logistic.loss_and_grad(W, b, X, Y, lam)[0], b)
    return max(rel_err(gW, nW), rel_err(gb, nb))


def mlp_grad_error(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_problem(rng)
    params = [rng.normal(size=p.shape) for p in mlp.init_params(rng)]
    _, grads = mlp.loss_and_grad(params, X, Y)
    errs = []
    for p, g in zip(params, grads):
        n = numeric_grad(lambda: mlp.loss_and_grad(params, X, Y)[0], p)
        errs.append(rel_err(g, n))
    return max(errs)


class TestGradients:
    @pytest.mark.parametrize("seed", range(10))
    def test_logistic(self, seed):
        assert logistic_grad_error(seed) < 1e-4

    @pytest.mark.parametrize("seed", range(10))
    def test_mlp(self, seed):
        assert mlp_grad_error(seed) < 1e-4


def clusters(rng, centers, labels, n=20, sd=0.1):
    X = np.concatenate([rng.normal(c, sd, size=(n, 2)) for c in centers])
    y = np.repeat(labels, n)
    return table_from(X, y)


class TestLogistic:
    def test_separable_clusters(self):
        X = np.array([[1.0, 0.0]] * 20 + [[-1.0, 0.0]] * 20)
        t = table_from(X, [1] * 20 + [0] * 20)
        codes, _ = predict_many(train_logistic(t), t.X)
        assert (codes == t.y).all()

    def test_symmetric_two_point(self):
        t = table_from([[-1.0, 0.0], [1.0, 0.0]], [-1, 0])
        model = train_logistic(t, TrainConfig(l2_lambda=1e-3))
        _, p = predict(model, FeatureVector(0.0, 0.0))
        np.testing.assert_allclose(p, [0.5, 0.5, 0.0], atol=1e-6)

    def test_zero_weights(self):
        model = LogisticModel(np.zeros((3, 2)), np.zeros(3))
        label, p = predict(model, [0.3, -0.2])
        np.testing.assert_allclose(p, [1 / 3] * 3, atol=1e-15)
        assert label is MoveLabel.TURN_RIGHT

    def test_hand_set_weights(self):
        model = LogisticModel(np.array([[1.0, 0], [0, 0], [-1.0, 0]]), np.zeros(3))
        label, p = predict(model, (10.0, 0.0))
        assert label is MoveLabel.TURN_RIGHT and p[0] > 0.99

    def test_loss_non_increasing(self, rng):
        t = clusters(rng, [(-1, 0), (1, 0), (0, 1.5)], [-1, 0, 1], sd=0.6)
        from beedance.features import fit_standardizer

        history = []
        train_logistic(fit_standardizer(t).apply(t), TrainConfig(logistic_epochs=2000), history)
        assert np.all(np.diff(history) <= 1e-12)

    def test_absent_class_gets_zero_probability(self, rng):
        t = clusters(rng, [(-1, 0), (1, 0)], [1, -1])
        for kind in ("logistic", "mlp", "svm"):
            model = fit_model(kind, t, TrainConfig(mlp_epochs=200))
            codes, scores = predict_many(model, rng.normal(size=(50, 2)))
            assert not np.any(codes == 0)
            if kind != "svm":
                assert np.all(scores[:, 1] == 0.0)

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateLabels):
            train_logistic(table_from([[0, 0], [1, 1]], [1, 1]))

    def test_bad_config(self):
        with pytest.raises(InvalidConfig):
            TrainConfig(C=0)


@settings(max_examples=100)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3), st.floats(-100, 100))
def test_softmax_shift_invariance(z, c):
    z = np.array([z])
    np.testing.assert_allclose(softmax(z + c), softmax(z), atol=1e-12)
    assert softmax(z).sum() == pytest.approx(1.0, abs=1e-9)


def xor_table(rng, n=15):
    centers = [(-1, -1), (1, 1), (-1, 1), (1, -1)]
    return clusters(rng, centers, [1, 1, 0, 0], n=n, sd=0.15)


class TestMlp:
    def test_xor(self, rng):
        t = xor_table(rng)
        best = 0.0
        for seed in range(5):
            model = fit_model("mlp", t, TrainConfig(seed=seed, mlp_epochs=5000))
            codes, _ = predict_many(model, t.X)
            best = max(best, float(np.mean(codes == t.y)))
        assert best == 1.0

    def test_zero_epochs(self, rng):
        t = clusters(rng, [(-1, 0), (1, 0), (0, 1)], [-1, 0, 1])
        model = train_mlp(t, TrainConfig(), epochs=0)
        init = mlp.init_params(np.random.default_rng(0))
        for a, b in zip(model.params, init):
            assert np.array_equal(a, b)
        _, p = predict_many(model, t.X)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_linearly_separable(self, rng):
        t = clusters(rng, [(-2, 0), (2, 0), (0, 3)], [-1, 0, 1])
        codes, _ = predict_many(fit_model("mlp", t), t.X)
        assert (codes == t.y).all()

    def test_shapes(self, rng):
        t = clusters(rng, [(-2, 0), (2, 0), (0, 3)], [-1, 0, 1])
        m = fit_model("mlp", t)
        assert [p.shape for p in m.params] == [(3, 2), (3,), (3, 3), (3,)]
        assert all(np.isfinite(p).all() for p in m.params)


def rings(rng, n=60):
    r = np.concatenate([rng.uniform(0, 1, n), rng.uniform(2, 3, n)])
    a = rng.uniform(0, 2 * np.pi, 2 * n)
    X = np.column_stack([r * np.cos(a), r * np.sin(a)])
    return table_from(X, [1] * n + [-1] * n)


def random_binary(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 40))
    X = rng.normal(size=(n, 2))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=n) > 0, 1.0, -1.0)
    if abs(y.sum()) == n:
        y[0] = -y[0]
    return X, y, float(rng.uniform(0.1, 10)), float(rng.uniform(0.1, 2))


class TestSvm:
    def test_rings(self, rng):
        t = rings(rng)
        codes, _ = predict_many(fit_model("svm", t), t.X)
        assert np.mean(codes == t.y) >= 0.99

    @pytest.mark.parametrize("seed", range(20))
    def test_smo_kkt(self, seed):
        X, y, C, gamma = random_binary(seed)
        K = rbf_kernel(X, X, gamma)
        res = smo(K, y, C, 1e-3, 10, np.random.default_rng(seed))
        a = res.alpha
        assert np.all((a >= 0) & (a <= C))
        f = K @ (a * y) + res.bias
        interior = (a > 1e-8) & (a < C - 1e-8)
        assert np.all(np.abs(y[interior] * f[interior] - 1) <= 10 * 1e-3)

    @pytest.mark.parametrize("seed", range(5))
    def test_dual_objective_non_decreasing(self, seed):
        X, y, C, gamma = random_binary(seed)
        K = rbf_kernel(X, X, gamma)
        res = smo(K, y, C, 1e-3, 10, np.random.default_rng(seed), trace=True)
        assert np.all(np.diff(res.objective_trace) >= -1e-10)
        assert res.objective_trace[-1] == pytest.approx(dual_objective(res.alpha, y, K), abs=1e-9)

    def test_duplicated_rows_same_predictions(self, rng):
        # duplicating rows acts like doubling C; separable clusters and a large C keep every multiplier below it
        t = clusters(rng, [(-1, 0), (1, 0), (0, 1.2)], [-1, 0, 1], n=15, sd=0.15)
        doubled = table_from(np.concatenate([t.X, t.X]), np.concatenate([t.y, t.y]))
        gx, gy = np.meshgrid(np.linspace(-2, 2, 10), np.linspace(-1, 2, 10))
        grid = np.column_stack([gx.ravel(), gy.ravel()])
        cfg = TrainConfig(C=100.0)
        a, _ = predict_many(fit_model("svm", t, cfg), grid)
        b, _ = predict_many(fit_model("svm", doubled, cfg), grid)
        assert np.array_equal(a, b)

    def test_support_vectors_only_stored(self, rng):
        t = clusters(rng, [(-2, 0), (2, 0)], [1, -1])
        model = fit_model("svm", t)
        for m in model.machines:
            assert len(m.support_vectors) < len(t)
            assert np.all(np.abs(m.dual_coef) > 0) and np.all(np.abs(m.dual_coef) <= 1.0 + 1e-12)

    def test_vote_tie_broken_by_margin(self):
        votes = np.array([[1, 1, 1]])
        margins = np.array([[0.1, 0.5, -0.6]])
        assert SvmRbfModel.choose(votes, margins).tolist() == [1]

    def test_sweep_cap_raises(self, rng):
        t = rings(rng, 20)
        with pytest.raises(ConvergenceFailure) as exc:
            fit_model("svm", t, TrainConfig(max_sweeps=1))
        assert exc.value.exit_code == 3
        assert exc.value.pair is not None


def trained(kind, rng):
    t = clusters(rng, [(-1, 0), (1, 0), (0, 1)], [-1, 0, 1], sd=0.4)
    return fit_model(kind, t, TrainConfig(logistic_epochs=500))


class TestSerialization:
    @pytest.mark.parametrize("kind", ["logistic", "mlp", "svm"])
    def test_round_trip(self, kind, rng):
        model = trained(kind, rng)
        again = deserialize_model(serialize_model(model))
        probes = rng.normal(size=(1000, 2)) * 2
        a_codes, a_scores = predict_many(model, probes)
        b_codes, b_scores = predict_many(again, probes)
        assert np.array_equal(a_codes, b_codes)
        assert np.array_equal(a_scores, b_scores)
        assert serialize_model(again) == serialize_model(model)

    @pytest.mark.parametrize("kind", ["logistic", "mlp", "svm"])
    def test_truncated(self, kind, rng):
        data = serialize_model(trained(kind, rng))
        for cut in (len(data) // 3, len(data) - 5):
            with pytest.raises(ParseError):
                deserialize_model(data[:cut])

    def test_version_99(self, rng):
        data = serialize_model(trained("logistic", rng)).replace(b" v1 ", b" v99 ", 1)
        with pytest.raises(UnsupportedVersion):
            deserialize_model(data)

    def test_garbage(self):
        with pytest.raises(ParseError):
            deserialize_model(b"\x00\x01binary junk")


def test_predict_is_deterministic(rng):
    for kind in ("logistic", "mlp", "svm"):
        model = trained(kind, rng)
        x = [0.2, 0.3]
        a, b = predict(model, x), predict(model, x)
        assert a[0] is b[0] and np.array_equal(a[1], b[1])


def test_feature_dimension_mismatch(rng):
    with pytest.raises(ShapeError):
        predict_many(trained("logistic", rng), np.zeros((2, 3)))


@pytest.mark.parametrize("kind", ["logistic", "mlp", "svm"])
def test_batch_and_single_row_predictions_are_bit_identical(kind, rng):
    model = trained(kind, rng)
    probes = rng.normal(size=(300, 2)) * 2
    codes, scores = predict_many(model, probes)
    for i in range(0, 300, 7):
        c, s = predict_many(model, probes[i])
        assert c[0] == codes[i] and np.array_equal(s[0], scores[i])
