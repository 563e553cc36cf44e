import math
from collections import Counter

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from sentipers.baselines import (BowVectorizer, LinearModel, NaiveBayes, featurize, linear_train, nb_predict,
                                 nb_train, restore, step_size, train_baseline)
from sentipers.errors import ConfigError, NumericError

docs_st = st.lists(st.lists(st.sampled_from(list("abcdef")), max_size=8).map(" ".join), min_size=1, max_size=10)


def test_count_features():
    vec, X = featurize(["a a b"], "count")
    row = vec.to_sparse_maps(X)[0]
    assert {w: row[i] for w, i in vec.vocabulary.items()} == {"a": 2.0, "b": 1.0}


def test_word_in_every_document_has_unit_idf():
    vec = BowVectorizer("tfidf").fit(["a b", "a c", "a"])
    assert vec.idf[vec.vocabulary["a"]] == 1.0


@settings(max_examples=50, deadline=None)
@given(docs_st)
def test_tfidf_matches_two_pass_brute_force(docs):
    vec, X = featurize(docs, "tfidf")
    dense = X.toarray()
    # pass 1: document frequencies; pass 2: weights
    df = Counter()
    for d in docs:
        df.update(set(d.split()))
    n = len(docs)
    for r, d in enumerate(docs):
        tf = Counter(d.split())
        for w, j in vec.vocabulary.items():
            expected = tf[w] * (math.log((1 + n) / (1 + df[w])) + 1)
            assert abs(dense[r, j] - expected) < 1e-12
    assert np.all(X.data >= 0)


def test_unknown_words_ignored_at_transform():
    vec = BowVectorizer("count").fit(["a b"])
    assert vec.transform(["zz a"]).toarray().tolist() == [[1.0, 0.0]]
    with pytest.raises(ConfigError):
        BowVectorizer("binary")


# -- naive Bayes ---------------------------------------------------------------------

def test_nb_hand_computed_posteriors():
    # class 0: "a a b", "a c c"; class 1: "b c"; alpha = 1
    # P(a|0)=4/9 P(b|0)=2/9, P(a|1)=1/5 P(b|1)=2/5, priors 2/3 and 1/3
    # doc "a b": 2/3*4/9*2/9 = 16/243 vs 1/3*1/5*2/5 = 2/75 -> 200/281, 81/281
    vec, X = featurize(["a a b", "b c", "a c c"], "count")
    model = nb_train(X, [0, 1, 0], 2)
    p = model.predict_proba(vec.transform(["a b"]))[0]
    assert abs(p[0] - 200 / 281) < 1e-12 and abs(p[1] - 81 / 281) < 1e-12
    assert abs(model.feature_log_prob[0, vec.vocabulary["c"]] - math.log(3 / 9)) < 1e-12


def test_nb_disjoint_vocabularies():
    vec, X = featurize(["a b a", "c d"], "count")
    assert nb_predict(nb_train(X, [0, 1]), X).tolist() == [0, 1]


def test_nb_empty_document_gives_majority():
    vec, X = featurize(["a", "b", "b c", "c"], "count")
    model = nb_train(X, [0, 1, 1, 1])
    assert model.predict(vec.transform([""])).tolist() == [1]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 50))
def test_nb_rows_sum_to_one_and_argmax_invariance(seed, factor):
    rng = np.random.default_rng(seed)
    X = sp.csr_matrix(rng.integers(0, 4, (12, 6)).astype(float))
    y = rng.integers(0, 3, 12)
    y[:3] = [0, 1, 2]
    a = nb_train(X, y, 3)
    np.testing.assert_allclose(a.predict_proba(X).sum(axis=1), 1.0, atol=1e-12)
    b = nb_train(X * factor, y, 3, alpha=factor)  # scales every smoothed count by factor
    assert np.array_equal(a.predict(X), b.predict(X))


# -- linear SGD ------------------------------------------------------------------------

def _two_d(seed=0, n=60):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    X = X[np.abs(X[:, 0] + X[:, 1]) > 0.2]
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    return sp.csr_matrix(X), y


@pytest.mark.parametrize("loss", ["hinge", "logistic"])
def test_separable_2d_within_50_epochs(loss):
    X, y = _two_d()
    model = linear_train(X, y, loss, epochs=50, lr=0.5, l2=1e-4, schedule="constant")
    assert (model.predict(X) == y).mean() == 1.0


@pytest.mark.parametrize("schedule", ["invscaling", "optimal", "constant"])
def test_norm_trace_shrinks_toward_zero_as_l2_grows(schedule):
    # weights start at zero, so the limit is read epoch by epoch across growing l2
    X, y = _two_d(1)
    traces = np.array([LinearModel("hinge", epochs=10, lr=0.1, l2=l2, schedule=schedule).fit(X, y).norm_trace[0]
                       for l2 in (0.01, 0.1, 1.0, 10.0, 100.0)])
    assert np.all(np.diff(traces, axis=0) <= 1e-12)
    assert traces[-1].max() < 0.2 * traces[0].max()


def test_norm_trace_decreases_as_l2_grows():
    X, y = _two_d(2)
    norms = [np.linalg.norm(linear_train(X, y, "hinge", epochs=10, l2=l2).W) for l2 in (0.0, 0.1, 1.0, 10.0)]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("loss", ["hinge", "logistic"])
def test_single_example(loss):
    X = sp.csr_matrix(np.array([[1.0, 2.0]]))
    for label in (0, 1):
        model = linear_train(X, [label], loss, n_classes=2)
        assert model.predict(X).tolist() == [label]


def test_one_vs_rest_matches_brute_force_scores():
    rng = np.random.default_rng(3)
    X = sp.csr_matrix(rng.standard_normal((30, 5)))
    y = rng.integers(0, 4, 30)
    model = linear_train(X, y, "logistic", epochs=5, n_classes=4)
    dense = X.toarray()
    for i in range(30):
        scores = [dense[i] @ model.W[k] + model.b[k] for k in range(4)]
        assert model.predict(X[i])[0] == int(np.argmax(scores))


@pytest.mark.parametrize("name", ["nb", "svm", "sgd"])
def test_baselines_deterministic_and_restorable(name):
    X, y = _two_d(4)
    X = abs(X)
    a = train_baseline(name, X, y, 2, seed=7)
    b = train_baseline(name, X, y, 2, seed=7)
    for key, value in a.state().items():
        assert np.array_equal(value, b.state()[key])
    back = restore(name, a.state(), {"alpha": 1.0} if name == "nb" else {"epochs": 20})
    assert np.array_equal(back.predict(X), a.predict(X))


def test_step_size_schedules():
    assert step_size("constant", 0.1, 1.0, 100, 10) == 0.1
    assert step_size("invscaling", 0.1, 1.0, 10, 10) == 0.05
    assert step_size("optimal", 0.1, 1.0, 10, 10) == 0.05


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_config_and_numeric_errors():
    with pytest.raises(ConfigError):
        LinearModel("squared")
    with pytest.raises(ConfigError):
        LinearModel(schedule="cosine")
    with pytest.raises(ConfigError):
        train_baseline("knn", None, None, 2)
    X = sp.csr_matrix(np.array([[1e308, 1e308], [-1e308, -1e308]]))
    with pytest.raises(NumericError):
        linear_train(X, [0, 1], "hinge", lr=1e10, schedule="constant")


def test_naive_bayes_is_dataclass_default_alpha():
    assert NaiveBayes().alpha == 1.0
