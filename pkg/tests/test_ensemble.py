import numpy as np
import pytest

from conftest import unit_rows
from dynarc.ensemble import ModelOutputs, average_head_scores, concat_features
from dynarc.errors import (MissingHeadScores, NonNormalizedInput, RowCountMismatch,
                           ShapeMismatch)
from dynarc.retrieval import Gallery, top_k


def test_single_model_identity(rng):
    f = unit_rows(rng, 5, 8)
    np.testing.assert_array_equal(concat_features([ModelOutputs(f)]), f)


def test_two_model_cosine_is_mean():
    # per-model cosines 0.9 and 0.5 by construction
    q = [ModelOutputs(np.array([[1.0, 0.0]])), ModelOutputs(np.array([[1.0, 0.0, 0.0]]))]
    g = [ModelOutputs(np.array([[0.9, np.sqrt(1 - 0.81)]])),
         ModelOutputs(np.array([[0.5, np.sqrt(0.75), 0.0]]))]
    cos = float(concat_features(q)[0] @ concat_features(g)[0])
    assert cos == pytest.approx(0.7, abs=1e-15)


@pytest.mark.parametrize("dims", [[16], [16, 16], [8, 32, 5, 12, 64]])
def test_mean_of_cosines_identity(rng, dims):
    a = [unit_rows(rng, 20, d) for d in dims]
    b = [unit_rows(rng, 20, d) for d in dims]
    fused = np.sum(concat_features([ModelOutputs(x) for x in a])
                   * concat_features([ModelOutputs(x) for x in b]), axis=1)
    mean = np.mean([np.sum(x * y, axis=1) for x, y in zip(a, b)], axis=0)
    np.testing.assert_allclose(fused, mean, atol=1e-10)


def test_copies_keep_cosine(rng):
    a, b = unit_rows(rng, 4, 6), unit_rows(rng, 4, 6)
    fused = np.sum(concat_features([ModelOutputs(a)] * 3)
                   * concat_features([ModelOutputs(b)] * 3), axis=1)
    np.testing.assert_allclose(fused, np.sum(a * b, axis=1), atol=1e-14)


def test_fused_ranking_equals_mean_cosine_ranking(rng):
    dims = [8, 12]
    gal = [unit_rows(rng, 60, d) for d in dims]
    qry = [unit_rows(rng, 1, d) for d in dims]
    g = Gallery(concat_features([ModelOutputs(x) for x in gal]), np.arange(60))
    q = concat_features([ModelOutputs(x) for x in qry])[0]
    mean = np.mean([x @ y[0] for x, y in zip(gal, qry)], axis=0)
    want = sorted(range(60), key=lambda i: (-mean[i], i))[:10]
    assert [n.row_index for n in top_k(g, q, 10)] == want


def test_concat_errors(rng):
    with pytest.raises(RowCountMismatch):
        concat_features([ModelOutputs(unit_rows(rng, 3, 4)), ModelOutputs(unit_rows(rng, 4, 4))])
    with pytest.raises(ShapeMismatch):
        concat_features([ModelOutputs(unit_rows(rng, 3, 4)), ModelOutputs(unit_rows(rng, 4, 4))])
    with pytest.raises(NonNormalizedInput):
        concat_features([ModelOutputs(np.ones((2, 3)))])


def test_average_head_scores(rng):
    assert average_head_scores([ModelOutputs(None, np.array([[0.2]])),
                                ModelOutputs(None, np.array([[0.6]]))])[0, 0] == pytest.approx(0.4)
    s = rng.random((5, 7))
    np.testing.assert_array_equal(average_head_scores([ModelOutputs(None, s)]), s)
    models = [ModelOutputs(None, rng.random((5, 7))) for _ in range(4)]
    np.testing.assert_allclose(average_head_scores(models),
                               average_head_scores(models[::-1]), atol=1e-15)


def test_average_errors(rng):
    with pytest.raises(MissingHeadScores):
        average_head_scores([ModelOutputs(None, rng.random((2, 2))), ModelOutputs(None)])
    with pytest.raises(ShapeMismatch):
        average_head_scores([ModelOutputs(None, rng.random((2, 2))),
                             ModelOutputs(None, rng.random((2, 3)))])
