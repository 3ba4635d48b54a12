import warnings

import numpy as np
import pytest

from factortree.data import CutpointSet, ResponseMatrix, estimate_cutpoints, read_csv, write_csv
from factortree.errors import DataError


def _counts_item(counts):
    return np.repeat(np.arange(len(counts)), counts)


def _matrix(*items):
    return ResponseMatrix(np.column_stack(items))


def test_cutpoints_from_counts():
    y = _counts_item([100, 150, 250])
    cut = estimate_cutpoints(_matrix(y, y[::-1], y))
    np.testing.assert_allclose(cut.item(0), [0, 0.2, 0.5, 1], atol=1e-15)


def test_ptsd_style_counts():
    y = _counts_item([44, 44, 44, 44, 45])
    cut = estimate_cutpoints(_matrix(y, y, y))
    expect = np.concatenate([[0], np.cumsum([44, 44, 44, 44, 45]) / 221])
    np.testing.assert_allclose(cut.item(1), expect, atol=1e-15)
    np.testing.assert_allclose(cut.item(1), [0, .199, .398, .597, .796, 1], atol=1e-3)


def test_degenerate_item_rejected():
    y = np.array([0, 1] * 5)
    with pytest.raises(DataError):
        estimate_cutpoints(ResponseMatrix(np.column_stack([y, y, np.zeros(10, int)]),
                                          category_counts=(2, 2, 2)))


def test_empty_category_policy():
    y = np.array([0, 2, 2, 0, 2, 0])
    data = ResponseMatrix(np.column_stack([y, y, y]), category_counts=(3, 3, 3))
    with pytest.raises(DataError):
        estimate_cutpoints(data)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        cut = estimate_cutpoints(data, on_empty="merge")
    assert rec and cut.category_counts == (2, 2, 2)
    np.testing.assert_allclose(cut.item(0), [0, 0.5, 1])


@pytest.mark.parametrize("vals,kw", [
    (np.zeros((5, 2), int), {}),                        # d < 3
    (np.zeros((1, 3), int), {}),                        # n < 2
    (np.array([[0, 1, -1], [1, 0, 0]]), {}),            # negative code
    (np.array([[0, 1, 0.5], [1, 0, 0]]), {}),           # non-integer
    (np.array([[0, 1, np.nan], [1, 0, 0]]), {}),        # missing
    (np.array([[0, 1, 2], [1, 0, 0]]), {"category_counts": (2, 2, 2)}),
])
def test_response_matrix_validation(vals, kw):
    with pytest.raises(DataError):
        ResponseMatrix(vals, **kw)


def test_cutpoint_validation_and_alpha():
    with pytest.raises(DataError):
        CutpointSet.from_lists([[0, 0.5, 0.5, 1], [0, 1], [0, 1]])
    with pytest.raises(DataError):
        CutpointSet.from_lists([[0.1, 0.5, 1], [0, 1], [0, 1]])
    cut = CutpointSet.equal(3, 5)
    np.testing.assert_allclose(cut.item(2), [0, .2, .4, .6, .8, 1])
    assert cut.alpha[0, 0] == -np.inf and cut.alpha[0, -1] == np.inf
    assert cut.alpha[0, 1] == pytest.approx(-0.8416212335729143)
    ragged = CutpointSet.from_lists([[0, .3, 1], [0, .2, .6, 1], [0, 1]])
    assert ragged.to_lists() == [[0, .3, 1], [0, .2, .6, 1], [0, 1]]
    np.testing.assert_allclose(ragged.probs()[0], [.3, .7, 0])


def test_unique_rows_and_table():
    data = ResponseMatrix(np.array([[0, 1, 1], [0, 1, 1], [1, 0, 1]]))
    rows, counts = data.unique_rows()
    assert rows.tolist() == [[0, 1, 1], [1, 0, 1]] and counts.tolist() == [2, 1]
    assert data.category_table().tolist() == [[2, 1], [1, 2], [0, 3]]


def test_csv_round_trip_and_remap(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b,c\n1,5,3\n2,5,4\n3,7,3\n")
    data, remap = read_csv(path)
    assert data.item_names == ("a", "b", "c")
    assert data.values.tolist() == [[0, 0, 0], [1, 0, 1], [2, 1, 0]]
    assert remap == {"a": {1: 0, 2: 1, 3: 2}, "b": {5: 0, 7: 1}, "c": {3: 0, 4: 1}}
    out = tmp_path / "y.csv"
    write_csv(data, out)
    again, _ = read_csv(out)
    assert np.array_equal(again.values, data.values)


@pytest.mark.parametrize("text", ["", "a,b,c\n", "a,b,c\n1,2\n", "a,b,c\n1,x,2\n", "a,b,c\n1,,2\n"])
def test_malformed_csv(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError):
        read_csv(path)


def test_fixture_shape():
    from pathlib import Path
    data, _ = read_csv(Path(__file__).parent / "data" / "ptsd_format_fixture.csv")
    assert (data.n, data.d) == (221, 20)
    assert set(data.category_counts) == {5}
