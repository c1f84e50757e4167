import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pxs.errors import FormatError, ValidationError
from pxs.grid import Grid, grids_equal, load_submission, load_tasks, save_tasks, write_submission

from conftest import G


def test_load_tasks_structure(task_file):
    (t,) = load_tasks(task_file)
    assert t.id == "abc"
    assert t.k == 2
    assert len(t.test_inputs) == 1
    assert t.test_outputs == (G([[7, 6]]),)
    assert t.train[0].input == G([[1, 2], [3, 4]])
    assert t.train[1].output == G([[5]])


def test_load_tasks_without_test_outputs(tmp_path):
    p = tmp_path / "t.json"
    p.write_text(json.dumps({"x": {"train": [{"input": [[1]], "output": [[2]]}], "test": [{"input": [[3]]}]}}))
    (t,) = load_tasks(p)
    assert t.test_outputs is None


def test_row_of_31_cells_rejected(tmp_path):
    p = tmp_path / "t.json"
    p.write_text(json.dumps({"x": {"train": [{"input": [[1] * 31], "output": [[2]]}], "test": [{"input": [[3]]}]}}))
    with pytest.raises(ValidationError, match="31"):
        load_tasks(p)


@pytest.mark.parametrize("bad, field", [
    ({"test": [{"input": [[1]]}]}, "train"),
    ({"train": [{"input": [[1]]}], "test": [{"input": [[1]]}]}, "train[0]"),
    ({"train": [{"input": [[1]], "output": [[1]]}], "test": "nope"}, "test"),
])
def test_format_errors_name_task_and_field(tmp_path, bad, field):
    p = tmp_path / "t.json"
    p.write_text(json.dumps({"tid7": bad}))
    with pytest.raises(FormatError) as e:
        load_tasks(p)
    assert e.value.task_id == "tid7"
    assert e.value.field == field


@pytest.mark.parametrize("rows", [
    [[1, 2], [3]],  # ragged
    [[10]],  # color out of range
    [[-1]],
    [],
    [[]],
    [[1]] * 31,
    [[1.5]],
    [[True]],
])
def test_invalid_grids(rows):
    with pytest.raises(ValidationError):
        Grid.from_list(rows)


def test_grids_equal():
    a = G([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert grids_equal(a, G(a.to_list()))
    assert not grids_equal(G([[1, 2, 3], [4, 5, 6]]), G([[1, 2], [3, 4], [5, 6]]))
    assert not grids_equal(a, G([[1, 2, 3], [4, 5, 6], [7, 8, 0]]))


def test_submission_round_trip(tmp_path):
    a, b = G([[1, 2]]), G([[3], [4]])
    path = tmp_path / "sub.json"
    write_submission({"t1": [(a, b)], "t2": [(a, a), (b, a)]}, path)
    data = json.loads(path.read_text())
    assert data["t1"] == [{"attempt_1": [[1, 2]], "attempt_2": [[3], [4]]}]
    assert len(data["t2"]) == 2
    assert load_submission(path) == {"t1": [(a, b)], "t2": [(a, a), (b, a)]}


def test_empty_candidates_fall_back_to_zero_grid(tmp_path, caplog):
    path = tmp_path / "sub.json"
    write_submission({"t": [(None, None)]}, path)
    assert json.loads(path.read_text()) == {"t": [{"attempt_1": [[0]], "attempt_2": [[0]]}]}
    assert "no candidate" in caplog.text
    assert load_submission(path)["t"] == [(G([[0]]), G([[0]]))]


def test_task_file_round_trip(tmp_path, small_task):
    p = tmp_path / "t.json"
    save_tasks([small_task], p)
    assert load_tasks(p) == [small_task]


@settings(max_examples=200, deadline=None)
@given(rows=st.integers(0, 34), cols=st.integers(0, 34), lo=st.integers(-3, 0), hi=st.integers(9, 12),
       seed=st.integers(0, 2**32 - 1))
def test_validation_matches_bounds(rows, cols, lo, hi, seed):
    rng = np.random.default_rng(seed)
    cells = rng.integers(lo, hi + 1, size=(rows, cols)).tolist() if rows and cols else [[]] * rows
    valid = 1 <= rows <= 30 and 1 <= cols <= 30 and all(0 <= v <= 9 for r in cells for v in r)
    if valid:
        assert Grid.from_list(cells).shape == (rows, cols)
    else:
        with pytest.raises(ValidationError):
            Grid.from_list(cells)
