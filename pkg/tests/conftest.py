import json

import pytest

from pxs.grid import ExamplePair, Grid, Task


def G(rows):
    return Grid.from_list(rows)


@pytest.fixture
def small_task():
    return Task(
        "t0",
        (
            ExamplePair(G([[1, 2, 3], [4, 5, 6]]), G([[3, 2, 1], [6, 5, 4]])),
            ExamplePair(G([[7, 0], [0, 8]]), G([[0, 7], [8, 0]])),
        ),
        (G([[1, 0, 2], [3, 0, 0]]),),
        (G([[2, 0, 1], [0, 0, 3]]),),
    )


@pytest.fixture
def task_file(tmp_path):
    data = {
        "abc": {
            "train": [
                {"input": [[1, 2], [3, 4]], "output": [[2, 1], [4, 3]]},
                {"input": [[5]], "output": [[5]]},
            ],
            "test": [{"input": [[6, 7]], "output": [[7, 6]]}],
        }
    }
    p = tmp_path / "tasks.json"
    p.write_text(json.dumps(data))
    return p
