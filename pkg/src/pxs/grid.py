"""Grids, tasks and the ARC task / submission file formats."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import FormatError, ValidationError

log = logging.getLogger(__name__)

MAX_SIDE = 30
N_COLORS = 10


@dataclass(frozen=True)
class Grid:
    """Immutable rectangular grid of colors 0..9, stored as a tuple of rows."""

    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = len(self.cells)
        if not 1 <= rows <= MAX_SIDE:
            raise ValidationError(f"grid has {rows} rows; allowed 1..{MAX_SIDE}")
        cols = len(self.cells[0])
        if not 1 <= cols <= MAX_SIDE:
            raise ValidationError(f"grid has {cols} cols; allowed 1..{MAX_SIDE}")
        for r, row in enumerate(self.cells):
            if len(row) != cols:
                raise ValidationError(
                    f"row {r} has {len(row)} cells, expected {cols} (dims {rows}x{cols})"
                )
            for v in row:
                if type(v) is not int or not 0 <= v < N_COLORS:
                    raise ValidationError(f"cell value {v!r} in row {r} outside 0..9")

    @classmethod
    def from_list(cls, rows: Sequence[Sequence[int]]) -> Grid:
        if not isinstance(rows, (list, tuple)) or not rows:
            raise ValidationError("grid must be a non-empty list of rows")
        out = []
        for row in rows:
            if not isinstance(row, (list, tuple)):
                raise ValidationError(f"grid row is {type(row).__name__}, expected list")
            out.append(tuple(_as_color(v) for v in row))
        return cls(tuple(out))

    @classmethod
    def from_array(cls, a) -> Grid:
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValidationError(f"grid array must be 2-D, got shape {a.shape}")
        return cls(tuple(tuple(int(v) for v in row) for row in a))

    @property
    def rows(self) -> int:
        return len(self.cells)

    @property
    def cols(self) -> int:
        return len(self.cells[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def array(self) -> np.ndarray:
        return np.array(self.cells, dtype=np.int64)

    def to_list(self) -> list[list[int]]:
        return [list(row) for row in self.cells]

    def sort_key(self):
        """Lexicographic order: dims first, then row-major cells."""
        return (self.rows, self.cols, self.cells)

    def __repr__(self):
        return f"Grid({self.rows}x{self.cols}, {self.to_list()})"


def _as_color(v):
    # bool is an int subclass but never a color
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        raise ValidationError(f"cell value {v!r} is not an integer")
    return int(v)


ZERO_GRID = Grid(((0,),))


@dataclass(frozen=True)
class ExamplePair:
    input: Grid
    output: Grid


@dataclass(frozen=True)
class Task:
    id: str
    train: tuple[ExamplePair, ...]
    test_inputs: tuple[Grid, ...]
    test_outputs: tuple[Grid, ...] | None = None

    def __post_init__(self):
        if not self.train:
            raise ValidationError(f"task {self.id!r} has no train pairs")
        if not self.test_inputs:
            raise ValidationError(f"task {self.id!r} has no test inputs")
        if self.test_outputs is not None and len(self.test_outputs) != len(self.test_inputs):
            raise ValidationError(
                f"task {self.id!r}: {len(self.test_outputs)} test outputs "
                f"for {len(self.test_inputs)} test inputs"
            )

    @property
    def k(self) -> int:
        return len(self.train)


@dataclass(frozen=True)
class Solution:
    grid: Grid


def grids_equal(a: Grid, b: Grid) -> bool:
    return a.cells == b.cells


def _grid_field(raw, task_id, field_name):
    try:
        return Grid.from_list(raw)
    except ValidationError as e:
        raise ValidationError(f"task {task_id!r}, {field_name}: {e}") from None


def task_from_dict(task_id: str, d: Mapping) -> Task:
    if not isinstance(d, Mapping):
        raise FormatError(task_id, "<task>", "expected an object")
    for key in ("train", "test"):
        if key not in d:
            raise FormatError(task_id, key, "missing")
        if not isinstance(d[key], list):
            raise FormatError(task_id, key, "expected a list")
    train = []
    for i, pair in enumerate(d["train"]):
        if not isinstance(pair, Mapping) or "input" not in pair or "output" not in pair:
            raise FormatError(task_id, f"train[{i}]", "expected {input, output}")
        train.append(ExamplePair(
            _grid_field(pair["input"], task_id, f"train[{i}].input"),
            _grid_field(pair["output"], task_id, f"train[{i}].output"),
        ))
    test_in, test_out = [], []
    for i, item in enumerate(d["test"]):
        if not isinstance(item, Mapping) or "input" not in item:
            raise FormatError(task_id, f"test[{i}]", "expected {input[, output]}")
        test_in.append(_grid_field(item["input"], task_id, f"test[{i}].input"))
        if "output" in item:
            test_out.append(_grid_field(item["output"], task_id, f"test[{i}].output"))
    if test_out and len(test_out) != len(test_in):
        raise FormatError(task_id, "test", "output present for some test inputs only")
    try:
        return Task(task_id, tuple(train), tuple(test_in), tuple(test_out) if test_out else None)
    except ValidationError as e:
        raise FormatError(task_id, "train" if not train else "test", str(e)) from None


def task_to_dict(t: Task) -> dict:
    test = []
    for i, g in enumerate(t.test_inputs):
        item = {"input": g.to_list()}
        if t.test_outputs is not None:
            item["output"] = t.test_outputs[i].to_list()
        test.append(item)
    return {
        "train": [{"input": p.input.to_list(), "output": p.output.to_list()} for p in t.train],
        "test": test,
    }


def load_tasks(path) -> list[Task]:
    """Read an ARC task map (``{task_id: {"train": [...], "test": [...]}}``)."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError("<file>", "<json>", str(e)) from None
    if not isinstance(data, Mapping):
        raise FormatError("<file>", "<root>", "expected a map from task id to task")
    return [task_from_dict(str(tid), body) for tid, body in data.items()]


def save_tasks(tasks: Sequence[Task], path) -> None:
    Path(path).write_text(json.dumps({t.id: task_to_dict(t) for t in tasks}))


def write_submission(results: Mapping[str, Sequence[tuple[Grid | None, Grid | None]]], path) -> None:
    """Write ``{task_id: [{"attempt_1": grid, "attempt_2": grid}, ...]}``.

    A missing attempt (``None``) becomes the 1x1 zero grid and is logged.
    """
    out = {}
    for tid, attempts in results.items():
        rows = []
        for i, pair in enumerate(attempts):
            if len(pair) != 2:
                raise ValidationError(f"task {tid!r} test {i}: expected two attempts")
            fixed = []
            for g in pair:
                if g is None:
                    log.warning("task %s test %d: no candidate, using 1x1 zero grid", tid, i)
                    g = ZERO_GRID
                if not isinstance(g, Grid):
                    g = Grid.from_list(g)
                fixed.append(g.to_list())
            rows.append({"attempt_1": fixed[0], "attempt_2": fixed[1]})
        out[tid] = rows
    Path(path).write_text(json.dumps(out))


def load_submission(path) -> dict[str, list[tuple[Grid, Grid]]]:
    data = json.loads(Path(path).read_text())
    out = {}
    for tid, rows in data.items():
        pairs = []
        for i, row in enumerate(rows):
            try:
                pairs.append((Grid.from_list(row["attempt_1"]), Grid.from_list(row["attempt_2"])))
            except (KeyError, TypeError):
                raise FormatError(tid, f"[{i}]", "expected attempt_1 and attempt_2") from None
        out[tid] = pairs
    return out
