"""64-symbol vocabulary and the one-token-per-cell task layout."""

from __future__ import annotations

import string
from pathlib import Path
from typing import Sequence

from .errors import ParseError
from .grid import MAX_SIDE, Grid, Solution, Task

PAD, BOS, EOS, NL, IN, OUT = range(6)
DIGIT0 = 6
LETTERS = [c for c in string.ascii_uppercase + string.ascii_lowercase if c not in "IOio"]
LETTER0 = DIGIT0 + 10

SYMBOLS: tuple[str, ...] = (
    ("<pad>", "<bos>", "<eos>", "\n", "I", "O")
    + tuple(str(d) for d in range(10))
    + tuple(LETTERS)
)
VOCAB_SIZE = len(SYMBOLS)
assert VOCAB_SIZE == 64 and len(set(SYMBOLS)) == 64

SYMBOL_TO_ID = {s: i for i, s in enumerate(SYMBOLS)}
PREPROMPT = tuple(range(LETTER0, LETTER0 + len(LETTERS)))


def is_digit(tok: int) -> bool:
    return DIGIT0 <= tok < DIGIT0 + 10


def grid_tokens(g: Grid) -> list[int]:
    out = []
    for row in g.cells:
        out.extend(DIGIT0 + v for v in row)
        out.append(NL)
    return out


def encode_prompt(p: Task, test_index: int = 0) -> list[int]:
    if not 0 <= test_index < len(p.test_inputs):
        raise IndexError(f"test_index {test_index} out of range for task {p.id!r}")
    seq = [BOS, *PREPROMPT]
    for pair in p.train:
        seq.append(IN)
        seq += grid_tokens(pair.input)
        seq.append(OUT)
        seq += grid_tokens(pair.output)
        seq.append(EOS)
    seq.append(IN)
    seq += grid_tokens(p.test_inputs[test_index])
    seq.append(OUT)
    return seq


def encode_solution(s: Solution | Grid) -> list[int]:
    g = s.grid if isinstance(s, Solution) else s
    return grid_tokens(g) + [EOS]


def decode_grid(tokens: Sequence[int]) -> Grid:
    """Parse ``rows + [eos]`` into a grid, raising :class:`ParseError` on any defect."""
    rows: list[tuple[int, ...]] = []
    row: list[int] = []
    n = len(tokens)
    for i, t in enumerate(tokens):
        if is_digit(t):
            row.append(t - DIGIT0)
            if len(row) > MAX_SIDE:
                raise ParseError("oversize", f"row longer than {MAX_SIDE}")
        elif t == NL:
            if not row:
                raise ParseError("empty", f"empty row at position {i}")
            if rows and len(row) != len(rows[0]):
                raise ParseError("ragged", f"row {len(rows)} has {len(row)} cells, expected {len(rows[0])}")
            rows.append(tuple(row))
            row = []
            if len(rows) > MAX_SIDE:
                raise ParseError("oversize", f"more than {MAX_SIDE} rows")
        elif t == EOS:
            if i != n - 1:
                raise ParseError("unterminated", "tokens after eos")
            if row:
                raise ParseError("unterminated", "last row has no newline")
            if not rows:
                raise ParseError("empty", "no rows before eos")
            return Grid(tuple(rows))
        else:
            raise ParseError("alphabet-misuse", f"token {SYMBOLS[t]!r} at position {i}")
    raise ParseError("unterminated", "no eos")


def decode_solution(tokens: Sequence[int]) -> Solution:
    return Solution(decode_grid(tokens))


def prompt_length(p: Task, test_index: int = 0) -> int:
    def block(g):
        return g.rows * g.cols + g.rows

    total = 1 + len(PREPROMPT)
    for pair in p.train:
        total += 2 + block(pair.input) + block(pair.output) + 1
    return total + 1 + block(p.test_inputs[test_index]) + 1


def vocab_text() -> str:
    """``id<TAB>symbol`` lines; the newline symbol is written as ``\\n``."""
    return "".join(f"{i}\t{s.encode('unicode_escape').decode()}\n" for i, s in enumerate(SYMBOLS))


def export_vocab(path) -> None:
    Path(path).write_text(vocab_text())


def load_vocab(path) -> list[str]:
    out = []
    for line in Path(path).read_text().splitlines():
        i, s = line.split("\t")
        assert int(i) == len(out)
        out.append(s.encode().decode("unicode_escape"))
    return out


def render(tokens: Sequence[int]) -> str:
    return "".join(SYMBOLS[t] for t in tokens)
