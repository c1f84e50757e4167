"""How a puzzle becomes a token sequence, and how one puzzle becomes sixteen.

Run: python3 demos/01_tokens_and_views.py
"""

from pxs.augment import AugmentationSetSpec, apply_to_task, invert, make_augmentation_set
from pxs.grid import ExamplePair, Grid, Task
from pxs.tokenizer import decode_grid, encode_prompt, encode_solution, render

g = Grid.from_list
task = Task(
    "mirror",
    (ExamplePair(g([[1, 2, 3]]), g([[3, 2, 1]])), ExamplePair(g([[4, 0], [0, 5]]), g([[0, 4], [5, 0]]))),
    (g([[6, 7], [8, 9]]),),
    (g([[7, 6], [9, 8]]),),
)

# The prompt opens with bos and 48 placeholder letters, then each example as
# I <rows> O <rows> eos, then the test input and a bare O waiting for an answer.
prompt = encode_prompt(task)
print(f"prompt has {len(prompt)} tokens:")
print(render(prompt[49:]))

answer = encode_solution(task.test_outputs[0])
print("answer tokens:", answer, "->", repr(render(answer)))
assert decode_grid(answer) == task.test_outputs[0]

# Sixteen views: element 0 is the untouched puzzle, the rest mix a D8 symmetry,
# a colour relabelling and a shuffled example order.
augs = make_augmentation_set(AugmentationSetSpec(16, seed=0), task.k)
for a in augs[:5]:
    view = apply_to_task(a, task)
    back = invert(a).apply_grid(view.test_outputs[0])
    print(f"{a.describe():32s} test output in view {view.test_outputs[0].to_list()}  restored {back == task.test_outputs[0]}")
