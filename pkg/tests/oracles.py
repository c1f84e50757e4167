"""Independent reference computations used by the tests.

Nothing here calls into the search code: enumeration expands the whole token
tree without any pruning and scores each leaf with the chain rule.
"""

import math

from pxs.tokenizer import EOS


def enumerate_sequences(model, prompt, depth, support):
    """Every continuation over ``support`` that stops at its first eos or at ``depth`` tokens,
    with its exact log-probability."""
    sess = model.session()
    out = {}

    def walk(seq, steps):
        lp = sess.next_distribution(list(prompt) + seq)
        for tok in support:
            path = steps + [float(lp[tok])]
            nxt = seq + [tok]
            if tok == EOS or len(nxt) == depth:
                out[tuple(nxt)] = -math.inf if -math.inf in path else math.fsum(path)
            else:
                walk(nxt, path)

    walk([], [])
    return out


def above_threshold(enumerated, threshold):
    floor = math.log(threshold)
    return {seq: lp for seq, lp in enumerated.items() if lp > floor}
