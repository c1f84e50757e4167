"""Hand-written toy models for search tests."""

import math

import numpy as np

from pxs.model import LocalModel
from pxs.tokenizer import BOS, EOS, VOCAB_SIZE


class DictModel(LocalModel):
    """Next-token probabilities keyed by the tokens generated after bos.

    ``table`` maps a tuple of tokens to ``{token: probability}``; missing
    prefixes put all mass on eos.
    """

    kind = "dict"

    def __init__(self, table):
        self.table = {tuple(k): v for k, v in table.items()}

    def initial_state(self):
        return None

    def advance(self, state, token, history):
        if state is None:
            assert token == BOS
            return ()
        return state + (token,)

    def logprobs(self, state):
        lp = np.full(VOCAB_SIZE, -math.inf)
        for tok, p in self.table.get(state, {EOS: 1.0}).items():
            lp[tok] = math.log(p) if p > 0 else -math.inf
        return lp


A, B, X, Y, Z = 10, 11, 12, 13, 14

# greedy takes A then a coin-flip child (0.3); the B branch is worth 0.4
TRAP = DictModel({
    (): {A: 0.6, B: 0.4},
    (A,): {X: 0.5, Y: 0.5},
    (B,): {Z: 1.0},
})
