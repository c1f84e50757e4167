"""Compare the candidates that different decoders recover from one model.

Threshold DFS returns every answer whose probability clears the threshold;
greedy, sampling and beam search return whatever they happen to reach.  The
model here is a seeded random table over a five-token alphabet, small enough
that the DFS result can be checked against brute-force enumeration.

Run: python3 demos/02_search_strategies.py
"""

import math

from pxs.model import TableModel
from pxs.search import SearchBudget, beam_sample, dfs_sample, greedy_sample, stochastic_sample
from pxs.tokenizer import BOS, EOS

model = TableModel(seed=42, support=(EOS, 6, 7, 8, 9), concentration=0.5)
prompt = [BOS, 20]
depth = 5
limit = len(prompt) + depth


def show(name, cands):
    mass = sum(math.exp(c.gen_logprob) for c in cands)
    best = max((c.gen_logprob for c in cands), default=-math.inf)
    print(f"{name:22s} {len(cands):3d} sequences, total probability {mass:.3f}, best {math.exp(best):.3f}")


for T in (0.2, 0.05, 0.01):
    show(f"dfs T={T}", dfs_sample(model, prompt, SearchBudget(T, max_len=limit)))
show("greedy", greedy_sample(model, prompt, SearchBudget(max_len=limit)))
show("beam width 4", beam_sample(model, prompt, SearchBudget(beam_width=4, max_len=limit)))
show("32 samples", stochastic_sample(model, prompt, SearchBudget(samples_per_aug=32, max_len=limit), seed=0))

# The number of DFS results can never exceed 1/T: each one carries more than T of the mass.
for T in (0.2, 0.05, 0.01):
    n = len(dfs_sample(model, prompt, SearchBudget(T, max_len=limit)))
    print(f"T={T}: {n} results <= {1 / T:.0f}")
