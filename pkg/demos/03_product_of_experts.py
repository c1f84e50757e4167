"""Why multiply the views instead of averaging them.

Each simulated expert is a noisy copy of the true distribution over eight
candidates.  Pooling sixteen of them by product (sum of log-probabilities)
cancels independent noise; the arithmetic mean, the minimum and the maximum
are each dominated by a few outlying views.

Run: python3 demos/03_product_of_experts.py
"""

import numpy as np

from pxs.scorer import aggregate
from pxs.studies import product_dominance_study, rank_study

# A two-candidate, two-view toy: candidate 0 is moderately liked by both views,
# candidate 1 is loved by one view and rejected by the other.
L = np.array([[-1.0, -1.0], [-0.1, -5.0]])
for rule in ("product", "sum", "min", "max"):
    print(f"{rule:8s} scores {np.round(aggregate(L, rule), 3)} -> picks candidate {int(np.argmax(aggregate(L, rule)))}")

print()
study = product_dominance_study(trials=30, seed=1)
for rule in study.accuracies:
    print(f"{rule:8s} mean top-2 accuracy {study.mean(rule):.3f}")
print(f"product at least as good as every other rule in {study.product_wins}/{study.trials} trials")

product, single = rank_study(seed=1)
print(f"mean rank of the true answer: product {product:.2f}, one random view {single:.2f}")
