"""Threshold depth-first candidate search and product-of-experts rescoring
for ARC-style grid puzzles, over an abstract next-token model."""

from .augment import (
    Augmentation,
    AugmentationSetSpec,
    apply_to_solution,
    apply_to_task,
    invert,
    make_augmentation_set,
)
from .grid import ExamplePair, Grid, Solution, Task, grids_equal, load_tasks, write_submission
from .model import ModelBackendSpec, RuleModel, TableModel, make_backend, next_distribution, sequence_logprob
from .pipeline import PipelineConfig, TaskResult, run_batch, solve_task
from .pool import Candidate, Pool, build_pool, pool_stats
from .scorer import ScoreMatrix, aggregate, rank_of, score_candidates, select_top2
from .search import RawCandidate, SearchBudget, beam_sample, dfs_sample, greedy_sample, stochastic_sample
from .theory import geometric_pool, kl, verify_theorem
from .tokenizer import decode_solution, encode_prompt, encode_solution

__version__ = "0.1.0"
