"""Norm-based curriculum learning for sequence-to-sequence training.

Desk-scale toolkit: subword corpus preparation, skip-gram embedding
norms as a sentence difficulty signal, competence-driven batch
sampling, difficulty-weighted loss, a compact autodiff transformer,
and beam-search/BLEU evaluation.
"""

__version__ = "0.1.0"
