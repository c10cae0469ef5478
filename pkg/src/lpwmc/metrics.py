"""Evaluation measures for learned programs: closed-form KL divergence and MAE.

Because ground probabilistic facts are independent, the KL divergence of two
programs differing only in fact probabilities decomposes into per-fact terms
``p ln(p/q) + (1-p) ln((1-p)/(1-q))``, each scaled by the number of ground
instances of the fact.
"""

from __future__ import annotations

import math
from typing import List, Sequence

from .errors import SemanticError
from .grounding import full_grounding
from .syntax import Program

__all__ = ["kl_divergence", "mae", "fact_instance_counts"]


def _values(params) -> List[float]:
    if hasattr(params, "param_values"):
        return list(params.param_values)
    return [float(p) for p in params]


def kl_divergence(
    truth, learned, counts: Sequence[float]
) -> float:
    """KL(truth || learned), with 0*ln(0) = 0; a learned probability of
    exactly 0 or 1 against a non-degenerate truth is a support violation."""
    p_vec, q_vec = _values(truth), _values(learned)
    if len(p_vec) != len(q_vec) or len(p_vec) != len(counts):
        raise ValueError("parameter vectors and counts must have equal length")
    total = 0.0
    for p, q, count in zip(p_vec, q_vec, counts):
        total += count * _kl_term(p, q)
    return total


def _kl_term(p: float, q: float) -> float:
    term = 0.0
    if p > 0.0:
        if q == 0.0:
            raise SemanticError(
                f"KL divergence is infinite: learned probability 0 where truth is {p}"
            )
        term += p * math.log(p / q)
    if p < 1.0:
        if q == 1.0:
            raise SemanticError(
                f"KL divergence is infinite: learned probability 1 where truth is {p}"
            )
        term += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return term


def mae(truth, learned) -> float:
    """Mean absolute error over the learnable parameters."""
    p_vec, q_vec = _values(truth), _values(learned)
    if len(p_vec) != len(q_vec):
        raise ValueError("parameter vectors must have equal length")
    if not p_vec:
        return 0.0
    return sum(abs(p - q) for p, q in zip(p_vec, q_vec)) / len(p_vec)


def fact_instance_counts(program: Program) -> List[int]:
    """Ground-instance count per probabilistic fact (source order), taken
    from the full grounding; KL summands are scaled by these."""
    ground = full_grounding(program)
    counts = [0] * len(program.prob_facts)
    for f in ground.prob_facts:
        counts[f.origin] += 1
    return counts
