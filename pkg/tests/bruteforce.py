"""Tiny assignment-enumeration helpers used as test-side ground truth."""

from itertools import product
from typing import Set, Tuple


def cnf_models(num_vars: int, clauses) -> Set[Tuple[bool, ...]]:
    models = set()
    for bits in product((False, True), repeat=num_vars):
        assign = {v: bits[v - 1] for v in range(1, num_vars + 1)}
        if all(any(assign[abs(l)] == (l > 0) for l in clause) for clause in clauses):
            models.add(bits)
    return models


def cnf_wmc(formula) -> float:
    """Weighted model count over *all* variables of the formula."""
    total = 0.0
    for bits in cnf_models(formula.num_vars, formula.clauses):
        weight = 1.0
        for v, value in enumerate(bits, start=1):
            weight *= formula.weight[v if value else -v]
        total += weight
    return total


def graph_models(graph) -> Set[Tuple[bool, ...]]:
    """Models of a d-DNNF over variables 1..num_vars."""
    models = set()
    for bits in product((False, True), repeat=graph.num_vars):
        assign = {v: bits[v - 1] for v in range(1, graph.num_vars + 1)}
        if graph.satisfied_by(assign):
            models.add(bits)
    return models


def oracle_model_set(ground, rows) -> Set[Tuple[bool, ...]]:
    """Worlds from oracle enumeration, as truth tuples over atom ids."""
    return {
        tuple(bool(row.truth[i]) for i in range(1, ground.num_atoms + 1))
        for row in rows
    }
