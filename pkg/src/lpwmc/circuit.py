"""Arithmetic circuits: evaluation, all-marginals, and max-trace passes.

A smooth d-DNNF maps onto the circuit node-for-node: OR becomes sum, AND
becomes product, and every literal leaf becomes ``indicator * weight``.
Evaluating with all indicators at 1 yields the weighted model count;
zeroing ``lambda[l]`` conditions the count on ``l`` being false.

The three passes run on flat CSR buffers through compiled kernels when the
extension built, else through the pure-Python twins (``KERNEL_BACKEND`` says
which).
"""

from __future__ import annotations

import math
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .ddnnf import AND, LIT, DdnnfGraph
from .errors import ZeroProbabilityEvidenceError
from .formula import ROLE_AUXILIARY, WeightedCNF
from .syntax import Atom

try:
    from . import _kernels as _k
except ImportError:  # extension not built; fall back to the Python twins
    from . import _kernels_py as _k

KERNEL_BACKEND = _k.BACKEND

__all__ = [
    "ArithmeticCircuit",
    "to_arithmetic_circuit",
    "evaluate",
    "all_marginals",
    "mpe",
    "KERNEL_BACKEND",
]

K_SUM, K_PRODUCT, K_INDICATOR, K_WEIGHT = 0, 1, 2, 3


class ArithmeticCircuit:
    """Flattened sum/product DAG with indicator and weight leaves."""

    def __init__(self, graph: DdnnfGraph, formula: WeightedCNF):
        self._formula = formula
        kinds: List[int] = []
        children: List[Tuple[int, ...]] = []
        leaf_value: List[float] = []
        self.indicator_node: Dict[int, int] = {}
        self.weight_node: Dict[int, int] = {}

        def add(kind: int, kids: Tuple[int, ...] = (), value: float = 0.0) -> int:
            kinds.append(kind)
            children.append(kids)
            leaf_value.append(value)
            return len(kinds) - 1

        order = _reachable_topo(graph)
        mapping: Dict[int, int] = {}
        for node in order:
            kind = graph.kinds[node]
            if kind == LIT:
                lit = graph.lits[node]
                ind = add(K_INDICATOR, value=1.0)
                wgt = add(K_WEIGHT, value=float(formula.weight[lit]))
                self.indicator_node[lit] = ind
                self.weight_node[lit] = wgt
                mapping[node] = add(K_PRODUCT, (ind, wgt))
            elif kind == AND:
                mapping[node] = add(
                    K_PRODUCT, tuple(mapping[c] for c in graph.children[node])
                )
            else:
                mapping[node] = add(
                    K_SUM, tuple(mapping[c] for c in graph.children[node])
                )
        self.root = mapping[graph.root]

        n = len(kinds)
        self.kinds = np.asarray(kinds, dtype=np.int8)
        ptr = np.zeros(n + 1, dtype=np.int32)
        for i, kids in enumerate(children):
            ptr[i + 1] = ptr[i] + len(kids)
        self.ptr = ptr
        self.idx = np.asarray(
            [c for kids in children for c in kids] or [], dtype=np.int32
        )
        self.base_values = np.asarray(leaf_value, dtype=np.float64)
        self._children = children

    def __len__(self) -> int:
        return len(self.kinds)

    @property
    def formula(self) -> WeightedCNF:
        return self._formula

    def set_weights(self, weight: Mapping[int, float]) -> None:
        """Re-weight leaves in place; the structure never changes."""
        for lit, node in self.weight_node.items():
            self.base_values[node] = float(weight.get(lit, self._formula.weight[lit]))

    def _values(self, indicators: Optional[Mapping[int, float]]) -> np.ndarray:
        values = self.base_values.copy()
        if indicators:
            for lit, value in indicators.items():
                node = self.indicator_node.get(lit)
                if node is not None:
                    values[node] = float(value)
        return values

    def evaluate(
        self,
        indicators: Optional[Mapping[int, float]] = None,
        log_space: bool = False,
    ) -> float:
        """Weighted model count conditioned on the indicator assignment."""
        if log_space:
            return math.exp(self.evaluate_log(indicators))
        values = self._values(indicators)
        return float(_k.eval_forward(self.kinds, self.ptr, self.idx, values))

    def evaluate_log(self, indicators: Optional[Mapping[int, float]] = None) -> float:
        """Forward pass in log space (sums via log-sum-exp); returns ln WMC."""
        values = self._values(indicators)
        logs = [-math.inf if v <= 0.0 else math.log(v) for v in values.tolist()]
        kinds = self.kinds.tolist()
        for i, kind in enumerate(kinds):
            kids = self._children[i]
            if kind == K_SUM:
                if not kids:
                    logs[i] = -math.inf
                else:
                    m = max(logs[c] for c in kids)
                    if m == -math.inf:
                        logs[i] = -math.inf
                    else:
                        logs[i] = m + math.log(
                            sum(math.exp(logs[c] - m) for c in kids)
                        )
            elif kind == K_PRODUCT:
                logs[i] = sum(logs[c] for c in kids)
        return logs[self.root]

    def forward_backward(
        self, indicators: Optional[Mapping[int, float]] = None
    ) -> Tuple[float, np.ndarray]:
        """One upward and one downward pass: root value plus d(root)/d(node)."""
        values = self._values(indicators)
        root_value = float(_k.eval_forward(self.kinds, self.ptr, self.idx, values))
        derivs = np.zeros(len(self.kinds), dtype=np.float64)
        _k.eval_backward(self.kinds, self.ptr, self.idx, values, derivs, self.root)
        return root_value, derivs

    def literal_marginals(
        self, indicators: Optional[Mapping[int, float]] = None
    ) -> Tuple[float, Dict[int, float]]:
        """Root value plus, per literal, the weighted count of models where
        that literal holds (the partial derivative w.r.t. its indicator)."""
        root_value, derivs = self.forward_backward(indicators)
        marginals = {
            lit: float(derivs[node]) for lit, node in self.indicator_node.items()
        }
        return root_value, marginals

    def max_value(self, indicators: Optional[Mapping[int, float]] = None) -> float:
        values = self._values(indicators)
        return float(_k.max_forward(self.kinds, self.ptr, self.idx, values))

    def max_trace(
        self, indicators: Optional[Mapping[int, float]] = None
    ) -> Tuple[Dict[int, bool], float]:
        """Most probable model: assignment over circuit variables and its weight.

        Ties between equal-valued children go to the lowest node id.
        """
        values = self._values(indicators)
        best = float(_k.max_forward(self.kinds, self.ptr, self.idx, values))
        if best == 0.0:
            raise ZeroProbabilityEvidenceError(
                list(self._formula_evidence_items())
            )
        assignment: Dict[int, bool] = {}
        lit_by_node = {node: lit for lit, node in self.indicator_node.items()}
        stack = [self.root]
        seen = set()
        while stack:
            node = stack.pop()
            kind = self.kinds[node]
            kids = self._children[node]
            if kind == K_SUM:
                pick = None
                for c in kids:  # child ids ascend, so > keeps the lowest id
                    if pick is None or values[c] > values[pick]:
                        pick = c
                if pick is not None:
                    stack.append(pick)
            elif kind == K_PRODUCT:
                stack.extend(kids)
            elif kind == K_INDICATOR:
                lit = lit_by_node[node]
                var = abs(lit)
                if var not in seen:
                    seen.add(var)
                    assignment[var] = lit > 0
        return assignment, best

    def _formula_evidence_items(self):
        for clause in self._formula.evidence_units:
            lit = clause[0]
            name = self._formula.var_atom[abs(lit)]
            yield name, lit > 0


def _reachable_topo(graph: DdnnfGraph) -> List[int]:
    seen = {graph.root}
    stack = [graph.root]
    while stack:
        node = stack.pop()
        for c in graph.children[node]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return sorted(seen)


def to_arithmetic_circuit(graph: DdnnfGraph, formula: WeightedCNF) -> ArithmeticCircuit:
    """Structure-preserving conversion; the graph should be smooth unless a
    deliberately non-smooth evaluation is wanted."""
    return ArithmeticCircuit(graph, formula)


def evaluate(
    ac: ArithmeticCircuit,
    indicators: Optional[Mapping[int, float]] = None,
    log_space: bool = False,
) -> float:
    return ac.evaluate(indicators, log_space=log_space)


def all_marginals(
    ac: ArithmeticCircuit, indicators: Optional[Mapping[int, float]] = None
) -> Dict[Atom, float]:
    """P(atom true AND the asserted evidence) for every original atom.

    Auxiliary variables are computed too but filtered from the result.
    """
    _, by_literal = ac.literal_marginals(indicators)
    formula = ac.formula
    out: Dict[Atom, float] = {}
    for var in range(1, formula.num_vars + 1):
        if formula.role[var] == ROLE_AUXILIARY:
            continue
        atom = formula.var_atom[var]
        out[atom] = by_literal.get(var, 0.0)
    return out


def mpe(ac: ArithmeticCircuit) -> Tuple[Dict[Atom, bool], float]:
    """Max-weight model of the circuit over the original atoms."""
    assignment, best = ac.max_trace()
    formula = ac.formula
    out: Dict[Atom, bool] = {}
    for var, value in assignment.items():
        if formula.role[var] != ROLE_AUXILIARY:
            out[formula.var_atom[var]] = value
    return out, best
