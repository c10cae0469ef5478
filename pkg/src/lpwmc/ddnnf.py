"""Exhaustive decision compilation of CNF into smooth d-DNNF.

The search unit-propagates, splits independent connected components into AND
nodes, and otherwise branches on the most frequent variable of the residual
clause set, yielding an OR of the two (mutually inconsistent) phases. Results
are cached by residual clause set, so equal subproblems share one subgraph.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ResourceLimitError

# LPWMC_DEBUG=1 re-validates decomposability/determinism after every build
DEBUG_CHECKS = os.environ.get("LPWMC_DEBUG", "") not in ("", "0")

__all__ = [
    "DdnnfGraph",
    "CompileStats",
    "compile_cnf",
    "smooth",
    "export_nnf",
    "import_nnf",
    "check_decomposable",
    "check_deterministic",
    "check_smooth",
]

LIT, AND, OR = 0, 1, 2

DEFAULT_CACHE_CAP = 2_000_000


@dataclass
class CompileStats:
    hits: int = 0
    misses: int = 0
    cache_size: int = 0


class DdnnfGraph:
    """Rooted DAG of literal/AND/OR nodes, children stored before parents."""

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.kinds: List[int] = []
        self.lits: List[int] = []
        self.children: List[Tuple[int, ...]] = []
        self.decisions: List[int] = []
        self.masks: List[int] = []
        self.root: int = -1
        self.stats = CompileStats()
        self._index: Dict = {}

    def __len__(self) -> int:
        return len(self.kinds)

    # --- node construction (interned) ---------------------------------------

    def _append(self, kind: int, lit: int, children: Tuple[int, ...], decision: int, mask: int) -> int:
        self.kinds.append(kind)
        self.lits.append(lit)
        self.children.append(children)
        self.decisions.append(decision)
        self.masks.append(mask)
        return len(self.kinds) - 1

    def literal(self, lit: int) -> int:
        key = (LIT, lit)
        node = self._index.get(key)
        if node is None:
            node = self._append(LIT, lit, (), 0, 1 << abs(lit))
            self._index[key] = node
        return node

    def conj(self, parts: Iterable[int], flatten: bool = True) -> int:
        merged: List[int] = []
        for part in parts:
            if self.is_false(part):
                return self.false()
            if flatten and self.kinds[part] == AND:
                merged.extend(self.children[part])
            else:
                merged.append(part)
        merged = sorted(set(merged))
        if len(merged) == 1:
            return merged[0]
        key = (AND, tuple(merged))
        node = self._index.get(key)
        if node is None:
            mask = 0
            for c in merged:
                mask |= self.masks[c]
            node = self._append(AND, 0, tuple(merged), 0, mask)
            self._index[key] = node
        return node

    def disj(self, decision: int, parts: Sequence[int]) -> int:
        parts = [p for p in parts if not self.is_false(p)]
        if not parts:
            return self.false()
        if len(parts) == 1:
            return parts[0]
        parts = sorted(parts)
        key = (OR, decision, tuple(parts))
        node = self._index.get(key)
        if node is None:
            mask = 0
            for c in parts:
                mask |= self.masks[c]
            node = self._append(OR, 0, tuple(parts), decision, mask)
            self._index[key] = node
        return node

    def true(self) -> int:
        return self.conj(())

    def false(self) -> int:
        key = (OR, 0, ())
        node = self._index.get(key)
        if node is None:
            node = self._append(OR, 0, (), 0, 0)
            self._index[key] = node
        return node

    def is_false(self, node: int) -> bool:
        return self.kinds[node] == OR and not self.children[node]

    def is_true(self, node: int) -> bool:
        return self.kinds[node] == AND and not self.children[node]

    @property
    def unsatisfiable(self) -> bool:
        return self.is_false(self.root)

    def satisfied_by(self, assignment: Dict[int, bool]) -> bool:
        """Evaluate the graph as a Boolean function of a total assignment."""
        values: List[Optional[bool]] = [None] * len(self.kinds)
        for i, kind in enumerate(self.kinds):
            if kind == LIT:
                lit = self.lits[i]
                values[i] = assignment[abs(lit)] == (lit > 0)
            elif kind == AND:
                values[i] = all(values[c] for c in self.children[i])
            else:
                values[i] = any(values[c] for c in self.children[i])
        return values[self.root]


# --- compilation -------------------------------------------------------------


def _canonical(clauses: Iterable[Iterable[int]]) -> Optional[Tuple[Tuple[int, ...], ...]]:
    """Sort, dedup, and drop tautologies; None signals an empty clause."""
    out: Set[Tuple[int, ...]] = set()
    for clause in clauses:
        lits = sorted(set(clause), key=lambda l: (abs(l), l < 0))
        if not lits:
            return None
        if any(-l in clause for l in lits):
            continue
        out.add(tuple(lits))
    return tuple(sorted(out))


def compile_cnf(formula, cache_cap: int = DEFAULT_CACHE_CAP) -> DdnnfGraph:
    """Compile a WeightedCNF (or anything with .num_vars/.clauses) to d-DNNF.

    The result is not smooth; UNSAT input yields a graph whose root is the
    distinguished false node.
    """
    graph = DdnnfGraph(formula.num_vars)
    cache: Dict[Tuple, int] = {}
    stats = graph.stats

    canonical = _canonical(formula.clauses)

    def rec(clauses: Tuple[Tuple[int, ...], ...]) -> int:
        if not clauses:
            return graph.true()
        hit = cache.get(clauses)
        if hit is not None:
            stats.hits += 1
            return hit
        stats.misses += 1
        if len(cache) >= cache_cap:
            raise ResourceLimitError(
                f"compilation cache exceeded {cache_cap} entries"
            )
        result = _decide(clauses)
        cache[clauses] = result
        return result

    def _decide(clauses: Tuple[Tuple[int, ...], ...]) -> int:
        units: Set[int] = set()
        work = clauses
        while True:
            new_units = {c[0] for c in work if len(c) == 1}
            new_units -= units
            if not new_units:
                break
            for lit in new_units:
                if -lit in units or -lit in new_units:
                    return graph.false()
            units |= new_units
            simplified = []
            for clause in work:
                if any(l in units for l in clause):
                    continue
                reduced = tuple(l for l in clause if -l not in units)
                if not reduced:
                    return graph.false()
                simplified.append(reduced)
            work = tuple(sorted(set(simplified)))
        if units:
            sub = rec(work)
            if graph.is_false(sub):
                return graph.false()
            return graph.conj([graph.literal(l) for l in sorted(units)] + [sub])

        groups = _components(work)
        if len(groups) > 1:
            parts = []
            for group in groups:
                node = rec(group)
                if graph.is_false(node):
                    return graph.false()
                parts.append(node)
            return graph.conj(parts)

        var = _pick_var(work)
        branches = []
        for lit in (var, -var):
            reduced = []
            dead = False
            for clause in work:
                if lit in clause:
                    continue
                rest = tuple(l for l in clause if l != -lit)
                if not rest:
                    dead = True
                    break
                reduced.append(rest)
            if dead:
                continue
            sub = rec(tuple(sorted(set(reduced))))
            if graph.is_false(sub):
                continue
            branches.append(graph.conj([graph.literal(lit), sub]))
        return graph.disj(var, branches)

    if canonical is None:
        graph.root = graph.false()
    else:
        graph.root = rec(canonical)
    stats.cache_size = len(cache)
    graph = _compact(graph)
    if DEBUG_CHECKS:
        assert check_decomposable(graph)
        assert check_deterministic(graph)
    return graph


def _components(clauses: Sequence[Tuple[int, ...]]) -> List[Tuple[Tuple[int, ...], ...]]:
    parent: Dict[int, int] = {}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for clause in clauses:
        first = abs(clause[0])
        for lit in clause:
            parent.setdefault(abs(lit), abs(lit))
        parent.setdefault(first, first)
        for lit in clause[1:]:
            ra, rb = find(first), find(abs(lit))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    groups: Dict[int, List[Tuple[int, ...]]] = {}
    for clause in clauses:
        groups.setdefault(find(abs(clause[0])), []).append(clause)
    return [tuple(groups[key]) for key in sorted(groups)]


def _pick_var(clauses: Sequence[Tuple[int, ...]]) -> int:
    counts: Dict[int, int] = {}
    for clause in clauses:
        for lit in clause:
            var = abs(lit)
            counts[var] = counts.get(var, 0) + 1
    best_var, best_count = 0, -1
    for var, count in counts.items():
        if count > best_count or (count == best_count and var < best_var):
            best_var, best_count = var, count
    return best_var


# --- smoothing ---------------------------------------------------------------


def smooth(graph: DdnnfGraph, all_vars: Optional[Iterable[int]] = None) -> DdnnfGraph:
    """Equalize the variable sets of every OR node's children and pad the root
    so it mentions every variable. Preserves weighted model counts over the
    full variable set; required before marginal evaluation."""
    if all_vars is None:
        all_vars = range(1, graph.num_vars + 1)
    target_mask = 0
    for v in all_vars:
        target_mask |= 1 << v

    out = DdnnfGraph(graph.num_vars)
    gadgets: Dict[int, int] = {}

    def gadget(var: int) -> int:
        node = gadgets.get(var)
        if node is None:
            node = out.disj(var, [out.literal(var), out.literal(-var)])
            gadgets[var] = node
        return node

    def pad(node: int, missing_mask: int) -> int:
        if not missing_mask:
            return node
        parts = [node]
        v = 1
        while missing_mask:
            if missing_mask & 2:
                parts.append(gadget(v))
            missing_mask >>= 1
            v += 1
        return out.conj(parts, flatten=False)

    mapping: List[int] = [0] * len(graph)
    for i, kind in enumerate(graph.kinds):
        if kind == LIT:
            mapping[i] = out.literal(graph.lits[i])
        elif kind == AND:
            mapping[i] = out.conj([mapping[c] for c in graph.children[i]], flatten=False)
        else:
            kids = graph.children[i]
            if not kids:
                mapping[i] = out.false()
                continue
            union = 0
            for c in kids:
                union |= graph.masks[c]
            new_kids = [
                pad(mapping[c], union & ~graph.masks[c] & ~1) for c in kids
            ]
            mapping[i] = out.disj(graph.decisions[i], new_kids)

    root = mapping[graph.root]
    if not graph.is_false(graph.root):
        root = pad(root, target_mask & ~out.masks[root] & ~1)
    out.root = root
    out.stats = graph.stats
    out = _compact(out)
    if DEBUG_CHECKS:
        assert check_decomposable(out)
        assert check_deterministic(out)
        assert check_smooth(out)
    return out


def _compact(graph: DdnnfGraph) -> DdnnfGraph:
    """Drop nodes unreachable from the root (flattening can orphan a node)."""
    seen = {graph.root}
    stack = [graph.root]
    while stack:
        node = stack.pop()
        for c in graph.children[node]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    if len(seen) == len(graph):
        return graph
    order = sorted(seen)
    remap = {old: new for new, old in enumerate(order)}
    out = DdnnfGraph(graph.num_vars)
    for old in order:
        out._append(
            graph.kinds[old],
            graph.lits[old],
            tuple(remap[c] for c in graph.children[old]),
            graph.decisions[old],
            graph.masks[old],
        )
    out.root = remap[graph.root]
    out.stats = graph.stats
    return out


# --- serialization and checks ------------------------------------------------


def export_nnf(graph: DdnnfGraph) -> str:
    """c2d-style trace: ``nnf <nodes> <edges> <vars>`` then one node per line,
    children before parents. True is the empty AND (``A 0``)."""
    edges = sum(len(c) for c in graph.children)
    lines = [f"nnf {len(graph)} {edges} {graph.num_vars}"]
    for i, kind in enumerate(graph.kinds):
        if kind == LIT:
            lines.append(f"L {graph.lits[i]}")
        elif kind == AND:
            kids = " ".join(str(c) for c in graph.children[i])
            lines.append(f"A {len(graph.children[i])}" + (f" {kids}" if kids else ""))
        else:
            kids = " ".join(str(c) for c in graph.children[i])
            lines.append(
                f"O {graph.decisions[i]} {len(graph.children[i])}"
                + (f" {kids}" if kids else "")
            )
    return "\n".join(lines) + "\n"


def import_nnf(text: str) -> DdnnfGraph:
    lines = [l for l in (raw.strip() for raw in text.splitlines()) if l]
    head = lines[0].split()
    if head[0] != "nnf":
        raise ValueError("missing nnf header")
    num_vars = int(head[3])
    graph = DdnnfGraph(num_vars)
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "L":
            lit = int(parts[1])
            graph._append(LIT, lit, (), 0, 1 << abs(lit))
        elif parts[0] == "A":
            kids = tuple(int(x) for x in parts[2:])
            mask = 0
            for c in kids:
                mask |= graph.masks[c]
            graph._append(AND, 0, kids, 0, mask)
        elif parts[0] == "O":
            decision = int(parts[1])
            kids = tuple(int(x) for x in parts[3:])
            mask = 0
            for c in kids:
                mask |= graph.masks[c]
            graph._append(OR, 0, kids, decision, mask)
        else:
            raise ValueError(f"bad nnf line: {line}")
    graph.root = len(graph) - 1
    return graph


def check_decomposable(graph: DdnnfGraph) -> bool:
    for i, kind in enumerate(graph.kinds):
        if kind != AND:
            continue
        union, total = 0, 0
        for c in graph.children[i]:
            union |= graph.masks[c]
            total += graph.masks[c].bit_count()
        if union.bit_count() != total:
            return False
    return True


def _forced_phase(graph: DdnnfGraph, node: int, var: int) -> Optional[bool]:
    """Phase the subgraph forces on ``var``, descending through AND nesting."""
    if graph.kinds[node] == LIT and abs(graph.lits[node]) == var:
        return graph.lits[node] > 0
    if graph.kinds[node] == AND:
        for c in graph.children[node]:
            phase = _forced_phase(graph, c, var)
            if phase is not None:
                return phase
    return None


def check_deterministic(graph: DdnnfGraph) -> bool:
    """Structural determinism: every OR's children fix the decision variable
    to distinct phases."""
    for i, kind in enumerate(graph.kinds):
        if kind != OR or len(graph.children[i]) < 2:
            continue
        var = graph.decisions[i]
        phases = [_forced_phase(graph, c, var) for c in graph.children[i]]
        if None in phases or len(set(phases)) != len(phases):
            return False
    return True


def check_smooth(graph: DdnnfGraph, all_vars: Optional[Iterable[int]] = None) -> bool:
    for i, kind in enumerate(graph.kinds):
        if kind != OR:
            continue
        masks = {graph.masks[c] for c in graph.children[i]}
        if len(masks) > 1:
            return False
    if all_vars is not None and not graph.is_false(graph.root):
        target = 0
        for v in all_vars:
            target |= 1 << v
        if graph.masks[graph.root] != target:
            return False
    return True
