"""Ground rules to weighted CNF: completion, loop unfolding, evidence, exports.

Derived atoms are defined by their completion (head iff disjunction of
bodies). Mutual positive recursion is eliminated first by unfolding each
strongly connected component of k atoms into k level-indexed copies: the
level-j copy holds iff some body fires with in-component atoms read at level
j-1 (level 0 being all-false), and the original atom takes the level-k
definition. The transformed system is acyclic, so completion is exact.

Dependency cycles through negation are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from .errors import NotStratifiedError, SemanticError, UnknownAtomError
from .grounding import GroundProgram, _tarjan
from .syntax import Atom, PartialInterpretation

__all__ = [
    "WeightedCNF",
    "rules_to_formula",
    "assert_evidence",
    "export_dimacs",
    "import_dimacs",
    "export_mln",
    "ROLE_PROBABILISTIC",
    "ROLE_DERIVED",
    "ROLE_AUXILIARY",
]

ROLE_PROBABILISTIC = "probabilistic"
ROLE_DERIVED = "derived"
ROLE_AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class WeightedCNF:
    num_vars: int
    clauses: Tuple[Tuple[int, ...], ...]
    weight: Dict[int, float]  # signed literal -> weight
    role: Dict[int, str]
    var_atom: Dict[int, Union[Atom, str]]  # auxiliaries map to synthetic names
    evidence_units: Tuple[Tuple[int, ...], ...] = ()
    param_of: Dict[int, int] = field(default_factory=dict)  # var -> parameter index

    def var_of(self, atom: Atom) -> Optional[int]:
        index = self.__dict__.get("_var_index")
        if index is None:
            index = {a: v for v, a in self.var_atom.items() if isinstance(a, Atom)}
            self.__dict__["_var_index"] = index
        return index.get(atom)

    def name_of(self, var: int) -> str:
        return str(self.var_atom[var])

    def vars_with_role(self, role: str) -> List[int]:
        return [v for v in range(1, self.num_vars + 1) if self.role[v] == role]

    def __eq__(self, other):
        if not isinstance(other, WeightedCNF):
            return NotImplemented
        return (
            self.num_vars == other.num_vars
            and self.clauses == other.clauses
            and self.weight == other.weight
            and self.role == other.role
            and self.var_atom == other.var_atom
            and self.evidence_units == other.evidence_units
        )


def rules_to_formula(
    ground: GroundProgram, params: Optional[Sequence[float]] = None
) -> WeightedCNF:
    """CNF whose models, restricted to the original atoms, are exactly the
    models of the ground program. Evidence is not asserted here."""
    num_original = ground.num_atoms
    prob_ids = ground.prob_fact_ids()

    definitions: Dict[int, List[Tuple[int, ...]]] = {
        v: [] for v in range(1, num_original + 1) if v not in prob_ids
    }
    for head, body in ground.rules:
        if head in prob_ids:
            raise SemanticError(
                f"probabilistic atom {ground.atom_of(head)} occurs as a rule head"
            )
        definitions[head].append(body)

    _reject_negative_loops(definitions, prob_ids, ground)

    names: Dict[int, Union[Atom, str]] = {
        v: ground.atom_of(v) for v in range(1, num_original + 1)
    }
    next_var = [num_original]

    def fresh_var(name: str) -> int:
        next_var[0] += 1
        names[next_var[0]] = name
        return next_var[0]

    definitions = _unfold_positive_loops(definitions, names, fresh_var)

    clauses: List[Tuple[int, ...]] = []
    for var in sorted(definitions):
        bodies = definitions[var]
        if not bodies:
            clauses.append((-var,))
            continue
        if len(bodies) == 1:
            body = bodies[0]
            for lit in body:
                clauses.append((-var, lit))
            clauses.append((var,) + tuple(-lit for lit in body))
            continue
        selectors: List[int] = []
        has_true_body = any(len(b) == 0 for b in bodies)
        for i, body in enumerate(bodies):
            if len(body) == 0:
                continue
            if len(body) == 1:
                selectors.append(body[0])
                continue
            sel = fresh_var(f"{names[var]}@b{i}")
            for lit in body:
                clauses.append((-sel, lit))
            clauses.append((sel,) + tuple(-lit for lit in body))
            selectors.append(sel)
        if has_true_body:
            clauses.append((var,))
            continue
        for sel in selectors:
            clauses.append((var, -sel))
        clauses.append((-var,) + tuple(selectors))

    num_vars = next_var[0]
    weight: Dict[int, float] = {}
    role: Dict[int, str] = {}
    param_of: Dict[int, int] = {}
    for v in range(1, num_vars + 1):
        weight[v] = 1.0
        weight[-v] = 1.0
        role[v] = ROLE_DERIVED if v <= num_original else ROLE_AUXILIARY
    for f in ground.prob_facts:
        if f.learnable:
            if params is None:
                raise SemanticError(
                    f"learnable fact {ground.atom_of(f.atom_id)} has no parameter value"
                )
            p = float(params[f.param])
            param_of[f.atom_id] = f.param
        else:
            p = float(f.prob)
        weight[f.atom_id] = p
        weight[-f.atom_id] = 1.0 - p
        role[f.atom_id] = ROLE_PROBABILISTIC

    return WeightedCNF(
        num_vars=num_vars,
        clauses=tuple(clauses),
        weight=weight,
        role=role,
        var_atom=names,
        evidence_units=(),
        param_of=param_of,
    )


def _reject_negative_loops(definitions, prob_ids, ground: GroundProgram) -> None:
    edges: Dict[int, Set[int]] = {v: set() for v in definitions}
    negative: Set[Tuple[int, int]] = set()
    for head, bodies in definitions.items():
        for body in bodies:
            for lit in body:
                var = abs(lit)
                if var in prob_ids:
                    continue
                edges[head].add(var)
                if lit < 0:
                    negative.add((head, var))
    if not negative:
        return
    comp_of: Dict[int, int] = {}
    for i, comp in enumerate(_tarjan(edges)):
        for v in comp:
            comp_of[v] = i
    for head, var in negative:
        if comp_of[head] == comp_of[var]:
            raise NotStratifiedError(
                f"dependency of {ground.atom_of(head)} on \\+{ground.atom_of(var)} "
                "closes a loop through negation: not locally stratified under "
                "this converter"
            )


def _unfold_positive_loops(definitions, names, fresh_var):
    pos_edges: Dict[int, Set[int]] = {v: set() for v in definitions}
    for head, bodies in definitions.items():
        for body in bodies:
            for lit in body:
                if lit > 0 and lit in definitions:
                    pos_edges[head].add(lit)

    loop_sccs = []
    for comp in _tarjan(pos_edges):
        if len(comp) > 1 or (comp[0] in pos_edges[comp[0]]):
            loop_sccs.append(sorted(comp))
    if not loop_sccs:
        return definitions
    loop_sccs.sort(key=lambda comp: comp[0])

    new_definitions = dict(definitions)
    for comp in loop_sccs:
        members = set(comp)
        k = len(comp)
        level_var: Dict[Tuple[int, int], int] = {}
        for j in range(1, k):
            for a in comp:
                level_var[(a, j)] = fresh_var(f"{names[a]}@{j}")
        for a in comp:
            level_var[(a, k)] = a

        for j in range(1, k + 1):
            for a in comp:
                bodies_j: List[Tuple[int, ...]] = []
                for body in definitions[a]:
                    out: List[int] = []
                    dead = False
                    for lit in body:
                        if lit > 0 and lit in members:
                            if j == 1:  # in-component atoms are all false at level 0
                                dead = True
                                break
                            out.append(level_var[(lit, j - 1)])
                        else:
                            out.append(lit)
                    if not dead:
                        bodies_j.append(tuple(out))
                new_definitions[level_var[(a, j)]] = bodies_j
    return new_definitions


def assert_evidence(formula: WeightedCNF, evidence: PartialInterpretation) -> WeightedCNF:
    """Conjoin one unit clause per evidence literal."""
    units: List[Tuple[int, ...]] = []
    for atom, value in evidence.items():
        var = formula.var_of(atom)
        if var is None:
            raise UnknownAtomError(f"evidence atom {atom} does not occur in the formula")
        units.append((var,) if value else (-var,))
    if not units:
        return formula
    return replace(
        formula,
        clauses=formula.clauses + tuple(units),
        evidence_units=formula.evidence_units + tuple(units),
    )


# --- serialization -----------------------------------------------------------


def export_dimacs(formula: WeightedCNF) -> str:
    """Weighted DIMACS: ``c a <var> <name>`` and ``c w <lit> <weight>`` comments.

    Evidence units serialize as ordinary clauses; an import cannot tell them
    apart, so round-tripping is structural only for formulas without asserted
    evidence.
    """
    lines = [f"p cnf {formula.num_vars} {len(formula.clauses)}"]
    for v in range(1, formula.num_vars + 1):
        lines.append(f"c a {v} {formula.name_of(v)}")
    for v in range(1, formula.num_vars + 1):
        lines.append(f"c w {v} {formula.weight[v]!r}")
        lines.append(f"c w {-v} {formula.weight[-v]!r}")
    for clause in formula.clauses:
        lines.append(" ".join(str(l) for l in clause) + " 0")
    return "\n".join(lines) + "\n"


def import_dimacs(text: str) -> WeightedCNF:
    from .parser import parse_atom

    num_vars = 0
    clauses: List[Tuple[int, ...]] = []
    names: Dict[int, Union[Atom, str]] = {}
    weight: Dict[int, float] = {}
    header_seen = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c a "):
            _, _, var, name = line.split(" ", 3)
            var = int(var)
            names[var] = name if "@" in name else parse_atom(name)
            continue
        if line.startswith("c w "):
            _, _, lit, value = line.split(" ", 3)
            weight[int(lit)] = float(value)
            continue
        if line.startswith("c"):
            continue
        if line.startswith("p cnf"):
            parts = line.split()
            num_vars = int(parts[2])
            header_seen = True
            continue
        lits = [int(tok) for tok in line.split()]
        if lits and lits[-1] == 0:
            lits.pop()
        clauses.append(tuple(lits))
    if not header_seen:
        raise SemanticError("missing DIMACS header")
    role: Dict[int, str] = {}
    for v in range(1, num_vars + 1):
        weight.setdefault(v, 1.0)
        weight.setdefault(-v, 1.0)
        names.setdefault(v, f"v{v}@")
        if (weight[v], weight[-v]) != (1.0, 1.0):
            role[v] = ROLE_PROBABILISTIC
        elif isinstance(names[v], str):
            role[v] = ROLE_AUXILIARY
        else:
            role[v] = ROLE_DERIVED
    return WeightedCNF(
        num_vars=num_vars,
        clauses=tuple(clauses),
        weight=weight,
        role=role,
        var_atom=names,
        evidence_units=(),
    )


def export_mln(formula: WeightedCNF) -> str:
    """Ground Markov logic network equivalent to the weighted formula.

    All clauses become hard formulas (``.``-suffixed); every probabilistic
    atom contributes soft unit clauses weighted ln(p) and ln(1-p). Degenerate
    facts (p of exactly 0 or 1) are emitted as hard units instead.
    """
    lines: List[str] = []
    for clause in formula.clauses:
        lines.append(_mln_clause(formula, clause) + " .")
    for v in formula.vars_with_role(ROLE_PROBABILISTIC):
        p = formula.weight[v]
        name = formula.name_of(v)
        if p == 0.0:
            lines.append(f"!{name} .")
        elif p == 1.0:
            lines.append(f"{name} .")
        else:
            lines.append(f"{math.log(p):.12g} {name}")
            lines.append(f"{math.log(1.0 - p):.12g} !{name}")
    return "\n".join(lines) + ("\n" if lines else "")


def _mln_clause(formula: WeightedCNF, clause: Tuple[int, ...]) -> str:
    return " v ".join(
        formula.name_of(l) if l > 0 else f"!{formula.name_of(-l)}" for l in clause
    )
