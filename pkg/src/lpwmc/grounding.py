"""Grounding: relevant ground programs, full groundings, and world sampling.

Both entry points share one instantiation engine: a deterministic least model
is computed for the non-probabilistic predicates (these define the domains of
intensional probabilistic facts), then rules are instantiated bottom-up over
the set of atoms derivable in at least one total choice. The relevant ground
program additionally restricts the result to the rules reachable backward
from the queries and evidence, dropping rules made inactive by the evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ResourceLimitError, SemanticError, UnknownAtomError
from .syntax import (
    Atom,
    Compound,
    Constant,
    Literal,
    PartialInterpretation,
    Program,
    Rule,
    Term,
    Variable,
)

__all__ = [
    "GroundProbFact",
    "GroundProgram",
    "relevant_ground_program",
    "full_grounding",
    "sample_world",
    "sample_worlds",
    "DEFAULT_MAX_ATOMS",
]

DEFAULT_MAX_ATOMS = 10**6


@dataclass(frozen=True)
class GroundProbFact:
    atom_id: int
    prob: Optional[float]
    param: Optional[int]
    origin: int  # index of the source ProbabilisticFact

    @property
    def learnable(self) -> bool:
        return self.param is not None


@dataclass(frozen=True)
class GroundProgram:
    """Ground rules and probabilistic facts over integer atom ids (1-based)."""

    atoms: Tuple[Atom, ...]
    rules: Tuple[Tuple[int, Tuple[int, ...]], ...]  # (head id, signed body ids)
    prob_facts: Tuple[GroundProbFact, ...]
    id_of: Dict[Atom, int] = field(compare=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.id_of:
            object.__setattr__(
                self, "id_of", {a: i + 1 for i, a in enumerate(self.atoms)}
            )

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def atom_of(self, atom_id: int) -> Atom:
        return self.atoms[atom_id - 1]

    def prob_fact_ids(self) -> Set[int]:
        return {f.atom_id for f in self.prob_facts}

    def fact_label(self, f: GroundProbFact) -> str:
        return "t(_)" if f.learnable else repr(float(f.prob))

    def dump(self) -> str:
        """Surface-syntax dump: facts as ``p::atom.``, rules as ``h :- b1,...,bn.``"""
        lines = [f"{self.fact_label(f)}::{self.atom_of(f.atom_id)}." for f in self.prob_facts]
        for head, body in self.rules:
            if not body:
                lines.append(f"{self.atom_of(head)}.")
            else:
                parts = ", ".join(
                    str(self.atom_of(b)) if b > 0 else f"\\+{self.atom_of(-b)}"
                    for b in body
                )
                lines.append(f"{self.atom_of(head)} :- {parts}.")
        return "\n".join(lines) + ("\n" if lines else "")


# --- matching and joins ----------------------------------------------------


def _match_term(pattern: Term, ground: Term, binding: Dict[Variable, Term]) -> bool:
    if isinstance(pattern, Variable):
        bound = binding.get(pattern)
        if bound is None:
            binding[pattern] = ground
            return True
        return bound == ground
    if isinstance(pattern, Constant):
        return pattern == ground
    if isinstance(pattern, Compound):
        if not isinstance(ground, Compound) or pattern.functor != ground.functor:
            return False
        if len(pattern.args) != len(ground.args):
            return False
        return all(
            _match_term(p, g, binding) for p, g in zip(pattern.args, ground.args)
        )
    return False


def _match_atom(
    pattern: Atom, ground: Atom, binding: Dict[Variable, Term]
) -> Optional[Dict[Variable, Term]]:
    if pattern.signature != ground.signature:
        return None
    extended = dict(binding)
    for p, g in zip(pattern.args, ground.args):
        if not _match_term(p, g, extended):
            return None
    return extended


def _join(
    positives: Sequence[Literal],
    atom_set: Set[Atom],
    atoms_by_sig: Dict[Tuple[str, int], List[Atom]],
    binding: Dict[Variable, Term],
    idx: int = 0,
):
    """Enumerate bindings satisfying the positive literals against atom_set."""
    if idx == len(positives):
        yield binding
        return
    goal = positives[idx].atom.substitute(binding)
    if goal.is_ground():
        if goal in atom_set:
            yield from _join(positives, atom_set, atoms_by_sig, binding, idx + 1)
        return
    for candidate in atoms_by_sig.get(goal.signature, ()):
        extended = _match_atom(goal, candidate, binding)
        if extended is not None:
            yield from _join(positives, atom_set, atoms_by_sig, extended, idx + 1)


def _reorder_body(body: Sequence[Literal]) -> Tuple[List[Literal], List[Literal]]:
    positives = [lit for lit in body if lit.positive]
    negatives = [lit for lit in body if not lit.positive]
    return positives, negatives


# --- deterministic predicates ----------------------------------------------


def _deterministic_signatures(program: Program) -> Set[Tuple[str, int]]:
    """Head signatures never (transitively) depending on a probabilistic fact."""
    prob_sigs = program.probabilistic_signatures()
    rules_by_head: Dict[Tuple[str, int], List[Rule]] = {}
    for rule in program.rules:
        rules_by_head.setdefault(rule.head.signature, []).append(rule)

    nondet: Set[Tuple[str, int]] = set(prob_sigs)
    changed = True
    while changed:
        changed = False
        for sig, rules in rules_by_head.items():
            if sig in nondet:
                continue
            for rule in rules:
                if any(lit.atom.signature in nondet for lit in rule.body):
                    nondet.add(sig)
                    changed = True
                    break
    return {sig for sig in rules_by_head if sig not in nondet}


def _det_model(program: Program, det_sigs: Set[Tuple[str, int]]) -> Set[Atom]:
    """Least model of the deterministic part, negation evaluated stratified."""
    det_rules = [r for r in program.rules if r.head.signature in det_sigs]

    # negation inside a deterministic cycle is rejected
    neg_edges = set()
    edges: Dict[Tuple[str, int], Set[Tuple[str, int]]] = {s: set() for s in det_sigs}
    for rule in det_rules:
        for lit in rule.body:
            sig = lit.atom.signature
            if sig in det_sigs:
                edges[rule.head.signature].add(sig)
                if not lit.positive:
                    neg_edges.add((rule.head.signature, sig))
    sccs = _tarjan(edges)
    scc_index = {}
    for i, comp in enumerate(sccs):
        for sig in comp:
            scc_index[sig] = i
    for a, b in neg_edges:
        if scc_index[a] == scc_index[b]:
            raise SemanticError(
                f"deterministic predicate {a[0]}/{a[1]} is defined through "
                "negation of itself"
            )

    model: Set[Atom] = set()
    by_sig: Dict[Tuple[str, int], List[Atom]] = {}
    # Tarjan emits components children-first, so iterating in emission order
    # evaluates lower strata before the rules that negate them.
    for comp in sccs:
        comp_rules = [r for r in det_rules if r.head.signature in comp]
        changed = True
        while changed:
            changed = False
            for rule in comp_rules:
                positives, negatives = _reorder_body(rule.body)
                for binding in _join(positives, model, by_sig, {}):
                    if any(
                        lit.atom.substitute(binding) in model for lit in negatives
                    ):
                        continue
                    head = rule.head.substitute(binding)
                    if head not in model:
                        model.add(head)
                        by_sig.setdefault(head.signature, []).append(head)
                        changed = True
    return model


def _tarjan(edges: Dict) -> List[List]:
    """Iterative Tarjan SCC; components are emitted children-first."""
    index: Dict = {}
    lowlink: Dict = {}
    on_stack: Set = set()
    stack: List = []
    result: List[List] = []
    counter = [0]

    for root in edges:
        if root in index:
            continue
        work = [(root, iter(sorted(edges.get(root, ()), key=str)))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in edges:
                    continue
                if child not in index:
                    index[child] = lowlink[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(sorted(edges.get(child, ()), key=str))))
                    advanced = True
                    break
                if child in on_stack:
                    lowlink[node] = min(lowlink[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                comp = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.append(member)
                    if member == node:
                        break
                result.append(comp)
    return result


# --- instantiation -----------------------------------------------------------


class _Instantiation:
    """Ground probabilistic facts plus all rule instances that can ever fire."""

    def __init__(self, program: Program, max_atoms: int):
        self.program = program
        self.max_atoms = max_atoms
        det_sigs = _deterministic_signatures(program)
        self.det_model = _det_model(program, det_sigs)
        self.fact_instances = self._expand_prob_facts(det_sigs)
        self.pd: Set[Atom] = set()
        self.pd_by_sig: Dict[Tuple[str, int], List[Atom]] = {}
        self.rule_instances: List[Tuple[Atom, Tuple[Tuple[int, Atom], ...]]] = []
        self.instances_by_head: Dict[Atom, List[int]] = {}
        self._compute()

    def _expand_prob_facts(self, det_sigs) -> List[Tuple[Atom, object, object, int]]:
        instances: List[Tuple[Atom, object, object, int]] = []
        seen: Dict[Atom, int] = {}
        declared = {f.atom.signature for f in self.program.prob_facts}
        declared.update(r.head.signature for r in self.program.rules)
        for origin, fact in enumerate(self.program.prob_facts):
            for lit in fact.domain_body:
                sig = lit.atom.signature
                # an undeclared predicate is vacuously deterministic (false)
                if sig not in det_sigs and sig in declared:
                    raise SemanticError(
                        f"domain of {fact.atom} uses {lit.atom.predicate}/"
                        f"{len(lit.atom.args)}, which is not deterministic"
                    )
            if not fact.domain_body:
                solutions = [fact.atom]
            else:
                positives, negatives = _reorder_body(fact.domain_body)
                by_sig: Dict[Tuple[str, int], List[Atom]] = {}
                for atom in self.det_model:
                    by_sig.setdefault(atom.signature, []).append(atom)
                for entries in by_sig.values():
                    entries.sort(key=str)
                found = set()
                for binding in _join(positives, self.det_model, by_sig, {}):
                    if any(
                        lit.atom.substitute(binding) in self.det_model
                        for lit in negatives
                    ):
                        continue
                    found.add(fact.atom.substitute(binding))
                solutions = sorted(found, key=str)
            for atom in solutions:
                if atom in seen:
                    if seen[atom] != origin:
                        raise SemanticError(
                            f"ground probabilistic fact {atom} declared twice"
                        )
                    continue
                seen[atom] = origin
                instances.append((atom, fact.prob, fact.param, origin))
        return instances

    def _add_pd(self, atom: Atom) -> bool:
        if atom in self.pd:
            return False
        if len(self.pd) >= self.max_atoms:
            raise ResourceLimitError(
                f"grounding exceeded the limit of {self.max_atoms} atoms"
            )
        self.pd.add(atom)
        self.pd_by_sig.setdefault(atom.signature, []).append(atom)
        return True

    def _compute(self) -> None:
        for atom, _, _, _ in self.fact_instances:
            self._add_pd(atom)
        rules = self.program.rules
        bodies = [_reorder_body(r.body)[0] for r in rules]
        changed = True
        while changed:
            changed = False
            for rule, positives in zip(rules, bodies):
                for binding in _join(positives, self.pd, self.pd_by_sig, {}):
                    head = rule.head.substitute(binding)
                    if self._add_pd(head):
                        changed = True
        # final deterministic enumeration of instances
        for entries in self.pd_by_sig.values():
            entries.sort(key=str)
        seen_instances = set()
        for rule, positives in zip(rules, bodies):
            for binding in _join(positives, self.pd, self.pd_by_sig, {}):
                head = rule.head.substitute(binding)
                body = tuple(
                    (1 if lit.positive else -1, lit.atom.substitute(binding))
                    for lit in rule.body
                )
                key = (head, body)
                if key in seen_instances:
                    continue
                seen_instances.add(key)
                self.rule_instances.append(key)
                self.instances_by_head.setdefault(head, []).append(
                    len(self.rule_instances) - 1
                )

    def program_symbols(self) -> Set[str]:
        symbols: Set[str] = set()

        def collect(term: Term):
            if isinstance(term, Constant):
                symbols.add(term.name)
            elif isinstance(term, Compound):
                symbols.add(term.functor)
                for a in term.args:
                    collect(a)

        for fact in self.program.prob_facts:
            for a in fact.atom.args:
                collect(a)
            for lit in fact.domain_body:
                for a in lit.atom.args:
                    collect(a)
        for rule in self.program.rules:
            for a in rule.head.args:
                collect(a)
            for lit in rule.body:
                for a in lit.atom.args:
                    collect(a)
        return symbols

    def known_signatures(self) -> Set[Tuple[str, int]]:
        sigs = {f.atom.signature for f in self.program.prob_facts}
        sigs.update(r.head.signature for r in self.program.rules)
        return sigs


def _atom_symbols(atom: Atom) -> Set[str]:
    symbols: Set[str] = set()

    def collect(term: Term):
        if isinstance(term, Constant):
            symbols.add(term.name)
        elif isinstance(term, Compound):
            symbols.add(term.functor)
            for a in term.args:
                collect(a)

    for a in atom.args:
        collect(a)
    return symbols


class _Builder:
    """Accumulates atoms/rules/facts in discovery order and freezes them."""

    def __init__(self, inst: _Instantiation):
        self.inst = inst
        self.atom_ids: Dict[Atom, int] = {}
        self.atoms: List[Atom] = []
        self.rules: List[Tuple[int, Tuple[int, ...]]] = []
        self.facts: List[GroundProbFact] = []
        self.fact_by_atom = {a: (a, p, q, o) for a, p, q, o in inst.fact_instances}
        self.fact_added: Set[Atom] = set()

    def intern(self, atom: Atom) -> int:
        atom_id = self.atom_ids.get(atom)
        if atom_id is None:
            self.atoms.append(atom)
            atom_id = len(self.atoms)
            self.atom_ids[atom] = atom_id
            entry = self.fact_by_atom.get(atom)
            if entry is not None and atom not in self.fact_added:
                self.fact_added.add(atom)
                _, prob, param, origin = entry
                self.facts.append(GroundProbFact(atom_id, prob, param, origin))
        return atom_id

    def add_rule(self, head: Atom, body: Tuple[Tuple[int, Atom], ...]) -> None:
        head_id = self.intern(head)
        body_ids = tuple(sign * self.intern(atom) for sign, atom in body)
        self.rules.append((head_id, body_ids))

    def build(self) -> GroundProgram:
        return GroundProgram(
            atoms=tuple(self.atoms),
            rules=tuple(self.rules),
            prob_facts=tuple(self.facts),
        )


def full_grounding(program: Program, max_atoms: int = DEFAULT_MAX_ATOMS) -> GroundProgram:
    """Every rule instance that can fire in some total choice, plus all facts."""
    inst = _Instantiation(program, max_atoms)
    builder = _Builder(inst)
    for atom, _, _, _ in inst.fact_instances:
        builder.intern(atom)
    for head, body in inst.rule_instances:
        builder.add_rule(head, body)
    return builder.build()


def relevant_ground_program(
    program: Program,
    queries: Iterable[Atom] = (),
    evidence: Optional[PartialInterpretation] = None,
    max_atoms: int = DEFAULT_MAX_ATOMS,
) -> GroundProgram:
    """The part of the grounding reachable backward from queries and evidence.

    Rules with a body literal false under the evidence are dropped; rules with
    body literals true under the evidence are kept unsimplified.
    """
    if evidence is None:
        evidence = PartialInterpretation({})
    inst = _Instantiation(program, max_atoms)
    known_sigs = inst.known_signatures()
    symbols = inst.program_symbols()

    seeds: List[Atom] = []
    for atom in sorted(set(queries), key=str):
        seeds.append(atom)
    for atom, _ in evidence.items():
        seeds.append(atom)
    for atom in seeds:
        if not atom.is_ground():
            raise SemanticError(f"query/evidence atom is not ground: {atom}")
        if atom in inst.pd:
            continue
        if atom.signature not in known_sigs or not _atom_symbols(atom) <= symbols:
            raise UnknownAtomError(
                f"atom {atom} does not occur in the program's Herbrand base"
            )

    builder = _Builder(inst)
    queue: List[Atom] = []
    queued: Set[Atom] = set()
    for atom in seeds:
        if atom not in queued:
            queued.add(atom)
            queue.append(atom)

    head = 0
    while head < len(queue):
        atom = queue[head]
        head += 1
        builder.intern(atom)
        for idx in inst.instances_by_head.get(atom, ()):
            rule_head, body = inst.rule_instances[idx]
            inactive = False
            for sign, batom in body:
                value = evidence.get(batom)
                if value is not None and value != (sign > 0):
                    inactive = True
                    break
            if inactive:
                continue
            builder.add_rule(rule_head, body)
            for _, batom in body:
                if batom not in queued:
                    queued.add(batom)
                    queue.append(batom)
    return builder.build()


def sample_world(
    program: Program,
    seed: int,
    params: Optional[Sequence[float]] = None,
) -> PartialInterpretation:
    """Draw each ground probabilistic fact independently, then complete the
    world with the well-founded model of the chosen facts."""
    import random

    return _sample(full_grounding(program), random.Random(seed), params)


def sample_worlds(
    program: Program,
    count: int,
    seed: int,
    params: Optional[Sequence[float]] = None,
) -> List[PartialInterpretation]:
    """Like sample_world, but grounds once and draws ``count`` worlds."""
    import random

    ground = full_grounding(program)
    rng = random.Random(seed)
    return [_sample(ground, rng, params) for _ in range(count)]


def _sample(ground: GroundProgram, rng, params) -> PartialInterpretation:
    from . import oracle

    true_facts = set()
    for f in ground.prob_facts:
        if f.learnable:
            if params is None:
                raise SemanticError(
                    f"cannot sample {ground.atom_of(f.atom_id)}: learnable "
                    "parameter has no value"
                )
            p = params[f.param]
        else:
            p = f.prob
        if rng.random() < p:
            true_facts.add(f.atom_id)
    model = oracle.wfm(ground.rules, true_facts, ground.num_atoms)
    if not model.two_valued:
        from .errors import UnsoundProgramError

        raise UnsoundProgramError(
            ground.atom_of(i) for i in sorted(model.undefined)
        )
    assignment = {
        ground.atom_of(i): bool(model.truth[i]) for i in range(1, ground.num_atoms + 1)
    }
    return PartialInterpretation(assignment)
