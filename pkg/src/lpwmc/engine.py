"""End-to-end inference: ground, convert, compile, evaluate.

A Pipeline caches one compiled circuit per (query set, evidence) pair so
repeated tasks against the same program reuse the expensive compilation.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Sequence, Tuple

from . import circuit as circuit_mod
from . import oracle
from .ddnnf import compile_cnf, smooth
from .errors import ZeroProbabilityEvidenceError
from .formula import assert_evidence, rules_to_formula
from .grounding import (
    DEFAULT_MAX_ATOMS,
    GroundProgram,
    full_grounding,
    relevant_ground_program,
)
from .syntax import Atom, PartialInterpretation, Program

__all__ = ["Pipeline", "prob_evidence", "marginals", "mpe_task", "program_mln"]


class Pipeline:
    def __init__(
        self,
        program: Program,
        params: Optional[Sequence[float]] = None,
        max_atoms: int = DEFAULT_MAX_ATOMS,
    ):
        self.program = program
        self.params = params
        self.max_atoms = max_atoms
        self._compiled: Dict = {}
        self._full: Optional[GroundProgram] = None

    def compiled(
        self, queries: Iterable[Atom], evidence: PartialInterpretation
    ) -> Tuple[GroundProgram, circuit_mod.ArithmeticCircuit]:
        key = (
            tuple(sorted(str(q) for q in set(queries))),
            tuple((str(a), v) for a, v in evidence.items()),
        )
        entry = self._compiled.get(key)
        if entry is None:
            ground = relevant_ground_program(
                self.program, queries, evidence, max_atoms=self.max_atoms
            )
            formula = assert_evidence(
                rules_to_formula(ground, self.params), evidence
            )
            graph = smooth(compile_cnf(formula))
            ac = circuit_mod.to_arithmetic_circuit(graph, formula)
            entry = (ground, ac)
            self._compiled[key] = entry
        return entry

    def full_ground(self) -> GroundProgram:
        if self._full is None:
            self._full = full_grounding(self.program, max_atoms=self.max_atoms)
        return self._full

    # --- tasks ---------------------------------------------------------------

    def prob_evidence(self, evidence: PartialInterpretation) -> float:
        _, ac = self.compiled((), evidence)
        return ac.evaluate()

    def marginals(
        self, queries: Iterable[Atom], evidence: PartialInterpretation
    ) -> Dict[Atom, float]:
        queries = list(queries)
        _, ac = self.compiled(queries, evidence)
        pe, joint = ac.literal_marginals()
        if pe == 0.0:
            raise ZeroProbabilityEvidenceError(list(evidence.items()))
        out: Dict[Atom, float] = {}
        for q in queries:
            var = ac.formula.var_of(q)
            out[q] = joint.get(var, 0.0) / pe if var is not None else 0.0
        return out

    def mpe(
        self, evidence: PartialInterpretation
    ) -> Tuple[PartialInterpretation, float]:
        """Most probable world: circuit max-trace over the relevant ground
        program, irrelevant facts set independently to their heavier phase,
        remaining derived atoms completed by the well-founded model."""
        ground, ac = self.compiled((), evidence)
        if ac.evaluate() == 0.0:
            raise ZeroProbabilityEvidenceError(list(evidence.items()))
        circuit_assignment, _ = circuit_mod.mpe(ac)

        full = self.full_ground()
        chosen = set()
        probability = 1.0
        for fact in full.prob_facts:
            atom = full.atom_of(fact.atom_id)
            p = self._fact_prob(fact)
            value = circuit_assignment.get(atom)
            if value is None:
                value = p >= 0.5
            if value:
                chosen.add(fact.atom_id)
                probability *= p
            else:
                probability *= 1.0 - p
        model = oracle.wfm(full.rules, chosen, full.num_atoms)
        if not model.two_valued:
            from .errors import UnsoundProgramError

            raise UnsoundProgramError(
                full.atom_of(i) for i in sorted(model.undefined)
            )
        assignment = {}
        for i in range(1, full.num_atoms + 1):
            atom = full.atom_of(i)
            if atom not in evidence:
                assignment[atom] = bool(model.truth[i])
        return PartialInterpretation(assignment), probability

    def _fact_prob(self, fact) -> float:
        if fact.learnable:
            if self.params is None:
                from .errors import SemanticError

                raise SemanticError(
                    "program has learnable parameters without values"
                )
            return float(self.params[fact.param])
        return float(fact.prob)


def program_mln(
    program: Program,
    queries: Iterable[Atom] = (),
    evidence: Optional[PartialInterpretation] = None,
    params: Optional[Sequence[float]] = None,
) -> str:
    """Ground Markov logic network for the program under the given evidence,
    ready for external samplers; its partition function equals P(E=e)."""
    from .formula import export_mln as export_formula

    if evidence is None:
        evidence = PartialInterpretation({})
    ground = relevant_ground_program(program, queries, evidence)
    formula = assert_evidence(rules_to_formula(ground, params), evidence)
    return export_formula(formula)


def prob_evidence(
    program: Program,
    evidence: PartialInterpretation,
    params: Optional[Sequence[float]] = None,
) -> float:
    return Pipeline(program, params).prob_evidence(evidence)


def marginals(
    program: Program,
    queries: Iterable[Atom],
    evidence: PartialInterpretation,
    params: Optional[Sequence[float]] = None,
) -> Dict[Atom, float]:
    return Pipeline(program, params).marginals(queries, evidence)


def mpe_task(
    program: Program,
    evidence: PartialInterpretation,
    params: Optional[Sequence[float]] = None,
) -> Tuple[PartialInterpretation, float]:
    return Pipeline(program, params).mpe(evidence)
