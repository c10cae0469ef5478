"""Brute-force reference semantics.

Deliberately naive: enumerate every total choice, complete each with the
well-founded model, and answer EVID/MARG/MPE by filtering rows. Everything
else in the package is tested against this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import (
    ResourceLimitError,
    UnsoundProgramError,
    ZeroProbabilityEvidenceError,
)
from .grounding import GroundProgram
from .syntax import Atom, PartialInterpretation

__all__ = ["WfmResult", "wfm", "enumerate_worlds", "WorldRow", "oracle_evid", "oracle_marg", "oracle_mpe", "ENUMERATION_CAP"]

ENUMERATION_CAP = 24


@dataclass
class WfmResult:
    truth: bytearray  # indexed by atom id; entry 0 unused
    two_valued: bool
    undefined: Set[int]

    def true_atoms(self) -> Set[int]:
        return {i for i in range(1, len(self.truth)) if self.truth[i]}


class _RuleIndex:
    """Rule layout shared by every closure over one ground program."""

    def __init__(self, rules: Sequence[Tuple[int, Tuple[int, ...]]], num_atoms: int):
        self.num_atoms = num_atoms
        self.heads: List[int] = []
        self.pos: List[Tuple[int, ...]] = []
        self.neg: List[Tuple[int, ...]] = []
        self.occ_pos: List[List[int]] = [[] for _ in range(num_atoms + 1)]
        self.has_negation = False
        for head, body in rules:
            r = len(self.heads)
            pos = tuple(b for b in body if b > 0)
            neg = tuple(-b for b in body if b < 0)
            self.heads.append(head)
            self.pos.append(pos)
            self.neg.append(neg)
            if neg:
                self.has_negation = True
            for b in pos:
                self.occ_pos[b].append(r)
        self.base_counts = [len(p) for p in self.pos]

    def closure(self, facts: Iterable[int], allowed_neg: bytearray) -> bytearray:
        """Least model of the reduct: a rule fires only if every negated atom
        is marked allowed (i.e. assumed false)."""
        truth = bytearray(self.num_atoms + 1)
        counts = self.base_counts[:]
        heads = self.heads
        occ = self.occ_pos
        stack: List[int] = []
        for a in facts:
            if not truth[a]:
                truth[a] = 1
                stack.append(a)
        for r, pos in enumerate(self.pos):
            if counts[r] == 0 and self._unblocked(r, allowed_neg):
                h = heads[r]
                if not truth[h]:
                    truth[h] = 1
                    stack.append(h)
        while stack:
            a = stack.pop()
            for r in occ[a]:
                counts[r] -= 1
                if counts[r] == 0 and self._unblocked(r, allowed_neg):
                    h = heads[r]
                    if not truth[h]:
                        truth[h] = 1
                        stack.append(h)
        return truth

    def _unblocked(self, r: int, allowed_neg: bytearray) -> bool:
        for b in self.neg[r]:
            if not allowed_neg[b]:
                return False
        return True


def wfm(
    rules: Sequence[Tuple[int, Tuple[int, ...]]],
    facts: Iterable[int],
    num_atoms: int,
) -> WfmResult:
    """Well-founded model by alternating fixpoint.

    ``rules`` are (head id, signed body ids); ``facts`` are atom ids assumed
    true unconditionally. Returns the model together with whether it is
    two-valued; order of the rules does not affect the result.
    """
    index = _RuleIndex(rules, num_atoms)
    return _wfm_indexed(index, facts)


def _wfm_indexed(index: _RuleIndex, facts: Iterable[int]) -> WfmResult:
    facts = list(facts)
    if not index.has_negation:
        truth = index.closure(facts, bytearray(index.num_atoms + 1))
        return WfmResult(truth, True, set())

    # x underapproximates the true atoms, y overapproximates them
    all_allowed = bytearray([1]) * (index.num_atoms + 1)
    x = index.closure(facts, all_allowed)  # first y, see below
    # start from x0 = emptyset: allowed_neg = complement(emptyset) = everything
    y = x
    x = index.closure(facts, _complement(y))
    while True:
        new_y = index.closure(facts, _complement(x))
        new_x = index.closure(facts, _complement(new_y))
        if new_x == x and new_y == y:
            break
        x, y = new_x, new_y
    undefined = {i for i in range(1, index.num_atoms + 1) if y[i] and not x[i]}
    return WfmResult(x, not undefined, undefined)


def _complement(truth: bytearray) -> bytearray:
    return bytearray(0 if v else 1 for v in truth)


@dataclass
class WorldRow:
    """One total choice with its completed world and probability."""

    choice_mask: int
    truth: bytes
    prob: float
    _ground: GroundProgram

    @property
    def choice(self) -> Tuple[Atom, ...]:
        g = self._ground
        return tuple(
            g.atom_of(f.atom_id)
            for j, f in enumerate(g.prob_facts)
            if self.choice_mask >> j & 1
        )

    @property
    def world(self) -> PartialInterpretation:
        g = self._ground
        return PartialInterpretation(
            {g.atom_of(i): bool(self.truth[i]) for i in range(1, g.num_atoms + 1)}
        )


def enumerate_worlds(
    ground: GroundProgram,
    params: Optional[Sequence[float]] = None,
    max_facts: int = ENUMERATION_CAP,
) -> List[WorldRow]:
    """All 2^n total choices with probabilities; row r makes fact j true iff
    bit (n-1-j) of r is clear, so the all-true choice comes first."""
    facts = ground.prob_facts
    n = len(facts)
    if n > max_facts:
        raise ResourceLimitError(
            f"enumeration over {n} probabilistic facts exceeds the cap of {max_facts}"
        )
    probs = []
    for f in facts:
        if f.learnable:
            if params is None:
                raise ValueError(f"fact {ground.atom_of(f.atom_id)} has no probability")
            probs.append(float(params[f.param]))
        else:
            probs.append(float(f.prob))
    fact_ids = [f.atom_id for f in facts]
    index = _RuleIndex(ground.rules, ground.num_atoms)

    rows: List[WorldRow] = []
    for r in range(1 << n):
        mask = 0
        prob = 1.0
        chosen: List[int] = []
        for j in range(n):
            if (r >> (n - 1 - j)) & 1 == 0:
                mask |= 1 << j
                prob *= probs[j]
                chosen.append(fact_ids[j])
            else:
                prob *= 1.0 - probs[j]
        model = _wfm_indexed(index, chosen)
        if not model.two_valued:
            raise UnsoundProgramError(
                ground.atom_of(i) for i in sorted(model.undefined)
            )
        rows.append(WorldRow(mask, bytes(model.truth), prob, ground))
    return rows


def _evidence_ids(
    ground: GroundProgram, evidence: PartialInterpretation
) -> List[Tuple[Optional[int], bool]]:
    out = []
    for atom, value in evidence.items():
        out.append((ground.id_of.get(atom), value))
    return out


def _consistent(truth: bytes, pairs) -> bool:
    for atom_id, value in pairs:
        if atom_id is None:
            if value:  # an absent atom is false in every world
                return False
            continue
        if bool(truth[atom_id]) != value:
            return False
    return True


def oracle_evid(
    ground: GroundProgram,
    evidence: PartialInterpretation,
    params: Optional[Sequence[float]] = None,
    rows: Optional[List[WorldRow]] = None,
) -> float:
    if rows is None:
        rows = enumerate_worlds(ground, params)
    pairs = _evidence_ids(ground, evidence)
    return sum(row.prob for row in rows if _consistent(row.truth, pairs))


def oracle_marg(
    ground: GroundProgram,
    queries: Iterable[Atom],
    evidence: PartialInterpretation,
    params: Optional[Sequence[float]] = None,
    rows: Optional[List[WorldRow]] = None,
) -> Dict[Atom, float]:
    if rows is None:
        rows = enumerate_worlds(ground, params)
    pairs = _evidence_ids(ground, evidence)
    queries = list(queries)
    ids = [ground.id_of.get(q) for q in queries]
    pe = 0.0
    joint = [0.0] * len(queries)
    for row in rows:
        if not _consistent(row.truth, pairs):
            continue
        pe += row.prob
        for k, atom_id in enumerate(ids):
            if atom_id is not None and row.truth[atom_id]:
                joint[k] += row.prob
    if pe == 0.0:
        raise ZeroProbabilityEvidenceError(list(evidence.items()))
    return {q: joint[k] / pe for k, q in enumerate(queries)}


def oracle_mpe(
    ground: GroundProgram,
    evidence: PartialInterpretation,
    params: Optional[Sequence[float]] = None,
    rows: Optional[List[WorldRow]] = None,
) -> Tuple[PartialInterpretation, float]:
    """Most probable world consistent with the evidence; ties resolve to the
    first row in enumeration order."""
    if rows is None:
        rows = enumerate_worlds(ground, params)
    pairs = _evidence_ids(ground, evidence)
    best: Optional[WorldRow] = None
    for row in rows:
        if not _consistent(row.truth, pairs):
            continue
        if best is None or row.prob > best.prob:
            best = row
    if best is None:
        raise ZeroProbabilityEvidenceError(list(evidence.items()))
    return best.world, best.prob
