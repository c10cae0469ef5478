"""Domain types for programs, atoms, and interpretations.

Terms follow Prolog conventions: variables start with an uppercase letter or
underscore, constants and functors start lowercase (or are quoted). All types
are immutable and hashable so parsed values can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Tuple

from .errors import SemanticError

__all__ = [
    "Term",
    "Variable",
    "Constant",
    "Compound",
    "Atom",
    "Literal",
    "Rule",
    "ProbabilisticFact",
    "Program",
    "PartialInterpretation",
]


class Term:
    """Base class for variables, constants, and compound terms."""

    __slots__ = ()

    def is_ground(self) -> bool:
        raise NotImplementedError

    def variables(self) -> Iterator["Variable"]:
        raise NotImplementedError

    def substitute(self, binding: Mapping["Variable", "Term"]) -> "Term":
        raise NotImplementedError


@dataclass(frozen=True)
class Variable(Term):
    name: str

    def is_ground(self) -> bool:
        return False

    def variables(self) -> Iterator["Variable"]:
        yield self

    def substitute(self, binding: Mapping["Variable", Term]) -> Term:
        return binding.get(self, self)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant(Term):
    name: str

    def is_ground(self) -> bool:
        return True

    def variables(self) -> Iterator[Variable]:
        return iter(())

    def substitute(self, binding: Mapping[Variable, Term]) -> Term:
        return self

    def __str__(self) -> str:
        if _needs_quotes(self.name):
            escaped = self.name.replace("\\", "\\\\").replace("'", "\\'")
            return f"'{escaped}'"
        return self.name


@dataclass(frozen=True)
class Compound(Term):
    functor: str
    args: Tuple[Term, ...]

    def is_ground(self) -> bool:
        return all(a.is_ground() for a in self.args)

    def variables(self) -> Iterator[Variable]:
        for a in self.args:
            yield from a.variables()

    def substitute(self, binding: Mapping[Variable, Term]) -> Term:
        return Compound(self.functor, tuple(a.substitute(binding) for a in self.args))

    def __str__(self) -> str:
        inner = ",".join(str(a) for a in self.args)
        return f"{self.functor}({inner})"


def _needs_quotes(name: str) -> bool:
    if not name:
        return True
    if not (name[0].islower() or name[0].isdigit() or name[0] == "-"):
        return True
    return not all(c.isalnum() or c == "_" or c in ".-" for c in name)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: Tuple[Term, ...] = ()

    def is_ground(self) -> bool:
        return all(a.is_ground() for a in self.args)

    def variables(self) -> Iterator[Variable]:
        for a in self.args:
            yield from a.variables()

    def substitute(self, binding: Mapping[Variable, Term]) -> "Atom":
        if not self.args:
            return self
        return Atom(self.predicate, tuple(a.substitute(binding) for a in self.args))

    @property
    def signature(self) -> Tuple[str, int]:
        return (self.predicate, len(self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        inner = ",".join(str(a) for a in self.args)
        return f"{self.predicate}({inner})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negated(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def substitute(self, binding: Mapping[Variable, Term]) -> "Literal":
        return Literal(self.atom.substitute(binding), self.positive)

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"\\+{self.atom}"


@dataclass(frozen=True)
class Rule:
    """A normal clause ``head :- body``; an empty body makes it a fact."""

    head: Atom
    body: Tuple[Literal, ...] = ()

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        inner = ", ".join(str(lit) for lit in self.body)
        return f"{self.head} :- {inner}."


@dataclass(frozen=True)
class ProbabilisticFact:
    """``p::atom`` or ``p::atom :- domain_body`` (intensional form).

    Exactly one of ``prob`` and ``param`` is set: a fixed probability, or the
    index of a learnable parameter declared with ``t(_)`` (or an uppercase
    placeholder) in probability position.
    """

    atom: Atom
    prob: Optional[float] = None
    param: Optional[int] = None
    domain_body: Tuple[Literal, ...] = ()

    def __post_init__(self):
        if (self.prob is None) == (self.param is None):
            raise ValueError("exactly one of prob/param must be given")

    @property
    def learnable(self) -> bool:
        return self.param is not None

    def label(self) -> str:
        return "t(_)" if self.learnable else _format_prob(self.prob)

    def __str__(self) -> str:
        if not self.domain_body:
            return f"{self.label()}::{self.atom}."
        inner = ", ".join(str(lit) for lit in self.domain_body)
        return f"{self.label()}::{self.atom} :- {inner}."


def _format_prob(p: float) -> str:
    text = repr(float(p))
    return text


@dataclass(frozen=True)
class PartialInterpretation:
    """A truth-value map over ground atoms (evidence, training examples)."""

    assignment: Mapping[Atom, bool] = field(default_factory=dict)

    def __post_init__(self):
        for atom in self.assignment:
            if not atom.is_ground():
                raise SemanticError(f"interpretation atom is not ground: {atom}")
        object.__setattr__(self, "assignment", dict(self.assignment))

    def __len__(self) -> int:
        return len(self.assignment)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.assignment

    def __getitem__(self, atom: Atom) -> bool:
        return self.assignment[atom]

    def get(self, atom: Atom, default=None):
        return self.assignment.get(atom, default)

    def items(self) -> Iterator[Tuple[Atom, bool]]:
        """Entries in a deterministic (surface-string) order."""
        return iter(sorted(self.assignment.items(), key=lambda kv: str(kv[0])))

    def atoms(self) -> Iterator[Atom]:
        return iter(sorted(self.assignment, key=str))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartialInterpretation):
            return NotImplemented
        return dict(self.assignment) == dict(other.assignment)

    def __str__(self) -> str:
        parts = ", ".join(
            f"{a}={'true' if v else 'false'}" for a, v in self.items()
        )
        return "{" + parts + "}"


EMPTY_INTERPRETATION = PartialInterpretation({})


@dataclass(frozen=True)
class Program:
    prob_facts: Tuple[ProbabilisticFact, ...] = ()
    rules: Tuple[Rule, ...] = ()
    queries: Tuple[Atom, ...] = ()
    evidence: PartialInterpretation = EMPTY_INTERPRETATION

    @property
    def num_params(self) -> int:
        return sum(1 for f in self.prob_facts if f.learnable)

    def probabilistic_signatures(self):
        return {f.atom.signature for f in self.prob_facts}

    def derived_signatures(self):
        return {r.head.signature for r in self.rules}

    def validate(self) -> "Program":
        """Check the invariants the surface syntax cannot enforce by itself."""
        overlap = self.probabilistic_signatures() & self.derived_signatures()
        if overlap:
            pred, arity = sorted(overlap)[0]
            raise SemanticError(
                f"predicate {pred}/{arity} is both probabilistic and derived"
            )
        for fact in self.prob_facts:
            if not fact.learnable and not 0.0 <= fact.prob <= 1.0:
                raise SemanticError(
                    f"probability {fact.prob} outside [0,1] for {fact.atom}"
                )
            _check_range_restricted(fact.atom, fact.domain_body, kind="probabilistic fact")
        for rule in self.rules:
            _check_range_restricted(rule.head, rule.body, kind="rule")
        return self

    def pretty_print(self) -> str:
        """Surface-syntax text; parse_program inverts this exactly."""
        lines = [str(f) for f in self.prob_facts]
        lines.extend(str(r) for r in self.rules)
        lines.extend(f"query({q})." for q in self.queries)
        lines.extend(
            f"evidence({a},{'true' if v else 'false'})."
            for a, v in self.evidence.items()
        )
        return "\n".join(lines) + ("\n" if lines else "")

    def __str__(self) -> str:
        return self.pretty_print()


def _check_range_restricted(head: Atom, body: Tuple[Literal, ...], kind: str) -> None:
    positive_vars = set()
    for lit in body:
        if lit.positive:
            positive_vars.update(lit.atom.variables())
    for var in head.variables():
        if var not in positive_vars:
            raise SemanticError(
                f"{kind} {head} is not range-restricted: "
                f"variable {var} does not occur in a positive body literal"
            )
    for lit in body:
        if not lit.positive:
            for var in lit.atom.variables():
                if var not in positive_vars:
                    raise SemanticError(
                        f"negative literal \\+{lit.atom} in {kind} {head} uses "
                        f"variable {var} not bound by a positive body literal"
                    )
