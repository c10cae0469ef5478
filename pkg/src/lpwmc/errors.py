"""Exception hierarchy shared across the package."""


class LpwmcError(Exception):
    """Base class for all errors raised by lpwmc."""


class ProgramParseError(LpwmcError):
    """Syntax error in a program, evidence, or dataset file."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class SemanticError(LpwmcError):
    """Well-formedness violation: predicate overlap, range restriction, bad probability."""


class UnknownAtomError(SemanticError):
    """Query or evidence atom has no occurrence in the program's Herbrand base."""


class NotStratifiedError(LpwmcError):
    """A dependency cycle runs through negation; the converter rejects the program."""


class UnsoundProgramError(LpwmcError):
    """Some total choice has a three-valued well-founded model."""

    def __init__(self, undefined_atoms):
        self.undefined_atoms = tuple(undefined_atoms)
        names = ", ".join(str(a) for a in self.undefined_atoms)
        super().__init__(f"program is not sound: undefined atoms {{{names}}}")


class ZeroProbabilityEvidenceError(LpwmcError):
    """Evidence has probability zero; conditioning is undefined."""

    def __init__(self, evidence):
        self.evidence = evidence
        parts = ", ".join(
            f"{atom}={'true' if value else 'false'}" for atom, value in evidence
        )
        super().__init__(f"evidence has probability zero: {{{parts}}}")


class ZeroProbabilityExampleError(LpwmcError):
    """A training example is impossible under every parameterization."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"training example {index} has probability zero")


class NotFullyObservableError(LpwmcError):
    """Closed-form estimation needs complete data; use the EM learner instead."""


class ResourceLimitError(LpwmcError):
    """A configured safety cap was exceeded (ground atoms, cache entries, enumeration)."""
