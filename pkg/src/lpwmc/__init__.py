"""Probabilistic logic programs answered by weighted model counting.

Programs are ground relative to the queries and evidence, converted to a
weighted Boolean formula (completion plus positive-loop unfolding), compiled
into a smooth d-DNNF, and evaluated as an arithmetic circuit for EVID, MARG,
and MPE queries. Fact probabilities can be learned from partial
interpretations with EM. A brute-force enumeration oracle backs every
numeric path in the test suite.
"""

from .circuit import KERNEL_BACKEND, ArithmeticCircuit, to_arithmetic_circuit
from .ddnnf import compile_cnf, smooth
from .engine import Pipeline, marginals, mpe_task, prob_evidence, program_mln
from .errors import (
    LpwmcError,
    NotFullyObservableError,
    NotStratifiedError,
    ProgramParseError,
    ResourceLimitError,
    SemanticError,
    UnknownAtomError,
    UnsoundProgramError,
    ZeroProbabilityEvidenceError,
    ZeroProbabilityExampleError,
)
from .formula import assert_evidence, export_dimacs, export_mln, rules_to_formula
from .grounding import (
    GroundProgram,
    full_grounding,
    relevant_ground_program,
    sample_world,
    sample_worlds,
)
from .learn import Dataset, ParamVector, learn_em, learn_fully_observable, log_likelihood
from .metrics import fact_instance_counts, kl_divergence, mae
from .parser import parse_atom, parse_evidence, parse_program
from .syntax import (
    Atom,
    Compound,
    Constant,
    Literal,
    PartialInterpretation,
    Program,
    ProbabilisticFact,
    Rule,
    Variable,
)

__version__ = "0.1.0"
