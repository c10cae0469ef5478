"""Maximum-likelihood estimation of fact probabilities from interpretations.

Complete data reduces to counting; partial data runs EM with one compiled
circuit per training example. Circuits are compiled once and re-weighted
every iteration: the expectation step reads conditional marginals of the
fact atoms off each circuit in two passes, the maximization step averages
them (instances absent from an example's circuit contribute nothing, and the
normalizer counts only present instances).
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

from . import circuit as circuit_mod
from .ddnnf import compile_cnf, smooth
from .errors import (
    NotFullyObservableError,
    ZeroProbabilityExampleError,
)
from .formula import assert_evidence, rules_to_formula
from .grounding import full_grounding, relevant_ground_program
from .parser import parse_evidence
from .syntax import PartialInterpretation, Program

__all__ = [
    "Dataset",
    "ParamVector",
    "learn_fully_observable",
    "learn_em",
    "log_likelihood",
]


@dataclass(frozen=True)
class Dataset:
    """Training examples: one (possibly partial) interpretation each."""

    examples: Tuple[PartialInterpretation, ...]

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @classmethod
    def from_text(cls, text: str) -> "Dataset":
        """Blocks of evidence(atom,true|false). lines separated by ``---``."""
        blocks = re.split(r"^\s*-{3,}\s*$", text, flags=re.MULTILINE)
        examples = []
        for block in blocks:
            if block.strip():
                examples.append(parse_evidence(block))
        return cls(tuple(examples))

    def to_text(self) -> str:
        blocks = []
        for example in self.examples:
            lines = [
                f"evidence({atom},{'true' if value else 'false'})."
                for atom, value in example.items()
            ]
            blocks.append("\n".join(lines))
        return "\n---\n".join(blocks) + ("\n" if blocks else "")


@dataclass(frozen=True)
class ParamVector:
    """One entry per probabilistic fact of the source program.

    ``fixed`` marks facts whose probability was given in the program;
    ``param_slots[n]`` is the fact index of learnable parameter ``n``.
    ``z`` holds the normalizer each estimate was divided by, and
    ``estimated`` is False where no data was available.
    """

    values: Tuple[float, ...]
    fixed: Tuple[bool, ...]
    z: Tuple[float, ...]
    estimated: Tuple[bool, ...]
    param_slots: Tuple[int, ...]

    @property
    def param_values(self) -> List[float]:
        return [self.values[i] for i in self.param_slots]

    @classmethod
    def from_program(cls, program: Program) -> "ParamVector":
        """Declared probabilities; learnable slots must be filled by a learner."""
        values, fixed, slots = [], [], []
        for i, fact in enumerate(program.prob_facts):
            if fact.learnable:
                slots.append(i)
                values.append(math.nan)
                fixed.append(False)
            else:
                values.append(float(fact.prob))
                fixed.append(True)
        n = len(values)
        return cls(
            tuple(values), tuple(fixed), (0.0,) * n, (True,) * n, tuple(slots)
        )


def _param_slots(program: Program) -> List[int]:
    return [i for i, f in enumerate(program.prob_facts) if f.learnable]


def learn_fully_observable(program: Program, dataset: Dataset) -> ParamVector:
    """Closed-form relative frequencies; every example must assign every
    ground instance of every learnable fact."""
    ground = full_grounding(program)
    slots = _param_slots(program)
    instances: Dict[int, List] = {i: [] for i in slots}
    for f in ground.prob_facts:
        if f.learnable:
            instances[f.origin].append(ground.atom_of(f.atom_id))

    values = [math.nan if f.learnable else float(f.prob) for f in program.prob_facts]
    fixed = [not f.learnable for f in program.prob_facts]
    z = [0.0] * len(values)
    estimated = [not f.learnable for f in program.prob_facts]

    for slot in slots:
        count = 0.0
        total = 0
        for m, example in enumerate(dataset):
            for atom in instances[slot]:
                value = example.get(atom)
                if value is None:
                    raise NotFullyObservableError(
                        f"example {m} does not assign {atom}; use learn_em"
                    )
                count += 1.0 if value else 0.0
                total += 1
        z[slot] = float(total)
        if total > 0:
            values[slot] = count / total
            estimated[slot] = True
    return ParamVector(
        tuple(values), tuple(fixed), tuple(z), tuple(estimated), tuple(slots)
    )


class _ExampleCircuit:
    """Per-example compiled circuit plus the learnable vars present in it."""

    def __init__(self, program: Program, example: PartialInterpretation, params):
        self.example = example
        ground = relevant_ground_program(program, (), example)
        formula = assert_evidence(rules_to_formula(ground, params), example)
        self.formula = formula
        self.ac = circuit_mod.to_arithmetic_circuit(smooth(compile_cnf(formula)), formula)
        self.param_vars: Dict[int, List[int]] = {}
        for f in ground.prob_facts:
            if f.learnable:
                self.param_vars.setdefault(f.param, []).append(f.atom_id)

    def reweight(self, params: Sequence[float]) -> None:
        update: Dict[int, float] = {}
        for n, fact_vars in self.param_vars.items():
            p = params[n]
            for var in fact_vars:
                update[var] = p
                update[-var] = 1.0 - p
        self.ac.set_weights(update)

    def marginals(self) -> Tuple[float, Dict[int, float]]:
        return self.ac.literal_marginals()


def _compile_examples(program, dataset, params):
    compiled = []
    for m, example in enumerate(dataset):
        ec = _ExampleCircuit(program, example, params)
        if ec.ac.evaluate() == 0.0:
            raise ZeroProbabilityExampleError(m)
        compiled.append(ec)
    return compiled


def learn_em(
    program: Program,
    dataset: Dataset,
    seed: int = 0,
    max_iters: int = 100,
    ll_tolerance: float = 1e-6,
    init_params: Sequence[float] = None,
    _recompile_each_iteration: bool = False,
) -> Tuple[ParamVector, List[float]]:
    """EM over partial interpretations.

    Returns the learned parameters and the log-likelihood trace; entry ``i``
    is the log-likelihood of the parameters entering iteration ``i``, so the
    trace is non-decreasing. Parameters whose fact instances occur in no
    example circuit are reported as 0 and flagged unestimated.

    ``init_params`` overrides the seeded random initialization (one value per
    learnable parameter); restarting from a converged vector converges again
    within one iteration.
    """
    slots = _param_slots(program)
    n_params = len(slots)
    if init_params is not None:
        params = [float(p) for p in init_params]
        if len(params) != n_params:
            raise ValueError("init_params length does not match parameter count")
    else:
        rng = random.Random(seed)
        params = [rng.uniform(0.05, 0.95) for _ in range(n_params)]

    compiled = _compile_examples(program, dataset, params)
    z = [0.0] * n_params
    for ec in compiled:
        for n, fact_vars in ec.param_vars.items():
            z[n] += len(fact_vars)

    trace: List[float] = []
    for iteration in range(1, max_iters + 1):
        if _recompile_each_iteration and iteration > 1:
            compiled = _compile_examples(program, dataset, params)
        ll = 0.0
        numerators = [0.0] * n_params
        for m, ec in enumerate(compiled):
            ec.reweight(params)
            pe, joint = ec.marginals()
            if pe <= 0.0:
                raise ZeroProbabilityExampleError(m)
            ll += math.log(pe)
            for n, fact_vars in ec.param_vars.items():
                for var in fact_vars:
                    numerators[n] += joint.get(var, 0.0) / pe
        trace.append(ll)
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < ll_tolerance:
            break
        for n in range(n_params):
            if z[n] > 0:
                params[n] = min(1.0, max(0.0, numerators[n] / z[n]))

    values = [math.nan if f.learnable else float(f.prob) for f in program.prob_facts]
    fixed = [not f.learnable for f in program.prob_facts]
    z_out = [0.0] * len(values)
    estimated = [not f.learnable for f in program.prob_facts]
    for n, slot in enumerate(slots):
        z_out[slot] = z[n]
        if z[n] > 0:
            values[slot] = params[n]
            estimated[slot] = True
        else:
            values[slot] = 0.0  # no instance in any circuit: nothing to learn
    return (
        ParamVector(
            tuple(values), tuple(fixed), tuple(z_out), tuple(estimated), tuple(slots)
        ),
        trace,
    )


def log_likelihood(
    program: Program,
    params: Union[ParamVector, Sequence[float]],
    dataset: Dataset,
) -> float:
    """Sum of per-example ln P(E_m = e_m) under the given parameters."""
    values = params.param_values if isinstance(params, ParamVector) else list(params)
    if any(math.isnan(v) for v in values):
        raise ValueError("parameter vector has unestimated entries")
    total = 0.0
    for m, example in enumerate(dataset):
        ec = _ExampleCircuit(program, example, values)
        pe = ec.ac.evaluate()
        if pe <= 0.0:
            raise ZeroProbabilityExampleError(m)
        total += math.log(pe)
    return total
