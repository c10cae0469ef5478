"""Command-line front end.

Subcommands: ground, cnf, compile, evid, marg, mpe, learn, sample, kl, oracle.
Exit codes: 1 usage, 2 parse/semantic error, 3 unsound program,
4 zero-probability evidence, 5 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Dict, List, Optional, Tuple

from . import engine, metrics, oracle
from .ddnnf import compile_cnf, export_nnf, smooth
from .errors import (
    LpwmcError,
    NotStratifiedError,
    ProgramParseError,
    ResourceLimitError,
    SemanticError,
    UnsoundProgramError,
    ZeroProbabilityEvidenceError,
    ZeroProbabilityExampleError,
)
from .formula import assert_evidence, export_dimacs, rules_to_formula
from .grounding import (
    DEFAULT_MAX_ATOMS,
    full_grounding,
    relevant_ground_program,
    sample_worlds,
)
from .learn import Dataset, learn_em
from .parser import parse_atom, parse_evidence, parse_program
from .syntax import Atom, PartialInterpretation, Program, ProbabilisticFact

__all__ = ["main", "format_probability"]

EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_UNSOUND = 3
EXIT_ZERO_EVIDENCE = 4
EXIT_RESOURCE = 5

ORACLE_CHECK_TOLERANCE = 1e-9


def format_probability(value: float) -> str:
    """Fixed-point rendering with 12 significant digits (zero-padded)."""
    if value == 0.0:
        return "0.000000000000"
    if not math.isfinite(value):
        return str(value)
    exponent = math.floor(math.log10(abs(value)))
    decimals = max(0, 11 - exponent)
    return f"{value:.{decimals}f}"


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="lpwmc")
    sub = parser.add_subparsers(dest="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--program", required=True, help="program file")
        p.add_argument("--evidence", help="evidence file")
        p.add_argument("--query", help="query file, one atom per line")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-iters", type=int, default=100)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--oracle-check", action="store_true")
        p.add_argument("--max-atoms", type=int, default=DEFAULT_MAX_ATOMS)
        p.add_argument("--output", help="write result here instead of stdout")
        return p

    add("ground", "dump the relevant ground program")
    add("cnf", "export the weighted CNF (DIMACS)")
    add("compile", "export the smooth d-DNNF (NNF trace)")
    add("evid", "probability of evidence")
    add("marg", "conditional marginals of the query atoms")
    add("mpe", "most probable world given the evidence")
    learn = add("learn", "estimate fact probabilities from a dataset")
    learn.add_argument("--data", required=True, help="dataset file")
    sample = add("sample", "sample a dataset of worlds")
    sample.add_argument("--samples", type=int, default=100)
    sample.add_argument("--retain", type=float, default=1.0,
                        help="fraction of atoms kept per example")
    kl = add("kl", "KL divergence between two parameterizations")
    kl.add_argument("--learned", required=True, help="learned program file")
    add("oracle", "brute-force reference answers for evid/marg/mpe")
    return parser


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _load_inputs(args) -> Tuple[Program, List[Atom], PartialInterpretation]:
    program = parse_program(_read(args.program))
    queries = list(program.queries)
    if args.query:
        for line in _read(args.query).splitlines():
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            atom = parse_atom(line)
            if atom.predicate == "query" and len(atom.args) == 1:
                atom = parse_atom(str(atom.args[0]))
            if atom not in queries:
                queries.append(atom)
    assignment = dict(program.evidence.assignment)
    if args.evidence:
        extra = parse_evidence(_read(args.evidence))
        for atom, value in extra.items():
            if assignment.get(atom, value) != value:
                raise SemanticError(f"conflicting evidence for {atom}")
            assignment[atom] = value
    return program, queries, PartialInterpretation(assignment)


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _result_text(task: str, results: List[Dict], fmt: str, meta: Optional[Dict] = None) -> str:
    if fmt == "json":
        return json.dumps(
            {"task": task, "results": results, "meta": meta or {}}, indent=None
        ) + "\n"
    lines = []
    for entry in results:
        if "p" in entry:
            lines.append(f"{entry['atom']}\t{format_probability(entry['p'])}")
        else:
            lines.append(f"{entry['atom']}\t{'true' if entry['value'] else 'false'}")
    for key in sorted(meta or {}):
        lines.append(f"{key}\t{format_probability(meta[key])}")
    return "\n".join(lines) + ("\n" if lines else "")


def _oracle_reference(program, queries, evidence, task, max_atoms):
    ground = full_grounding(program, max_atoms=max_atoms)
    rows = oracle.enumerate_worlds(ground)
    if task == "evid":
        return oracle.oracle_evid(ground, evidence, rows=rows)
    if task == "marg":
        return oracle.oracle_marg(ground, queries, evidence, rows=rows)
    return oracle.oracle_mpe(ground, evidence, rows=rows)


def _run(args) -> int:
    program, queries, evidence = _load_inputs(args)
    fmt = args.format

    if args.command == "ground":
        ground = relevant_ground_program(program, queries, evidence, args.max_atoms)
        _emit(args, ground.dump())
        return 0

    if args.command == "cnf":
        ground = relevant_ground_program(program, queries, evidence, args.max_atoms)
        formula = assert_evidence(rules_to_formula(ground), evidence)
        _emit(args, export_dimacs(formula))
        return 0

    if args.command == "compile":
        ground = relevant_ground_program(program, queries, evidence, args.max_atoms)
        formula = assert_evidence(rules_to_formula(ground), evidence)
        _emit(args, export_nnf(smooth(compile_cnf(formula))))
        return 0

    if args.command == "evid":
        pipeline = engine.Pipeline(program, max_atoms=args.max_atoms)
        value = pipeline.prob_evidence(evidence)
        if args.oracle_check:
            reference = _oracle_reference(program, queries, evidence, "evid", args.max_atoms)
            if abs(reference - value) > ORACLE_CHECK_TOLERANCE:
                print(
                    f"oracle-check failed: pipeline {value!r} vs oracle {reference!r}",
                    file=sys.stderr,
                )
                return EXIT_USAGE
        _emit(args, _result_text("evid", [{"atom": "p_evidence", "p": value}], fmt))
        return 0

    if args.command == "marg":
        pipeline = engine.Pipeline(program, max_atoms=args.max_atoms)
        values = pipeline.marginals(queries, evidence)
        if args.oracle_check:
            reference = _oracle_reference(program, queries, evidence, "marg", args.max_atoms)
            for atom, value in values.items():
                if abs(reference[atom] - value) > ORACLE_CHECK_TOLERANCE:
                    print(
                        f"oracle-check failed for {atom}: pipeline {value!r} "
                        f"vs oracle {reference[atom]!r}",
                        file=sys.stderr,
                    )
                    return EXIT_USAGE
        results = [
            {"atom": str(atom), "p": values[atom]}
            for atom in sorted(values, key=str)
        ]
        _emit(args, _result_text("marg", results, fmt))
        return 0

    if args.command == "mpe":
        pipeline = engine.Pipeline(program, max_atoms=args.max_atoms)
        world, probability = pipeline.mpe(evidence)
        if args.oracle_check:
            _, reference = _oracle_reference(program, queries, evidence, "mpe", args.max_atoms)
            if abs(reference - probability) > ORACLE_CHECK_TOLERANCE:
                print(
                    f"oracle-check failed: pipeline {probability!r} vs oracle {reference!r}",
                    file=sys.stderr,
                )
                return EXIT_USAGE
        results = [
            {"atom": str(atom), "value": value} for atom, value in world.items()
        ]
        _emit(args, _result_text("mpe", results, fmt, meta={"p_mpe": probability}))
        return 0

    if args.command == "learn":
        dataset = Dataset.from_text(_read(args.data))
        learned, trace = learn_em(
            program,
            dataset,
            seed=args.seed,
            max_iters=args.max_iters,
            ll_tolerance=args.tol,
        )
        facts = []
        for i, fact in enumerate(program.prob_facts):
            if fact.learnable:
                facts.append(
                    ProbabilisticFact(
                        fact.atom,
                        prob=float(learned.values[i]),
                        domain_body=fact.domain_body,
                    )
                )
            else:
                facts.append(fact)
        learned_program = Program(
            tuple(facts), program.rules, program.queries, program.evidence
        )
        if fmt == "json":
            payload = {
                "task": "learn",
                "results": [
                    {"atom": str(f.atom), "p": float(learned.values[i])}
                    for i, f in enumerate(program.prob_facts)
                    if f.learnable
                ],
                "meta": {"ll_trace": trace},
            }
            _emit(args, json.dumps(payload) + "\n")
        else:
            text = learned_program.pretty_print()
            text += "".join(
                f"% ll {i} {value:.12g}\n" for i, value in enumerate(trace)
            )
            _emit(args, text)
        return 0

    if args.command == "sample":
        import random

        worlds = sample_worlds(program, args.samples, args.seed)
        rng = random.Random(args.seed + 1)
        examples = []
        for world in worlds:
            if args.retain >= 1.0:
                examples.append(world)
                continue
            kept = {
                atom: value
                for atom, value in world.items()
                if rng.random() < args.retain
            }
            examples.append(PartialInterpretation(kept))
        _emit(args, Dataset(tuple(examples)).to_text())
        return 0

    if args.command == "kl":
        learned_program = parse_program(_read(args.learned))
        if len(learned_program.prob_facts) != len(program.prob_facts):
            raise SemanticError("programs declare different probabilistic facts")
        truth_vec = [f.prob for f in program.prob_facts]
        learned_vec = [f.prob for f in learned_program.prob_facts]
        if any(p is None for p in truth_vec + learned_vec):
            raise SemanticError("kl requires fully parameterized programs")
        counts = metrics.fact_instance_counts(program)
        value = metrics.kl_divergence(truth_vec, learned_vec, counts)
        _emit(args, _result_text("kl", [{"atom": "kl", "p": value}], fmt))
        return 0

    if args.command == "oracle":
        ground = full_grounding(program, max_atoms=args.max_atoms)
        rows = oracle.enumerate_worlds(ground)
        results = [
            {"atom": "p_evidence", "p": oracle.oracle_evid(ground, evidence, rows=rows)}
        ]
        if queries:
            margs = oracle.oracle_marg(ground, queries, evidence, rows=rows)
            results.extend(
                {"atom": str(atom), "p": margs[atom]}
                for atom in sorted(margs, key=str)
            )
        _, mpe_p = oracle.oracle_mpe(ground, evidence, rows=rows)
        _emit(args, _result_text("oracle", results, fmt, meta={"p_mpe": mpe_p}))
        return 0

    raise _UsageError(f"unknown command {args.command!r}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise _UsageError("a subcommand is required")
        return _run(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProgramParseError, SemanticError, NotStratifiedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnsoundProgramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSOUND
    except (ZeroProbabilityEvidenceError, ZeroProbabilityExampleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ZERO_EVIDENCE
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LpwmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
