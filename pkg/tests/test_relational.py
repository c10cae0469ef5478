"""Differential tests on randomized relational programs.

The propositional corpus cannot exercise unification, intensional-fact
expansion, or domain joins; these programs have variables, recursive binary
relations, and negated deterministic guards, and every task is checked
against the enumeration oracle.
"""

import random

import pytest

import lpwmc
from lpwmc import (
    PartialInterpretation,
    Pipeline,
    full_grounding,
    oracle,
    relevant_ground_program,
)

from conftest import atom


def random_relational_program(rng: random.Random) -> lpwmc.Program:
    n_const = rng.randint(2, 3)
    consts = [f"c{i}" for i in range(n_const)]
    lines = [f"node({c})." for c in consts]

    pairs = [(a, b) for a in consts for b in consts if a != b]
    rng.shuffle(pairs)
    edges = pairs[: rng.randint(1, min(4, len(pairs)))]
    lines += [f"edge({a},{b})." for a, b in edges]

    if rng.random() < 0.5:
        lines.append(f"special({rng.choice(consts)}).")

    p1 = round(rng.uniform(0.1, 0.9), 2)
    if rng.random() < 0.4:
        lines.append(f"{p1}::mark(X) :- node(X), \\+special(X).")
    else:
        lines.append(f"{p1}::mark(X) :- node(X).")
    p2 = round(rng.uniform(0.1, 0.9), 2)
    lines.append(f"{p2}::link(X,Y) :- edge(X,Y).")

    lines.append("reach(X,Y) :- link(X,Y).")
    lines.append("reach(X,Y) :- link(X,Z), reach(Z,Y).")
    lines.append("good(X) :- mark(X).")
    if rng.random() < 0.5:
        lines.append("good(X) :- reach(X,Y), mark(Y).")
    else:
        lines.append("good(X) :- reach(Y,X), mark(Y).")
    if rng.random() < 0.4:
        lines.append("lonely(X) :- node(X), \\+good(X).")

    return lpwmc.parse_program("\n".join(lines) + "\n")


def evidence_from_world(program, rng, max_atoms=3):
    world = lpwmc.sample_world(program, rng.randrange(1 << 30))
    atoms = list(world.atoms())
    rng.shuffle(atoms)
    picked = atoms[: rng.randint(0, max_atoms)]
    return PartialInterpretation({a: world[a] for a in picked})


def test_relational_differential_sweep():
    rng = random.Random(86420)
    for _ in range(40):
        program = random_relational_program(rng)
        evidence = evidence_from_world(program, rng)
        full = full_grounding(program)
        if len(full.prob_facts) > 12:
            continue
        rows = oracle.enumerate_worlds(full)
        pipeline = Pipeline(program)

        pe = pipeline.prob_evidence(evidence)
        assert abs(pe - oracle.oracle_evid(full, evidence, rows=rows)) <= 1e-9
        if pe == 0.0:
            continue

        queries = [a for a in full.atoms if a not in evidence]
        values = pipeline.marginals(queries, evidence)
        reference = oracle.oracle_marg(full, queries, evidence, rows=rows)
        for q in queries:
            assert abs(values[q] - reference[q]) <= 1e-9

        _, mpe_p = pipeline.mpe(evidence)
        _, mpe_ref = oracle.oracle_mpe(full, evidence, rows=rows)
        assert abs(mpe_p - mpe_ref) <= 1e-9


def test_relational_grounding_preserves_all_marginals():
    rng = random.Random(97531)
    for _ in range(15):
        program = random_relational_program(rng)
        evidence = evidence_from_world(program, rng)
        full = full_grounding(program)
        if len(full.prob_facts) > 12:
            continue
        queries = [a for a in full.atoms if a not in evidence]
        rgp = relevant_ground_program(program, queries, evidence)
        try:
            full_m = oracle.oracle_marg(full, queries, evidence)
            rgp_m = oracle.oracle_marg(rgp, queries, evidence)
        except lpwmc.ZeroProbabilityEvidenceError:
            continue
        for q in queries:
            assert abs(full_m[q] - rgp_m[q]) <= 1e-9


def test_nested_compound_terms_round_trip_and_ground():
    program = lpwmc.parse_program(
        "0.4::holds(pair(a,wrap(b))).\n"
        "item(pair(a,wrap(b))).\n"
        "ok(X) :- item(X), holds(X).\n"
    )
    assert lpwmc.parse_program(program.pretty_print()) == program
    q = atom("ok(pair(a,wrap(b)))")
    value = lpwmc.marginals(program, [q], PartialInterpretation({}))[q]
    assert value == pytest.approx(0.4, abs=1e-15)


def test_repeated_variables_in_head_and_body():
    program = lpwmc.parse_program(
        "0.5::r(X,X) :- node(X).\n"
        "node(a). node(b).\n"
        "both(X) :- r(X,X).\n"
    )
    ground = full_grounding(program)
    fact_atoms = {str(ground.atom_of(f.atom_id)) for f in ground.prob_facts}
    assert fact_atoms == {"r(a,a)", "r(b,b)"}
    q = atom("both(a)")
    assert lpwmc.marginals(program, [q], PartialInterpretation({}))[q] == \
        pytest.approx(0.5, abs=1e-15)


def test_intensional_domain_with_negative_guard():
    program = lpwmc.parse_program(
        "node(a). node(b). node(c).\n"
        "special(b).\n"
        "0.3::mark(X) :- node(X), \\+special(X).\n"
    )
    ground = full_grounding(program)
    fact_atoms = {str(ground.atom_of(f.atom_id)) for f in ground.prob_facts}
    assert fact_atoms == {"mark(a)", "mark(c)"}


def test_evidence_on_deterministic_atom():
    program = lpwmc.parse_program("node(a).\n0.5::m(X) :- node(X).\n")
    e_true = PartialInterpretation({atom("node(a)"): True})
    assert lpwmc.prob_evidence(program, e_true) == pytest.approx(1.0, abs=1e-15)
    e_false = PartialInterpretation({atom("node(a)"): False})
    assert lpwmc.prob_evidence(program, e_false) == 0.0


def test_concurrent_evaluations_share_one_circuit(alarm):
    from concurrent.futures import ThreadPoolExecutor

    from lpwmc import assert_evidence, rules_to_formula
    from lpwmc.circuit import to_arithmetic_circuit
    from lpwmc.ddnnf import compile_cnf, smooth

    e = lpwmc.parse_evidence("evidence(calls(john),true).")
    ground = relevant_ground_program(alarm, [], e)
    formula = assert_evidence(rules_to_formula(ground), e)
    ac = to_arithmetic_circuit(smooth(compile_cnf(formula)), formula)

    quake = ground.id_of[atom("earthquake")]
    serial = [
        (ac.evaluate(), ac.evaluate({-quake: 0.0}), ac.literal_marginals()[0])
        for _ in range(4)
    ]

    def job(_):
        return (ac.evaluate(), ac.evaluate({-quake: 0.0}), ac.literal_marginals()[0])

    with ThreadPoolExecutor(max_workers=8) as pool:
        parallel = list(pool.map(job, range(64)))
    assert all(result == serial[0] for result in parallel)
