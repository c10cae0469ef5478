import random

import pytest

import lpwmc
from lpwmc import (
    PartialInterpretation,
    ResourceLimitError,
    UnknownAtomError,
    full_grounding,
    oracle,
    relevant_ground_program,
    sample_world,
    sample_worlds,
)

from conftest import atom, grid_program, interp
from randprog import random_program, random_evidence


def _rule_count(ground, with_body=True):
    return sum(1 for _, body in ground.rules if bool(body) == with_body)


def test_alarm_relevant_ground_program(alarm):
    e = interp("evidence(calls(john),true).")
    g = relevant_ground_program(alarm, [atom("burglary")], e)
    fact_atoms = {str(g.atom_of(f.atom_id)) for f in g.prob_facts}
    assert fact_atoms == {"burglary", "earthquake", "hears_alarm(john)"}
    assert len(g.rules) == 3
    assert not any("mary" in str(a) for a in g.atoms)


def test_empty_seeds_give_empty_program(alarm):
    g = relevant_ground_program(alarm, [], PartialInterpretation({}))
    assert g.num_atoms == 0
    assert g.rules == ()
    assert g.prob_facts == ()


def test_smokers_inactive_rule_pruning(smokers3):
    e = interp("evidence(smokes(p2),true). evidence(smokes(p3),false).")
    g = relevant_ground_program(smokers3, [atom("smokes(p1)")], e)
    fact_atoms = {str(g.atom_of(f.atom_id)) for f in g.prob_facts}
    assert fact_atoms == {
        "stress(p1)",
        "stress(p2)",
        "stress(p3)",
        "influences(p2,p1)",
        "influences(p1,p2)",
        "influences(p1,p3)",
    }
    assert "influences(p3,p1)" not in {str(a) for a in g.atoms}
    assert len(g.rules) == 6


def test_full_grounding_alarm_counts(alarm):
    g = full_grounding(alarm)
    assert len(g.prob_facts) == 4
    assert _rule_count(g, with_body=True) == 4
    assert _rule_count(g, with_body=False) == 2  # person facts


def test_full_grounding_empty_program():
    g = full_grounding(lpwmc.parse_program(""))
    assert g.num_atoms == 0


def test_full_grounding_grid():
    g = full_grounding(lpwmc.parse_program(grid_program(3)))
    assert len(g.prob_facts) == 16
    assert _rule_count(g, with_body=True) > 0


def test_prob_fact_ids_never_rule_heads(alarm):
    g = full_grounding(alarm)
    fact_ids = g.prob_fact_ids()
    assert all(head not in fact_ids for head, _ in g.rules)


def test_dump_round_trips_through_parser(alarm):
    g = relevant_ground_program(alarm, [atom("burglary")],
                                interp("evidence(calls(john),true)."))
    reparsed = lpwmc.parse_program(g.dump())
    g2 = full_grounding(reparsed)
    assert {str(a) for a in g.atoms} == {str(a) for a in g2.atoms}
    assert len(g.rules) == len(g2.rules)


def test_unknown_evidence_atom(alarm):
    with pytest.raises(UnknownAtomError):
        relevant_ground_program(alarm, [], interp("evidence(calls(bob),true)."))
    with pytest.raises(UnknownAtomError):
        relevant_ground_program(alarm, [], interp("evidence(nonsense,true)."))


def test_atom_limit():
    with pytest.raises(ResourceLimitError):
        full_grounding(lpwmc.parse_program(grid_program(3)), max_atoms=5)


def test_sample_world_fixed_draw(alarm):
    # find a seed drawing {burglary, earthquake, hears_alarm(john)} w/o mary
    target = None
    for seed in range(4000):
        world = sample_world(alarm, seed)
        if (
            world[atom("burglary")]
            and world[atom("earthquake")]
            and world[atom("hears_alarm(john)")]
            and not world[atom("hears_alarm(mary)")]
        ):
            target = world
            break
    assert target is not None
    assert target[atom("alarm")]
    assert target[atom("calls(john)")]
    assert not target[atom("calls(mary)")]


def test_sample_world_probability_one_fact():
    program = lpwmc.parse_program("1.0::a.\nb :- a.")
    for seed in range(5):
        world = sample_world(program, seed)
        assert world[atom("a")] and world[atom("b")]


def test_sample_world_unsound_program():
    program = lpwmc.parse_program("0.5::a.\np :- \\+p, a.")
    with pytest.raises(lpwmc.UnsoundProgramError):
        for seed in range(20):
            sample_world(program, seed)


def test_sample_frequency_matches_probability(alarm):
    worlds = sample_worlds(alarm, 100_000, seed=42)
    freq = sum(w[atom("burglary")] for w in worlds) / len(worlds)
    assert abs(freq - 0.1) < 0.01


def test_relevant_grounding_preserves_marginals():
    rng = random.Random(2024)
    checked = 0
    for _ in range(25):
        program = random_program(rng, max_facts=8, max_derived=4)
        evidence = random_evidence(program, rng)
        full = full_grounding(program)
        queries = [a for a in full.atoms if a not in evidence][:3]
        if not queries:
            continue
        rgp = relevant_ground_program(program, queries, evidence)
        full_rows = oracle.enumerate_worlds(full)
        rgp_rows = oracle.enumerate_worlds(rgp)
        full_m = oracle.oracle_marg(full, queries, evidence, rows=full_rows)
        rgp_m = oracle.oracle_marg(rgp, queries, evidence, rows=rgp_rows)
        for q in queries:
            assert abs(full_m[q] - rgp_m[q]) <= 1e-9
        checked += 1
    assert checked >= 15


def test_pruned_rules_have_a_false_evidence_literal():
    rng = random.Random(7)
    for _ in range(20):
        program = random_program(rng, max_facts=6, max_derived=4)
        evidence = random_evidence(program, rng, max_atoms=4)
        full = full_grounding(program)
        queries = list(full.atoms)
        rgp = relevant_ground_program(program, queries, evidence)

        def key(ground, head, body):
            return (
                str(ground.atom_of(head)),
                tuple(
                    ("+" if b > 0 else "-") + str(ground.atom_of(abs(b)))
                    for b in body
                ),
            )

        rgp_rules = {key(rgp, h, b) for h, b in rgp.rules}
        for head, body in full.rules:
            if key(full, head, body) in rgp_rules:
                continue
            # dropped: unreachable, or inactive with a false evidence literal
            false_literal = any(
                evidence.get(full.atom_of(abs(b))) is not None
                and evidence.get(full.atom_of(abs(b))) != (b > 0)
                for b in body
            )
            reachable = str(full.atom_of(head)) in {str(a) for a in rgp.atoms}
            assert false_literal or not reachable


def test_rgp_rules_subset_of_full_grounding():
    rng = random.Random(99)
    for _ in range(20):
        program = random_program(rng, max_facts=6, max_derived=4)
        evidence = random_evidence(program, rng)
        full = full_grounding(program)
        rgp = relevant_ground_program(program, list(full.atoms), evidence)

        def keys(ground):
            return {
                (
                    str(ground.atom_of(h)),
                    tuple(
                        ("+" if b > 0 else "-") + str(ground.atom_of(abs(b)))
                        for b in body
                    ),
                )
                for h, body in ground.rules
            }

        assert keys(rgp) <= keys(full)
