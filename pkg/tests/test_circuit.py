import math
import random

import numpy as np
import pytest

import lpwmc
from lpwmc import assert_evidence, oracle, relevant_ground_program, rules_to_formula
from lpwmc import _kernels_py
from lpwmc.circuit import KERNEL_BACKEND, all_marginals, mpe, to_arithmetic_circuit
from lpwmc.ddnnf import LIT, compile_cnf, smooth

from conftest import atom, interp
from randprog import random_evidence, random_program


def _alarm_circuit(alarm, smooth_graph=True):
    e = interp("evidence(calls(john),true).")
    ground = relevant_ground_program(alarm, [], e)
    formula = assert_evidence(rules_to_formula(ground), e)
    graph = compile_cnf(formula)
    if smooth_graph:
        graph = smooth(graph)
    return to_arithmetic_circuit(graph, formula), formula, ground


def test_circuit_node_count_accounting(alarm):
    e = interp("evidence(calls(john),true).")
    ground = relevant_ground_program(alarm, [], e)
    formula = assert_evidence(rules_to_formula(ground), e)
    graph = smooth(compile_cnf(formula))
    ac = to_arithmetic_circuit(graph, formula)
    literal_leaves = sum(1 for k in graph.kinds if k == LIT)
    assert len(ac) == len(graph) + 2 * literal_leaves


def test_single_literal_circuit():
    program = lpwmc.parse_program("0.3::a.")
    ground = lpwmc.full_grounding(program)
    formula = rules_to_formula(ground)
    ac = to_arithmetic_circuit(smooth(compile_cnf(formula)), formula)
    assert ac.evaluate() == pytest.approx(1.0, abs=1e-15)
    assert ac.evaluate({-1: 0.0}) == pytest.approx(0.3, abs=1e-15)


def test_alarm_evaluation(alarm):
    ac, _, _ = _alarm_circuit(alarm)
    assert ac.evaluate() == pytest.approx(0.196, abs=1e-15)


def test_alarm_conditioning_on_earthquake(alarm):
    ac, formula, ground = _alarm_circuit(alarm)
    q = ground.id_of[atom("earthquake")]
    assert ac.evaluate({-q: 0.0}) == pytest.approx(0.14, abs=1e-15)


def test_non_smooth_circuit_reproduces_conditioning_failure(alarm):
    """Without smoothing the earthquake indicator is missing from one branch,
    so conditioning silently returns the unconditioned 0.196."""
    ac, formula, ground = _alarm_circuit(alarm, smooth_graph=False)
    q = ground.id_of[atom("earthquake")]
    assert ac.evaluate({-q: 0.0}) == pytest.approx(0.196, abs=1e-15)


def test_annihilating_indicators_give_zero(alarm):
    ac, formula, ground = _alarm_circuit(alarm)
    b = ground.id_of[atom("burglary")]
    assert ac.evaluate({b: 0.0, -b: 0.0}) == 0.0


def test_alarm_marginals(alarm):
    ac, _, _ = _alarm_circuit(alarm)
    joint = all_marginals(ac)
    assert joint[atom("burglary")] == pytest.approx(0.07, abs=1e-15)
    assert joint[atom("calls(john)")] == pytest.approx(0.196, abs=1e-15)


def test_derivative_identity(alarm):
    ac, formula, _ = _alarm_circuit(alarm)
    total = ac.evaluate()
    _, by_literal = ac.literal_marginals()
    for v in range(1, formula.num_vars + 1):
        pos = by_literal.get(v, 0.0)
        neg = by_literal.get(-v, 0.0)
        assert abs(pos + neg - total) <= 1e-12


def test_marginals_match_oracle_on_random_programs():
    rng = random.Random(83)
    for _ in range(20):
        program = random_program(rng, max_facts=7, max_derived=4)
        evidence = random_evidence(program, rng)
        full = lpwmc.full_grounding(program)
        queries = list(full.atoms)
        ground = relevant_ground_program(program, queries, evidence)
        formula = assert_evidence(rules_to_formula(ground), evidence)
        graph = smooth(compile_cnf(formula))
        if graph.unsatisfiable:
            continue
        ac = to_arithmetic_circuit(graph, formula)
        pe = ac.evaluate()
        joint = all_marginals(ac)
        rows = oracle.enumerate_worlds(full)
        reference_pe = oracle.oracle_evid(full, evidence, rows=rows)
        assert abs(pe - reference_pe) <= 1e-9
        if pe == 0.0:
            continue
        reference = oracle.oracle_marg(full, queries, evidence, rows=rows)
        for q in queries:
            assert abs(joint.get(q, 0.0) / pe - reference[q]) <= 1e-9


def test_mpe_on_relevant_alarm_circuit(alarm):
    ac, _, _ = _alarm_circuit(alarm)
    assignment, weight = mpe(ac)
    # over the three relevant facts: no burglary, earthquake, john hears
    assert weight == pytest.approx(0.9 * 0.2 * 0.7, abs=1e-15)
    assert assignment[atom("earthquake")]
    assert not assignment[atom("burglary")]
    assert assignment[atom("hears_alarm(john)")]


def test_single_fact_mpe():
    program = lpwmc.parse_program("0.7::a.")
    ground = lpwmc.full_grounding(program)
    formula = rules_to_formula(ground)
    ac = to_arithmetic_circuit(smooth(compile_cnf(formula)), formula)
    assignment, weight = mpe(ac)
    assert assignment[atom("a")] is True
    assert weight == pytest.approx(0.7, abs=1e-15)


def test_mpe_assignment_feeds_back_to_its_weight(alarm):
    ac, formula, _ = _alarm_circuit(alarm)
    assignment, weight = ac.max_trace()
    indicators = {}
    for var, value in assignment.items():
        indicators[var if not value else -var] = 0.0
    assert ac.evaluate(indicators) == weight


def test_mpe_weight_matches_oracle_on_random_programs():
    rng = random.Random(97)
    for _ in range(15):
        program = random_program(rng, max_facts=6, max_derived=4)
        evidence = random_evidence(program, rng)
        ground = relevant_ground_program(
            program, list(lpwmc.full_grounding(program).atoms), evidence
        )
        formula = assert_evidence(rules_to_formula(ground), evidence)
        graph = smooth(compile_cnf(formula))
        if graph.unsatisfiable:
            continue
        ac = to_arithmetic_circuit(graph, formula)
        _, weight = ac.max_trace()
        rows = oracle.enumerate_worlds(ground)
        _, reference = oracle.oracle_mpe(ground, evidence, rows=rows)
        assert abs(weight - reference) <= 1e-9


def test_mpe_on_unsat_circuit_raises(alarm):
    e = interp("evidence(alarm,true). evidence(burglary,false). "
               "evidence(earthquake,false).")
    ground = relevant_ground_program(alarm, [], e)
    formula = assert_evidence(rules_to_formula(ground), e)
    ac = to_arithmetic_circuit(smooth(compile_cnf(formula)), formula)
    with pytest.raises(lpwmc.ZeroProbabilityEvidenceError):
        ac.max_trace()


def test_log_space_evaluation_agrees(alarm):
    ac, _, _ = _alarm_circuit(alarm)
    assert ac.evaluate(log_space=True) == pytest.approx(0.196, rel=1e-12)
    assert ac.evaluate_log() == pytest.approx(math.log(0.196), abs=1e-12)


def test_reweighting_updates_values(alarm):
    ac, formula, ground = _alarm_circuit(alarm)
    b = ground.id_of[atom("burglary")]
    update = dict(formula.weight)
    update[b] = 0.5
    update[-b] = 0.5
    ac.set_weights(update)
    # P(calls(john)) with burglary at 0.5: (1 - 0.5*0.8) * 0.7
    assert ac.evaluate() == pytest.approx((1 - 0.5 * 0.8) * 0.7, abs=1e-12)
    ac.set_weights(formula.weight)
    assert ac.evaluate() == pytest.approx(0.196, abs=1e-15)


def test_python_and_compiled_kernels_agree(alarm):
    ac, _, _ = _alarm_circuit(alarm)
    values = ac.base_values.copy()
    ref = values.copy()
    _kernels_py.eval_forward(ac.kinds, ac.ptr, ac.idx, ref)
    out = values.copy()
    from lpwmc import circuit as circuit_mod

    circuit_mod._k.eval_forward(ac.kinds, ac.ptr, ac.idx, out)
    assert np.allclose(ref, out, atol=0.0)

    dref = np.zeros(len(ac))
    _kernels_py.eval_backward(ac.kinds, ac.ptr, ac.idx, ref, dref, ac.root)
    dout = np.zeros(len(ac))
    circuit_mod._k.eval_backward(ac.kinds, ac.ptr, ac.idx, out, dout, ac.root)
    assert np.allclose(dref, dout, atol=0.0)

    mref = ac.base_values.copy()
    _kernels_py.max_forward(ac.kinds, ac.ptr, ac.idx, mref)
    mout = ac.base_values.copy()
    circuit_mod._k.max_forward(ac.kinds, ac.ptr, ac.idx, mout)
    assert np.allclose(mref, mout, atol=0.0)


def test_kernel_backend_reported():
    assert KERNEL_BACKEND in ("compiled", "python")


def test_full_pipeline_on_python_kernels(alarm, monkeypatch):
    from lpwmc import circuit as circuit_mod

    monkeypatch.setattr(circuit_mod, "_k", _kernels_py)
    ac, formula, ground = _alarm_circuit(alarm)
    assert ac.evaluate() == pytest.approx(0.196, abs=1e-15)
    joint = all_marginals(ac)
    assert joint[atom("burglary")] == pytest.approx(0.07, abs=1e-15)
    _, weight = ac.max_trace()
    assert weight == pytest.approx(0.126, abs=1e-15)
