"""Compare the compiled circuit kernels against the pure-Python twins.

Builds three representative circuits (alarm with evidence, a 3x3 grid path
query, and a Smokers-style learning example) and times the forward, backward,
and max passes on each backend.

Run:  python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import statistics
import time

import numpy as np

import lpwmc
from lpwmc import _kernels_py
from lpwmc import circuit as circuit_mod
from lpwmc.circuit import to_arithmetic_circuit
from lpwmc.ddnnf import compile_cnf, smooth
from lpwmc.formula import assert_evidence, rules_to_formula
from lpwmc.grounding import relevant_ground_program

ALARM = """
0.1::burglary. 0.2::earthquake.
0.7::hears_alarm(X) :- person(X).
person(mary). person(john).
alarm :- burglary.
alarm :- earthquake.
calls(X) :- alarm, hears_alarm(X).
evidence(calls(john),true).
"""

SMOKERS = """
0.2::stress(P) :- person(P).
0.3::influences(P1,P2) :- friend(P1,P2).
0.1::cancer_spont(P) :- person(P).
0.3::cancer_smoke(P) :- person(P).
person(p1). person(p2). person(p3).
friend(p1,p2). friend(p1,p3). friend(p2,p1).
friend(p2,p3). friend(p3,p1). friend(p3,p2).
smokes(X) :- stress(X).
smokes(X) :- smokes(Y), influences(Y,X).
cancer(P) :- cancer_spont(P).
cancer(P) :- smokes(P), cancer_smoke(P).
evidence(smokes(p1),true).
evidence(cancer(p2),false).
"""


def grid_text(n):
    lines = []
    for x in range(1, n + 1):
        for y in range(1, n + 1):
            if x < n:
                lines.append(f"0.5::edge(n{x}{y},n{x + 1}{y}).")
            if y < n:
                lines.append(f"0.5::edge(n{x}{y},n{x}{y + 1}).")
            if x < n and y < n:
                lines.append(f"0.5::edge(n{x}{y},n{x + 1}{y + 1}).")
    lines.append("path(X,Y) :- edge(X,Y).")
    lines.append("path(X,Y) :- edge(X,Z), path(Z,Y).")
    lines.append(f"query(path(n11,n{n}{n})).")
    return "\n".join(lines)


def build_circuit(text):
    program = lpwmc.parse_program(text)
    ground = relevant_ground_program(program, program.queries, program.evidence)
    formula = assert_evidence(rules_to_formula(ground), program.evidence)
    graph = smooth(compile_cnf(formula))
    return to_arithmetic_circuit(graph, formula)


def time_pass(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def bench(name, ac, repeats):
    backends = [("python", _kernels_py)]
    try:
        from lpwmc import _kernels

        backends.insert(0, ("compiled", _kernels))
    except ImportError:
        pass

    print(f"\n{name}: {len(ac)} circuit nodes")
    results = {}
    for label, kernels in backends:
        values = ac.base_values.copy()
        derivs = np.zeros(len(ac))

        def forward():
            buf = values.copy()
            kernels.eval_forward(ac.kinds, ac.ptr, ac.idx, buf)
            return buf

        filled = forward()

        def backward():
            kernels.eval_backward(ac.kinds, ac.ptr, ac.idx, filled, derivs, ac.root)

        def max_pass():
            buf = values.copy()
            kernels.max_forward(ac.kinds, ac.ptr, ac.idx, buf)

        row = {
            "forward": time_pass(forward, repeats),
            "backward": time_pass(backward, repeats),
            "max": time_pass(max_pass, repeats),
        }
        results[label] = row
        print(
            f"  {label:>8}: forward {row['forward'] * 1e6:9.1f} us   "
            f"backward {row['backward'] * 1e6:9.1f} us   "
            f"max {row['max'] * 1e6:9.1f} us"
        )
    if "compiled" in results:
        for key in ("forward", "backward", "max"):
            ratio = results["python"][key] / results["compiled"][key]
            print(f"  speedup {key}: {ratio:.1f}x")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    print(f"active backend in lpwmc.circuit: {circuit_mod.KERNEL_BACKEND}")
    bench("alarm (evidence: john calls)", build_circuit(ALARM), args.repeats)
    bench("smokers-3 learning example", build_circuit(SMOKERS), args.repeats)
    bench("4x4 grid path query", build_circuit(grid_text(4)), args.repeats)


if __name__ == "__main__":
    main()
