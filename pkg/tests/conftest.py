import pytest

import lpwmc

ALARM = """
0.1::burglary.                         person(mary).
0.2::earthquake.                       person(john).
0.7::hears_alarm(X) :- person(X).
alarm :- burglary.
alarm :- earthquake.
calls(X) :- alarm, hears_alarm(X).
"""

SMOKERS2 = """
0.2::stress(p1).             0.3::influences(p2,p1).
0.2::stress(p2).             0.3::influences(p1,p2).
smokes(p1) :- stress(p1).
smokes(p1) :- smokes(p2), influences(p2,p1).
smokes(p2) :- stress(p2).
smokes(p2) :- smokes(p1), influences(p1,p2).
"""

SMOKERS3 = """
0.2::stress(P) :- person(P).
0.3::influences(P1,P2) :- friend(P1,P2).
person(p1). person(p2). person(p3).
friend(p1,p2). friend(p1,p3).
friend(p2,p1). friend(p3,p1).
smokes(X) :- stress(X).
smokes(X) :- smokes(Y), influences(Y,X).
"""


def grid_program(n: int) -> str:
    """n-by-n directed grid with right/down/diagonal 0.5-probability edges."""
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
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def alarm():
    return lpwmc.parse_program(ALARM)


@pytest.fixture(scope="session")
def smokers2():
    return lpwmc.parse_program(SMOKERS2)


@pytest.fixture(scope="session")
def smokers3():
    return lpwmc.parse_program(SMOKERS3)


SMOKERS_LEARN_TRUTH = """
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
"""

SMOKERS_TRUE_VALUES = [0.2, 0.3, 0.1, 0.3]


@pytest.fixture(scope="session")
def smokers_learning_experiment():
    """Learning-curve experiment shared by the acceptance and metrics tests.

    Per seed: 500 sampled worlds thinned to 40% observed atoms, nested
    prefixes of 100/200/500 examples, EM restarted three times keeping the
    best final log-likelihood. Returns per-size (kl, mae) pairs and every
    log-likelihood trace.
    """
    import random

    from lpwmc import Dataset, fact_instance_counts, kl_divergence, learn_em, mae

    truth = lpwmc.parse_program(SMOKERS_LEARN_TRUTH)
    template = lpwmc.parse_program(
        SMOKERS_LEARN_TRUTH.replace("0.2::stress", "t(_)::stress")
        .replace("0.3::influences", "t(_)::influences")
        .replace("0.1::cancer_spont", "t(_)::cancer_spont")
        .replace("0.3::cancer_smoke", "t(_)::cancer_smoke")
    )
    counts_all = fact_instance_counts(truth)
    slots = [i for i, f in enumerate(template.prob_facts) if f.learnable]
    counts = [counts_all[i] for i in slots]

    results = {}
    traces = []
    for seed in range(5):
        worlds = lpwmc.sample_worlds(truth, 500, seed)
        retain_rng = random.Random(seed * 977 + 13)
        examples = []
        for world in worlds:
            kept = {
                a: v for a, v in world.items() if retain_rng.random() < 0.4
            }
            examples.append(lpwmc.PartialInterpretation(kept))
        for size in (100, 200, 500):
            dataset = Dataset(tuple(examples[:size]))
            best = None
            for restart in range(3):
                params, trace = learn_em(
                    template, dataset, seed=seed * 31 + restart
                )
                traces.append(trace)
                if best is None or trace[-1] > best[1]:
                    best = (params, trace[-1])
            kl = kl_divergence(SMOKERS_TRUE_VALUES, best[0].param_values, counts)
            err = mae(SMOKERS_TRUE_VALUES, best[0].param_values)
            results.setdefault(size, []).append((kl, err))
    return results, traces


def atom(text: str) -> lpwmc.Atom:
    return lpwmc.parse_atom(text)


def interp(text: str) -> lpwmc.PartialInterpretation:
    return lpwmc.parse_evidence(text)
