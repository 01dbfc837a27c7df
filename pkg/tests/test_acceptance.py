"""Acceptance gate: one test per criterion, at full stated size and budget.

Every check here is an exact (tolerance-free) assertion; the time budgets
are asserted too.  Each test prints a single PASS line when it completes.
"""

import json
import random
import subprocess
import sys
import time

from relwl.corpus import (
    FIXTURE_NAMES,
    check_claim,
    fixture,
    random_dag_kg,
    random_formula,
    random_history,
    random_kg,
)
from relwl.graphs import (
    canonical_tree_code,
    default_pair_coloring,
    product_square,
    unravel,
)
from relwl.logic import (
    Formula,
    compile_gml_to_rmpnn,
    eval_gml_all,
    eval_rgfo3_all,
    translate_gml_to_rgfo3,
    translate_rgfo3_to_gml,
)
from relwl.networks import (
    build_cmpnn_simulator,
    build_rwl1_simulator,
    cmpnn_pair_table,
    random_cmpnn_spec,
    rmpnn_forward,
)
from relwl.wl import HistoryFunction, equivalent, refines, run_test

CORPUS_SIZE = 200
CORPUS_PARAMS = dict(n_max=10, r_max=3, density=0.3)


def _diag(g):
    return g.with_pair_coloring(default_pair_coloring(g))


def _ok(number: int, name: str, started: float, budget_s: float):
    elapsed = time.monotonic() - started
    assert elapsed < budget_s, f"criterion {number} blew its {budget_s}s budget"
    print(f"ACCEPTANCE {number:02d} {name}: PASS ({elapsed:.2f}s)")


def test_criterion_01_reduction_oracle():
    started = time.monotonic()
    for seed in range(CORPUS_SIZE):
        g = _diag(random_kg(seed, **CORPUS_PARAMS))
        square = product_square(g)
        pair = run_test("rawl2", g, horizon=4)
        node = run_test("rwl1", square, horizon=4)
        for t in range(5):
            assert equivalent(pair.colorings[t], node.colorings[t]), (seed, t)
    _ok(1, "reduction oracle", started, 30.0)


def test_criterion_02_history_independence():
    started = time.monotonic()
    for seed in range(CORPUS_SIZE):
        g = random_kg(seed, **CORPUS_PARAMS)
        rng = random.Random(10_000 + seed)
        traces = [
            run_test("rwl1", g, h, horizon=5)
            for h in (
                HistoryFunction.identity(),
                HistoryFunction.zero(),
                random_history(rng, 5),
            )
        ]
        for t in range(6):
            for other in traces[1:]:
                assert equivalent(traces[0].colorings[t], other.colorings[t]), (
                    seed,
                    t,
                )
    _ok(2, "history independence", started, 10.0)


def test_criterion_03_monotone_refinement():
    started = time.monotonic()
    checked = 0
    for seed in range(40):
        g = _diag(random_kg(seed, **CORPUS_PARAMS))
        for test_id in ("rwl1", "rawl2", "rwl2", "rawl2+", "rwl2+"):
            for history in (HistoryFunction.identity(), HistoryFunction.zero()):
                trace = run_test(test_id, g, history, horizon="stabilize")
                for t in range(len(trace.colorings) - 1):
                    assert refines(trace.colorings[t + 1], trace.colorings[t]), (
                        seed,
                        test_id,
                        history.kind,
                        t,
                    )
                checked += 1
    assert checked == 40 * 5 * 2
    _ok(3, "monotone refinement", started, 60.0)


def test_criterion_04_constructive_simulation():
    started = time.monotonic()
    for seed in range(50):
        g = random_kg(seed, n_max=7, r_max=3, density=0.3, n_colors=1 + seed % 3)
        layers = seed % 4 + 1
        for history in (HistoryFunction.identity(), HistoryFunction.zero()):
            spec, init = build_rwl1_simulator(g, layers, history)
            table = rmpnn_forward(g, spec, init)
            trace = run_test("rwl1", g, history, horizon=layers)
            for t in range(layers + 1):
                assert equivalent(
                    table.assignment(t),
                    {v: trace.colorings[t][v] for v in range(g.n)},
                ), (seed, history.kind, t)
    _ok(4, "constructive refinement simulation", started, 60.0)


def test_criterion_05_conditional_lower_bound():
    started = time.monotonic()
    for seed in range(30):
        g = _diag(random_kg(seed, n_max=5, r_max=2, density=0.3))
        layers = seed % 3 + 1
        history = HistoryFunction.identity() if seed % 2 else HistoryFunction.zero()
        spec, _ = build_cmpnn_simulator(g, layers, history)
        table = cmpnn_pair_table(g, spec, g.relation_names[0])
        trace = run_test("rawl2", g, history, horizon=layers)
        for t in range(layers + 1):
            assignment = table.assignment(t)
            reference = {
                key: trace.colorings[t][trace.index_of(key)] for key in assignment
            }
            assert equivalent(assignment, reference), (seed, t)
    _ok(5, "conditional lower bound", started, 60.0)


def test_criterion_06_upper_bound():
    started = time.monotonic()
    deltas = ("delta1", "delta2")
    thetas = ("theta1", "theta2", "theta3")
    for i in range(100):
        rng = random.Random(500 + i)
        g = _diag(random_kg(900 + i, n_max=6, r_max=2, density=0.35))
        history = HistoryFunction.identity() if i % 2 else HistoryFunction.zero()
        layers = 2 + i % 2
        spec = random_cmpnn_spec(
            g,
            rng,
            num_layers=layers,
            dim=2,
            delta_kind=deltas[i % 2],
            theta_kind=thetas[i % 3],
            history=history,
        )
        table = cmpnn_pair_table(g, spec, g.relation_names[0])
        trace = run_test("rawl2", g, history, horizon=layers)
        for t in range(layers + 1):
            assignment = table.assignment(t)
            by_class = {}
            for key, value in assignment.items():
                color = trace.colorings[t][trace.index_of(key)]
                by_class.setdefault(color, set()).add(value)
            assert all(len(v) == 1 for v in by_class.values()), (i, t)
    _ok(6, "refinement upper bound", started, 60.0)


def test_criterion_07_fixture_verdicts():
    started = time.monotonic()
    total = 0
    for name in FIXTURE_NAMES:
        fx = fixture(name)
        for claim in fx.claims:
            ok, observed = check_claim(fx, claim)
            assert ok, (name, claim, observed)
            total += 1
    assert total == 9
    _ok(7, "fixture verdicts", started, 1.0)


def test_criterion_08_hierarchy():
    started = time.monotonic()
    edges = (
        ("rwl2+", "rwl2"),
        ("rwl2", "rawl2"),
        ("rwl2+", "rawl2+"),
        ("rawl2+", "rawl2"),
    )
    for seed in range(CORPUS_SIZE):
        g = _diag(random_kg(seed, **CORPUS_PARAMS))
        traces = {
            tid: run_test(tid, g, horizon="stabilize")
            for tid in ("rawl2", "rwl2", "rawl2+", "rwl2+")
        }
        horizon = max(len(tr.colorings) for tr in traces.values())
        for finer, coarser in edges:
            fine, coarse = traces[finer], traces[coarser]
            for t in range(horizon):
                a = fine.colorings[min(t, len(fine.colorings) - 1)]
                b = coarse.colorings[min(t, len(coarse.colorings) - 1)]
                assert refines(a, b), (seed, finer, coarser, t)
    _ok(8, "hierarchy of refinements", started, 30.0)


def _logic_corpus():
    graphs = []
    for g_seed in range(20):
        g = _diag(random_kg(3000 + g_seed, n_max=8, r_max=2, density=0.3, n_colors=3))
        graphs.append((g, product_square(g)))
    return graphs


def test_criterion_09_logic_translations():
    started = time.monotonic()
    graphs = _logic_corpus()
    rng = random.Random(77)
    # the diagonal pair vocabulary and the relation pool are shared by the
    # whole corpus, so every formula runs against every graph
    labels = ("eq", "neq")
    relations = ("r0", "r1")
    for i in range(50):
        phi = random_formula(rng, labels, relations, depth=3, arity="binary")
        psi = random_formula(rng, labels, relations, depth=3, arity="unary")
        for g, square in graphs:
            n = g.n
            direct = eval_rgfo3_all(g, phi)
            lifted = eval_gml_all(square, translate_rgfo3_to_gml(phi))
            assert all(
                lifted[u * n + v] == value for (u, v), value in direct.items()
            ), i
            on_square = eval_gml_all(square, psi)
            on_pairs = eval_rgfo3_all(g, translate_gml_to_rgfo3(psi))
            assert all(
                on_square[u * n + v] == value
                for (u, v), value in on_pairs.items()
            ), i
    _ok(9, "logic translations", started, 60.0)


def test_criterion_10_compilation_soundness():
    started = time.monotonic()
    rng = random.Random(78)
    graphs = [
        random_kg(4000 + s, n_max=8, r_max=2, density=0.3, n_colors=3)
        for s in range(20)
    ]
    for i in range(100):
        g = graphs[i % len(graphs)]
        phi = random_formula(
            rng, g.color_labels, g.relation_names, depth=3, arity="unary"
        )
        compiled = compile_gml_to_rmpnn(phi, g.color_labels)
        table = compiled.run(g)
        for comp, sub in enumerate(compiled.subformulas):
            expected = eval_gml_all(g, Formula(sub, "unary"))
            for t in range(comp + 1, compiled.width + 1):
                for v in range(g.n):
                    value = float(table.vector(t, v)[comp])
                    assert value in (0.0, 1.0), (i, comp, t, v)
                    assert (value == 1.0) == expected[v], (i, comp, t, v)
    _ok(10, "compilation soundness", started, 60.0)


def test_criterion_11_unravelling_correspondence():
    started = time.monotonic()
    for seed in range(50):
        g = random_dag_kg(5000 + seed, n_max=8, r_max=2, density=0.4, n_colors=2)
        depth = seed % 4
        trace = run_test("rwl1", g, horizon=depth)
        codes = [
            canonical_tree_code(unravel(g, v, depth)) for v in range(g.n)
        ]
        colors = trace.colorings[depth]
        for u in range(g.n):
            for v in range(u + 1, g.n):
                assert (codes[u] == codes[v]) == (colors[u] == colors[v]), (
                    seed,
                    depth,
                    u,
                    v,
                )
    _ok(11, "unravelling correspondence", started, 30.0)


def test_criterion_12_cli_verify_all():
    started = time.monotonic()
    result = subprocess.run(
        [
            sys.executable,
            "-m",
            "relwl",
            "verify",
            "--suite",
            "all",
            "--seed",
            "42",
            "--trials",
            "100",
        ],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert result.returncode == 0, result.stdout[-2000:] + result.stderr[-2000:]
    doc = json.loads(result.stdout)
    assert doc["passed"] is True
    assert doc["summary"]["failed"] == 0
    elapsed = time.monotonic() - started
    assert elapsed < 300.0
    print(f"ACCEPTANCE 12 end-to-end verify: PASS ({elapsed:.2f}s)")
