"""Seeded property suites behind ``relwl verify``.

Each suite runs ``trials`` independent random instances (plus the fixed
fixture claims) and returns one result per check.  A failing check always
carries a witness: the generating graph, the indices involved, and the
iteration at which the property broke.  Every trace any suite records is
also checked for monotone refinement.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import (
    FIXTURE_NAMES,
    check_claim,
    fixture,
    random_dag_kg,
    random_formula,
    random_history,
    random_kg,
    random_rational_features,
)
from .graphs import (
    KnowledgeGraph,
    canonical_tree_code,
    default_pair_coloring,
    product_square,
    unravel,
)
from .logic import (
    Formula,
    classify_pairs_via_compile,
    compile_gml_to_rmpnn,
    eval_gml_all,
    eval_rgfo3_all,
    translate_gml_to_rgfo3,
    translate_rgfo3_to_gml,
)
from .networks import (
    build_cmpnn_simulator,
    build_rwl1_simulator,
    cmpnn_pair_table,
    random_cmpnn_spec,
    random_rmpnn_spec,
    rmpnn_forward,
)
from .wl import HistoryFunction, WLTrace, equivalent, refines, run_test

SUITE_NAMES = ("fixtures", "reduction", "history", "hierarchy", "simulation", "logic")


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: dict | None = None


@dataclass
class SuiteReport:
    suite: str
    seed: int
    trials: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "trials": self.trials,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "witness": c.witness}
                for c in self.checks
            ],
        }


def _graph_witness(G: KnowledgeGraph) -> dict:
    return {
        "nodes": list(G.node_names),
        "relations": list(G.relation_names),
        "facts": [list(f) for f in G.fact_names()],
    }


def _monotone_violation(trace: WLTrace) -> int | None:
    for t in range(len(trace.colorings) - 1):
        if not refines(trace.colorings[t + 1], trace.colorings[t]):
            return t
    return None


def _run_checked(test_id, G, history=None, horizon="stabilize") -> tuple[WLTrace, int | None]:
    trace = run_test(test_id, G, history, horizon)
    return trace, _monotone_violation(trace)


def _coloring_at(trace: WLTrace, t: int) -> tuple[int, ...]:
    # Past stabilization the partition repeats, so clamping is sound.
    return trace.colorings[min(t, len(trace.colorings) - 1)]


def suite_fixtures(seed: int, trials: int) -> list[CheckResult]:
    """The nine counterexample claims, verified by running to stabilization."""
    results = []
    for name in FIXTURE_NAMES:
        fx = fixture(name)
        for claim in fx.claims:
            ok, observed = check_claim(fx, claim)
            witness = None
            if not ok:
                witness = {
                    "graph": _graph_witness(fx.graph),
                    "pair_a": list(claim.pair_a),
                    "pair_b": list(claim.pair_b),
                    "expected": claim.separated_at,
                    "observed": repr(observed),
                }
            results.append(
                CheckResult(
                    f"fixtures/{name}/{claim.test_id}"
                    f"({','.join(claim.pair_a)})vs({','.join(claim.pair_b)})",
                    ok,
                    witness,
                )
            )
    return results


def suite_reduction(seed: int, trials: int) -> list[CheckResult]:
    """Pair refinement on G coincides with node refinement on the pair graph."""
    results = []
    for i in range(trials):
        G = random_kg(seed + i, n_max=10, r_max=3, density=0.3)
        G = G.with_pair_coloring(default_pair_coloring(G))
        square = product_square(G)
        t_max = 4
        pair_trace, bad_a = _run_checked("rawl2", G, horizon=t_max)
        node_trace, bad_b = _run_checked("rwl1", square, horizon=t_max)
        passed = bad_a is None and bad_b is None
        witness = None
        if not passed:
            witness = {"graph": _graph_witness(G), "monotone_violation": (bad_a, bad_b)}
        else:
            for t in range(t_max + 1):
                if not equivalent(pair_trace.colorings[t], node_trace.colorings[t]):
                    passed = False
                    witness = {"graph": _graph_witness(G), "iteration": t}
                    break
        results.append(CheckResult(f"reduction[{i}]", passed, witness))
    return results


def suite_history(seed: int, trials: int) -> list[CheckResult]:
    """Node refinement partitions do not depend on the history function."""
    results = []
    t_max = 5
    for i in range(trials):
        G = random_kg(seed + i, n_max=10, r_max=3, density=0.3)
        rng = random.Random(seed * 7919 + i)
        histories = [
            HistoryFunction.identity(),
            HistoryFunction.zero(),
            random_history(rng, t_max),
        ]
        traces = []
        passed, witness = True, None
        for h in histories:
            trace, bad = _run_checked("rwl1", G, h, horizon=t_max)
            traces.append(trace)
            if bad is not None:
                passed, witness = False, {
                    "graph": _graph_witness(G),
                    "history": h.kind,
                    "monotone_violation": bad,
                }
        if passed:
            base = traces[0]
            for h, other in zip(histories[1:], traces[1:]):
                for t in range(t_max + 1):
                    if not equivalent(base.colorings[t], other.colorings[t]):
                        passed = False
                        witness = {
                            "graph": _graph_witness(G),
                            "history": h.kind,
                            "iteration": t,
                        }
                        break
                if not passed:
                    break
        results.append(CheckResult(f"history[{i}]", passed, witness))
    return results


_HIERARCHY_EDGES = (
    ("rwl2+", "rwl2"),
    ("rwl2", "rawl2"),
    ("rwl2+", "rawl2+"),
    ("rawl2+", "rawl2"),
)


def suite_hierarchy(seed: int, trials: int) -> list[CheckResult]:
    """Per-iteration refinement arrows between the four pair tests."""
    results = []
    for i in range(trials):
        G = random_kg(seed + i, n_max=10, r_max=3, density=0.3)
        G = G.with_pair_coloring(default_pair_coloring(G))
        traces = {}
        passed, witness = True, None
        for test_id in ("rawl2", "rwl2", "rawl2+", "rwl2+"):
            trace, bad = _run_checked(test_id, G)
            traces[test_id] = trace
            if bad is not None:
                passed, witness = False, {
                    "graph": _graph_witness(G),
                    "test": test_id,
                    "monotone_violation": bad,
                }
        if passed:
            horizon = max(len(tr.colorings) for tr in traces.values())
            for finer, coarser in _HIERARCHY_EDGES:
                for t in range(horizon):
                    if not refines(
                        _coloring_at(traces[finer], t),
                        _coloring_at(traces[coarser], t),
                    ):
                        passed = False
                        witness = {
                            "graph": _graph_witness(G),
                            "edge": [finer, coarser],
                            "iteration": t,
                        }
                        break
                if not passed:
                    break
        results.append(CheckResult(f"hierarchy[{i}]", passed, witness))
    return results


def _feature_partition_matches(table, trace, t_max) -> int | None:
    """First iteration where partitions diverge, else None."""
    for t in range(t_max + 1):
        assignment = table.assignment(t)
        reference = {k: trace.colorings[t][trace.index_of(k)] for k in assignment}
        if not equivalent(assignment, reference):
            return t
    return None


def _upper_bound_violation(table, trace, t_max) -> tuple[int, object, object] | None:
    """Pairs equal under refinement but with unequal features, if any."""
    for t in range(t_max + 1):
        assignment = table.assignment(t)
        classes: dict[int, list] = {}
        for key in assignment:
            classes.setdefault(trace.colorings[t][trace.index_of(key)], []).append(key)
        for members in classes.values():
            baseline = assignment[members[0]]
            for other in members[1:]:
                if assignment[other] != baseline:
                    return (t, members[0], other)
    return None


def suite_simulation(seed: int, trials: int) -> list[CheckResult]:
    """Constructive simulators hit the refinement partitions exactly, and
    random exact networks never refine past them."""
    results = []
    # constructive node-level simulators
    for i in range(trials):
        history = HistoryFunction.identity() if i % 2 == 0 else HistoryFunction.zero()
        layers = (i % 4) + 1
        G = random_kg(seed + i, n_max=7, r_max=3, density=0.3, n_colors=1 + i % 2)
        spec, init = build_rwl1_simulator(G, layers, history)
        table = rmpnn_forward(G, spec, init)
        trace, bad = _run_checked("rwl1", G, history, horizon=layers)
        divergence = None if bad is not None else _feature_partition_matches(
            table, trace, layers
        )
        passed = bad is None and divergence is None
        witness = None
        if not passed:
            witness = {
                "graph": _graph_witness(G),
                "history": history.kind,
                "layers": layers,
                "iteration": divergence if bad is None else bad,
            }
        results.append(CheckResult(f"simulation/node[{i}]", passed, witness))
    # constructive conditional simulators
    for i in range(max(1, trials // 3)):
        history = HistoryFunction.identity() if i % 2 == 0 else HistoryFunction.zero()
        layers = (i % 3) + 1
        G = random_kg(seed + 31 * (i + 1), n_max=5, r_max=2, density=0.3)
        G = G.with_pair_coloring(default_pair_coloring(G))
        spec, _ = build_cmpnn_simulator(G, layers, history)
        table = cmpnn_pair_table(G, spec, G.relation_names[0])
        trace, bad = _run_checked("rawl2", G, history, horizon=layers)
        divergence = None if bad is not None else _feature_partition_matches(
            table, trace, layers
        )
        passed = bad is None and divergence is None
        witness = None
        if not passed:
            witness = {
                "graph": _graph_witness(G),
                "history": history.kind,
                "layers": layers,
                "iteration": divergence if bad is None else bad,
            }
        results.append(CheckResult(f"simulation/conditional[{i}]", passed, witness))
    # refinement upper bounds for random exact networks
    deltas = ("delta1", "delta2")
    thetas = ("theta1", "theta2", "theta3")
    for i in range(trials):
        rng = random.Random(seed * 104729 + i)
        history = HistoryFunction.identity() if i % 2 == 0 else HistoryFunction.zero()
        layers = 2 + i % 2
        G = random_kg(seed + 61 * (i + 1), n_max=6, r_max=2, density=0.3)
        G = G.with_pair_coloring(default_pair_coloring(G))
        spec = random_cmpnn_spec(
            G,
            rng,
            num_layers=layers,
            dim=2,
            delta_kind=deltas[i % 2],
            theta_kind=thetas[i % 3],
            history=history,
        )
        table = cmpnn_pair_table(G, spec, G.relation_names[0])
        trace, bad = _run_checked("rawl2", G, history, horizon=layers)
        violation = None if bad is not None else _upper_bound_violation(
            table, trace, layers
        )
        passed = bad is None and violation is None
        witness = None
        if not passed:
            detail = violation if bad is None else ("monotone", bad)
            witness = {"graph": _graph_witness(G), "violation": repr(detail)}
        results.append(CheckResult(f"simulation/upper-pair[{i}]", passed, witness))
        # node-level counterpart: color-respecting features, random network
        node_thetas = ("theta2", "theta3", "scaling")
        rmpnn = random_rmpnn_spec(
            G, rng, num_layers=layers, dim=2, theta_kind=node_thetas[i % 3],
            history=history,
        )
        by_color = {}
        for c in set(G.node_colors):
            while True:
                vec = tuple(random_rational_features(rng, 1, 2)[0])
                if vec not in by_color.values():
                    by_color[c] = vec
                    break
        feats = [by_color[G.node_colors[v]] for v in range(G.n)]
        node_table = rmpnn_forward(G, rmpnn, feats)
        node_trace, bad_n = _run_checked("rwl1", G, history, horizon=layers)
        violation_n = None if bad_n is not None else _upper_bound_violation(
            node_table, node_trace, layers
        )
        passed_n = bad_n is None and violation_n is None
        witness_n = None
        if not passed_n:
            detail = violation_n if bad_n is None else ("monotone", bad_n)
            witness_n = {"graph": _graph_witness(G), "violation": repr(detail)}
        results.append(CheckResult(f"simulation/upper-node[{i}]", passed_n, witness_n))
    return results


def suite_logic(seed: int, trials: int) -> list[CheckResult]:
    """Translations, compilation, pair classification, and tree codes."""
    results = []
    n_graphs = max(1, trials // 5)
    graphs = []
    for g in range(n_graphs):
        G = random_kg(seed + 17 * (g + 1), n_max=8, r_max=2, density=0.3, n_colors=3)
        G = G.with_pair_coloring(default_pair_coloring(G))
        graphs.append((G, product_square(G)))
    for i in range(trials):
        rng = random.Random(seed * 15485863 + i)
        G, square = graphs[i % n_graphs]
        pair_labels = G.pair_coloring.labels
        relations = G.relation_names
        # binary -> unary through the pair graph
        phi = random_formula(rng, pair_labels, relations, arity="binary")
        direct = eval_rgfo3_all(G, phi)
        lifted = eval_gml_all(square, translate_rgfo3_to_gml(phi))
        n = G.n
        mismatch = next(
            (
                (u, v)
                for (u, v), value in direct.items()
                if lifted[u * n + v] != value
            ),
            None,
        )
        ok = mismatch is None
        results.append(
            CheckResult(
                f"logic/translate-binary[{i}]",
                ok,
                None
                if ok
                else {"graph": _graph_witness(G), "pair": list(mismatch)},
            )
        )
        # unary -> binary through the pair graph
        psi = random_formula(rng, pair_labels, relations, arity="unary")
        on_square = eval_gml_all(square, psi)
        on_pairs = eval_rgfo3_all(G, translate_gml_to_rgfo3(psi))
        mismatch = next(
            (
                (u, v)
                for (u, v), value in on_pairs.items()
                if on_square[u * n + v] != value
            ),
            None,
        )
        ok = mismatch is None
        results.append(
            CheckResult(
                f"logic/translate-unary[{i}]",
                ok,
                None
                if ok
                else {"graph": _graph_witness(G), "pair": list(mismatch)},
            )
        )
        # compilation: every component is its subformula's 0/1 truth value
        node_phi = random_formula(rng, G.color_labels, relations, arity="unary")
        compiled = compile_gml_to_rmpnn(node_phi, G.color_labels)
        table = compiled.run(G)
        failure = None
        truth = {
            sub: eval_gml_all(G, Formula(sub, "unary"))
            for sub in compiled.subformulas
        }
        for comp, sub in enumerate(compiled.subformulas):
            for t in range(comp + 1, compiled.width + 1):
                for v in range(G.n):
                    value = float(table.vector(t, v)[comp])
                    if value not in (0.0, 1.0) or (value == 1.0) != truth[sub][v]:
                        failure = {"component": comp, "iteration": t, "node": v}
                        break
                if failure:
                    break
            if failure:
                break
        results.append(
            CheckResult(
                f"logic/compile[{i}]",
                failure is None,
                None if failure is None else {"graph": _graph_witness(G), **failure},
            )
        )
        # end-to-end pair classification through the compiled network
        verdict = classify_pairs_via_compile(phi, G)
        mismatch = next(
            (pair for pair, value in direct.items() if verdict[pair] != value), None
        )
        ok = mismatch is None
        results.append(
            CheckResult(
                f"logic/classify[{i}]",
                ok,
                None
                if ok
                else {"graph": _graph_witness(G), "pair": list(mismatch)},
            )
        )
    # unravelling tree codes against node refinement
    for i in range(max(1, trials // 2)):
        depth = i % 4
        G = random_dag_kg(seed + 13 * (i + 1), n_max=8, r_max=2, density=0.4, n_colors=2)
        trace, bad = _run_checked("rwl1", G, horizon=depth)
        codes = [canonical_tree_code(unravel(G, v, depth)) for v in range(G.n)]
        failure = None
        if bad is not None:
            failure = {"monotone_violation": bad}
        else:
            colors = trace.colorings[depth]
            for u in range(G.n):
                for v in range(u + 1, G.n):
                    if (codes[u] == codes[v]) != (colors[u] == colors[v]):
                        failure = {"nodes": [u, v], "depth": depth}
                        break
                if failure:
                    break
        results.append(
            CheckResult(
                f"logic/unravel[{i}]",
                failure is None,
                None if failure is None else {"graph": _graph_witness(G), **failure},
            )
        )
    return results


_SUITES = {
    "fixtures": suite_fixtures,
    "reduction": suite_reduction,
    "history": suite_history,
    "hierarchy": suite_hierarchy,
    "simulation": suite_simulation,
    "logic": suite_logic,
}


def run_suite(name: str, seed: int, trials: int) -> SuiteReport:
    if name not in _SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {SUITE_NAMES}")
    report = SuiteReport(name, seed, trials)
    report.checks = _SUITES[name](seed, trials)
    return report


def run_all(seed: int, trials: int) -> list[SuiteReport]:
    return [run_suite(name, seed, trials) for name in SUITE_NAMES]
