"""Acceptance suite: one test per top-level guarantee, one verdict line each.

Each test prints a single [PASS]/[FAIL] line and asserts it, so a plain
`pytest -v` run doubles as the acceptance report.  All randomness is
seeded; the brute-force oracles live in synth.py and share no code with
the implementations under test.
"""

from __future__ import annotations

import random
import statistics
import time

from fastapi.testclient import TestClient

from finedeps import (
    BuiltinOracle,
    CachedOracle,
    DependencyGraph,
    Strategy,
    VerificationCache,
    build_graph,
    certify_minimal,
    default_candidates,
    from_edge_tsv,
    load_corpus,
    minimize_corpus,
    minimize_ddmin,
    minimize_linear,
    parse_corpus,
    write_corpus,
)
from finedeps.minimizer import ORDER_ASCENDING, ORDER_DESCENDING
from finedeps.service import create_app
from synth import (
    all_simple_paths,
    closure_by_squaring,
    enumerate_minimal_sufficient,
    library_fixture,
    random_dag,
    simulate_linear,
    synthetic_corpus_text,
)

ORDERS = (ORDER_DESCENDING, ORDER_ASCENDING)


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f": {detail}"
    print(line)
    assert ok, line


def test_c01_minimality_suite():
    rng = random.Random(101)
    start = time.monotonic()
    checked = 0
    for i in range(500):
        corpus, target = library_fixture(rng, rng.randint(0, 30))
        candidates = default_candidates(corpus, target.id)
        order = ORDERS[i % 2]
        minimize = minimize_linear if i % 3 else minimize_ddmin
        result = minimize(target, candidates, BuiltinOracle(corpus), order)
        assert result.certified, f"{target.id}: result not certified"
        ok, _ = certify_minimal(target, result.deps, BuiltinOracle(corpus))
        assert ok, f"{target.id}: certify_minimal rejected {sorted(map(str, result.deps))}"
        checked += 1
    elapsed = time.monotonic() - start
    _report(
        "minimality suite",
        checked == 500 and elapsed < 60.0,
        f"{checked} certified items in {elapsed:.1f}s",
    )


def test_c02_exhaustive_equivalence():
    rng = random.Random(202)
    matched = 0
    for i in range(200):
        corpus, target = library_fixture(rng, rng.randint(0, 12))
        candidates = default_candidates(corpus, target.id)
        order = ORDERS[i % 2]
        result = minimize_linear(target, candidates, BuiltinOracle(corpus), order)
        minimal_sets = enumerate_minimal_sufficient(corpus, target, candidates.candidates)
        assert result.deps in minimal_sets, f"{target.id}: output not a minimal sufficient set"
        simulated = simulate_linear(corpus, target, candidates.candidates, order)
        assert result.deps == simulated, f"{target.id}: removal-order simulation disagrees"
        matched += 1
    _report("exhaustive-oracle equivalence", matched == 200, f"{matched}/200 items")


def test_c03_call_count_law():
    rng = random.Random(303)
    for _ in range(200):
        corpus, target = library_fixture(rng, rng.randint(0, 20))
        candidates = default_candidates(corpus, target.id)
        oracle = BuiltinOracle(corpus)
        result = minimize_linear(target, candidates, oracle, rng.choice(ORDERS))
        assert result.oracle_calls == len(candidates) + 1
        assert oracle.calls == len(candidates) + 1

    # 64 candidates, exactly one of them needed.
    lines = "".join(
        '{"id": "lib:definition:%d", "defines": ["s%d"], "uses": [], "refs": []}\n' % (j + 1, j)
        for j in range(64)
    )
    lines += '{"id": "tgt:theorem:1", "defines": [], "uses": ["s21"], "refs": []}\n'
    corpus = parse_corpus(lines)
    target = corpus.items[-1]
    candidates = default_candidates(corpus, target.id)
    ddmin = minimize_ddmin(target, candidates, BuiltinOracle(corpus), ORDER_DESCENDING)
    assert ddmin.deps == frozenset({corpus.items[21].id})
    linear = minimize_linear(target, candidates, BuiltinOracle(corpus), ORDER_DESCENDING)
    assert linear.oracle_calls == 65
    _report(
        "call-count law",
        ddmin.oracle_calls < 65,
        f"linear 65 calls, ddmin {ddmin.oracle_calls} on 64/1 instance",
    )


def test_c04_determinism_across_parallelism():
    rng = random.Random(404)
    corpus = parse_corpus(synthetic_corpus_text(rng, 1000))
    serial = minimize_corpus(corpus, BuiltinOracle(corpus), Strategy(), parallelism=1)
    parallel = minimize_corpus(corpus, BuiltinOracle(corpus), Strategy(), parallelism=8)
    assert not serial.failures and not parallel.failures
    identical = serial.to_text().encode() == parallel.to_text().encode()
    _report("determinism across parallelism", identical, "1000 items, jobs 1 vs 8")


def test_c05_cache_idempotence(tmp_path):
    rng = random.Random(505)
    corpus = parse_corpus(synthetic_corpus_text(rng, 150))
    cache_path = tmp_path / "cache.tsv"

    cold_backend = BuiltinOracle(corpus)
    cold = minimize_corpus(corpus, CachedOracle(cold_backend, VerificationCache(cache_path)))
    assert not cold.failures and cold_backend.calls > 0

    warm_backend = BuiltinOracle(corpus)
    warm = minimize_corpus(corpus, CachedOracle(warm_backend, VerificationCache(cache_path)))
    assert warm.to_text() == cold.to_text()
    _report(
        "cache idempotence",
        warm_backend.calls == 0,
        f"second run made {warm_backend.calls} backend calls",
    )


def test_c06_query_suite():
    rng = random.Random(606)
    agreements = 0
    for _ in range(500):
        n = rng.randint(1, 10)
        graph, adjacency = random_dag(rng, n)
        order = list(graph.nodes)
        closure = closure_by_squaring(order, set(graph.edges))
        for node in order:
            assert graph.descendants(node) == closure[node]
            expected_anc = frozenset(x for x in order if node in closure[x])
            assert graph.ancestors(node) == expected_anc
        for a in order:
            for b in order:
                paths = all_simple_paths(adjacency, a, b)
                assert graph.reachable(a, b) == bool(paths)

                others = [x for x in order if x not in (a, b)]
                blocked = rng.sample(others, k=rng.randint(0, min(2, len(others))))
                found, witness = graph.exists_path_avoiding(a, b, blocked)
                survivors = [p for p in paths if not set(p) & set(blocked)]
                assert found == bool(survivors)
                if found:
                    shortest = min(len(p) for p in survivors)
                    best = min(
                        (p for p in survivors if len(p) == shortest),
                        key=lambda p: tuple(str(x) for x in p),
                    )
                    assert witness == best
                else:
                    assert witness is None

                via = rng.choice(order)
                expected_via = bool(paths) and all(via in p for p in paths)
                assert graph.all_paths_through(a, b, via) == expected_via
        agreements += 1
    _report("query suite", agreements == 500, "500 DAGs vs simple-path enumerator")


def test_c07_transitive_reduction():
    rng = random.Random(707)
    for _ in range(200):
        graph, _ = random_dag(rng, rng.randint(1, 10))
        order = list(graph.nodes)
        reduced = graph.transitive_reduction()
        for node in order:
            assert reduced.descendants(node) == graph.descendants(node)
        for edge in reduced.edges:
            thinner = DependencyGraph(order, [e for e in reduced.edges if e != edge])
            assert not thinner.reachable(*edge), f"edge {edge} is deletable"
    _report("transitive reduction", True, "200 DAGs: closure kept, every edge necessary")


def test_c08_scale_smoke():
    rng = random.Random(808)
    corpus = parse_corpus(synthetic_corpus_text(rng, 10_000, needed_range=(8, 12)))

    start = time.monotonic()
    outcome = minimize_corpus(corpus, BuiltinOracle(corpus), Strategy(), parallelism=1)
    minimize_elapsed = time.monotonic() - start
    assert not outcome.failures
    graph = build_graph(outcome, corpus)
    assert 80_000 <= graph.edge_count <= 130_000, f"{graph.edge_count} edges"

    nodes = list(graph.nodes)
    timings = []
    for op in range(200):
        a, b = rng.choice(nodes), rng.choice(nodes)
        others = [x for x in (rng.choice(nodes) for _ in range(2)) if x not in (a, b)]
        t0 = time.monotonic()
        if op % 5 == 0:
            graph.reachable(a, b)
        elif op % 5 == 1:
            graph.ancestor_count(a)
        elif op % 5 == 2:
            graph.descendant_count(a)
        elif op % 5 == 3:
            graph.exists_path_avoiding(a, b, others)
        else:
            graph.all_paths_through(a, b, rng.choice(nodes))
        timings.append(time.monotonic() - t0)
    median = statistics.median(timings)

    _report(
        "scale smoke test",
        minimize_elapsed < 300.0 and median < 0.050,
        f"10k items, {graph.edge_count} edges, minimize {minimize_elapsed:.1f}s, "
        f"median query {median * 1000:.2f}ms",
    )


def test_c09_round_trips(tmp_path):
    rng = random.Random(909)
    corpus = parse_corpus(synthetic_corpus_text(rng, 300))

    first = tmp_path / "corpus1.jsonl"
    second = tmp_path / "corpus2.jsonl"
    write_corpus(corpus, first)
    write_corpus(load_corpus(first), second)
    corpus_ok = first.read_bytes() == second.read_bytes()
    assert load_corpus(second) == corpus

    outcome = minimize_corpus(corpus, BuiltinOracle(corpus))
    graph = build_graph(outcome, corpus)
    tsv_path = tmp_path / "edges.tsv"
    graph.write(tsv_path, "edge-tsv")
    reloaded = from_edge_tsv(tsv_path.read_text())
    tsv_ok = reloaded.to_edge_tsv().encode() == tsv_path.read_bytes()
    assert reloaded == graph

    _report("round-trips", corpus_ok and tsv_ok, "corpus and edge-tsv both bit-exact")


def test_c10_service_contract():
    rng = random.Random(1010)
    graph, _ = random_dag(rng, 15)
    nodes = list(graph.nodes)
    client = TestClient(
        create_app(graph, fingerprint="acceptance"), raise_server_exceptions=False
    )
    statuses = []

    def get(path, **params):
        response = client.get(path, params=params)
        statuses.append(response.status_code)
        return response

    for _ in range(100):
        a, b = rng.choice(nodes), rng.choice(nodes)
        op = rng.randrange(3)
        if op == 0:
            body = get("/query/path", **{"from": str(a), "to": str(b)}).json()
            found, witness = graph.exists_path_avoiding(a, b, ())
            assert body["answer"] == found
            if found:
                assert body["witness"] == [str(x) for x in witness]
        elif op == 1:
            via = rng.choice(nodes)
            body = get("/query/via", **{"from": str(a), "to": str(b), "via": str(via)}).json()
            assert body["answer"] == graph.all_paths_through(a, b, via)
        else:
            others = [x for x in nodes if x not in (a, b)]
            avoid = rng.sample(others, k=rng.randint(0, 3))
            body = get(
                "/query/avoiding",
                **{"from": str(a), "to": str(b), "avoid": ",".join(str(x) for x in avoid)},
            ).json()
            found, witness = graph.exists_path_avoiding(a, b, avoid)
            assert body["answer"] == found
            if found:
                assert body["witness"] == [str(x) for x in witness]

    first, second = str(nodes[0]), str(nodes[1])
    for path, params in [
        ("/query/path", {"from": "zz:lemma:1", "to": first}),
        ("/query/via", {"from": first, "to": "zz:lemma:1", "via": second}),
        ("/query/avoiding", {"from": first, "to": second, "avoid": "zz:lemma:1"}),
        ("/items/zz:lemma:1", {}),
    ]:
        assert get(path, **params).status_code == 404

    for params in [
        {"from": first, "to": second, "avoid": first},
        {"from": first, "to": second, "avoid": second},
    ]:
        assert get("/query/avoiding", **params).status_code == 400
    assert get("/query/path", **{"from": "not an id!", "to": first}).status_code == 400
    assert get("/query/path", to=first).status_code == 400

    no_5xx = all(code < 500 for code in statuses)
    _report(
        "service contract",
        no_5xx,
        f"{len(statuses)} requests, 100 randomized query matches, no 5xx",
    )
