from __future__ import annotations

import random

import pytest

from finedeps import (
    BuiltinOracle,
    ItemId,
    CachedOracle,
    CandidateSet,
    MinimizationError,
    ORDER_ASCENDING,
    ORDER_DESCENDING,
    Strategy,
    VERIFIABLE,
    VerificationCache,
    VerificationOutcome,
    certify_minimal,
    default_candidates,
    load_results,
    minimize_corpus,
    minimize_ddmin,
    minimize_linear,
    parse_corpus,
)
from finedeps.oracle import FunctionOracle
from synth import (
    A,
    B,
    C,
    chain_corpus,
    enumerate_minimal_sufficient,
    expected_deps,
    library_fixture,
    simulate_linear,
    synthetic_corpus_text,
)


def two_definer_corpus():
    return parse_corpus(
        '{"id": "a:definition:1", "defines": ["s"], "uses": [], "refs": []}\n'
        '{"id": "b:definition:1", "defines": ["s"], "uses": [], "refs": []}\n'
        '{"id": "c:theorem:1", "defines": [], "uses": ["s"], "refs": []}\n'
    )


def target_and_candidates(corpus):
    target = corpus.items[-1]
    return target, default_candidates(corpus, target.id)


def test_linear_empty_candidates(chain):
    item = chain.get(A)
    result = minimize_linear(item, default_candidates(chain, A), BuiltinOracle(chain))
    assert result.deps == frozenset()
    assert result.oracle_calls == 1
    assert result.certified


def test_linear_drops_unneeded_definer():
    corpus = parse_corpus(
        '{"id": "a:definition:1", "defines": ["s"], "uses": [], "refs": []}\n'
        '{"id": "b:definition:1", "defines": ["t"], "uses": [], "refs": []}\n'
        '{"id": "c:theorem:1", "defines": [], "uses": ["s"], "refs": []}\n'
    )
    target, candidates = target_and_candidates(corpus)
    result = minimize_linear(target, candidates, BuiltinOracle(corpus))
    assert result.deps == {A}
    assert result.oracle_calls == 3
    # Exhaustive cross-check: {A} is the unique minimal sufficient subset.
    assert enumerate_minimal_sufficient(corpus, target, candidates.candidates) == {frozenset({A})}


def test_linear_order_picks_among_equivalent_definers():
    corpus = two_definer_corpus()
    target, candidates = target_and_candidates(corpus)
    b_def = ItemId.parse("b:definition:1")
    descending = minimize_linear(target, candidates, BuiltinOracle(corpus), ORDER_DESCENDING)
    ascending = minimize_linear(target, candidates, BuiltinOracle(corpus), ORDER_ASCENDING)
    assert descending.deps == {A}
    assert ascending.deps == {b_def}
    # Both singletons are minimal; the removal order is what decides.
    assert enumerate_minimal_sufficient(corpus, target, candidates.candidates) == {
        frozenset({A}),
        frozenset({b_def}),
    }


def test_linear_call_count_law():
    rng = random.Random(17)
    for _ in range(60):
        corpus, target = library_fixture(rng, rng.randint(0, 14))
        candidates = default_candidates(corpus, target.id)
        result = minimize_linear(target, candidates, BuiltinOracle(corpus))
        assert result.oracle_calls == len(candidates) + 1


def test_linear_insufficient_over_approximation():
    corpus = parse_corpus(
        '{"id": "a:definition:1", "defines": [], "uses": [], "refs": []}\n'
        '{"id": "b:theorem:1", "defines": [], "uses": ["ghost"], "refs": []}\n'
    )
    target, candidates = target_and_candidates(corpus)
    with pytest.raises(MinimizationError, match="over-approximation insufficient") as err:
        minimize_linear(target, candidates, BuiltinOracle(corpus))
    assert err.value.item_id == target.id


def test_linear_oracle_error_aborts_item(chain):
    def broken(item, deps):
        return VerificationOutcome.error("backend down")

    oracle = FunctionOracle(broken, monotone=True)
    item = chain.get(B)
    with pytest.raises(MinimizationError, match="oracle error: backend down"):
        minimize_linear(item, default_candidates(chain, B), oracle)


def test_ddmin_empty_candidates(chain):
    item = chain.get(A)
    result = minimize_ddmin(item, default_candidates(chain, A), BuiltinOracle(chain))
    assert result.deps == frozenset()
    assert result.oracle_calls == 1
    assert result.certified


def test_ddmin_beats_linear_on_sparse_instance():
    # 64 candidates, exactly one needed.
    lines = [
        '{"id": "lib:definition:%d", "defines": ["s%d"], "uses": [], "refs": []}' % (j + 1, j)
        for j in range(64)
    ]
    lines.append('{"id": "tgt:theorem:1", "defines": [], "uses": ["s20"], "refs": []}')
    corpus = parse_corpus("".join(line + "\n" for line in lines))
    target, candidates = target_and_candidates(corpus)

    linear = minimize_linear(target, candidates, BuiltinOracle(corpus))
    ddmin = minimize_ddmin(target, candidates, BuiltinOracle(corpus))
    assert linear.deps == ddmin.deps == {ItemId.parse("lib:definition:21")}
    assert linear.oracle_calls == 65
    assert ddmin.oracle_calls < 65
    assert ddmin.certified


def test_ddmin_sufficient_and_minimal_on_small_instances():
    rng = random.Random(29)
    for _ in range(40):
        corpus, target = library_fixture(rng, rng.randint(0, 12))
        candidates = default_candidates(corpus, target.id)
        result = minimize_ddmin(target, candidates, BuiltinOracle(corpus))
        assert result.certified
        assert result.deps <= set(candidates.candidates)
        assert result.deps in enumerate_minimal_sufficient(corpus, target, candidates.candidates)


def test_ddmin_requires_monotone_declaration(chain):
    oracle = FunctionOracle(lambda item, deps: VERIFIABLE, monotone=False)
    with pytest.raises(ValueError, match="monotone"):
        minimize_ddmin(chain.get(B), default_candidates(chain, B), oracle)


def test_certify_empty_deps(chain):
    ok, calls = certify_minimal(chain.get(A), frozenset(), BuiltinOracle(chain))
    assert ok
    assert calls == 1


def test_certify_rejects_removable_dep():
    corpus = parse_corpus(
        '{"id": "a:definition:1", "defines": ["s"], "uses": [], "refs": []}\n'
        '{"id": "b:definition:1", "defines": ["unused"], "uses": [], "refs": []}\n'
        '{"id": "c:theorem:1", "defines": [], "uses": ["s"], "refs": []}\n'
    )
    target = corpus.items[-1]
    ok, calls = certify_minimal(target, frozenset({A, ItemId.parse("b:definition:1")}), BuiltinOracle(corpus))
    assert not ok
    assert calls == 3


def test_certify_rejects_insufficient_deps(chain):
    ok, calls = certify_minimal(chain.get(B), frozenset(), BuiltinOracle(chain))
    assert not ok
    assert calls == 1


def test_certify_exact_call_count(chain):
    oracle = BuiltinOracle(chain)
    certify_minimal(chain.get(B), frozenset({A}), oracle)
    assert oracle.calls == 2


def test_certify_accepts_linear_output_on_random_fixtures():
    rng = random.Random(31)
    for _ in range(60):
        corpus, target = library_fixture(rng, rng.randint(0, 14))
        result = minimize_linear(target, default_candidates(corpus, target.id), BuiltinOracle(corpus))
        ok, _ = certify_minimal(target, result.deps, BuiltinOracle(corpus))
        assert ok


def test_linear_matches_exhaustive_enumeration():
    rng = random.Random(37)
    for _ in range(40):
        corpus, target = library_fixture(rng, rng.randint(0, 12), multi_prob=0.4)
        candidates = default_candidates(corpus, target.id)
        order = rng.choice([ORDER_DESCENDING, ORDER_ASCENDING])
        result = minimize_linear(target, candidates, BuiltinOracle(corpus), order)
        minimal = enumerate_minimal_sufficient(corpus, target, candidates.candidates)
        assert result.deps in minimal
        assert result.deps == simulate_linear(corpus, target, candidates.candidates, order)


def test_strategy_validation():
    with pytest.raises(ValueError, match="unknown strategy"):
        Strategy(name="magic")
    with pytest.raises(ValueError, match="unknown removal order"):
        Strategy(order="random")


def test_minimize_corpus_empty():
    corpus = parse_corpus("")
    outcome = minimize_corpus(corpus, BuiltinOracle(corpus))
    assert outcome.results == {}
    assert outcome.failures == {}
    assert outcome.to_text() == ""


def test_minimize_corpus_chain(chain):
    outcome = minimize_corpus(chain, BuiltinOracle(chain))
    assert outcome.failures == {}
    assert outcome.results[A].deps == frozenset()
    assert outcome.results[B].deps == {A}
    assert outcome.results[C].deps == {B}
    assert outcome.to_text() == (
        "a:definition:1\t\tlinear\t1\n"
        "b:theorem:1\ta:definition:1\tlinear\t2\n"
        "c:theorem:1\tb:theorem:1\tlinear\t3\n"
    )


def test_minimize_corpus_collects_failures():
    corpus = parse_corpus(
        '{"id": "a:definition:1", "defines": ["s"], "uses": [], "refs": []}\n'
        '{"id": "b:theorem:1", "defines": [], "uses": ["ghost"], "refs": []}\n'
        '{"id": "c:theorem:1", "defines": [], "uses": ["s"], "refs": []}\n'
    )
    outcome = minimize_corpus(corpus, BuiltinOracle(corpus))
    assert set(outcome.failures) == {B}
    assert "over-approximation insufficient" in outcome.failures[B]
    assert set(outcome.results) == {A, C}
    lines = outcome.to_text().splitlines()
    assert lines[1] == "b:theorem:1\t!\tover-approximation insufficient"


def test_minimize_corpus_parallelism_determinism():
    rng = random.Random(41)
    corpus = parse_corpus(synthetic_corpus_text(rng, 120))
    serial = minimize_corpus(corpus, BuiltinOracle(corpus), Strategy(), parallelism=1)
    threaded = minimize_corpus(corpus, BuiltinOracle(corpus), Strategy(), parallelism=8)
    assert serial.to_text() == threaded.to_text()


def test_minimize_corpus_matches_construction_ground_truth():
    rng = random.Random(43)
    corpus = parse_corpus(synthetic_corpus_text(rng, 80))
    truth = expected_deps(corpus)
    for strategy in (Strategy("linear"), Strategy("ddmin")):
        outcome = minimize_corpus(corpus, BuiltinOracle(corpus), strategy)
        assert outcome.failures == {}
        for item_id, result in outcome.results.items():
            assert result.deps == truth[item_id], f"{strategy.name} diverged on {item_id}"


def test_minimize_corpus_rejects_bad_parallelism(chain):
    with pytest.raises(ValueError, match="parallelism"):
        minimize_corpus(chain, BuiltinOracle(chain), parallelism=0)


def test_minimize_corpus_rejects_ddmin_without_monotonicity(chain):
    oracle = FunctionOracle(lambda item, deps: VERIFIABLE, monotone=False)
    with pytest.raises(ValueError, match="monotone"):
        minimize_corpus(chain, oracle, Strategy("ddmin"))


def test_results_round_trip(tmp_path):
    corpus = parse_corpus(
        '{"id": "a:definition:1", "defines": ["s"], "uses": [], "refs": []}\n'
        '{"id": "b:theorem:1", "defines": [], "uses": ["ghost"], "refs": []}\n'
        '{"id": "c:theorem:1", "defines": [], "uses": ["s"], "refs": []}\n'
    )
    outcome = minimize_corpus(corpus, BuiltinOracle(corpus))
    path = tmp_path / "results.tsv"
    outcome.write(path)
    loaded = load_results(path, corpus)
    assert set(loaded.results) == set(outcome.results)
    for item_id, result in outcome.results.items():
        again = loaded.results[item_id]
        assert again.deps == result.deps
        assert again.strategy == result.strategy
        assert again.oracle_calls == result.oracle_calls
        assert not again.certified  # the file records no certification
    assert loaded.failures == outcome.failures
    assert loaded.to_text() == outcome.to_text()


def test_load_results_rejects_unknown_item(tmp_path, chain):
    path = tmp_path / "results.tsv"
    path.write_text("zz:lemma:1\t\tlinear\t1\n")
    with pytest.raises(Exception, match="unknown item"):
        load_results(path, chain)


def test_load_results_rejects_malformed_line(tmp_path, chain):
    path = tmp_path / "results.tsv"
    path.write_text("a:definition:1\tonly-three\n")
    with pytest.raises(ValueError):
        load_results(path, chain)


def test_cached_runs_are_idempotent(tmp_path):
    rng = random.Random(47)
    corpus = parse_corpus(synthetic_corpus_text(rng, 40))
    path = tmp_path / "cache.tsv"

    first_backend = BuiltinOracle(corpus)
    first = minimize_corpus(corpus, CachedOracle(first_backend, VerificationCache(path)))
    assert first_backend.calls > 0

    second_backend = BuiltinOracle(corpus)
    second = minimize_corpus(corpus, CachedOracle(second_backend, VerificationCache(path)))
    assert second_backend.calls == 0
    assert second.to_text() == first.to_text()
