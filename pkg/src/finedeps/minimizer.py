"""Refinement of over-approximated candidate sets to minimal dependency sets.

Both strategies start from the full candidate set, repeatedly ask the
oracle whether the item still verifies with part of the set hidden, and
keep only what cannot be removed.  ``linear`` visits each candidate
once; ``ddmin`` removes contiguous blocks at growing granularity and
ends with an explicit certification pass.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import CandidateSet, Corpus, Item, ItemId, default_candidates
from .ioutil import atomic_write_text
from .oracle import VerificationOracle, VerificationOutcome

ORDER_DESCENDING = "descending_position"
ORDER_ASCENDING = "ascending_position"
ORDERS = (ORDER_DESCENDING, ORDER_ASCENDING)

STRATEGY_LINEAR = "linear"
STRATEGY_DDMIN = "ddmin"
STRATEGIES = (STRATEGY_LINEAR, STRATEGY_DDMIN)


class MinimizationError(Exception):
    """Minimization of one item could not produce a trustworthy result."""

    def __init__(self, item_id: ItemId, reason: str):
        super().__init__(f"item {item_id}: {reason}")
        self.item_id = item_id
        self.reason = reason


@dataclass(frozen=True)
class Strategy:
    name: str = STRATEGY_LINEAR
    order: str = ORDER_DESCENDING

    def __post_init__(self) -> None:
        if self.name not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.name!r} (expected one of {', '.join(STRATEGIES)})")
        if self.order not in ORDERS:
            raise ValueError(f"unknown removal order {self.order!r} (expected one of {', '.join(ORDERS)})")


@dataclass(frozen=True)
class MinimalDepSet:
    item: ItemId
    deps: frozenset[ItemId]
    strategy: str
    oracle_calls: int
    certified: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "deps", frozenset(self.deps))
        if self.oracle_calls < 0:
            raise ValueError("oracle_calls must be nonnegative")


class _MemoOracle:
    """Per-item memo over a deterministic oracle.

    ddmin revisits dependency sets (notably during its final
    certification pass); the memo makes revisits free and counts only
    novel questions, so ``oracle_calls`` reflects distinct verification
    work.  Nondeterministic backends are passed through unmemoized and
    every call is counted.
    """

    def __init__(self, oracle: VerificationOracle, item: Item):
        self._oracle = oracle
        self._item = item
        self._memo: dict[frozenset[ItemId], VerificationOutcome] | None = (
            {} if oracle.descriptor.deterministic else None
        )
        self.calls = 0

    def verify(self, deps: frozenset[ItemId]) -> VerificationOutcome:
        if self._memo is not None:
            cached = self._memo.get(deps)
            if cached is not None:
                return cached
        self.calls += 1
        outcome = self._oracle.verify(self._item, deps)
        if self._memo is not None and not outcome.is_error:
            self._memo[deps] = outcome
        return outcome


def _ordered_candidates(candidates: CandidateSet, order: str) -> list[ItemId]:
    if order == ORDER_ASCENDING:
        return list(candidates.candidates)
    if order == ORDER_DESCENDING:
        return list(reversed(candidates.candidates))
    raise ValueError(f"unknown removal order {order!r}")


def _checked(item_id: ItemId, outcome: VerificationOutcome) -> VerificationOutcome:
    if outcome.is_error:
        raise MinimizationError(item_id, f"oracle error: {outcome.message}")
    return outcome


def minimize_linear(
    item: Item,
    candidates: CandidateSet,
    oracle: VerificationOracle,
    order: str = ORDER_DESCENDING,
) -> MinimalDepSet:
    """One pass over the candidates, dropping every individually removable one.

    Costs exactly ``len(candidates) + 1`` oracle calls.  The result is
    sufficient by construction and 1-minimal whenever the oracle is
    monotone.
    """
    visit = _ordered_candidates(candidates, order)
    memo = _MemoOracle(oracle, item)
    current = set(candidates.candidates)
    initial = _checked(item.id, memo.verify(frozenset(current)))
    if not initial.is_verifiable:
        raise MinimizationError(item.id, "over-approximation insufficient")
    for candidate in visit:
        trial = frozenset(current - {candidate})
        if _checked(item.id, memo.verify(trial)).is_verifiable:
            current.discard(candidate)
    descriptor = oracle.descriptor
    return MinimalDepSet(
        item=item.id,
        deps=frozenset(current),
        strategy=STRATEGY_LINEAR,
        oracle_calls=memo.calls,
        certified=descriptor.monotone and descriptor.deterministic,
    )


def _blocks(items: list[ItemId], n: int) -> list[list[ItemId]]:
    size = len(items)
    return [items[size * i // n : size * (i + 1) // n] for i in range(n)]


def minimize_ddmin(
    item: Item,
    candidates: CandidateSet,
    oracle: VerificationOracle,
    order: str = ORDER_DESCENDING,
) -> MinimalDepSet:
    """Block-removal minimization at doubling granularity.

    Requires a monotone oracle: removing a whole block and keeping the
    complement is only sound when verifiability survives supersets.  A
    certification pass at the end re-checks sufficiency and
    1-minimality explicitly, so the result is trustworthy even if the
    declared monotonicity was optimistic.
    """
    if not oracle.descriptor.monotone:
        raise ValueError(
            f"ddmin requires a monotone oracle, {oracle.descriptor.name!r} is not declared monotone"
        )
    memo = _MemoOracle(oracle, item)
    current = _ordered_candidates(candidates, order)
    initial = _checked(item.id, memo.verify(frozenset(current)))
    if not initial.is_verifiable:
        raise MinimizationError(item.id, "over-approximation insufficient")

    n = min(2, len(current))
    while current:
        removed = False
        for block in _blocks(current, n):
            trial = [c for c in current if c not in set(block)]
            if _checked(item.id, memo.verify(frozenset(trial))).is_verifiable:
                current = trial
                n = max(n - 1, 2)
                if current:
                    n = min(n, len(current))
                removed = True
                break
        if removed:
            continue
        if n < len(current):
            n = min(len(current), 2 * n)
            continue
        break

    deps = frozenset(current)
    certified, _ = _certify_with(memo, item.id, deps)
    return MinimalDepSet(
        item=item.id,
        deps=deps,
        strategy=STRATEGY_DDMIN,
        oracle_calls=memo.calls,
        certified=certified,
    )


def _certify_with(memo: _MemoOracle, item_id: ItemId, deps: frozenset[ItemId]) -> tuple[bool, int]:
    # Exactly len(deps) + 1 checks, in a deterministic order.
    ok = _checked(item_id, memo.verify(deps)).is_verifiable
    for dep in sorted(deps, key=str):
        outcome = _checked(item_id, memo.verify(deps - {dep}))
        if outcome.is_verifiable:
            ok = False
    return ok, len(deps) + 1


def certify_minimal(
    item: Item,
    deps: frozenset[ItemId],
    oracle: VerificationOracle,
) -> tuple[bool, int]:
    """Check sufficiency and 1-minimality directly.

    True iff the oracle verifies the item on ``deps`` and refuses it on
    ``deps`` minus any single element.  Always makes exactly
    ``len(deps) + 1`` oracle calls.
    """
    deps = frozenset(deps)
    ok = _checked(item.id, oracle.verify(item, deps)).is_verifiable
    for dep in sorted(deps, key=str):
        outcome = _checked(item.id, oracle.verify(item, deps - {dep}))
        if outcome.is_verifiable:
            ok = False
    return ok, len(deps) + 1


_MINIMIZERS = {STRATEGY_LINEAR: minimize_linear, STRATEGY_DDMIN: minimize_ddmin}


def minimize_item(
    item: Item,
    candidates: CandidateSet,
    oracle: VerificationOracle,
    strategy: Strategy,
) -> MinimalDepSet:
    return _MINIMIZERS[strategy.name](item, candidates, oracle, strategy.order)


@dataclass
class CorpusMinimization:
    """Corpus-wide minimization outcome: per-item results plus per-item failures."""

    corpus: Corpus
    results: dict[ItemId, MinimalDepSet] = field(default_factory=dict)
    failures: dict[ItemId, str] = field(default_factory=dict)

    @property
    def total_oracle_calls(self) -> int:
        return sum(r.oracle_calls for r in self.results.values())

    def to_text(self) -> str:
        lines = []
        for item in self.corpus:
            if item.id in self.failures:
                message = " ".join(self.failures[item.id].split())
                lines.append(f"{item.id}\t!\t{message}")
                continue
            result = self.results[item.id]
            ordered = sorted(result.deps, key=lambda d: self.corpus.get(d).position)
            deps_text = ",".join(str(d) for d in ordered)
            lines.append(f"{item.id}\t{deps_text}\t{result.strategy}\t{result.oracle_calls}")
        return "".join(line + "\n" for line in lines)

    def write(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_text())


def minimize_corpus(
    corpus: Corpus,
    oracle: VerificationOracle,
    strategy: Strategy = Strategy(),
    parallelism: int = 1,
) -> CorpusMinimization:
    """Minimize every item of the corpus against its candidate set.

    Items are independent work units; a thread pool of the requested
    width runs them, and results are assembled in corpus order, so the
    outcome is identical at every parallelism level.  Per-item failures
    are collected, never fatal.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be a positive integer")
    if strategy.name == STRATEGY_DDMIN and not oracle.descriptor.monotone:
        raise ValueError(
            f"ddmin requires a monotone oracle, {oracle.descriptor.name!r} is not declared monotone"
        )

    def work(item: Item) -> MinimalDepSet | MinimizationError:
        try:
            return minimize_item(item, default_candidates(corpus, item.id), oracle, strategy)
        except MinimizationError as exc:
            return exc

    outcome = CorpusMinimization(corpus=corpus)
    if parallelism == 1:
        produced: Iterable[MinimalDepSet | MinimizationError] = map(work, corpus.items)
    else:
        pool = ThreadPoolExecutor(max_workers=parallelism)
        try:
            produced = list(pool.map(work, corpus.items))
        finally:
            pool.shutdown(wait=True)
    for item, result in zip(corpus.items, produced):
        if isinstance(result, MinimizationError):
            outcome.failures[item.id] = result.reason
        else:
            outcome.results[item.id] = result
    return outcome


def load_results(path: str | Path, corpus: Corpus) -> CorpusMinimization:
    """Read a minimization results file back into memory.

    Loaded results carry ``certified=False``: the file does not record
    certification, and trusting it would claim checks nobody replayed.
    """
    outcome = CorpusMinimization(corpus=corpus)
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        item_id = _parse_result_id(parts[0], line_no)
        corpus.get(item_id)
        if len(parts) == 3 and parts[1] == "!":
            outcome.failures[item_id] = parts[2]
            continue
        if len(parts) != 4:
            raise ValueError(f"{path}: line {line_no}: expected 4 tab-separated fields")
        deps_text, strategy, calls_text = parts[1], parts[2], parts[3]
        deps = frozenset(
            _parse_result_id(dep, line_no) for dep in deps_text.split(",") if dep
        )
        for dep in deps:
            corpus.get(dep)
        try:
            calls = int(calls_text)
        except ValueError:
            raise ValueError(f"{path}: line {line_no}: bad oracle call count {calls_text!r}") from None
        outcome.results[item_id] = MinimalDepSet(
            item=item_id, deps=deps, strategy=strategy, oracle_calls=calls, certified=False
        )
    return outcome


def _parse_result_id(text: str, line_no: int) -> ItemId:
    try:
        return ItemId.parse(text)
    except ValueError as exc:
        raise ValueError(f"line {line_no}: {exc}") from None
