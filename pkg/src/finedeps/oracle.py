"""Verification oracles: the pluggable predicate behind minimization.

An oracle answers one question: given an item and a trial dependency
set, does the item still check out?  The builtin oracle answers it
symbolically (symbol closure plus explicit references); the external
adapter delegates to an arbitrary command via a sandbox directory; a
write-through cache keyed by order-independent set fingerprints makes
repeated questions free.
"""

from __future__ import annotations

import hashlib
import shlex
import shutil
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import Corpus, Item, ItemId


class OracleConfigError(Exception):
    """An oracle was configured in a way its contract forbids."""


@dataclass(frozen=True)
class VerificationOutcome:
    """Result of one verification attempt.

    ``error`` is reserved for oracle malfunction (timeout, crash,
    contract violation), never for a clean negative answer.
    """

    verdict: str  # "verifiable" | "not_verifiable" | "error"
    message: str | None = None

    @classmethod
    def error(cls, message: str) -> "VerificationOutcome":
        return cls("error", message)

    @property
    def is_verifiable(self) -> bool:
        return self.verdict == "verifiable"

    @property
    def is_error(self) -> bool:
        return self.verdict == "error"


VERIFIABLE = VerificationOutcome("verifiable")
NOT_VERIFIABLE = VerificationOutcome("not_verifiable")


@dataclass(frozen=True)
class OracleDescriptor:
    """Behavioral assumptions a backend declares and the minimizer relies on.

    The flags are trusted, not checked, at runtime; tests spot-check
    declared monotonicity on random set pairs.
    """

    name: str
    monotone: bool
    deterministic: bool


class VerificationOracle:
    """Uniform interface every backend implements."""

    descriptor: OracleDescriptor

    def verify(self, item: Item, deps: frozenset[ItemId]) -> VerificationOutcome:
        raise NotImplementedError


def verify_builtin(item: Item, deps: frozenset[ItemId], corpus: Corpus) -> VerificationOutcome:
    """Symbol-closure ground truth.

    Verifiable iff every symbol the item uses is defined by some dep and
    every explicit reference is among the deps.  Unknown or forward deps
    are a contract violation and produce an error outcome, never a
    clean "no".
    """
    item_position = item.position
    for dep in deps:
        if dep not in corpus:
            return VerificationOutcome.error(f"unknown dep {dep}")
        if corpus.get(dep).position >= item_position:
            return VerificationOutcome.error(f"forward dep {dep}")
    if not item.explicit_refs <= deps:
        return NOT_VERIFIABLE
    for symbol in item.uses:
        if not corpus.definers_of(symbol) & deps:
            return NOT_VERIFIABLE
    return VERIFIABLE


class BuiltinOracle(VerificationOracle):
    """Corpus-bound wrapper around verify_builtin with an invocation counter."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self.descriptor = OracleDescriptor(name="builtin", monotone=True, deterministic=True)
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def verify(self, item: Item, deps: frozenset[ItemId]) -> VerificationOutcome:
        with self._lock:
            self._calls += 1
        return verify_builtin(item, deps, self.corpus)


def verify_external(
    item: Item,
    deps: frozenset[ItemId],
    corpus: Corpus,
    command: str | Sequence[str],
    timeout: float = 60.0,
) -> VerificationOutcome:
    """Delegate one verification to an external command.

    A fresh sandbox directory holds ``item.txt`` (the item body, empty
    file if absent) and ``manifest`` (one dep id per line, corpus order,
    LF-terminated).  The command is invoked with the directory path as
    its sole argument; exit status 0 means verifiable, 1 means not
    verifiable, anything else (or a timeout) is an error.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    ordered = sorted(deps, key=lambda d: corpus.get(d).position)
    sandbox = tempfile.mkdtemp(prefix="finedeps-oracle-")
    try:
        root = Path(sandbox)
        (root / "item.txt").write_text(item.body or "", encoding="utf-8")
        (root / "manifest").write_text("".join(f"{dep}\n" for dep in ordered), encoding="utf-8")
        try:
            proc = subprocess.run(
                argv + [sandbox],
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            return VerificationOutcome.error("timeout")
        except OSError as exc:
            return VerificationOutcome.error(f"failed to launch {argv[0]!r}: {exc}")
        if proc.returncode == 0:
            return VERIFIABLE
        if proc.returncode == 1:
            return NOT_VERIFIABLE
        diagnostic = proc.stderr.strip() or proc.stdout.strip()
        suffix = f": {diagnostic}" if diagnostic else ""
        return VerificationOutcome.error(f"exit status {proc.returncode}{suffix}")
    finally:
        shutil.rmtree(sandbox, ignore_errors=True)


class ExternalCommandOracle(VerificationOracle):
    """Backend adapter for an external verifier command.

    The declared flags describe the wrapped command; defaults assume a
    well-behaved verifier (monotone, deterministic) and can be lowered
    by the caller when wrapping something weaker.
    """

    def __init__(
        self,
        corpus: Corpus,
        command: str | Sequence[str],
        timeout: float = 60.0,
        *,
        name: str = "external",
        monotone: bool = True,
        deterministic: bool = True,
    ):
        self.corpus = corpus
        self.command = command
        self.timeout = timeout
        self.descriptor = OracleDescriptor(name=name, monotone=monotone, deterministic=deterministic)
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def verify(self, item: Item, deps: frozenset[ItemId]) -> VerificationOutcome:
        with self._lock:
            self._calls += 1
        return verify_external(item, deps, self.corpus, self.command, self.timeout)


def dependency_fingerprint(deps: Iterable[ItemId]) -> str:
    """Order-independent digest of a dependency set.

    Equal membership always collides, by design: the fingerprint keys
    the verification cache.
    """
    return hashlib.sha256("\n".join(sorted(str(d) for d in deps)).encode("utf-8")).hexdigest()


_OUTCOME_CODE = {"verifiable": "V", "not_verifiable": "N"}
_CODE_OUTCOME = {"V": VERIFIABLE, "N": NOT_VERIFIABLE}


class VerificationCache:
    """Outcome cache keyed by (item id, dependency-set fingerprint).

    Error outcomes are never stored so transient failures stay
    retryable.  With a path, every insert is appended to the file as
    ``itemId<TAB>fingerprint<TAB>{V,N}``; append-only, so a crashed run
    loses at most the in-flight entry.  Concurrent lookups and inserts
    are safe; duplicate inserts from deterministic backends are
    identical, so last-writer-wins costs nothing.
    """

    def __init__(self, path: str | Path | None = None):
        self._entries: dict[tuple[str, str], VerificationOutcome] = {}
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        self.hits = 0
        self.misses = 0
        if self._path is not None and self._path.exists():
            self._load(self._path)

    def _load(self, path: Path) -> None:
        text = path.read_text(encoding="utf-8")
        lines = text.split("\n")
        # A missing trailing newline can only mean an interrupted final
        # append; tolerate exactly that and nothing else.
        if lines and lines[-1] == "":
            lines.pop()
            tail_partial_ok = False
        else:
            tail_partial_ok = True
        for idx, line in enumerate(lines):
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in _CODE_OUTCOME:
                if tail_partial_ok and idx == len(lines) - 1:
                    continue
                raise ValueError(f"{path}: malformed cache line {idx + 1}: {line!r}")
            item_id, fingerprint, code = parts
            self._entries[(item_id, fingerprint)] = _CODE_OUTCOME[code]

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def lookup(self, item_id: ItemId, deps: frozenset[ItemId]) -> VerificationOutcome | None:
        key = (str(item_id), dependency_fingerprint(deps))
        with self._lock:
            outcome = self._entries.get(key)
            if outcome is None:
                self.misses += 1
            else:
                self.hits += 1
            return outcome

    def store(self, item_id: ItemId, deps: frozenset[ItemId], outcome: VerificationOutcome) -> None:
        if outcome.is_error:
            return
        key = (str(item_id), dependency_fingerprint(deps))
        record = f"{key[0]}\t{key[1]}\t{_OUTCOME_CODE[outcome.verdict]}\n"
        with self._lock:
            self._entries[key] = outcome
            if self._path is not None:
                with open(self._path, "a", encoding="utf-8") as handle:
                    handle.write(record)

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


def cached_verify(
    cache: VerificationCache,
    backend: VerificationOracle,
    item: Item,
    deps: frozenset[ItemId],
) -> VerificationOutcome:
    """Answer from the cache when possible, else ask the backend and remember.

    Refuses nondeterministic backends: replaying a cached answer for
    one would change observable behavior.  Error outcomes pass through
    uncached.
    """
    if not backend.descriptor.deterministic:
        raise OracleConfigError(
            f"cannot cache nondeterministic oracle {backend.descriptor.name!r}"
        )
    hit = cache.lookup(item.id, deps)
    if hit is not None:
        return hit
    outcome = backend.verify(item, deps)
    cache.store(item.id, deps, outcome)
    return outcome


class CachedOracle(VerificationOracle):
    """Backend wrapped with a VerificationCache; descriptor passes through."""

    def __init__(self, backend: VerificationOracle, cache: VerificationCache):
        if not backend.descriptor.deterministic:
            raise OracleConfigError(
                f"cannot cache nondeterministic oracle {backend.descriptor.name!r}"
            )
        self.backend = backend
        self.cache = cache
        self.descriptor = backend.descriptor

    def verify(self, item: Item, deps: frozenset[ItemId]) -> VerificationOutcome:
        return cached_verify(self.cache, self.backend, item, deps)


class FunctionOracle(VerificationOracle):
    """Adapter turning a plain predicate into an oracle; handy in tests."""

    def __init__(
        self,
        fn: Callable[[Item, frozenset[ItemId]], VerificationOutcome],
        *,
        name: str = "function",
        monotone: bool = False,
        deterministic: bool = True,
    ):
        self._fn = fn
        self.descriptor = OracleDescriptor(name=name, monotone=monotone, deterministic=deterministic)
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def verify(self, item: Item, deps: frozenset[ItemId]) -> VerificationOutcome:
        with self._lock:
            self._calls += 1
        return self._fn(item, deps)
