"""Itemized-corpus data model: items, identifiers, candidate sets.

A corpus file is UTF-8 text with one item per line, each line a single
JSON object (blank lines and ``#`` comments are skipped).  Line order is
the global corpus order; every reference and every dependency candidate
of an item must point strictly backward in that order, which makes the
candidate relation a DAG by construction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .ioutil import atomic_write_text

KINDS = ("definition", "theorem", "lemma", "scheme", "notation", "registration")

_ARTICLE_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_SYMBOL_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")

_REQUIRED_FIELDS = ("id", "defines", "uses", "refs")
_KNOWN_FIELDS = frozenset(_REQUIRED_FIELDS) | {"body", "candidates"}


class CorpusError(Exception):
    """Base class for corpus loading and validation failures."""


class CorpusParseError(CorpusError):
    """A line of the corpus file could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CorpusValidationError(CorpusError):
    """A parsed item violates a corpus-level invariant."""

    def __init__(self, item_id: "ItemId", message: str):
        super().__init__(f"item {item_id}: {message}")
        self.item_id = item_id


class UnknownItemError(CorpusError):
    def __init__(self, item_id: "ItemId"):
        super().__init__(f"unknown item: {item_id}")
        self.item_id = item_id


@dataclass(frozen=True)
class ItemId:
    """Identity of one corpus item, rendered canonically as ``article:kind:ordinal``."""

    article: str
    kind: str
    ordinal: int

    def __post_init__(self) -> None:
        if not isinstance(self.article, str) or not _ARTICLE_RE.match(self.article):
            raise ValueError(f"invalid article name {self.article!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown item kind {self.kind!r} (expected one of {', '.join(KINDS)})")
        if not isinstance(self.ordinal, int) or isinstance(self.ordinal, bool) or self.ordinal < 1:
            raise ValueError(f"ordinal must be a positive integer, got {self.ordinal!r}")

    @classmethod
    def parse(cls, text: str) -> "ItemId":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"malformed item id {text!r}: expected article:kind:ordinal")
        article, kind, ordinal_text = parts
        # Reject non-canonical ordinals ("01") so parse/render round-trips.
        if not ordinal_text.isdigit() or str(int(ordinal_text)) != ordinal_text:
            raise ValueError(f"malformed item id {text!r}: bad ordinal {ordinal_text!r}")
        return cls(article, kind, int(ordinal_text))

    def __str__(self) -> str:
        return f"{self.article}:{self.kind}:{self.ordinal}"


@dataclass(frozen=True)
class Item:
    """One definitional or propositional unit of the corpus.

    ``uses`` never overlaps ``defines``: symbols an item defines itself
    are stripped from its uses at ingestion, so recursive definitions do
    not appear to need external help for their own symbol.
    """

    id: ItemId
    defines: frozenset[str]
    uses: frozenset[str]
    explicit_refs: frozenset[ItemId]
    position: int
    body: str | None = None
    explicit_candidates: tuple[ItemId, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "defines", frozenset(self.defines))
        object.__setattr__(self, "uses", frozenset(self.uses))
        object.__setattr__(self, "explicit_refs", frozenset(self.explicit_refs))
        if self.explicit_candidates is not None:
            object.__setattr__(self, "explicit_candidates", tuple(self.explicit_candidates))
        for symbol in self.defines | self.uses:
            if not isinstance(symbol, str) or not _SYMBOL_RE.match(symbol):
                raise ValueError(f"item {self.id}: invalid symbol name {symbol!r}")
        if self.id in self.explicit_refs:
            raise ValueError(f"item {self.id}: refers to itself")
        if not self.uses.isdisjoint(self.defines):
            overlap = ", ".join(sorted(self.uses & self.defines))
            raise ValueError(f"item {self.id}: uses its own definitions ({overlap})")
        if self.position < 0:
            raise ValueError(f"item {self.id}: negative position")


@dataclass(frozen=True)
class CandidateSet:
    """Over-approximated dependency candidates for one item, in corpus order."""

    item: ItemId
    candidates: tuple[ItemId, ...]

    def __len__(self) -> int:
        return len(self.candidates)


class Corpus:
    """Immutable, globally ordered collection of items.

    Validates on construction: ids unique, positions exactly 0..n-1 in
    sequence order, every explicit reference and explicit candidate
    resolving to a strictly earlier item.
    """

    def __init__(self, items: Iterable[Item]):
        self._items: tuple[Item, ...] = tuple(items)
        index: dict[ItemId, Item] = {}
        for expected, item in enumerate(self._items):
            if item.position != expected:
                raise CorpusValidationError(
                    item.id, f"position {item.position} out of sequence (expected {expected})"
                )
            if item.id in index:
                raise CorpusValidationError(item.id, "duplicate id")
            index[item.id] = item
        self._index = index
        for item in self._items:
            for ref in item.explicit_refs:
                target = index.get(ref)
                if target is None:
                    raise CorpusValidationError(item.id, f"unresolved reference {ref}")
                if target.position >= item.position:
                    raise CorpusValidationError(item.id, f"forward reference {ref}")
            if item.explicit_candidates is not None:
                self._check_candidates(item)
        definers: dict[str, set[ItemId]] = {}
        for item in self._items:
            for symbol in item.defines:
                definers.setdefault(symbol, set()).add(item.id)
        self._definers = {symbol: frozenset(ids) for symbol, ids in definers.items()}

    def _check_candidates(self, item: Item) -> None:
        assert item.explicit_candidates is not None
        seen: set[ItemId] = set()
        last_position = -1
        for cand in item.explicit_candidates:
            if cand == item.id:
                raise CorpusValidationError(item.id, "candidate list contains the item itself")
            if cand in seen:
                raise CorpusValidationError(item.id, f"duplicate candidate {cand}")
            seen.add(cand)
            target = self._index.get(cand)
            if target is None:
                raise CorpusValidationError(item.id, f"unresolved candidate {cand}")
            if target.position >= item.position:
                raise CorpusValidationError(item.id, f"forward candidate {cand}")
            if target.position < last_position:
                raise CorpusValidationError(item.id, "candidate list not in corpus order")
            last_position = target.position
        missing = item.explicit_refs - seen
        if missing:
            names = ", ".join(str(r) for r in sorted(missing, key=str))
            raise CorpusValidationError(item.id, f"explicit refs missing from candidates: {names}")

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Item]:
        return iter(self._items)

    def __contains__(self, item_id: ItemId) -> bool:
        return item_id in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self._items == other._items

    @property
    def items(self) -> tuple[Item, ...]:
        return self._items

    def get(self, item_id: ItemId) -> Item:
        try:
            return self._index[item_id]
        except KeyError:
            raise UnknownItemError(item_id) from None

    def definers_of(self, symbol: str) -> frozenset[ItemId]:
        """Ids of all items that define the given symbol."""
        return self._definers.get(symbol, frozenset())

    @property
    def defined_symbols(self) -> frozenset[str]:
        return frozenset(self._definers)


@dataclass(frozen=True)
class CorpusStats:
    items: int
    kinds: dict[str, int]
    symbols: int

    def to_dict(self) -> dict:
        return {"items": self.items, "kinds": dict(self.kinds), "symbols": self.symbols}


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Exact counts: items, items per kind (all kinds listed), distinct defined symbols."""
    kinds = {kind: 0 for kind in KINDS}
    for item in corpus:
        kinds[item.id.kind] += 1
    return CorpusStats(items=len(corpus), kinds=kinds, symbols=len(corpus.defined_symbols))


def default_candidates(corpus: Corpus, item_id: ItemId) -> CandidateSet:
    """Candidate dependency set for an item: the over-approximation refinement starts from.

    Defaults to every strictly earlier item, in corpus order.  When the
    corpus file supplied an explicit ``candidates`` list for the item,
    that list (already validated at load) is returned instead.
    """
    item = corpus.get(item_id)
    if item.explicit_candidates is not None:
        return CandidateSet(item=item_id, candidates=item.explicit_candidates)
    preceding = tuple(other.id for other in corpus.items[: item.position])
    return CandidateSet(item=item_id, candidates=preceding)


def _parse_id_field(line_no: int, text: object, what: str) -> ItemId:
    if not isinstance(text, str):
        raise CorpusParseError(line_no, f"{what} must be a string, got {type(text).__name__}")
    try:
        return ItemId.parse(text)
    except ValueError as exc:
        raise CorpusParseError(line_no, f"{what}: {exc}") from None


def _parse_string_array(line_no: int, value: object, what: str) -> list[str]:
    if not isinstance(value, list) or any(not isinstance(entry, str) for entry in value):
        raise CorpusParseError(line_no, f"{what} must be an array of strings")
    return value


def _parse_record(line_no: int, obj: object) -> dict:
    if not isinstance(obj, dict):
        raise CorpusParseError(line_no, "expected a JSON object")
    unknown = set(obj) - _KNOWN_FIELDS
    if unknown:
        raise CorpusParseError(line_no, f"unknown fields: {', '.join(sorted(unknown))}")
    for field in _REQUIRED_FIELDS:
        if field not in obj:
            raise CorpusParseError(line_no, f"missing required field {field!r}")
    record = {
        "line_no": line_no,
        "id": _parse_id_field(line_no, obj["id"], "id"),
        "defines": _parse_string_array(line_no, obj["defines"], "defines"),
        "uses": _parse_string_array(line_no, obj["uses"], "uses"),
        "refs": [_parse_id_field(line_no, entry, "refs entry") for entry in _parse_string_array(line_no, obj["refs"], "refs")],
        "body": None,
        "candidates": None,
    }
    for symbol in record["defines"] + record["uses"]:
        if not _SYMBOL_RE.match(symbol):
            raise CorpusParseError(line_no, f"invalid symbol name {symbol!r}")
    if "body" in obj:
        if not isinstance(obj["body"], str):
            raise CorpusParseError(line_no, "body must be a string")
        record["body"] = obj["body"]
    if "candidates" in obj:
        record["candidates"] = [
            _parse_id_field(line_no, entry, "candidates entry")
            for entry in _parse_string_array(line_no, obj["candidates"], "candidates")
        ]
    return record


def parse_corpus(text: str) -> Corpus:
    """Parse itemized-corpus text; positions are assigned by item-line order."""
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(line_no, f"invalid JSON: {exc}") from None
        records.append(_parse_record(line_no, obj))

    positions: dict[ItemId, int] = {}
    for position, record in enumerate(records):
        if record["id"] in positions:
            raise CorpusValidationError(record["id"], "duplicate id")
        positions[record["id"]] = position

    items = []
    for position, record in enumerate(records):
        item_id = record["id"]
        refs = frozenset(record["refs"])
        if item_id in refs:
            raise CorpusValidationError(item_id, "refers to itself")
        explicit_candidates = None
        if record["candidates"] is not None:
            # File order of the candidates array is not meaningful; normalize
            # to corpus order (Corpus validation rejects anything unresolvable).
            resolved = []
            for cand in record["candidates"]:
                if cand not in positions:
                    raise CorpusValidationError(item_id, f"unresolved candidate {cand}")
                resolved.append(cand)
            explicit_candidates = tuple(sorted(resolved, key=lambda c: positions[c]))
        defines = frozenset(record["defines"])
        uses = frozenset(record["uses"]) - defines
        items.append(
            Item(
                id=item_id,
                defines=defines,
                uses=uses,
                explicit_refs=refs,
                position=position,
                body=record["body"],
                explicit_candidates=explicit_candidates,
            )
        )
    return Corpus(items)


def load_corpus(path: str | Path) -> Corpus:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))


def corpus_to_text(corpus: Corpus) -> str:
    """Canonical serialization: loading the result reproduces it byte for byte."""
    lines = []
    for item in corpus:
        obj: dict = {
            "id": str(item.id),
            "defines": sorted(item.defines),
            "uses": sorted(item.uses),
            "refs": [str(r) for r in sorted(item.explicit_refs, key=lambda r: corpus.get(r).position)],
        }
        if item.body is not None:
            obj["body"] = item.body
        if item.explicit_candidates is not None:
            obj["candidates"] = [str(c) for c in item.explicit_candidates]
        lines.append(json.dumps(obj))
    return "".join(line + "\n" for line in lines)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    atomic_write_text(path, corpus_to_text(corpus))
