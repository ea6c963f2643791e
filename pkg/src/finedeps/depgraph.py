"""Immutable dependency DAG and its query engine.

An edge (from, to) means "from depends on to", so ``descendants`` of an
item is its full dependency cone and ``ancestors`` is everything built
on top of it.  Every edge points to a strictly smaller position, which
makes acyclicity a construction invariant rather than a runtime
discovery.

Reachability is answered from per-node closure bitmasks (one integer
per node, bit i = node at position i), computed lazily on first use
and shared by every query thereafter.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, CorpusStats, ItemId, corpus_stats
from .ioutil import atomic_write_text
from .minimizer import CorpusMinimization, MinimalDepSet

PathWitness = tuple  # ordered ItemId list, source first, target last


class GraphError(Exception):
    """Base class for dependency-graph failures."""


class UnknownNodeError(GraphError):
    def __init__(self, item_id: ItemId):
        super().__init__(f"unknown node: {item_id}")
        self.item_id = item_id


class BlockedEndpointError(GraphError):
    """A path query was asked with one of its endpoints in the blocked set."""

    def __init__(self, item_id: ItemId):
        super().__init__(f"endpoint {item_id} is in the blocked set; the query is ill-posed")
        self.item_id = item_id


class GraphBuildError(GraphError):
    """The graph could not be constructed from the given inputs."""


class DependencyGraph:
    """Fine-grained dependency DAG over item ids.

    ``order`` fixes node positions (index in the sequence); every edge
    must satisfy position(to) < position(from).  Instances are immutable
    and safe for unrestricted concurrent reads.
    """

    def __init__(
        self,
        order: Sequence[ItemId],
        edges: Iterable[tuple[ItemId, ItemId]],
        summary: CorpusStats | None = None,
    ):
        self._order: tuple[ItemId, ...] = tuple(order)
        self._pos: dict[ItemId, int] = {}
        for idx, node in enumerate(self._order):
            if node in self._pos:
                raise GraphBuildError(f"duplicate node {node}")
            self._pos[node] = idx
        edge_set: set[tuple[ItemId, ItemId]] = set()
        self._deps: list[list[int]] = [[] for _ in self._order]
        self._rdeps: list[list[int]] = [[] for _ in self._order]
        for src, dst in edges:
            if src not in self._pos:
                raise GraphBuildError(f"edge endpoint is not a node: {src}")
            if dst not in self._pos:
                raise GraphBuildError(f"edge endpoint is not a node: {dst}")
            if src == dst:
                raise GraphBuildError(f"self-loop on {src}")
            if (src, dst) in edge_set:
                raise GraphBuildError(f"duplicate edge {src} -> {dst}")
            if self._pos[dst] >= self._pos[src]:
                raise GraphBuildError(
                    f"edge {src} -> {dst} points forward; dependencies must precede dependents"
                )
            edge_set.add((src, dst))
            self._deps[self._pos[src]].append(self._pos[dst])
            self._rdeps[self._pos[dst]].append(self._pos[src])
        for adjacency in self._deps:
            adjacency.sort()
        for adjacency in self._rdeps:
            adjacency.sort()
        self._edges = frozenset(edge_set)
        self.summary = summary
        self._desc_masks: list[int] | None = None
        self._anc_masks: list[int] | None = None

    # -- structure ---------------------------------------------------------

    @property
    def nodes(self) -> tuple[ItemId, ...]:
        """All nodes, in position order."""
        return self._order

    @property
    def edges(self) -> frozenset[tuple[ItemId, ItemId]]:
        return self._edges

    @property
    def node_count(self) -> int:
        return len(self._order)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def __contains__(self, item_id: ItemId) -> bool:
        return item_id in self._pos

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DependencyGraph):
            return NotImplemented
        return frozenset(self._order) == frozenset(other._order) and self._edges == other._edges

    def position(self, item_id: ItemId) -> int:
        return self._require(item_id)

    def _require(self, item_id: ItemId) -> int:
        pos = self._pos.get(item_id)
        if pos is None:
            raise UnknownNodeError(item_id)
        return pos

    def deps(self, item_id: ItemId) -> tuple[ItemId, ...]:
        """Immediate dependencies, sorted by position ascending."""
        return tuple(self._order[p] for p in self._deps[self._require(item_id)])

    def rdeps(self, item_id: ItemId) -> tuple[ItemId, ...]:
        """Immediate dependents, sorted by position ascending."""
        return tuple(self._order[p] for p in self._rdeps[self._require(item_id)])

    # -- closures ----------------------------------------------------------

    def _descendant_masks(self) -> list[int]:
        # Deps always sit at smaller positions, so one ascending sweep
        # settles every node's closure before anyone needs it.
        if self._desc_masks is None:
            masks = [0] * len(self._order)
            for pos in range(len(self._order)):
                mask = 0
                for dep in self._deps[pos]:
                    mask |= masks[dep] | (1 << dep)
                masks[pos] = mask
            self._desc_masks = masks
        return self._desc_masks

    def _ancestor_masks(self) -> list[int]:
        if self._anc_masks is None:
            masks = [0] * len(self._order)
            for pos in range(len(self._order) - 1, -1, -1):
                mask = 0
                for rdep in self._rdeps[pos]:
                    mask |= masks[rdep] | (1 << rdep)
                masks[pos] = mask
            self._anc_masks = masks
        return self._anc_masks

    def _unmask(self, mask: int) -> frozenset[ItemId]:
        result = []
        pos = 0
        while mask:
            if mask & 1:
                result.append(self._order[pos])
            mask >>= 1
            pos += 1
        return frozenset(result)

    def descendants(self, item_id: ItemId) -> frozenset[ItemId]:
        """Everything the item depends on, directly or transitively (itself excluded)."""
        return self._unmask(self._descendant_masks()[self._require(item_id)])

    def ancestors(self, item_id: ItemId) -> frozenset[ItemId]:
        """Everything that depends on the item, directly or transitively (itself excluded)."""
        return self._unmask(self._ancestor_masks()[self._require(item_id)])

    def descendant_count(self, item_id: ItemId) -> int:
        return self._descendant_masks()[self._require(item_id)].bit_count()

    def ancestor_count(self, item_id: ItemId) -> int:
        return self._ancestor_masks()[self._require(item_id)].bit_count()

    # -- queries -----------------------------------------------------------

    def reachable(self, a: ItemId, b: ItemId) -> bool:
        """True iff a path of zero or more edges leads from a to b."""
        pos_a = self._require(a)
        pos_b = self._require(b)
        if pos_a == pos_b:
            return True
        return bool(self._descendant_masks()[pos_a] & (1 << pos_b))

    def exists_path_avoiding(
        self, a: ItemId, b: ItemId, blocked: Iterable[ItemId] = ()
    ) -> tuple[bool, PathWitness | None]:
        """Is b reachable from a with the blocked nodes deleted?

        When reachable, also returns the shortest such path; among
        equally short paths the one choosing the smallest next-node id
        (canonical string order) at every hop.
        """
        pos_a = self._require(a)
        pos_b = self._require(b)
        blocked_pos = set()
        for node in blocked:
            pos = self._require(node)
            if pos == pos_a or pos == pos_b:
                raise BlockedEndpointError(node)
            blocked_pos.add(pos)
        if pos_a == pos_b:
            return True, (a,)
        if not self._descendant_masks()[pos_a] & (1 << pos_b):
            return False, None

        # Reverse BFS from b: dist[p] = fewest edges from p to b.
        dist: dict[int, int] = {pos_b: 0}
        frontier = deque([pos_b])
        while frontier:
            pos = frontier.popleft()
            if pos == pos_a:
                continue
            for rdep in self._rdeps[pos]:
                if rdep in blocked_pos or rdep in dist:
                    continue
                dist[rdep] = dist[pos] + 1
                frontier.append(rdep)
        if pos_a not in dist:
            return False, None

        # Greedy forward walk along strictly decreasing distance, always
        # taking the smallest admissible id.
        witness = [pos_a]
        current = pos_a
        while current != pos_b:
            want = dist[witness[-1]] - 1
            step = min(
                (p for p in self._deps[current] if dist.get(p) == want),
                key=lambda p: str(self._order[p]),
            )
            witness.append(step)
            current = step
        return True, tuple(self._order[p] for p in witness)

    def all_paths_through(self, a: ItemId, b: ItemId, z: ItemId) -> bool:
        """Does every path from a to b pass through z?

        False when a cannot reach b at all: a vacuous "yes" would read
        as "z is a genuine bottleneck", which it is not.  Endpoints lie
        on every path by convention.
        """
        self._require(z)
        if not self.reachable(a, b):
            return False
        if z == a or z == b:
            return True
        exists, _ = self.exists_path_avoiding(a, b, (z,))
        return not exists

    # -- derived graphs ------------------------------------------------------

    def transitive_reduction(self) -> "DependencyGraph":
        """The unique minimal subgraph with the same reachability relation.

        An edge (u, v) is redundant exactly when v is reachable from
        another direct dependency of u.
        """
        masks = self._descendant_masks()
        kept: list[tuple[ItemId, ItemId]] = []
        for pos, node in enumerate(self._order):
            via_deps = 0
            for dep in self._deps[pos]:
                via_deps |= masks[dep]
            for dep in self._deps[pos]:
                if not via_deps & (1 << dep):
                    kept.append((node, self._order[dep]))
        return DependencyGraph(self._order, kept, summary=self.summary)

    # -- exports -------------------------------------------------------------

    def _sorted_edges(self) -> list[tuple[ItemId, ItemId]]:
        return sorted(self._edges, key=lambda e: (str(e[0]), str(e[1])))

    def to_edge_tsv(self) -> str:
        return "".join(f"{src}\t{dst}\n" for src, dst in self._sorted_edges())

    def to_dot(self) -> str:
        lines = ["digraph dependencies {"]
        for node in self._order:
            lines.append(f'  "{node}";')
        for src, dst in self._sorted_edges():
            lines.append(f'  "{src}" -> "{dst}";')
        lines.append("}")
        return "".join(line + "\n" for line in lines)

    def to_structured(self) -> dict:
        obj: dict = {
            "nodes": [
                {"id": str(node), "kind": node.kind, "position": pos}
                for pos, node in enumerate(self._order)
            ],
            "edges": [{"from": str(src), "to": str(dst)} for src, dst in self._sorted_edges()],
            "summary": self.summary.to_dict() if self.summary is not None else None,
        }
        return obj

    def to_structured_text(self) -> str:
        return json.dumps(self.to_structured(), indent=2) + "\n"

    def export(self, format: str) -> str:
        if format == "edge-tsv":
            return self.to_edge_tsv()
        if format == "dot":
            return self.to_dot()
        if format == "structured":
            return self.to_structured_text()
        raise ValueError(f"unknown export format {format!r}")

    def write(self, path: str | Path, format: str = "structured") -> None:
        atomic_write_text(path, self.export(format))


def build_graph(
    results: CorpusMinimization | Mapping[ItemId, MinimalDepSet],
    corpus: Corpus,
) -> DependencyGraph:
    """Assemble the dependency DAG from per-item minimization results.

    Nodes are the successfully minimized items, in corpus order; failed
    items are excluded (callers hold the failure list).  A dependency
    pointing outside the node set is a build error: an edge to an
    unminimized item would silently misrepresent the corpus.
    """
    if isinstance(results, CorpusMinimization):
        result_map: Mapping[ItemId, MinimalDepSet] = results.results
        excluded = set(results.failures)
    else:
        result_map = results
        excluded = set()
    order = [item.id for item in corpus if item.id in result_map]
    node_set = set(order)
    edges: list[tuple[ItemId, ItemId]] = []
    for node in order:
        for dep in sorted(result_map[node].deps, key=str):
            if dep not in node_set:
                if dep in excluded:
                    raise GraphBuildError(
                        f"item {node} depends on {dep}, whose minimization failed"
                    )
                raise GraphBuildError(f"item {node} depends on unknown item {dep}")
            edges.append((node, dep))
    return DependencyGraph(order, edges, summary=corpus_stats(corpus))


def from_edges(
    edges: Iterable[tuple[ItemId, ItemId]],
    corpus: Corpus | None = None,
) -> DependencyGraph:
    """Build a graph from bare edges.

    With a corpus, node order is corpus order; without, a deterministic
    topological order (dependencies first, ties by canonical id) is
    computed, and a cycle is a build error.
    """
    edge_list = list(edges)
    nodes = {node for edge in edge_list for node in edge}
    if corpus is not None:
        for node in nodes:
            corpus.get(node)
        order = sorted(nodes, key=lambda n: corpus.get(n).position)
        return DependencyGraph(order, edge_list)

    dep_adj: dict[ItemId, set[ItemId]] = {node: set() for node in nodes}
    rdep_adj: dict[ItemId, set[ItemId]] = {node: set() for node in nodes}
    for src, dst in edge_list:
        dep_adj[src].add(dst)
        rdep_adj[dst].add(src)
    pending = {node: len(deps) for node, deps in dep_adj.items()}
    ready = [str(node) for node, count in pending.items() if count == 0]
    heapq.heapify(ready)
    by_str = {str(node): node for node in nodes}
    order = []
    while ready:
        node = by_str[heapq.heappop(ready)]
        order.append(node)
        for dependent in rdep_adj[node]:
            pending[dependent] -= 1
            if pending[dependent] == 0:
                heapq.heappush(ready, str(dependent))
    if len(order) != len(nodes):
        stuck = sorted(str(node) for node, count in pending.items() if count > 0)
        raise GraphBuildError(f"edges contain a cycle involving: {', '.join(stuck)}")
    return DependencyGraph(order, edge_list)


def from_edge_tsv(text: str, corpus: Corpus | None = None) -> DependencyGraph:
    edges = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise GraphBuildError(f"line {line_no}: expected `from<TAB>to`")
        try:
            edges.append((ItemId.parse(parts[0]), ItemId.parse(parts[1])))
        except ValueError as exc:
            raise GraphBuildError(f"line {line_no}: {exc}") from None
    return from_edges(edges, corpus)


def from_structured(obj: dict) -> DependencyGraph:
    """Rebuild a graph from its structured export."""
    if not isinstance(obj, dict) or "nodes" not in obj or "edges" not in obj:
        raise GraphBuildError("structured graph must be an object with nodes and edges")
    entries = []
    for entry in obj["nodes"]:
        try:
            node = ItemId.parse(entry["id"])
            position = entry["position"]
            kind = entry["kind"]
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphBuildError(f"bad node entry {entry!r}: {exc}") from None
        if kind != node.kind:
            raise GraphBuildError(f"node {node} declares kind {kind!r}, id says {node.kind!r}")
        if not isinstance(position, int):
            raise GraphBuildError(f"node {node}: position must be an integer")
        entries.append((position, node))
    entries.sort(key=lambda pair: pair[0])
    if [pos for pos, _ in entries] != list(range(len(entries))):
        raise GraphBuildError("node positions must be exactly 0..n-1")
    order = [node for _, node in entries]
    edges = []
    for entry in obj["edges"]:
        try:
            edges.append((ItemId.parse(entry["from"]), ItemId.parse(entry["to"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphBuildError(f"bad edge entry {entry!r}: {exc}") from None
    summary = None
    if obj.get("summary") is not None:
        raw = obj["summary"]
        try:
            summary = CorpusStats(
                items=raw["items"], kinds=dict(raw["kinds"]), symbols=raw["symbols"]
            )
        except (KeyError, TypeError) as exc:
            raise GraphBuildError(f"bad summary: {exc}") from None
    return DependencyGraph(order, edges, summary=summary)


def from_structured_text(text: str) -> DependencyGraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphBuildError(f"invalid structured graph JSON: {exc}") from None
    return from_structured(obj)


def load_graph(path: str | Path) -> DependencyGraph:
    return from_structured_text(Path(path).read_text(encoding="utf-8"))
