"""Read-only HTTP API over a computed dependency graph.

The service never mutates anything: it holds one immutable graph
snapshot, so every answer is a pure function of the loaded file and
handlers need no locks.  Each response carries an X-Graph-Fingerprint
header (content hash of the graph file) so clients can detect that the
graph they were browsing has been replaced.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .corpus import ItemId
from .depgraph import BlockedEndpointError, DependencyGraph, UnknownNodeError


class EntryPointError(Exception):
    """The entry-points file is unusable."""


@dataclass(frozen=True)
class EntryPoint:
    id: ItemId
    label: str


def load_entry_points(path: str | Path | None, graph: DependencyGraph) -> list[EntryPoint]:
    """Read the curated entry-point list: one `itemId<TAB>label` per line.

    No path or a missing file simply means no entry points.  An entry
    whose id does not resolve in the graph is a load-time error: a
    landing page of dead links is worse than failing fast.
    """
    if path is None:
        return []
    path = Path(path)
    if not path.exists():
        return []
    entries = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        head, sep, label = line.partition("\t")
        if not sep or not label.strip():
            raise EntryPointError(f"{path}: line {line_no}: expected `itemId<TAB>label`")
        try:
            item_id = ItemId.parse(head)
        except ValueError as exc:
            raise EntryPointError(f"{path}: line {line_no}: {exc}") from None
        if item_id not in graph:
            raise EntryPointError(f"{path}: line {line_no}: unknown item {item_id}")
        entries.append(EntryPoint(id=item_id, label=label.strip()))
    return entries


def compute_fingerprint(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(
    graph: DependencyGraph,
    entry_points: list[EntryPoint] | None = None,
    fingerprint: str = "unversioned",
) -> FastAPI:
    app = FastAPI(title="finedeps", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
        expose_headers=["X-Graph-Fingerprint"],
    )
    entries = list(entry_points or [])

    @app.middleware("http")
    async def stamp_fingerprint(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Graph-Fingerprint"] = fingerprint
        return response

    @app.exception_handler(UnknownNodeError)
    async def unknown_node(request: Request, exc: UnknownNodeError):
        return _error(404, str(exc))

    @app.exception_handler(BlockedEndpointError)
    async def blocked_endpoint(request: Request, exc: BlockedEndpointError):
        return _error(400, str(exc))

    @app.exception_handler(RequestValidationError)
    async def invalid_request(request: Request, exc: RequestValidationError):
        return _error(400, "invalid request parameters")

    @app.exception_handler(StarletteHTTPException)
    async def http_error(request: Request, exc: StarletteHTTPException):
        return _error(exc.status_code, str(exc.detail))

    def parse_id(text: str, what: str) -> ItemId:
        try:
            return ItemId.parse(text)
        except ValueError as exc:
            raise StarletteHTTPException(status_code=400, detail=f"{what}: {exc}")

    @app.get("/items")
    def list_items(page: int = Query(1, ge=1), per_page: int = Query(50, ge=1, le=500)):
        start = (page - 1) * per_page
        window = graph.nodes[start : start + per_page]
        return {
            "items": [str(node) for node in window],
            "page": page,
            "per_page": per_page,
            "total": graph.node_count,
        }

    @app.get("/items/{item_id}")
    def item_view(item_id: str):
        node = parse_id(item_id, "item id")
        return {
            "id": str(node),
            "kind": node.kind,
            "deps": [str(d) for d in graph.deps(node)],
            "rdeps": [str(d) for d in graph.rdeps(node)],
            "ancestors": graph.ancestor_count(node),
            "descendants": graph.descendant_count(node),
        }

    @app.get("/query/path")
    def query_path(from_: str = Query(..., alias="from"), to: str = Query(...)):
        a = parse_id(from_, "from")
        b = parse_id(to, "to")
        exists, witness = graph.exists_path_avoiding(a, b, ())
        body: dict = {"answer": exists}
        if witness is not None:
            body["witness"] = [str(node) for node in witness]
        return body

    @app.get("/query/via")
    def query_via(from_: str = Query(..., alias="from"), to: str = Query(...), via: str = Query(...)):
        a = parse_id(from_, "from")
        b = parse_id(to, "to")
        z = parse_id(via, "via")
        return {"answer": graph.all_paths_through(a, b, z)}

    @app.get("/query/avoiding")
    def query_avoiding(
        from_: str = Query(..., alias="from"), to: str = Query(...), avoid: str = Query("")
    ):
        a = parse_id(from_, "from")
        b = parse_id(to, "to")
        blocked = [parse_id(part, "avoid") for part in avoid.split(",") if part]
        exists, witness = graph.exists_path_avoiding(a, b, blocked)
        body: dict = {"answer": exists}
        if witness is not None:
            body["witness"] = [str(node) for node in witness]
        return body

    @app.get("/entry-points")
    def entry_point_list():
        return {
            "entry_points": [{"id": str(e.id), "label": e.label} for e in entries]
        }

    @app.get("/stats")
    def stats():
        return {
            "graph": {"nodes": graph.node_count, "edges": graph.edge_count},
            "corpus": graph.summary.to_dict() if graph.summary is not None else None,
        }

    return app
