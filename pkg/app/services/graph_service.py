"""
Graph Service - reading and writing graph files
"""

import json
from pathlib import Path
from typing import Union

import structlog
from pydantic import ValidationError

from app.core.exceptions import GraphFormatError
from app.core.graph import WeightedGraph
from app.models.schemas import GraphFile, GraphFileEdge, GraphFileVertex
from app.services.export_service import write_json

app_logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]


def _location(loc) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse_graph(text: str, source: str = "<memory>") -> WeightedGraph:
    """Graph from the JSON text {"vertices": [{"id", "mu"}], "edges": [{"u", "v", "w"}]}."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphFormatError(
            f"{source}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}",
            {"line": e.lineno, "column": e.colno},
        )
    try:
        document = GraphFile.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        field = _location(first["loc"])
        raise GraphFormatError(f"{source}: field '{field}': {first['msg']}", {"field": field})

    return WeightedGraph(
        vertices=[vertex.id for vertex in document.vertices],
        edges=[(edge.u, edge.v, edge.w) for edge in document.edges],
        measure={vertex.id: vertex.mu for vertex in document.vertices},
    )


def load_graph(path: PathLike) -> WeightedGraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise GraphFormatError(f"Cannot read graph file {path}: {e.strerror}", {"path": str(path)})
    graph = parse_graph(text, source=str(path))
    app_logger.debug("graph loaded", path=str(path), vertices=len(graph), edges=len(graph.edges))
    return graph


def graph_document(graph: WeightedGraph) -> GraphFile:
    return GraphFile(
        vertices=[GraphFileVertex(id=v, mu=graph.measure_of(v)) for v in graph.vertices],
        edges=[GraphFileEdge(u=x, v=y, w=w) for x, y, w in graph.edges],
    )


def save_graph(graph: WeightedGraph, path: PathLike) -> Path:
    return write_json(graph_document(graph).model_dump(), path)
