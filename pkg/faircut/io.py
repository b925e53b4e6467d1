# Instance parsing and atomic JSON output
import json
import os
import tempfile
from typing import Type, TypeVar

import regex
from pydantic import BaseModel, ValidationError

from faircut.errors import InputError
from faircut.graph import Edge, WeightedGraph
from faircut.models import SCHEMAS, AuxCutDocument, GraphDocument
from faircut.rational import as_fraction

M = TypeVar("M", bound=BaseModel)

SCHEMA_DIR = os.path.join(os.path.dirname(__file__), "schemas")

HEADER_REGEX = regex.compile(r"^\s*(\d+)\s+(\d+)\s+(\d+)\s*$")
EDGE_REGEX = regex.compile(r"^\s*(\d+)\s+(\d+)\s+(\S+)\s*$")


def parse_graph_text(text: str, origin: str = "<graph>") -> WeightedGraph:
    """Read the line format: a header ``n m s`` then ``m`` lines of ``u v cost``."""
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if header is None:
            match = HEADER_REGEX.match(line)
            if not match:
                raise InputError(f"{origin}:{lineno}: expected header 'n m source', got {raw.strip()!r}")
            header = tuple(int(x) for x in match.groups())
            continue
        match = EDGE_REGEX.match(line)
        if not match:
            raise InputError(f"{origin}:{lineno}: expected 'u v cost', got {raw.strip()!r}")
        u, v = int(match.group(1)), int(match.group(2))
        cost = as_fraction(match.group(3), f"{origin}:{lineno}: cost")
        if u == v:
            raise InputError(f"{origin}:{lineno}: self-loop on vertex {u}")
        if cost < 0:
            raise InputError(f"{origin}:{lineno}: negative cost {cost}")
        edges.append(Edge(len(edges), u, v, cost))
    if header is None:
        raise InputError(f"{origin}: empty graph file")
    n, m, source = header
    if len(edges) != m:
        raise InputError(f"{origin}: header declares {m} edges, found {len(edges)}")
    for e in edges:
        if e.u >= n or e.v >= n:
            raise InputError(f"{origin}: edge {e.id} ({e.u}, {e.v}) uses a vertex id outside 0..{n - 1}")
    return WeightedGraph(range(n), edges, source)


def graph_from_document(doc: GraphDocument) -> WeightedGraph:
    if doc.vertices is not None:
        vertices = doc.vertices
    elif doc.n is not None:
        vertices = range(doc.n)
    else:
        vertices = None
    return WeightedGraph.from_triples(doc.edges, doc.source, vertices)


def load_model(path: str, model: Type[M]) -> M:
    try:
        with open(path) as fh:
            return model.model_validate_json(fh.read())
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}")
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise InputError(f"{path}: {problems}")


def load_graph(path: str) -> WeightedGraph:
    """Load a graph from the text format or, for ``.json`` files, from a graph document."""
    if path.endswith(".json"):
        return graph_from_document(load_model(path, GraphDocument))
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}")
    return parse_graph_text(text, path)


def dumps(doc: BaseModel) -> str:
    return json.dumps(doc.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True) + "\n"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".faircut-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_weights(path: str) -> AuxCutDocument:
    """Vertex weights either as a full AuxCut instance document or as a bare ``{id: weight}`` map."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}: {e.msg}")
    if isinstance(data, dict) and not ({"budget", "target", "vertex_weights"} & set(data)):
        data = {"vertex_weights": data}
    try:
        return AuxCutDocument.model_validate(data)
    except ValidationError as e:
        raise InputError(f"{path}: {e.errors()[0]['msg']}")


def schema_text(name: str) -> str:
    """JSON schema of an output document, generated from its model."""
    return json.dumps(SCHEMAS[name].model_json_schema(), indent=2, sort_keys=True) + "\n"


def load_schema(name: str) -> dict:
    """The JSON schema shipped with the package for an output document."""
    if name not in SCHEMAS:
        raise InputError(f"unknown schema {name!r}")
    with open(os.path.join(SCHEMA_DIR, f"{name}.json")) as fh:
        return json.load(fh)
