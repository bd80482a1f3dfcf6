"""Network file parsing and serialization.

The on-disk format is a strict JSON document: unknown keys are rejected at
every level, demand must be exactly 1, and declared paths are validated when
present. Parse errors carry the JSON field path they refer to.

Schema:
    {
      "nodes": ["S", "T", ...],
      "links": [{"id", "from", "to", "k", "b", "n"}
                or {"id", "from", "to", "bpr": {"t0", "m", "theta", "beta"}}],
      "od": {"origin", "destination", "demand"},
      "paths": [["link id", ...], ...]            # optional, declared paths
    }
"""

from __future__ import annotations

import json
from typing import Optional, Tuple

from mixeq.costs import CostParams
from mixeq.errors import SchemaError, UnknownLink
from mixeq.netmodel import Link, Network, PathSet, declared_path_set

__all__ = [
    "parse_network",
    "load_network",
    "network_to_doc",
    "save_network",
]


def _expect_keys(obj, where, required, optional=frozenset()):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing keys {sorted(missing)}")


def _string(value, where) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{where}: expected a string")
    return value


def _number(value, where) -> float:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number")
    return float(value)


def _parse_link(obj, i: int) -> Link:
    where = f"links[{i}]"
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    if "bpr" in obj:
        _expect_keys(obj, where, {"id", "from", "to", "bpr"})
        sub = obj["bpr"]
        _expect_keys(sub, f"{where}.bpr", {"t0", "m", "theta", "beta"})
        try:
            cost = CostParams.bpr(
                t0=_number(sub["t0"], f"{where}.bpr.t0"),
                m=_number(sub["m"], f"{where}.bpr.m"),
                theta=_number(sub["theta"], f"{where}.bpr.theta"),
                beta=_number(sub["beta"], f"{where}.bpr.beta"),
            )
        except ValueError as exc:
            raise SchemaError(f"{where}.bpr: {exc}") from exc
    else:
        _expect_keys(obj, where, {"id", "from", "to", "k", "b", "n"})
        try:
            cost = CostParams.polynomial(
                k=_number(obj["k"], f"{where}.k"),
                b=_number(obj["b"], f"{where}.b"),
                n=_number(obj["n"], f"{where}.n"),
            )
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    try:
        return Link(
            id=_string(obj["id"], f"{where}.id"),
            tail=_string(obj["from"], f"{where}.from"),
            head=_string(obj["to"], f"{where}.to"),
            cost=cost,
        )
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def parse_network(doc) -> Tuple[Network, Optional[PathSet]]:
    """Validate a decoded JSON document into (Network, declared PathSet or None).

    Raises:
        SchemaError: On any structural, type, or semantic violation; the
            message names the offending field.
    """
    _expect_keys(doc, "$", {"nodes", "links", "od"}, optional={"paths"})
    if not isinstance(doc["nodes"], list):
        raise SchemaError("nodes: expected an array")
    nodes = [_string(v, f"nodes[{i}]") for i, v in enumerate(doc["nodes"])]
    if not isinstance(doc["links"], list):
        raise SchemaError("links: expected an array")
    links = tuple(_parse_link(obj, i) for i, obj in enumerate(doc["links"]))
    od = doc["od"]
    _expect_keys(od, "od", {"origin", "destination", "demand"})
    demand = _number(od["demand"], "od.demand")
    if demand != 1.0:
        raise SchemaError(f"od.demand: must equal 1, got {demand}")
    try:
        network = Network(
            nodes=frozenset(nodes),
            links=links,
            origin=_string(od["origin"], "od.origin"),
            destination=_string(od["destination"], "od.destination"),
            demand=demand,
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc

    path_set = None
    if "paths" in doc:
        raw = doc["paths"]
        if not isinstance(raw, list) or not raw:
            raise SchemaError("paths: expected a non-empty array of link-id arrays")
        for i, p in enumerate(raw):
            if not isinstance(p, list) or not p:
                raise SchemaError(f"paths[{i}]: expected a non-empty array of link ids")
            for j, link_id in enumerate(p):
                _string(link_id, f"paths[{i}][{j}]")
        try:
            path_set = declared_path_set(network, [tuple(p) for p in raw])
        except (UnknownLink, ValueError) as exc:
            raise SchemaError(f"paths: {exc}") from exc
    return network, path_set


def load_network(path: str) -> Tuple[Network, Optional[PathSet]]:
    """Read and validate a network JSON file.

    Raises:
        SchemaError: On unreadable files, JSON syntax errors (with line and
            column), or schema violations.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_network(doc)


def network_to_doc(network: Network, paths: Optional[PathSet] = None) -> dict:
    """Serializable document for a network; inverse of parse_network."""
    doc = {
        "nodes": sorted(network.nodes),
        "links": [
            {
                "id": lk.id,
                "from": lk.tail,
                "to": lk.head,
                "k": lk.cost.k,
                "b": lk.cost.b,
                "n": lk.cost.n,
            }
            for lk in network.links
        ],
        "od": {
            "origin": network.origin,
            "destination": network.destination,
            "demand": network.demand,
        },
    }
    if paths is not None:
        doc["paths"] = [list(p) for p in paths.paths]
    return doc


def save_network(path: str, network: Network, paths: Optional[PathSet] = None) -> None:
    doc = network_to_doc(network, paths)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
