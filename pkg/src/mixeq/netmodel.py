"""Network representation, path enumeration, and structure classification.

A Network is a directed multigraph with one origin/destination pair and unit
demand. Paths are explicit: solvers operate on a PathSet and its link-path
incidence matrix. Paths are either enumerated (directed simple paths, ordered
lexicographically by link-id sequence) or declared in the input, in which case
links may be traversed against their drawn direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from mixeq.costs import CostParams
from mixeq.errors import (
    EmptySupport,
    NoPathExists,
    NotPathMultigraph,
    PathBudgetExceeded,
    UnknownLink,
)

__all__ = [
    "Link",
    "Network",
    "PathSet",
    "IncidenceMatrix",
    "Bundle",
    "enumerate_paths",
    "declared_path_set",
    "incidence_matrix",
    "is_path_multigraph",
    "series_bundles",
    "columns_independent",
    "path_node_sequence",
]

MAX_PATHS_DEFAULT = 10_000
RANK_TOLERANCE_DEFAULT = 1e-10


@dataclass(frozen=True)
class Link:
    """One directed link.

    Attributes:
        id: Opaque string identifier, unique within a network.
        tail: Node the link leaves.
        head: Node the link enters.
        cost: Polynomial cost parameters.
    """

    id: str
    tail: str
    head: str
    cost: CostParams

    def __post_init__(self) -> None:
        if self.tail == self.head:
            raise ValueError(f"link {self.id!r} is a self-loop at node {self.tail!r}")


@dataclass(frozen=True)
class Network:
    """Directed multigraph with a single origin/destination pair and unit demand.

    Attributes:
        nodes: Node identifiers.
        links: Links in input order; this order fixes all link-indexed vectors.
        origin: Origin node.
        destination: Destination node.
        demand: Total flow rate. The model is stated for unit demand, so this
            must be exactly 1.
    """

    nodes: frozenset
    links: Tuple[Link, ...]
    origin: str
    destination: str
    demand: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        if self.origin == self.destination:
            raise ValueError("origin and destination must differ")
        if self.origin not in self.nodes:
            raise ValueError(f"origin {self.origin!r} not in nodes")
        if self.destination not in self.nodes:
            raise ValueError(f"destination {self.destination!r} not in nodes")
        if self.demand != 1.0:
            raise ValueError(f"demand must be exactly 1, got {self.demand}")
        seen = set()
        for lk in self.links:
            if lk.id in seen:
                raise ValueError(f"duplicate link id {lk.id!r}")
            seen.add(lk.id)
            if lk.tail not in self.nodes or lk.head not in self.nodes:
                raise ValueError(f"link {lk.id!r} endpoint not in nodes")

    @property
    def num_links(self) -> int:
        return len(self.links)


@dataclass(frozen=True)
class PathSet:
    """Ordered collection of origin-destination paths.

    Attributes:
        paths: Each path is a tuple of link ids, origin to destination.
        source: "enumerated" for directed simple paths found by search,
            "declared" for paths taken verbatim from the input file.
    """

    paths: Tuple[Tuple[str, ...], ...]
    source: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(tuple(p) for p in self.paths))
        if self.source not in ("enumerated", "declared"):
            raise ValueError(f"unknown path source {self.source!r}")
        if not self.paths:
            raise ValueError("a PathSet must contain at least one path")

    def __len__(self) -> int:
        return len(self.paths)


@dataclass(frozen=True, eq=False)
class IncidenceMatrix:
    """Link-path incidence matrix.

    Attributes:
        delta: Read-only (L, P) float array with delta[a, p] = 1 exactly when
            link a lies on path p, in Network link order and PathSet path order.
    """

    delta: np.ndarray

    def __post_init__(self) -> None:
        d = np.ascontiguousarray(self.delta, dtype=np.float64)
        d.flags.writeable = False
        object.__setattr__(self, "delta", d)

    @property
    def num_links(self) -> int:
        return self.delta.shape[0]

    @property
    def num_paths(self) -> int:
        return self.delta.shape[1]


@lru_cache(maxsize=256)
def _link_index(network: Network) -> Dict[str, int]:
    return {lk.id: i for i, lk in enumerate(network.links)}


def enumerate_paths(network: Network, max_paths: int = MAX_PATHS_DEFAULT) -> PathSet:
    """Enumerate every simple directed origin-destination path.

    Args:
        network: A valid network.
        max_paths: Hard budget on the number of simple paths. The model is
            path-explicit, so exponential blowup fails loudly instead of
            silently truncating.

    Returns:
        PathSet in lexicographic order of link-id sequences, source "enumerated".

    Raises:
        NoPathExists: If the destination is unreachable from the origin.
        PathBudgetExceeded: If more than max_paths simple paths exist.
    """
    if max_paths < 1:
        raise ValueError("max_paths must be at least 1")
    # sorted expansion makes the DFS emit link-id sequences in lexicographic order
    out: Dict[str, List[Tuple[str, str]]] = {}
    for lk in network.links:
        out.setdefault(lk.tail, []).append((lk.id, lk.head))
    for lst in out.values():
        lst.sort()

    found: List[Tuple[str, ...]] = []
    stack_links: List[str] = []
    visited = {network.origin}

    def dfs(node: str) -> None:
        if node == network.destination:
            if len(found) >= max_paths:
                raise PathBudgetExceeded(
                    f"more than {max_paths} simple paths between "
                    f"{network.origin!r} and {network.destination!r}"
                )
            found.append(tuple(stack_links))
            return
        for link_id, head in out.get(node, ()):
            if head in visited:
                continue
            visited.add(head)
            stack_links.append(link_id)
            dfs(head)
            stack_links.pop()
            visited.remove(head)

    dfs(network.origin)
    if not found:
        raise NoPathExists(
            f"no path from {network.origin!r} to {network.destination!r}"
        )
    return PathSet(paths=tuple(found), source="enumerated")


def _undirected_walk_nodes(network: Network, path: Sequence[str]) -> Tuple[str, ...]:
    # orientation-blind walk: each link may be traversed either way
    idx = _link_index(network)
    for link_id in path:
        if link_id not in idx:
            raise UnknownLink(f"path references unknown link {link_id!r}")
    if not path:
        raise ValueError("declared path is empty")
    nodes = [network.origin]
    cur = network.origin
    for link_id in path:
        lk = network.links[idx[link_id]]
        if lk.tail == cur:
            cur = lk.head
        elif lk.head == cur:
            cur = lk.tail
        else:
            raise ValueError(
                f"declared path breaks at link {link_id!r}: neither endpoint is {cur!r}"
            )
        nodes.append(cur)
    if cur != network.destination:
        raise ValueError(
            f"declared path ends at {cur!r}, not destination {network.destination!r}"
        )
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"declared path revisits a node: {nodes}")
    return tuple(nodes)


def declared_path_set(network: Network, paths: Sequence[Sequence[str]]) -> PathSet:
    """Build a PathSet from explicitly declared link-id sequences.

    Declared paths are validated for link existence, node-simple connectivity,
    and origin/destination endpoints, but not for arc direction: a link may be
    traversed against its stated direction. This permits path lists from
    sources that treat some links as bidirectional.

    Raises:
        UnknownLink: If a path references a link id not in the network.
        ValueError: If a path is empty, disconnected, revisits a node, or has
            wrong endpoints.
    """
    if not paths:
        raise ValueError("declared path list is empty")
    for p in paths:
        _undirected_walk_nodes(network, tuple(p))
    return PathSet(paths=tuple(tuple(p) for p in paths), source="declared")


def path_node_sequence(network: Network, path: Sequence[str]) -> Tuple[str, ...]:
    """Node sequence visited by a path, allowing reversed link traversal."""
    return _undirected_walk_nodes(network, path)


def incidence_matrix(network: Network, paths: PathSet) -> IncidenceMatrix:
    """Build the (L, P) link-path incidence matrix.

    Raises:
        UnknownLink: If a path references a link id not in the network.
    """
    idx = _link_index(network)
    delta = np.zeros((len(network.links), len(paths)), dtype=np.float64)
    for p, path in enumerate(paths.paths):
        for link_id in path:
            if link_id not in idx:
                raise UnknownLink(f"path {p} references unknown link {link_id!r}")
            delta[idx[link_id], p] = 1.0
    return IncidenceMatrix(delta=delta)


# ---------------------------------------------------------------------------
# structure classification
# ---------------------------------------------------------------------------


def _reachable(network: Network, start: str, forward: bool) -> set:
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for lk in network.links:
            a, b = (lk.tail, lk.head) if forward else (lk.head, lk.tail)
            if a == node and b not in seen:
                seen.add(b)
                frontier.append(b)
    return seen


def _relevant_links(network: Network) -> List[Link]:
    # a link can lie on an O/D walk only if its tail is forward-reachable
    # from the origin and its head reaches the destination
    fwd = _reachable(network, network.origin, forward=True)
    bwd = _reachable(network, network.destination, forward=False)
    return [lk for lk in network.links if lk.tail in fwd and lk.head in bwd]


def _chain_sequence(network: Network) -> Tuple[str, ...]:
    """Node sequence of the relevant subgraph if it is a series of parallel
    bundles, else raises NotPathMultigraph."""
    links = _relevant_links(network)
    if not links:
        raise NotPathMultigraph("no origin-destination connection")
    seq = [network.origin]
    cur = network.origin
    visited = {cur}
    while cur != network.destination:
        heads = {lk.head for lk in links if lk.tail == cur}
        if len(heads) != 1:
            raise NotPathMultigraph(f"node {cur!r} fans out to {sorted(heads)}")
        nxt = heads.pop()
        if nxt in visited:
            raise NotPathMultigraph(f"cycle through {nxt!r}")
        visited.add(nxt)
        seq.append(nxt)
        cur = nxt
    consecutive = set(zip(seq, seq[1:]))
    for lk in links:
        if (lk.tail, lk.head) not in consecutive:
            raise NotPathMultigraph(f"link {lk.id!r} skips the node chain")
    for node in {lk.tail for lk in links} | {lk.head for lk in links}:
        if node not in visited:
            raise NotPathMultigraph(f"node {node!r} off the chain")
    return tuple(seq)


def _common_path_sequence(network: Network) -> Tuple[str, ...]:
    """Shared node sequence of all enumerated paths, via direct comparison."""
    paths = enumerate_paths(network, MAX_PATHS_DEFAULT)
    idx = _link_index(network)
    sequences = set()
    for path in paths.paths:
        nodes = [network.origin]
        for link_id in path:
            nodes.append(network.links[idx[link_id]].head)
        sequences.add(tuple(nodes))
        if len(sequences) > 1:
            raise NotPathMultigraph("paths visit different node sequences")
    return sequences.pop()


def _multigraph_sequence(network: Network) -> Tuple[str, ...]:
    try:
        return _chain_sequence(network)
    except NotPathMultigraph:
        # The chain test can reject networks whose extra links sit on cycles
        # that no simple path can use; fall back to comparing the enumerated
        # paths directly.
        return _common_path_sequence(network)


def is_path_multigraph(network: Network) -> bool:
    """Whether every origin-destination path visits one fixed node sequence.

    Equivalently, whether the network (restricted to links that can appear on
    an O/D path) is a series chain of parallel-link bundles. Networks whose
    path count exceeds the enumeration budget after failing the cheap chain
    test are classified as False.
    """
    try:
        _multigraph_sequence(network)
        return True
    except (NotPathMultigraph, NoPathExists, PathBudgetExceeded):
        return False


@dataclass(frozen=True)
class Bundle:
    """One parallel-link bundle of a path multigraph."""

    tail: str
    head: str
    link_indices: Tuple[int, ...]


def series_bundles(network: Network) -> Tuple[Bundle, ...]:
    """Decompose a path multigraph into its series of parallel bundles.

    Returns:
        Bundles in origin-to-destination order; link_indices index into
        network.links in input order.

    Raises:
        NotPathMultigraph: If the network is not a path multigraph.
    """
    try:
        seq = _multigraph_sequence(network)
    except (NoPathExists, PathBudgetExceeded) as exc:
        raise NotPathMultigraph(str(exc)) from exc
    bundles = []
    for tail, head in zip(seq, seq[1:]):
        members = tuple(
            i for i, lk in enumerate(network.links) if lk.tail == tail and lk.head == head
        )
        if not members:
            raise NotPathMultigraph(f"no links between {tail!r} and {head!r}")
        bundles.append(Bundle(tail=tail, head=head, link_indices=members))
    return tuple(bundles)


def columns_independent(
    delta_v: np.ndarray, rank_tolerance: float = RANK_TOLERANCE_DEFAULT
) -> bool:
    """Whether the used-path incidence columns are linearly independent.

    Numerical rank is the count of singular values above rank_tolerance times
    the largest one. Independence decides invertibility of the reduced system
    matrix M_V for any positive-diagonal congestion matrix.

    Raises:
        EmptySupport: If delta_v has no columns.
    """
    d = np.asarray(delta_v, dtype=np.float64)
    if d.ndim != 2 or d.shape[1] == 0:
        raise EmptySupport("used-path set is empty")
    s = np.linalg.svd(d, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return False
    return int(np.sum(s > rank_tolerance * s[0])) == d.shape[1]
