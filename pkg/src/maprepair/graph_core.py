"""Navigation graph: named locations joined by direction-labeled edges.

The graph is a directed multigraph.  Structurally conflicting edges (two
north exits, self-loops, duplicate names) are admitted on insertion; finding
them is the conflict detector's job, removing them the refiner's.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .errors import DuplicateEdge, UnknownNode

DIRECTIONS = (
    "north", "south", "east", "west", "up", "down",
    "northeast", "northwest", "southeast", "southwest",
    "in", "out", "enter", "exit",
)

_REVERSE = {
    "north": "south", "south": "north",
    "east": "west", "west": "east",
    "up": "down", "down": "up",
    "northeast": "southwest", "southwest": "northeast",
    "northwest": "southeast", "southeast": "northwest",
    "in": "out", "out": "in",
    "enter": "exit", "exit": "enter",
}

# east = +x, north = +y, up = +z.  Containment moves carry no displacement.
DISPLACEMENT = {
    "north": (0, 1, 0), "south": (0, -1, 0),
    "east": (1, 0, 0), "west": (-1, 0, 0),
    "up": (0, 0, 1), "down": (0, 0, -1),
    "northeast": (1, 1, 0), "northwest": (-1, 1, 0),
    "southeast": (1, -1, 0), "southwest": (-1, -1, 0),
    "in": (0, 0, 0), "out": (0, 0, 0),
    "enter": (0, 0, 0), "exit": (0, 0, 0),
}

#: Directions that move on the lattice and therefore propagate positions.
COMPASS = frozenset(d for d, v in DISPLACEMENT.items() if v != (0, 0, 0))


def is_direction(s: str) -> bool:
    return s in _REVERSE


def reverse_direction(d: str) -> str:
    return _REVERSE[d]


def displacement(d: str) -> tuple[int, int, int]:
    return DISPLACEMENT[d]


def normalize_name(name: str) -> str:
    """Case-fold, trim and collapse internal whitespace."""
    return " ".join(name.casefold().split())


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    direction: str
    step_id: int

    @property
    def key(self) -> tuple[str, str, int]:
        # (src, direction, step_id) is unique within one graph
        return (self.src, self.direction, self.step_id)

    def to_json(self) -> dict:
        return {"src": self.src, "dst": self.dst,
                "dir": self.direction, "step": self.step_id}

    @classmethod
    def from_json(cls, d: dict) -> "Edge":
        return cls(d["src"], d["dst"], d["dir"], d["step"])


@dataclass
class NavGraph:
    nodes: dict[str, str] = field(default_factory=dict)  # id -> raw name
    origin: Optional[str] = None
    _edges: dict[tuple, Edge] = field(default_factory=dict)  # key -> Edge
    _name_index: dict[str, set[str]] = field(default_factory=dict)
    _out_index: dict[tuple[str, str], set[Edge]] = field(default_factory=dict)
    _in_index: dict[str, set[Edge]] = field(default_factory=dict)
    _next_id: int = 0

    # -- nodes ------------------------------------------------------------

    def add_node(self, name: str, node_id: Optional[str] = None) -> str:
        """Add a fresh node.  Same-name nodes are admitted, never reused."""
        if node_id is None:
            node_id = self.fresh_id()
        elif node_id in self.nodes:
            raise DuplicateEdge(f"node id already in use: {node_id}")
        self.nodes[node_id] = name
        self._name_index.setdefault(normalize_name(name), set()).add(node_id)
        if self.origin is None:
            self.origin = node_id
        return node_id

    def fresh_id(self) -> str:
        nid = f"n{self._next_id}"
        while nid in self.nodes:
            self._next_id += 1
            nid = f"n{self._next_id}"
        self._next_id += 1
        return nid

    def node_name(self, node_id: str) -> str:
        if node_id not in self.nodes:
            raise UnknownNode(node_id)
        return self.nodes[node_id]

    def nodes_named(self, name: str) -> set[str]:
        return set(self._name_index.get(normalize_name(name), ()))

    def rename_node(self, node_id: str, new_name: str) -> None:
        old = self.node_name(node_id)
        self._name_index[normalize_name(old)].discard(node_id)
        if not self._name_index[normalize_name(old)]:
            del self._name_index[normalize_name(old)]
        self.nodes[node_id] = new_name
        self._name_index.setdefault(normalize_name(new_name), set()).add(node_id)

    def remove_node(self, node_id: str) -> None:
        """Remove a node with no incident edges."""
        if node_id not in self.nodes:
            raise UnknownNode(node_id)
        if any(e.src == node_id or e.dst == node_id for e in self.edges()):
            raise DuplicateEdge(f"node still has edges: {node_id}")
        name = self.nodes.pop(node_id)
        self._name_index[normalize_name(name)].discard(node_id)
        if not self._name_index[normalize_name(name)]:
            del self._name_index[normalize_name(name)]
        if self.origin == node_id:
            self.origin = next(iter(self.nodes), None)

    # -- edges ------------------------------------------------------------

    def add_edge(self, src: str, dst: str, direction: str, step_id: int) -> Edge:
        if src not in self.nodes:
            raise UnknownNode(src)
        if dst not in self.nodes:
            raise UnknownNode(dst)
        edge = Edge(src, dst, direction, step_id)
        if edge.key in self._edges:
            raise DuplicateEdge(f"duplicate (src, direction, step): {edge.key}")
        self._edges[edge.key] = edge
        self._out_index.setdefault((src, direction), set()).add(edge)
        self._in_index.setdefault(dst, set()).add(edge)
        return edge

    def remove_edge(self, edge: Edge) -> None:
        stored = self._edges.get(edge.key)
        if stored != edge:
            raise UnknownNode(f"edge not present: {edge}")
        del self._edges[edge.key]
        self._out_index[(edge.src, edge.direction)].discard(edge)
        if not self._out_index[(edge.src, edge.direction)]:
            del self._out_index[(edge.src, edge.direction)]
        self._in_index[edge.dst].discard(edge)
        if not self._in_index[edge.dst]:
            del self._in_index[edge.dst]

    def has_edge(self, edge: Edge) -> bool:
        return self._edges.get(edge.key) == edge

    def edges(self) -> Iterator[Edge]:
        return iter(self._edges.values())

    def edge_set(self) -> set[Edge]:
        return set(self._edges.values())

    def out_edges(self, src: str, direction: Optional[str] = None) -> list[Edge]:
        if direction is not None:
            return sorted(self._out_index.get((src, direction), ()))
        out: list[Edge] = []
        for (s, _), es in self._out_index.items():
            if s == src:
                out.extend(es)
        return sorted(out)

    def in_edges(self, dst: str) -> list[Edge]:
        return sorted(self._in_index.get(dst, ()))

    def edges_between(self, src: str, dst: str) -> list[Edge]:
        return sorted(e for e in self._edges.values()
                      if e.src == src and e.dst == dst)

    def out_groups(self) -> dict[tuple[str, str], list[Edge]]:
        """(src, direction) -> edges, for directional-conflict scanning."""
        return {k: sorted(v) for k, v in self._out_index.items()}

    # -- queries ----------------------------------------------------------

    def reachable_from(self, start: str) -> set[str]:
        if start not in self.nodes:
            raise UnknownNode(start)
        seen = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for e in self.out_edges(node):
                if e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        return seen

    def neighborhood(self, seeds: Iterable[str], radius: int = 2) -> "NavGraph":
        """Induced subgraph within undirected `radius` hops of seeds."""
        keep = set(seeds)
        frontier = set(keep)
        undirected: dict[str, set[str]] = {}
        for e in self.edges():
            undirected.setdefault(e.src, set()).add(e.dst)
            undirected.setdefault(e.dst, set()).add(e.src)
        for _ in range(radius):
            frontier = {m for n in frontier for m in undirected.get(n, ())} - keep
            keep |= frontier
        sub = NavGraph()
        for nid in self.nodes:
            if nid in keep:
                sub.add_node(self.nodes[nid], node_id=nid)
        sub.origin = self.origin if self.origin in keep else None
        for e in self.edges():
            if e.src in keep and e.dst in keep:
                sub.add_edge(e.src, e.dst, e.direction, e.step_id)
        return sub

    # -- maintenance ------------------------------------------------------

    def copy(self) -> "NavGraph":
        g = NavGraph()
        for nid, name in self.nodes.items():
            g.add_node(name, node_id=nid)
        g.origin = self.origin
        g._next_id = self._next_id
        for e in self._edges.values():
            g.add_edge(e.src, e.dst, e.direction, e.step_id)
        return g

    def state_equal(self, other: "NavGraph") -> bool:
        return (self.nodes == other.nodes
                and self.origin == other.origin
                and set(self._edges) == set(other._edges)
                and self.edge_set() == other.edge_set())

    def rebuilt_indices(self) -> tuple[dict, dict]:
        """Recompute name/out indices from scratch (invariant checks)."""
        name_index: dict[str, set[str]] = {}
        for nid, name in self.nodes.items():
            name_index.setdefault(normalize_name(name), set()).add(nid)
        out_index: dict[tuple[str, str], set[Edge]] = {}
        for e in self._edges.values():
            out_index.setdefault((e.src, e.direction), set()).add(e)
        return name_index, out_index

    def indices_consistent(self) -> bool:
        name_index, out_index = self.rebuilt_indices()
        return name_index == self._name_index and out_index == self._out_index

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": nid, "name": name} for nid, name in self.nodes.items()],
            "edges": [e.to_json() for e in sorted(self._edges.values())],
            "origin": self.origin,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NavGraph":
        g = cls()
        for n in data["nodes"]:
            g.add_node(n["name"], node_id=n["id"])
        g.origin = data.get("origin")
        for d in data["edges"]:
            e = Edge.from_json(d)
            g.add_edge(e.src, e.dst, e.direction, e.step_id)
        return g

    def to_dot(self) -> str:
        lines = ["digraph navmap {"]
        for nid, name in self.nodes.items():
            shape = ' shape=doubleoctagon' if nid == self.origin else ""
            lines.append(f'  "{nid}" [label="{name}"{shape}];')
        for e in sorted(self._edges.values()):
            lines.append(
                f'  "{e.src}" -> "{e.dst}" '
                f'[label="{e.direction} (step {e.step_id})"];')
        lines.append("}")
        return "\n".join(lines) + "\n"
