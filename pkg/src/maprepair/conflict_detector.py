"""The three conflict classes: directional, topological, naming.

Detection is a pure function of the graph.  Topological conflicts come in
three concrete flavors: reverse-asymmetry edge pairs, two nodes occupying
one lattice position, and disagreeing position re-derivations.  An
inconsistency whose offending edge already participates in an asymmetry
pair is suppressed as a duplicate symptom of the same defect.

Unreachable nodes are reported as warnings, not conflicts: construction
legitimately creates frontier nodes.  Over-connected components are out of
scope (no threshold is defined for them).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .graph_core import Edge, NavGraph, normalize_name, reverse_direction
from .position_inference import PositionMap, infer_positions, position_overlaps

KIND_DIRECTIONAL = "directional"
KIND_TOPOLOGICAL = "topological"
KIND_NAMING = "naming"

SUB_ASYMMETRY = "asymmetry"
SUB_OVERLAP = "overlap"
SUB_INCONSISTENCY = "inconsistency"


@dataclass(frozen=True)
class Conflict:
    kind: str
    subkind: str
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    witness: tuple
    first_visible_commit: Optional[int] = None

    @property
    def key(self) -> tuple:
        """Identity across re-detections (ignores commit stamp)."""
        if self.kind == KIND_DIRECTIONAL:
            return (self.kind, self.edges[0].src, self.edges[0].direction)
        if self.kind == KIND_NAMING:
            return (self.kind, self.witness[0])
        if self.subkind == SUB_ASYMMETRY:
            return (self.subkind, tuple(sorted(e.key for e in self.edges)))
        if self.subkind == SUB_OVERLAP:
            return (self.subkind, self.nodes)
        return (self.subkind, self.nodes[0])

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "subkind": self.subkind,
            "participants": {
                "nodes": list(self.nodes),
                "edges": [e.to_json() for e in self.edges],
            },
            "witness": _jsonable(self.witness),
            "commit": self.first_visible_commit,
        }


def _jsonable(x):
    if isinstance(x, Edge):
        return x.to_json()
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


def detect_directional(g: NavGraph) -> list[Conflict]:
    out = []
    for (src, direction), edges in sorted(g.out_groups().items()):
        if len(edges) >= 2:
            out.append(Conflict(
                kind=KIND_DIRECTIONAL,
                subkind=KIND_DIRECTIONAL,
                nodes=tuple(sorted({src} | {e.dst for e in edges})),
                edges=tuple(edges),
                witness=(src, direction),
            ))
    return out


def detect_naming(g: NavGraph, pm: PositionMap) -> list[Conflict]:
    out = []
    by_name: dict[str, list[str]] = {}
    for nid, name in g.nodes.items():
        if pm.get(nid) is not None:
            by_name.setdefault(normalize_name(name), []).append(nid)
    for name in sorted(by_name):
        nodes = sorted(by_name[name])
        positions = {pm.get(n) for n in nodes}
        if len(nodes) >= 2 and len(positions) >= 2:
            out.append(Conflict(
                kind=KIND_NAMING,
                subkind=KIND_NAMING,
                nodes=tuple(nodes),
                edges=(),
                witness=(name, tuple(sorted(pm.get(n) for n in nodes))),
            ))
    return out


def detect_topological(g: NavGraph, pm: PositionMap) -> list[Conflict]:
    out: list[Conflict] = []
    asym_pairs: list[tuple[Edge, Edge]] = []
    seen: set[frozenset] = set()
    for e in sorted(g.edges()):
        for f in g.edges_between(e.dst, e.src):
            if f.direction == reverse_direction(e.direction):
                continue
            pair_key = frozenset((e.key, f.key))
            if pair_key in seen or e == f:
                continue
            seen.add(pair_key)
            asym_pairs.append((e, f))
    asym_edges = {e.key for pair in asym_pairs for e in pair}
    for e, f in sorted(asym_pairs):
        out.append(Conflict(
            kind=KIND_TOPOLOGICAL,
            subkind=SUB_ASYMMETRY,
            nodes=tuple(sorted({e.src, e.dst})),
            edges=(e, f),
            witness=(e.direction, f.direction,
                     reverse_direction(e.direction)),
        ))
    for a, b, pos in position_overlaps(pm):
        out.append(Conflict(
            kind=KIND_TOPOLOGICAL,
            subkind=SUB_OVERLAP,
            nodes=(a, b),
            edges=(),
            witness=(pos,),
        ))
    for inc in pm.inconsistent:
        if inc.via.key in asym_edges:
            continue  # symptom of the asymmetry already reported
        out.append(Conflict(
            kind=KIND_TOPOLOGICAL,
            subkind=SUB_INCONSISTENCY,
            nodes=(inc.node,),
            edges=(inc.via,),
            witness=(inc.assigned, inc.derived),
        ))
    return out


def detect_all(g: NavGraph, commit: Optional[int] = None) -> list[Conflict]:
    """All conflicts: directional, then topological, then naming."""
    pm = infer_positions(g)
    conflicts = (detect_directional(g)
                 + detect_topological(g, pm)
                 + detect_naming(g, pm))
    if commit is not None:
        conflicts = [Conflict(c.kind, c.subkind, c.nodes, c.edges, c.witness,
                              first_visible_commit=commit) for c in conflicts]
    return conflicts


def unreachable_nodes(g: NavGraph) -> list[str]:
    """Warning-level: nodes with no directed path from the origin."""
    if g.origin is None:
        return sorted(g.nodes)
    return sorted(set(g.nodes) - g.reachable_from(g.origin))
