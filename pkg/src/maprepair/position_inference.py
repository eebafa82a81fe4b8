"""Lattice positions propagated from the origin along compass edges.

Breadth-first from the origin, expanding each node's out-edges in step order.
The first position derived for a node wins; later disagreeing derivations are
recorded, never overwritten.  Containment moves (in/out/enter/exit) carry no
geometry and do not propagate.  When a node has several same-direction
out-edges (a directional conflict), only the minimum-step one defines
geometry; the others do not fabricate positions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .graph_core import COMPASS, Edge, NavGraph, displacement

Position = tuple[int, int, int]


@dataclass(frozen=True, order=True)
class Inconsistency:
    node: str
    assigned: Position
    derived: Position
    via: Edge


@dataclass
class PositionMap:
    assignment: dict[str, Position] = field(default_factory=dict)
    inconsistent: list[Inconsistency] = field(default_factory=list)

    def get(self, node: str) -> Position | None:
        return self.assignment.get(node)


def _propagating_edges(g: NavGraph, node: str) -> list[Edge]:
    """Compass out-edges of `node`, one per direction (minimum step)."""
    best: dict[str, Edge] = {}
    for e in g.out_edges(node):
        if e.direction not in COMPASS:
            continue
        cur = best.get(e.direction)
        if cur is None or e.step_id < cur.step_id:
            best[e.direction] = e
    return sorted(best.values(), key=lambda e: e.step_id)


def infer_positions(g: NavGraph) -> PositionMap:
    pm = PositionMap()
    if g.origin is None:
        return pm
    pm.assignment[g.origin] = (0, 0, 0)
    queue: deque[str] = deque([g.origin])
    seen_bad: set[tuple] = set()
    while queue:
        node = queue.popleft()
        px, py, pz = pm.assignment[node]
        for e in _propagating_edges(g, node):
            dx, dy, dz = displacement(e.direction)
            derived = (px + dx, py + dy, pz + dz)
            known = pm.assignment.get(e.dst)
            if known is None:
                pm.assignment[e.dst] = derived
                queue.append(e.dst)
            elif known != derived:
                inc = Inconsistency(e.dst, known, derived, e)
                if (inc.node, inc.assigned, inc.derived, inc.via) not in seen_bad:
                    seen_bad.add((inc.node, inc.assigned, inc.derived, inc.via))
                    pm.inconsistent.append(inc)
    pm.inconsistent.sort()
    return pm


def position_overlaps(pm: PositionMap) -> list[tuple[str, str, Position]]:
    """Unordered pairs of distinct nodes sharing one position."""
    by_pos: dict[Position, list[str]] = {}
    for node, pos in pm.assignment.items():
        by_pos.setdefault(pos, []).append(node)
    out = []
    for pos in sorted(by_pos):
        nodes = sorted(by_pos[pos])
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                out.append((nodes[i], nodes[j], pos))
    return out


def positions_tsv(g: NavGraph) -> str:
    pm = infer_positions(g)
    lines = ["node\tname\tx\ty\tz"]
    for nid in g.nodes:
        pos = pm.get(nid)
        if pos is None:
            continue
        lines.append(f"{nid}\t{g.nodes[nid]}\t{pos[0]}\t{pos[1]}\t{pos[2]}")
    return "\n".join(lines) + "\n"
