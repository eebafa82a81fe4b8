"""Linear append-only commit chain over the graph: rollback, recall, diff.

Each commit logs edge deltas plus any node bookkeeping (introductions,
renames, drops).  The chain is never truncated: a rollback materializes a
past state and, when used for repair, is recorded as a fresh commit of
inverse deltas.  With a log path set, every commit line is flushed to the
JSONL log before the in-memory graph mutates (write-ahead discipline).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional

from .errors import InvalidDelta, UnknownVersion
from .graph_core import Edge, NavGraph

TRIGGER_OBSERVATION = "observation_update"
TRIGGER_REPAIR = "conflict_repair"


@dataclass(frozen=True)
class EdgeDelta:
    op: str  # "+" or "-"
    edge: Edge

    def to_json(self) -> dict:
        d = {"op": self.op}
        d.update(self.edge.to_json())
        return d

    @classmethod
    def from_json(cls, d: dict) -> "EdgeDelta":
        return cls(d["op"], Edge(d["src"], d["dst"], d["dir"], d["step"]))


def add(edge: Edge) -> EdgeDelta:
    return EdgeDelta("+", edge)


def remove(edge: Edge) -> EdgeDelta:
    return EdgeDelta("-", edge)


@dataclass(frozen=True)
class Commit:
    index: int
    step_id: int
    deltas: tuple[EdgeDelta, ...]
    trigger: str
    obs_id: int
    analysis: str
    new_nodes: tuple[tuple[str, str], ...] = ()   # (id, name) introduced
    renames: tuple[tuple[str, str, str], ...] = ()  # (id, old, new)
    drops: tuple[tuple[str, str], ...] = ()       # (id, name) removed

    def to_json(self) -> dict:
        d = {
            "index": self.index,
            "step_id": self.step_id,
            "deltas": [x.to_json() for x in self.deltas],
            "trigger": self.trigger,
            "obs_id": self.obs_id,
            "analysis": self.analysis,
        }
        if self.new_nodes:
            d["nodes"] = [{"id": i, "name": n} for i, n in self.new_nodes]
        if self.renames:
            d["renames"] = [{"id": i, "old": o, "new": n}
                            for i, o, n in self.renames]
        if self.drops:
            d["drops"] = [{"id": i, "name": n} for i, n in self.drops]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Commit":
        return cls(
            index=d["index"],
            step_id=d["step_id"],
            deltas=tuple(EdgeDelta.from_json(x) for x in d["deltas"]),
            trigger=d["trigger"],
            obs_id=d["obs_id"],
            analysis=d["analysis"],
            new_nodes=tuple((n["id"], n["name"]) for n in d.get("nodes", ())),
            renames=tuple((r["id"], r["old"], r["new"])
                          for r in d.get("renames", ())),
            drops=tuple((n["id"], n["name"]) for n in d.get("drops", ())),
        )


def _apply_commit(g: NavGraph, c: Commit) -> None:
    for nid, name in c.new_nodes:
        g.add_node(name, node_id=nid)
    for delta in c.deltas:
        if delta.op == "+":
            g.add_edge(delta.edge.src, delta.edge.dst,
                       delta.edge.direction, delta.edge.step_id)
        else:
            if not g.has_edge(delta.edge):
                raise InvalidDelta(f"remove of absent edge: {delta.edge}")
            g.remove_edge(delta.edge)
    for nid, _, new in c.renames:
        g.rename_node(nid, new)
    for nid, _ in c.drops:
        g.remove_node(nid)


def _unapply_commit(g: NavGraph, c: Commit) -> None:
    for nid, name in c.drops:
        g.add_node(name, node_id=nid)
    for nid, old, _ in c.renames:
        g.rename_node(nid, old)
    for delta in reversed(c.deltas):
        if delta.op == "+":
            g.remove_edge(delta.edge)
        else:
            g.add_edge(delta.edge.src, delta.edge.dst,
                       delta.edge.direction, delta.edge.step_id)
    for nid, _ in reversed(c.new_nodes):
        g.remove_node(nid)


class VersionChain:
    """Owns a NavGraph; all mutation goes through commit()."""

    def __init__(self, log_path: Optional[str | Path] = None):
        self.graph = NavGraph()
        self.commits: list[Commit] = []
        self._log: Optional[IO[str]] = None
        self.log_path = Path(log_path) if log_path else None
        if self.log_path:
            self._log = open(self.log_path, "a", encoding="utf-8")

    @property
    def head(self) -> int:
        return len(self.commits) - 1

    def allocate_node_id(self) -> str:
        return self.graph.fresh_id()

    # -- core operations ----------------------------------------------------

    def commit(self, deltas: Iterable[EdgeDelta], trigger: str, obs_id: int,
               analysis: str, step_id: Optional[int] = None,
               new_nodes: Iterable[tuple[str, str]] = (),
               renames: Iterable[tuple[str, str, str]] = (),
               drops: Iterable[tuple[str, str]] = ()) -> Commit:
        commit = Commit(
            index=self.head + 1,
            step_id=obs_id if step_id is None else step_id,
            deltas=tuple(deltas),
            trigger=trigger,
            obs_id=obs_id,
            analysis=analysis,
            new_nodes=tuple(new_nodes),
            renames=tuple(renames),
            drops=tuple(drops),
        )
        # validate against a scratch copy so a bad commit leaves no trace
        _apply_commit(self.graph.copy(), commit)
        if self._log is not None:
            self._log.write(json.dumps(commit.to_json()) + "\n")
            self._log.flush()
        _apply_commit(self.graph, commit)
        self.commits.append(commit)
        return commit

    def _check_version(self, version: int) -> None:
        if not isinstance(version, int) or not 0 <= version <= self.head:
            raise UnknownVersion(f"version {version} not in 0..{self.head}")

    def materialize(self, version: int) -> NavGraph:
        """Rebuild the state as of `version` by replaying from empty."""
        self._check_version(version)
        g = NavGraph()
        for c in self.commits[: version + 1]:
            _apply_commit(g, c)
        return g

    def rollback_to(self, version: int) -> NavGraph:
        """State as of `version` via inverse-applying head..version+1.

        Non-destructive: the chain keeps all commits; callers wanting the
        rollback to stick must commit the inverse deltas themselves (the
        repair engine's RollbackTo action does exactly that).
        """
        self._check_version(version)
        g = self.graph.copy()
        for c in reversed(self.commits[version + 1:]):
            _unapply_commit(g, c)
        return g

    def recall_step(self, version: int) -> Commit:
        self._check_version(version)
        return self.commits[version]

    def diff(self, i: int, j: int) -> dict[str, set[Edge]]:
        """Edges of version j relative to version i."""
        self._check_version(i)
        self._check_version(j)
        a = self.materialize(i).edge_set()
        b = self.materialize(j).edge_set()
        return {"added": b - a, "removed": a - b}

    # -- persistence ----------------------------------------------------------

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None

    @classmethod
    def load(cls, log_path: str | Path,
             append: bool = False) -> "VersionChain":
        chain = cls()
        with open(log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                c = Commit.from_json(json.loads(line))
                _apply_commit(chain.graph, c)
                chain.commits.append(c)
        if append:
            chain.log_path = Path(log_path)
            chain._log = open(log_path, "a", encoding="utf-8")
        return chain
