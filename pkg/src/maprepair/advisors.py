"""Repair advisors: oracle, heuristic, remote LLM, and playback.

Every advisor is a callable AdvisorContext -> RepairAction, so the engine
treats them interchangeably and a recorded action stream can be replayed
against the same conflicts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .conflict_detector import KIND_DIRECTIONAL, KIND_NAMING, SUB_OVERLAP, \
    detect_all
from .errors import AdvisorFailure
from .fault_injector import FAULT_MISDIRECTION, FAULT_MISNAME, \
    FAULT_PHANTOM, FAULT_SILENT, FaultLedger
from .graph_core import DIRECTIONS, Edge, NavGraph, normalize_name
from .repair_engine import (
    ACT_CHANGE_DIRECTION, ACT_DELETE_EDGE, ACT_GIVE_UP, ACT_MERGE_NODES,
    ACT_RECALL_STEP, ACT_RENAME_NODE, AdvisorContext, RepairAction,
)


def _visible_edges(ctx: AdvisorContext) -> list[Edge]:
    """Edges the advisor may act on: ranked candidates when available,
    always unioned with the conflict neighborhood."""
    out: list[Edge] = []
    if ctx.ranked_candidates:
        out.extend(c.edge for c in ctx.ranked_candidates)
    for e in sorted(ctx.neighborhood.edges()):
        if e not in out:
            out.append(e)
    return out


def _proposed_before(ctx: AdvisorContext, action: RepairAction) -> bool:
    return any(entry.get("action") == action.to_json()
               for entry in ctx.transcript)


class OracleAdvisor:
    """Answers from the fault ledger: whenever an unfixed fault's corrupted
    artifact is visible in the context, emit the exactly corrective action.
    Construction artifacts of correct observations (a revisited room parsed
    as a second node) are healed by merging the duplicates."""

    def __init__(self, ledger: FaultLedger):
        self.ledger = ledger

    def __call__(self, ctx: AdvisorContext) -> RepairAction:
        g = ctx.graph
        visible = set(_visible_edges(ctx))
        for fault in self.ledger.faults:
            if self.ledger.fixed(g, fault):
                continue
            bad = self.ledger.corrupted_edge(g, fault)
            if bad is None or bad not in visible:
                continue
            if fault.kind in (FAULT_MISDIRECTION, FAULT_SILENT):
                return RepairAction(ACT_CHANGE_DIRECTION, edge=bad,
                                    new_direction=fault.true_direction)
            if fault.kind == FAULT_PHANTOM:
                return RepairAction(ACT_DELETE_EDGE, edge=bad)
            if fault.kind == FAULT_MISNAME:
                return RepairAction(ACT_RENAME_NODE, node=bad.dst,
                                    new_name=fault.true_name)
        merge = _same_name_merge(ctx)
        if merge is not None:
            return merge
        recall = _recall_once(ctx)
        if recall is not None:
            return recall
        return RepairAction(ACT_GIVE_UP)


def _same_name_merge(ctx: AdvisorContext) -> Optional[RepairAction]:
    c = ctx.conflict
    if c.kind != KIND_NAMING and c.subkind != SUB_OVERLAP:
        return None
    names = {normalize_name(ctx.graph.nodes[n]) for n in c.nodes
             if n in ctx.graph.nodes}
    if len(c.nodes) < 2 or len(names) != 1:
        return None
    keep, drop = sorted(c.nodes, key=lambda n: int(n.lstrip("n")))[:2]
    return RepairAction(ACT_MERGE_NODES, new_dst=keep, node=drop)


def _recall_once(ctx: AdvisorContext) -> Optional[RepairAction]:
    if ctx.chain is None or not ctx.ranked_candidates:
        return None
    top = ctx.ranked_candidates[0].edge
    for commit in ctx.chain.commits:
        if commit.step_id == top.step_id and any(
                d.edge == top for d in commit.deltas if d.op == "+"):
            action = RepairAction(ACT_RECALL_STEP, version=commit.index)
            if not _proposed_before(ctx, action):
                return action
    return None


class HeuristicAdvisor:
    """Deterministic, ledger-free strategy.

    Directional conflicts drop the later of the clashing edges.  For the
    rest, each candidate edge is simulated under every alternative label;
    if exactly one label resolves the conflict without introducing new
    ones, relabel, otherwise delete.  Never repeats a proposal within a
    session; proposes GiveUp once out of ideas."""

    def __call__(self, ctx: AdvisorContext) -> RepairAction:
        c = ctx.conflict
        if c.kind == KIND_DIRECTIONAL:
            for e in sorted(c.edges, key=lambda e: -e.step_id):
                action = RepairAction(ACT_DELETE_EDGE, edge=e)
                if not _proposed_before(ctx, action):
                    return action
            return RepairAction(ACT_GIVE_UP)

        order = list(c.edges)
        for e in _visible_edges(ctx):
            if e not in order:
                order.append(e)
        before = {x.key for x in detect_all(ctx.graph)}
        for e in order:
            if not ctx.graph.has_edge(e):
                continue
            fix = _unique_resolving_direction(ctx.graph, e, c.key, before)
            plans = []
            if fix is not None:
                plans.append(RepairAction(ACT_CHANGE_DIRECTION, edge=e,
                                          new_direction=fix))
            plans.append(RepairAction(ACT_DELETE_EDGE, edge=e))
            for action in plans:
                if not _proposed_before(ctx, action):
                    return action
        return RepairAction(ACT_GIVE_UP)


def _unique_resolving_direction(g: NavGraph, e: Edge, conflict_key,
                                before: set) -> Optional[str]:
    fixes = []
    for d in DIRECTIONS:
        if d == e.direction:
            continue
        trial = g.copy()
        trial.remove_edge(e)
        trial.add_edge(e.src, e.dst, d, e.step_id)
        after = {x.key for x in detect_all(trial)}
        if conflict_key not in after and after <= before:
            fixes.append(d)
    return fixes[0] if len(fixes) == 1 else None


# ---------------------------------------------------------------------------
# remote advisor

PROMPT_TEMPLATE = """You repair direction-labeled navigation maps built \
from game walkthroughs.  A conflict was detected; propose exactly one \
repair action.

Conflict:
{conflict}

Nearby map (nodes and edges):
{neighborhood}
{candidates_block}{tools_block}
Respond with a single JSON object and nothing else, shaped like one of:
  {{"action": "ChangeDirection", "edge": {{"src": ..., "dst": ..., \
"dir": ..., "step": ...}}, "new_dir": "<direction>"}}
  {{"action": "DeleteEdge", "edge": {{...}}}}
  {{"action": "RedirectEdge", "edge": {{...}}, "new_dst": "<node id>"}}
  {{"action": "RenameNode", "node": "<node id>", "new_name": "<name>"}}
  {{"action": "MergeNodes", "node": "<node to fold>", "new_dst": \
"<node to keep>"}}
  {{"action": "RollbackTo", "version": <int>}}
  {{"action": "RecallStep", "version": <int>}}
  {{"action": "DiffVersions", "i": <int>, "j": <int>}}
  {{"action": "GiveUp"}}
"""

_REPROMPT = ("Your previous reply could not be used: {error}\n"
             "Reply again with one valid JSON action object and nothing else.")


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    api_key: str = ""
    model: str = "gpt-4o"
    timeout: float = 60.0

    @classmethod
    def from_env(cls, env=os.environ) -> "EndpointConfig":
        base = env.get("MAPREPAIR_API_BASE")
        if not base:
            raise AdvisorFailure("MAPREPAIR_API_BASE is not set")
        return cls(base_url=base,
                   api_key=env.get("MAPREPAIR_API_KEY", ""),
                   model=env.get("MAPREPAIR_MODEL", "gpt-4o"))


def _default_transport(endpoint: EndpointConfig, payload: dict) -> dict:
    import requests

    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    resp = requests.post(url, json=payload, headers=headers,
                         timeout=endpoint.timeout)
    resp.raise_for_status()
    return resp.json()


def _extract_json_object(text: str) -> dict:
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch == "{":
            try:
                obj, _ = decoder.raw_decode(text[i:])
            except json.JSONDecodeError:
                continue
            if isinstance(obj, dict):
                return obj
    raise ValueError("no JSON object in reply")


class LlmAdvisor:
    """Adapter for an OpenAI-style chat-completions endpoint.  Sends the
    conflict context at temperature 0, parses the single-action JSON reply,
    reprompts once on a malformed reply, then raises AdvisorFailure."""

    def __init__(self, endpoint: Optional[EndpointConfig] = None,
                 transport: Callable[[EndpointConfig, dict], dict] = None):
        self.endpoint = endpoint or EndpointConfig.from_env()
        self.transport = transport or _default_transport

    def build_prompt(self, ctx: AdvisorContext) -> str:
        if ctx.ranked_candidates:
            rows = "\n".join(
                f"  {json.dumps(c.to_json())}" for c in ctx.ranked_candidates)
            candidates_block = f"\nRanked suspect edges:\n{rows}\n"
        else:
            candidates_block = ""
        tools = ["ChangeDirection", "DeleteEdge", "RedirectEdge",
                 "RenameNode", "MergeNodes", "GiveUp"]
        if ctx.chain is not None:
            tools += ["RollbackTo", "RecallStep", "DiffVersions"]
        tools_block = f"\nAvailable actions: {', '.join(tools)}\n"
        return PROMPT_TEMPLATE.format(
            conflict=json.dumps(ctx.conflict.to_json(), indent=2),
            neighborhood=json.dumps(ctx.neighborhood.to_json(), indent=2),
            candidates_block=candidates_block,
            tools_block=tools_block,
        )

    def _ask(self, messages: list[dict]) -> str:
        payload = {"model": self.endpoint.model, "temperature": 0,
                   "messages": messages}
        try:
            data = self.transport(self.endpoint, payload)
            return data["choices"][0]["message"]["content"]
        except AdvisorFailure:
            raise
        except Exception as exc:
            raise AdvisorFailure(f"endpoint error: {exc}") from exc

    def __call__(self, ctx: AdvisorContext) -> RepairAction:
        messages = [{"role": "user", "content": self.build_prompt(ctx)}]
        for final in (False, True):
            reply = self._ask(messages)
            try:
                return RepairAction.from_json(_extract_json_object(reply))
            except Exception as exc:
                if final:
                    raise AdvisorFailure(
                        f"unusable reply after reprompt: {exc}") from exc
                messages += [
                    {"role": "assistant", "content": reply},
                    {"role": "user",
                     "content": _REPROMPT.format(error=exc)},
                ]
        raise AdvisorFailure("unreachable")


# ---------------------------------------------------------------------------
# record / replay


@dataclass
class RecordingAdvisor:
    inner: Callable[[AdvisorContext], RepairAction]
    recorded: list[RepairAction] = field(default_factory=list)

    def __call__(self, ctx: AdvisorContext) -> RepairAction:
        action = self.inner(ctx)
        self.recorded.append(action)
        return action


class PlaybackAdvisor:
    """Replays a fixed action sequence; gives up when it runs dry."""

    def __init__(self, actions: Sequence[RepairAction]):
        self._actions = list(actions)
        self._cursor = 0

    def __call__(self, ctx: AdvisorContext) -> RepairAction:
        if self._cursor >= len(self._actions):
            return RepairAction(ACT_GIVE_UP)
        action = self._actions[self._cursor]
        self._cursor += 1
        return action
