"""Walkthrough transcript parsing and incremental graph construction.

Transcripts are sequences of blocks separated by ``===========`` lines:

    ==>STEP NUM: 3
    ==>ACT: west
    ==>OBSERVATION: At End Of Road
    ...

A step is a movement iff its action normalizes to one of the 14 directions
("go north" counts).  The destination's name is the first non-empty
observation line; for the initial block, which opens with game banner text,
the line immediately preceding the first "You ..." description line is used
instead (falling back to the first non-empty line).

Construction keeps a current-location cursor.  A movement whose observation
names a different location commits one edge.  The destination reuses an
existing node only when both the normalized name and the inferred lattice
position agree; otherwise a fresh node is created, which is what lets
naming conflicts surface naturally downstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import MalformedBlock, NonMonotonicStep
from .graph_core import COMPASS, Edge, NavGraph, displacement, is_direction, \
    normalize_name
from .position_inference import infer_positions
from .version_store import TRIGGER_OBSERVATION, VersionChain, add

_SEPARATOR = re.compile(r"^={5,}\s*$")
_STEP_RE = re.compile(r"^==>STEP NUM:\s*(\d+)\s*$")
_ACT_RE = re.compile(r"^==>ACT:\s*(.*)$")
_OBS_RE = re.compile(r"^==>OBSERVATION:\s*(.*)$")


@dataclass(frozen=True)
class WalkthroughStep:
    step_num: int
    act: str
    observation: str
    location_line: str
    is_movement: bool
    direction: Optional[str]


def normalize_act(act: str) -> Optional[str]:
    """Direction named by `act`, or None for non-movement actions."""
    a = act.strip().casefold()
    if a.startswith("go "):
        a = a[3:].strip()
    return a if is_direction(a) else None


def _first_nonempty(text: str) -> str:
    for line in text.splitlines():
        if line.strip():
            return line.strip()
    return ""


def origin_location_line(observation: str) -> str:
    """Room title inside a banner-laden initial observation: the line just
    before the first description line starting with "You"."""
    lines = [ln.strip() for ln in observation.splitlines()]
    for i, line in enumerate(lines):
        if line.startswith("You") and i > 0:
            for j in range(i - 1, -1, -1):
                if lines[j]:
                    return lines[j]
    return _first_nonempty(observation)


def parse_transcript(text: str) -> list[WalkthroughStep]:
    blocks: list[list[str]] = []
    current: list[str] = []
    for line in text.splitlines():
        if _SEPARATOR.match(line):
            if current:
                blocks.append(current)
            current = []
        else:
            current.append(line)
    if current:
        blocks.append(current)

    steps: list[WalkthroughStep] = []
    for block in blocks:
        if not any(line.strip() for line in block):
            continue
        step_num = act = None
        obs_lines: list[str] = []
        in_obs = False
        for line in block:
            if in_obs:
                obs_lines.append(line)
                continue
            m = _STEP_RE.match(line)
            if m:
                step_num = int(m.group(1))
                continue
            m = _ACT_RE.match(line)
            if m:
                act = m.group(1).strip()
                continue
            m = _OBS_RE.match(line)
            if m:
                obs_lines.append(m.group(1))
                in_obs = True
        if step_num is None or act is None or not in_obs:
            raise MalformedBlock(
                f"block missing STEP NUM/ACT/OBSERVATION header: {block[:3]}")
        observation = "\n".join(obs_lines).rstrip("\n")
        direction = normalize_act(act)
        expected = steps[-1].step_num if steps else -1
        if step_num <= expected or (not steps and step_num != 0):
            raise NonMonotonicStep(
                f"step {step_num} after {expected}; must increase from 0")
        location = (origin_location_line(observation) if not steps
                    else _first_nonempty(observation))
        steps.append(WalkthroughStep(
            step_num=step_num,
            act=act,
            observation=observation,
            location_line=location,
            is_movement=direction is not None,
            direction=direction,
        ))
    return steps


def construct_graph(steps: Sequence[WalkthroughStep],
                    chain: VersionChain) -> NavGraph:
    """Drive incremental construction through the commit chain."""
    if chain.head != -1:
        raise NonMonotonicStep("construction requires an empty chain")
    if not steps:
        return chain.graph
    g = chain.graph
    origin_name = steps[0].location_line
    origin_id = chain.allocate_node_id()
    chain.commit([], TRIGGER_OBSERVATION, obs_id=steps[0].step_num,
                 analysis=origin_name, new_nodes=[(origin_id, origin_name)])
    cursor = origin_id
    for step in steps[1:]:
        if not step.is_movement:
            continue
        name = step.location_line
        if normalize_name(name) == normalize_name(g.nodes[cursor]):
            continue  # blocked move: observation repeats the current room
        dst = _reuse_or_none(g, cursor, step.direction, name)
        new_nodes = []
        if dst is None:
            dst = chain.allocate_node_id()
            new_nodes.append((dst, name))
        edge = Edge(cursor, dst, step.direction, step.step_num)
        chain.commit([add(edge)], TRIGGER_OBSERVATION,
                     obs_id=step.step_num, analysis=name,
                     new_nodes=new_nodes)
        cursor = dst
    return g


def _reuse_or_none(g: NavGraph, cursor: str, direction: str,
                   name: str) -> Optional[str]:
    same_name = sorted(g.nodes_named(name))
    if not same_name:
        return None
    pm = infer_positions(g)
    cur_pos = pm.get(cursor)
    if cur_pos is None or direction not in COMPASS:
        # no geometry to check against: reuse an unpositioned namesake
        for nid in same_name:
            if pm.get(nid) is None:
                return nid
        return None
    dx, dy, dz = displacement(direction)
    target = (cur_pos[0] + dx, cur_pos[1] + dy, cur_pos[2] + dz)
    for nid in same_name:
        if pm.get(nid) == target:
            return nid
    return None
