from maprepair.conflict_detector import (
    KIND_DIRECTIONAL, KIND_NAMING, KIND_TOPOLOGICAL, SUB_ASYMMETRY,
    SUB_INCONSISTENCY, SUB_OVERLAP, detect_all, unreachable_nodes,
)
from maprepair.graph_core import NavGraph


def _clean_square():
    g = NavGraph()
    ids = [g.add_node(f"R{i}") for i in range(4)]
    for i, d in enumerate(("north", "east", "south")):
        g.add_edge(ids[i], ids[i + 1], d, i + 1)
    g.add_edge(ids[3], ids[0], "west", 4)
    return g, ids


def test_clean_graph_has_no_conflicts():
    g, _ = _clean_square()
    assert detect_all(g) == []
    assert unreachable_nodes(g) == []


def test_directional_conflict_groups_by_src_and_label():
    g = NavGraph()
    a, b, c = g.add_node("A"), g.add_node("B"), g.add_node("C")
    g.add_edge(a, b, "north", 1)
    g.add_edge(a, c, "north", 2)
    g.add_edge(a, c, "east", 3)  # distinct label: no conflict
    conflicts = detect_all(g)
    assert [c.kind for c in conflicts] == [KIND_DIRECTIONAL]
    assert conflicts[0].witness == (a, "north")
    assert len(conflicts[0].edges) == 2


def test_asymmetry_reported_once_per_pair():
    g = NavGraph()
    a, b = g.add_node("A"), g.add_node("B")
    g.add_edge(a, b, "north", 1)
    g.add_edge(b, a, "east", 2)
    conflicts = detect_all(g)
    assert len(conflicts) == 1
    assert conflicts[0].subkind == SUB_ASYMMETRY
    assert conflicts[0].kind == KIND_TOPOLOGICAL


def test_consistent_reverse_pair_is_fine():
    g = NavGraph()
    a, b = g.add_node("A"), g.add_node("B")
    g.add_edge(a, b, "up", 1)
    g.add_edge(b, a, "down", 2)
    assert detect_all(g) == []


def test_asymmetry_subsumes_its_inconsistency():
    # the asymmetric return edge also re-derives A's position wrongly;
    # that symptom must not be double-reported
    g = NavGraph()
    a, b = g.add_node("A"), g.add_node("B")
    g.add_edge(a, b, "north", 1)
    g.add_edge(b, a, "west", 2)
    conflicts = detect_all(g)
    assert [c.subkind for c in conflicts] == [SUB_ASYMMETRY]


def test_independent_inconsistency_still_reported():
    g = NavGraph()
    a, b = g.add_node("A"), g.add_node("B")
    g.add_edge(a, b, "north", 1)
    g.add_edge(a, b, "east", 2)  # no reverse edge: not an asymmetry
    conflicts = detect_all(g)
    assert [c.subkind for c in conflicts] == [SUB_INCONSISTENCY]
    assert conflicts[0].nodes == (b,)
    assert conflicts[0].witness == ((0, 1, 0), (1, 0, 0))


def test_duplicate_label_does_not_fabricate_overlap():
    g = NavGraph()
    a = g.add_node("A")
    b = g.add_node("B")
    c = g.add_node("C")
    g.add_edge(a, b, "north", 1)
    g.add_edge(a, c, "north", 2)
    conflicts = detect_all(g)
    # one directional conflict; the later edge must not also position C on
    # top of B and manufacture an overlap
    assert [(x.kind, x.subkind) for x in conflicts] == \
        [(KIND_DIRECTIONAL, KIND_DIRECTIONAL)]


def test_naming_requires_distinct_positions():
    g = NavGraph()
    a = g.add_node("Start")
    b1 = g.add_node("Twisty Passage")
    b2 = g.add_node("Twisty Passage")
    g.add_edge(a, b1, "north", 1)
    g.add_edge(a, b2, "east", 2)
    conflicts = detect_all(g)
    assert [c.kind for c in conflicts] == [KIND_NAMING]
    assert conflicts[0].nodes == tuple(sorted((b1, b2)))

    # unpositioned namesakes do not trigger the conflict
    g2 = NavGraph()
    s = g2.add_node("Start")
    g2.add_node("Twisty Passage")
    t = g2.add_node("Twisty Passage")
    g2.add_edge(s, t, "north", 1)
    assert detect_all(g2) == []


def test_detection_order_and_commit_stamp():
    g = NavGraph()
    a = g.add_node("A")
    b = g.add_node("Dup")
    c = g.add_node("Dup")
    d = g.add_node("D")
    g.add_edge(a, b, "north", 1)
    g.add_edge(a, c, "east", 2)
    g.add_edge(a, d, "east", 3)       # directional with step-2 edge
    g.add_edge(b, a, "north", 4)      # asymmetry with step-1 edge
    conflicts = detect_all(g, commit=7)
    kinds = [(x.kind, x.subkind) for x in conflicts]
    assert kinds == [
        (KIND_DIRECTIONAL, KIND_DIRECTIONAL),
        (KIND_TOPOLOGICAL, SUB_ASYMMETRY),
        (KIND_NAMING, KIND_NAMING),
    ]
    assert all(x.first_visible_commit == 7 for x in conflicts)


def test_keys_stable_across_redetection():
    g = NavGraph()
    a, b, c = g.add_node("A"), g.add_node("B"), g.add_node("C")
    g.add_edge(a, b, "north", 1)
    g.add_edge(a, c, "north", 2)
    first = {x.key for x in detect_all(g, commit=1)}
    second = {x.key for x in detect_all(g, commit=2)}
    assert first == second


def test_overlap_conflict_identity():
    g = NavGraph()
    a = g.add_node("A")
    b = g.add_node("B")
    c = g.add_node("C")
    d = g.add_node("D")
    g.add_edge(a, b, "north", 1)
    g.add_edge(a, c, "northeast", 2)
    g.add_edge(c, d, "west", 3)  # d lands on b's cell (0, 1)
    conflicts = [x for x in detect_all(g) if x.subkind == SUB_OVERLAP]
    assert len(conflicts) == 1
    assert conflicts[0].nodes == tuple(sorted((b, d)))
    assert conflicts[0].key == (SUB_OVERLAP, tuple(sorted((b, d))))
    assert conflicts[0].witness == ((0, 1, 0),)


def test_unreachable_nodes_are_warnings_not_conflicts():
    g, ids = _clean_square()
    lost = g.add_node("Island")
    assert detect_all(g) == []
    assert unreachable_nodes(g) == [lost]


def test_to_json_shape():
    g = NavGraph()
    a, b = g.add_node("A"), g.add_node("B")
    g.add_edge(a, b, "north", 1)
    g.add_edge(b, a, "east", 2)
    payload = detect_all(g, commit=3)[0].to_json()
    assert set(payload) == {"kind", "subkind", "participants", "witness",
                            "commit"}
    assert payload["commit"] == 3
    assert payload["participants"]["edges"][0]["dir"] == "north"
