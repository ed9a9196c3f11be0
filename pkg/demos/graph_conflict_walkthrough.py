"""Walkthrough: comparing two entity-relationship graphs of the same event.

A claim says floods hit Lostwithiel (Cornwall, UK); a news report says the
same floods struck Aberdeen (Scotland).  The engine aligns the two graphs,
spots the incompatible location contexts on the matched event node, and
reports the claim as unsupported.

Run:  python3 demos/graph_conflict_walkthrough.py
"""

from claimcheck import (
    EntityNode,
    EntType,
    ERGraph,
    LocationData,
    RelationEdge,
    StubEmbedder,
    UNK,
    export_dot,
    graph_match,
)

# --- the claim: "Floods hit Lostwithiel" -----------------------------------

claim = ERGraph(
    nodes=(
        EntityNode(id="floods", name="Floods", ent_type=EntType.EVENT,
                   description="severe flooding"),
        EntityNode(id="lostwithiel", name="Lostwithiel", ent_type=EntType.LOCATION,
                   description="a town in Cornwall",
                   location_data=LocationData("Lostwithiel", "Cornwall", "UK")),
    ),
    edges=(
        RelationEdge(src="floods", dst="lostwithiel", action="hit",
                     action_description="the floods hit the town"),
    ),
)

# --- the evidence: same event, different place -----------------------------

evidence = ERGraph(
    nodes=(
        EntityNode(id="floods", name="Floods", ent_type=EntType.EVENT,
                   description="severe flooding"),
        EntityNode(id="aberdeen", name="Aberdeen", ent_type=EntType.LOCATION,
                   description="a Scottish city",
                   location_data=LocationData("Aberdeen", UNK, "Scotland")),
    ),
    edges=(
        RelationEdge(src="floods", dst="aberdeen", action="struck",
                     action_description="the floods struck the city"),
    ),
)

embedder = StubEmbedder(dim=64)
report = graph_match(claim, [evidence], embedder)

print("matched node pairs:")
for cid, eid, sim in report.mapping.pairs:
    print(f"  {cid} ~ {eid}  (similarity {sim:.3f})")

print("\nconflicts:")
for rec in report.conflicts:
    print(f"  [{rec.conflict_type.value}] {rec.claim_context} vs {rec.evidence_context}")

print("\nedge support:")
for status in report.edge_statuses:
    print(f"  {status.claim_edge}: {status.status.value}")

print(f"\nsupport fraction: {report.support_fraction:.2f}")
print(f"graphs matched: {report.matched}")

# A DOT rendering colors the matched pair and flags the conflicted node red.
print("\nGraphviz output (pipe into `dot -Tpng`):\n")
print(export_dot(claim, report))
