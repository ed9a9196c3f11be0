"""Acceptance suite: one test per contract-level guarantee of the engine.

Each test here is an end-to-end statement about observable behavior —
assignment optimality, default thresholds, scenario reconstructions, the
decision table, determinism, and the batch harness — so a verbose run reads
as a per-guarantee pass/fail checklist.
"""

from __future__ import annotations

import itertools
import json
import time

import numpy as np

from claimcheck.config import EngineConfig
from claimcheck.ergraph import UNK, EntType
from claimcheck.graphmatch import (
    ConflictType,
    MatchConfig,
    graph_match,
    map_nodes,
    node_similarity_matrix,
)
from claimcheck.harness import ClaimRecord, evaluate, filter_corpus
from claimcheck.imagematch import image_match, save_bundle
from claimcheck.providers import MockLlm, MockSearchClient
from claimcheck.retrieval import retrieve_visual_evidence
from claimcheck.verify import Code, Label, decide, verify_claim

from helpers import (
    graph,
    graph_reply,
    make_bundle,
    node,
    random_valid_graph,
    routing_llm,
)


def _brute_force_total(sim: np.ndarray, threshold: float) -> float:
    """Exhaustive maximum over all injective assignments, threshold-filtered."""
    n, m = sim.shape
    best = 0.0
    if n <= m:
        for perm in itertools.permutations(range(m), n):
            best = max(best, sum(sim[r, c] for r, c in zip(range(n), perm)
                                 if sim[r, c] >= threshold))
    else:
        for perm in itertools.permutations(range(n), m):
            best = max(best, sum(sim[r, c] for r, c in zip(perm, range(m))
                                 if sim[r, c] >= threshold))
    return best


def test_assignment_matches_exhaustive_oracle(stub):
    """Optimal injective node assignment equals a brute-force search (200 pairs)."""
    rng = np.random.default_rng(7)
    started = time.monotonic()
    for trial in range(200):
        claim = random_valid_graph(rng, max_nodes=6)
        evidence = random_valid_graph(rng, max_nodes=6)
        # share some node texts so similarities of exactly 1.0 appear
        for i in range(int(rng.integers(0, min(len(claim.nodes), len(evidence.nodes)) + 1))):
            src = claim.nodes[i]
            nodes = list(evidence.nodes)
            nodes[i] = node(nodes[i].id, name=src.name, ent_type=src.ent_type,
                            description=src.description)
            evidence = graph(nodes, [(e.src, e.dst, e.action, e.action_description)
                                     for e in evidence.edges])
        threshold = float(rng.choice([0.0, 0.3, 0.8]))
        cfg = MatchConfig(node_threshold=threshold)
        sim = node_similarity_matrix(claim, evidence, stub)
        mapping = map_nodes(claim, evidence, stub, cfg)
        total = sum(s for _, _, s in mapping.pairs)
        assert abs(total - _brute_force_total(sim, threshold)) < 1e-9
    assert time.monotonic() - started < 10.0


def test_default_thresholds_golden():
    """The default configuration dump matches the deployed thresholds exactly."""
    flat = EngineConfig().to_dict()
    assert flat["node_threshold"] == 0.8
    assert flat["edge_threshold"] == 0.5
    assert flat["image_threshold"] == 0.9
    assert flat["edge_support_threshold"] == 0.3
    assert flat["conflict_tolerance"] == 0
    assert flat["max_walk_length"] == 4


def test_self_match_property(stub):
    """Any valid graph fully supports itself (100 random graphs)."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        g = random_valid_graph(rng)
        report = graph_match(g, [g], stub)
        assert report.support_fraction == 1.0
        assert report.conflicts == ()
        assert report.matched is True


def test_location_conflict_scenario(stub):
    """Same event, two incompatible places: exactly one location conflict."""
    claim = graph(
        [node("floods", name="Floods", ent_type=EntType.EVENT,
              description="severe flooding"),
         node("loc-lostwithiel", name="Lostwithiel", ent_type=EntType.LOCATION,
              description="a town", location=("Lostwithiel", "Cornwall", "UK"))],
        [("floods", "loc-lostwithiel", "hit")],
    )
    evidence = graph(
        [node("floods", name="Floods", ent_type=EntType.EVENT,
              description="severe flooding"),
         node("loc-aberdeen", name="Aberdeen", ent_type=EntType.LOCATION,
              description="a city", location=("Aberdeen", None, "Scotland"))],
        [("floods", "loc-aberdeen", "struck")],
    )
    report = graph_match(claim, [evidence], stub)
    assert len(report.conflicts) == 1
    rec = report.conflicts[0]
    assert rec.conflict_type is ConflictType.LOCATION
    assert rec.claim_context == ("Lostwithiel", "Cornwall", "UK")
    assert rec.evidence_context == ("Aberdeen", UNK, "Scotland")
    assert report.matched is False


def test_repurposed_image_scenario(stub):
    """Supportive caption text, mismatched image, conflicting report location."""
    claim_text = "Buildings collapsed after an earthquake in Turkey."
    xv_text = "Photo caption: buildings collapsed after an earthquake in Turkey."
    xt_text = "The collapsed buildings are from an earthquake in Iran."

    def quake_graph(country):
        loc_id = country.lower()
        return graph(
            [node("quake", name="Earthquake", ent_type=EntType.EVENT,
                  description="a strong earthquake"),
             node("buildings", name="Buildings", ent_type=EntType.OBJECT,
                  description="collapsed buildings"),
             node(loc_id, name=country, ent_type=EntType.LOCATION,
                  description="a country", location=(None, None, country))],
            [("quake", "buildings", "collapsed"), ("quake", loc_id, "struck in")],
        )

    llm = routing_llm({claim_text: quake_graph("Turkey"),
                       xv_text: quake_graph("Turkey"),
                       xt_text: quake_graph("Iran")})
    from claimcheck.providers import EvidenceItem

    claim_bundle = make_bundle(seed=130)
    visual = [EvidenceItem(source_url="https://elpais.com/v", contextual_text=xv_text,
                           feature_bundle=make_bundle(seed=131))]
    text = [EvidenceItem(source_url="https://elmundo.es/t", contextual_text=xt_text)]
    verdict = verify_claim(claim_text, claim_bundle, visual, text, llm, stub)
    assert Code.XV_OOC in verdict.codes
    assert Code.XT_CONFLICTS in verdict.codes
    assert verdict.label is Label.FAKE


def test_decision_table_exhaustive():
    """All 16 input combinations produce the hand-checked verdicts."""
    S, O, N = Code.XV_SUPPORTS, Code.XV_OOC, Code.XV_NS
    TS, TN, TC = Code.XT_SUPPORTS, Code.XT_NS, Code.XT_CONFLICTS
    expected = {
        # (m_vt, m_v, m_t, conflict): (codes, verified)
        (False, False, False, False): ((N, TN), False),
        (False, False, False, True): ((N, TN, TC), False),
        (False, False, True, False): ((N, TS), True),
        (False, False, True, True): ((N, TS, TC), False),
        (False, True, False, False): ((N, TN), False),
        (False, True, False, True): ((N, TN, TC), False),
        (False, True, True, False): ((N, TS), True),
        (False, True, True, True): ((N, TS, TC), False),
        (True, False, False, False): ((O, TN), False),
        (True, False, False, True): ((O, TN, TC), False),
        (True, False, True, False): ((O, TS), True),
        (True, False, True, True): ((O, TS, TC), False),
        (True, True, False, False): ((S, TN), True),
        (True, True, False, True): ((S, TN, TC), False),
        (True, True, True, False): ((S, TS), True),
        (True, True, True, True): ((S, TS, TC), False),
    }
    assert len(expected) == 16
    for combo, (codes, verified) in expected.items():
        assert decide(*combo) == (codes, verified), combo


def test_image_match_boundary_and_invariants():
    """3-of-5 channels at threshold match, 2 do not; symmetric and monotone."""
    claim = make_bundle(seed=140)
    three = make_bundle(seed=141, reference=claim,
                        channel_cosines={"place": 0.95, "semantic": 0.95,
                                         "caption": 0.95, "objects": 0.1, "faces": 0.1})
    two = make_bundle(seed=142, reference=claim,
                      channel_cosines={"place": 0.95, "semantic": 0.95,
                                       "caption": 0.1, "objects": 0.1, "faces": 0.1})
    assert image_match(claim, three).matched is True
    assert image_match(claim, two).matched is False

    rng = np.random.default_rng(13)
    for i in range(1000):
        a = make_bundle(seed=1000 + i)
        if i % 5 == 0:
            # near-boundary pairs so monotonicity is exercised non-trivially
            cos = {ch: float(rng.uniform(0.8, 1.0))
                   for ch in ("place", "semantic", "caption", "objects", "faces")}
            b = make_bundle(seed=3000 + i, reference=a, channel_cosines=cos)
        else:
            b = make_bundle(seed=3000 + i)
        fwd, rev = image_match(a, b), image_match(b, a)
        assert fwd.matched == rev.matched
        assert fwd.channels_passed == rev.channels_passed
        if image_match(a, b, threshold=0.95).matched:
            assert image_match(a, b, threshold=0.85).matched


CLAIM_TEXT = "A fire destroyed the old bridge in Girona."

RETRIEVAL_GRAPH = graph(
    [node("fire", name="Fire", ent_type=EntType.EVENT, description="a blaze"),
     node("bridge", name="Old Bridge", ent_type=EntType.OBJECT, description="a bridge"),
     node("girona", name="Girona", ent_type=EntType.LOCATION,
          description="Catalan city", location=("Girona", "Catalonia", "Spain"))],
    [("fire", "bridge", "destroyed"), ("fire", "girona", "broke out in")],
)


def test_retrieval_loop_bound_and_determinism(tmp_path, stub):
    """The loop stops within its try budget, retraces byte-identically, and
    the refinement fixture succeeds on the second try."""
    claim_bundle = make_bundle(image_id="claim-img", seed=150)
    save_bundle(claim_bundle, tmp_path / "ev.json")
    pages = [{"url": "https://elpais.com/girona-fire", "text": CLAIM_TEXT,
              "terms": ["girona-fire-2019"], "bundle_path": "ev.json"}]

    def llm():
        def responder(prompt):
            if prompt.startswith("[claimcheck refine-query"):
                return "girona-fire-2019 Girona fire"
            return graph_reply(RETRIEVAL_GRAPH)
        return MockLlm(responder=responder)

    traces = []
    for _ in range(2):
        client = MockSearchClient(pages, base_dir=tmp_path)
        trace = retrieve_visual_evidence(CLAIM_TEXT, claim_bundle, llm(), client, stub)
        assert trace.outcome == "FOUND"
        assert trace.tries_used == 2
        assert len(client.queries) <= 5
        traces.append(trace.to_json())
    assert traces[0] == traces[1]

    # no page ever matches: the loop must halt at the try budget
    counter = {"n": 0}

    def restless(prompt):
        if prompt.startswith("[claimcheck refine-query"):
            counter["n"] += 1
            return f"variant {counter['n']}"
        return graph_reply(RETRIEVAL_GRAPH)

    empty_client = MockSearchClient([])
    trace = retrieve_visual_evidence(CLAIM_TEXT, claim_bundle,
                                     MockLlm(responder=restless), empty_client, stub)
    assert trace.outcome == "EXHAUSTED"
    assert trace.tries_used == 5
    assert len(empty_client.queries) == 5


def test_filter_pipeline_stages(tmp_path):
    """Ten records exercising every filter stage keep/reject as specified."""

    def record(claim_id, seed, bundle=True, class_label=None, alignment=None,
               fakeness=None):
        path = tmp_path / f"{claim_id}.json"
        if bundle:
            b = make_bundle(seed=seed)
            if class_label is not None:
                from claimcheck.imagematch import VisualFeatureBundle
                b = VisualFeatureBundle(
                    image_id=b.image_id, objects=b.objects, faces=b.faces,
                    place=b.place, semantic=b.semantic, caption_text=b.caption_text,
                    caption_emb=b.caption_emb, metadata={"class_label": class_label})
            save_bundle(b, path)
        return ClaimRecord(claim_id=claim_id, text=f"claim {claim_id}",
                           bundle_path=str(path), caption_alignment=alignment,
                           fakeness_score=fakeness)

    records = [
        record("keep-plain", 160, alignment=0.9),
        record("drop-unimodal", 161, bundle=False),
        record("drop-alignment-at", 162, alignment=0.40),
        record("keep-alignment-above", 163, alignment=0.41),
        record("drop-website", 164, alignment=0.9, class_label="website"),
        record("drop-internet", 165, alignment=0.9, class_label="internet"),
        record("drop-fakeness-at", 166, alignment=0.9, fakeness=0.45),
        record("keep-fakeness-above", 167, alignment=0.9, fakeness=0.46),
        record("keep-unscored-fakeness", 168, alignment=0.9),
        record("keep-photo-class", 169, alignment=0.9, class_label="photograph"),
    ]
    kept, rejected = filter_corpus(records)
    assert [r.claim_id for r in kept] == [
        "keep-plain", "keep-alignment-above", "keep-fakeness-above",
        "keep-unscored-fakeness", "keep-photo-class"]
    assert {rej.record.claim_id: rej.stage for rej in rejected} == {
        "drop-unimodal": "multimodal",
        "drop-alignment-at": "alignment",
        "drop-website": "visual",
        "drop-internet": "visual",
        "drop-fakeness-at": "text",
    }
    again, re_rejected = filter_corpus(kept)
    assert again == kept
    assert re_rejected == []


def test_end_to_end_mock_evaluation(tmp_path, stub):
    """A 20-claim synthetic corpus (10 fake / 10 pristine by construction)
    evaluates at 100% accuracy with mock providers in under a minute."""
    claim_text = "Protesters joined a rally held in Girona."
    support_text = "Reports confirm protesters joined a rally held in Girona."
    conflict_text = "Protesters joined a rally held in Madrid."

    def rally_graph(city, region):
        loc_id = city.lower()
        return graph(
            [node("crowd", name="Protesters", ent_type=EntType.ORG,
                  description="people marching"),
             node("rally", name="Rally", ent_type=EntType.EVENT,
                  description="a street rally"),
             node(loc_id, name=city, ent_type=EntType.LOCATION,
                  description="a city", location=(city, region, "Spain"))],
            [("crowd", "rally", "joined"), ("rally", loc_id, "held in")],
        )

    llm = routing_llm({claim_text: rally_graph("Girona", "Catalonia"),
                       support_text: rally_graph("Girona", "Catalonia"),
                       conflict_text: rally_graph("Madrid", None)})

    def pristine(i):
        bundle_path = tmp_path / f"p{i}.json"
        bundle = make_bundle(seed=200 + i)
        save_bundle(bundle, bundle_path)
        ev_dir = tmp_path / f"p{i}-evidence"
        ev_dir.mkdir()
        save_bundle(bundle, ev_dir / "ev.json")
        (ev_dir / "visual.jsonl").write_text(json.dumps(
            {"source_url": "https://elpais.com/v", "contextual_text": support_text,
             "bundle_path": "ev.json"}) + "\n")
        (ev_dir / "text.jsonl").write_text(json.dumps(
            {"source_url": "https://elmundo.es/t",
             "contextual_text": support_text}) + "\n")
        return ClaimRecord(claim_id=f"p{i:02d}", text=claim_text,
                           bundle_path=str(bundle_path), label=Label.PRISTINE,
                           evidence_dir=str(ev_dir))

    def fake(i):
        bundle_path = tmp_path / f"f{i}.json"
        save_bundle(make_bundle(seed=300 + i), bundle_path)
        ev_dir = None
        if i % 2 == 0:
            # conflicting coverage plus a repurposed image
            ev_dir = tmp_path / f"f{i}-evidence"
            ev_dir.mkdir()
            save_bundle(make_bundle(seed=400 + i), ev_dir / "other.json")
            (ev_dir / "visual.jsonl").write_text(json.dumps(
                {"source_url": "https://elpais.com/v", "contextual_text": conflict_text,
                 "bundle_path": "other.json"}) + "\n")
            (ev_dir / "text.jsonl").write_text(json.dumps(
                {"source_url": "https://elmundo.es/t",
                 "contextual_text": conflict_text}) + "\n")
        return ClaimRecord(claim_id=f"f{i:02d}", text=claim_text,
                           bundle_path=str(bundle_path), label=Label.FAKE,
                           evidence_dir=str(ev_dir) if ev_dir else None)

    records = [pristine(i) for i in range(10)] + [fake(i) for i in range(10)]
    started = time.monotonic()
    summary = evaluate(records, llm, stub, jobs=1)
    elapsed = time.monotonic() - started
    assert summary.overall_acc == 1.0
    assert summary.fake_acc == 1.0
    assert summary.pristine_acc == 1.0
    assert summary.errors == 0
    assert elapsed < 60.0
