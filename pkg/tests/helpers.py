"""Shared test helpers: graph builders, bundles, and scripted providers."""

from __future__ import annotations

import json
import math

import numpy as np

from claimcheck.ergraph import (
    DateData,
    EntType,
    EntityNode,
    ERGraph,
    LocationData,
    RelationEdge,
    UNK,
)
from claimcheck.imagematch import CHANNEL_DIMS, VisualFeatureBundle
from claimcheck.providers import MockLlm


def node(node_id, name=None, ent_type=EntType.PERSON, description="",
         location=None, date=None):
    loc = None
    if location is not None:
        loc = LocationData(*[v if v is not None else UNK for v in location])
    dd = None
    if date is not None:
        dd = DateData(*[v if v is not None else UNK for v in date])
    return EntityNode(
        id=node_id, name=name or node_id, ent_type=ent_type,
        description=description, location_data=loc, date_data=dd,
    )


def graph(nodes, edges):
    """Build a graph from EntityNodes and (src, dst, action[, description])."""
    built = []
    for e in edges:
        src, dst, action = e[0], e[1], e[2]
        desc = e[3] if len(e) > 3 else f"{action} (described)"
        built.append(RelationEdge(src=src, dst=dst, action=action, action_description=desc))
    return ERGraph(nodes=tuple(nodes), edges=tuple(built))


def graph_reply(g: ERGraph) -> str:
    """Serialize a graph as an LLM reply string."""
    return g.to_json()


def routing_llm(text_to_graph: dict[str, ERGraph]) -> MockLlm:
    """Mock LLM that answers any graph-building prompt by recognizing which
    source text was embedded in it."""

    def responder(prompt: str) -> str:
        for text, g in text_to_graph.items():
            if f'"""{text}"""' in prompt:
                return graph_reply(g)
        raise AssertionError(f"no scripted graph for prompt: {prompt[-300:]}")

    return MockLlm(responder=responder)


def unit_vec(dim: int, axis: int = 0) -> np.ndarray:
    v = np.zeros(dim)
    v[axis] = 1.0
    return v


def vec_with_cosine(reference: np.ndarray, target_cos: float) -> np.ndarray:
    """A unit-norm vector whose cosine with ``reference`` is ``target_cos``."""
    ref = reference / np.linalg.norm(reference)
    # pick any direction orthogonal to ref
    probe = np.zeros_like(ref)
    probe[int(np.argmin(np.abs(ref)))] = 1.0
    ortho = probe - np.dot(probe, ref) * ref
    ortho /= np.linalg.norm(ortho)
    return target_cos * ref + math.sqrt(max(0.0, 1.0 - target_cos**2)) * ortho


def make_bundle(image_id="img", seed=0, channel_cosines=None, reference=None,
                n_objects=1, n_faces=1, caption="a photo", with_caption=True):
    """Bundle with optionally prescribed per-channel cosines to a reference.

    Without ``channel_cosines`` the vectors are random (seeded).  With it,
    ``reference`` must be another bundle; each named channel's vectors are
    constructed to score exactly the given cosine against it.
    """
    rng = np.random.default_rng(seed)

    def rand(dim):
        return rng.standard_normal(dim)

    def channel_vec(name, dim, ref_vec):
        if channel_cosines and name in channel_cosines:
            return vec_with_cosine(ref_vec, channel_cosines[name])
        return rand(dim)

    if reference is None:
        return VisualFeatureBundle(
            image_id=image_id,
            objects=tuple(rand(CHANNEL_DIMS["objects"]) for _ in range(n_objects)),
            faces=tuple(rand(CHANNEL_DIMS["faces"]) for _ in range(n_faces)),
            place=rand(CHANNEL_DIMS["place"]),
            semantic=rand(CHANNEL_DIMS["semantic"]),
            caption_text=caption if with_caption else "",
            caption_emb=rand(CHANNEL_DIMS["caption"]) if with_caption else None,
        )
    return VisualFeatureBundle(
        image_id=image_id,
        objects=tuple(
            channel_vec("objects", CHANNEL_DIMS["objects"], reference.objects[0])
            for _ in range(n_objects)
        ) if n_objects else (),
        faces=tuple(
            channel_vec("faces", CHANNEL_DIMS["faces"], reference.faces[0])
            for _ in range(n_faces)
        ) if n_faces else (),
        place=channel_vec("place", CHANNEL_DIMS["place"], reference.place),
        semantic=channel_vec("semantic", CHANNEL_DIMS["semantic"], reference.semantic),
        caption_text=caption if with_caption else "",
        caption_emb=channel_vec("caption", CHANNEL_DIMS["caption"], reference.caption_emb)
        if with_caption else None,
    )


def random_valid_graph(rng: np.random.Generator, max_nodes: int = 6) -> ERGraph:
    """Random valid graph with at least one edge and distinct node texts."""
    n = int(rng.integers(2, max_nodes + 1))
    ent_types = [EntType.PERSON, EntType.ORG, EntType.EVENT, EntType.OBJECT, EntType.MISC]
    nodes = []
    for i in range(n):
        kind = rng.integers(0, 8)
        nid = f"n{i}"
        if kind == 6:
            nodes.append(node(nid, name=f"Place {i}-{rng.integers(1000)}",
                              ent_type=EntType.LOCATION,
                              description=f"location {i}",
                              location=(f"City{rng.integers(100)}", None, f"Country{rng.integers(10)}")))
        elif kind == 7:
            nodes.append(node(nid, name=f"Date {i}-{rng.integers(1000)}",
                              ent_type=EntType.DATE,
                              description=f"date {i}",
                              date=(int(rng.integers(1, 29)), int(rng.integers(1, 13)),
                                    int(rng.integers(1990, 2025)))))
        else:
            nodes.append(node(nid, name=f"Entity {i}-{rng.integers(1000)}",
                              ent_type=ent_types[int(rng.integers(len(ent_types)))],
                              description=f"entity number {i}"))
    # spanning chain keeps LOCATION/DATE nodes attached; extra random edges on top
    edges = []
    seen = set()
    for i in range(1, n):
        action = f"action-{i}-{rng.integers(1000)}"
        edges.append((f"n{i-1}", f"n{i}", action))
        seen.add((f"n{i-1}", f"n{i}", action))
    for _ in range(int(rng.integers(0, n))):
        a, b = rng.integers(0, n, size=2)
        if a == b:
            continue
        action = f"extra-{rng.integers(1000)}"
        key = (f"n{a}", f"n{b}", action)
        if key not in seen:
            seen.add(key)
            edges.append(key)
    return graph(nodes, edges)
