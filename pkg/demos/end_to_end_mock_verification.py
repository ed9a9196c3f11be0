"""Walkthrough: verifying a claim end to end with scripted offline providers.

A tweet pairs a photo with "Buildings collapsed after an earthquake in
Turkey."  Reverse-searching the photo finds an article placing the same
scene in Iran; text search finds an image whose caption supports the claim
wording but whose pixels are a different picture.  The engine reads this as
a re-used image plus conflicting reports and rejects the claim.

Everything runs offline: the language model is a scripted responder and
the feature bundles are synthetic.

Run:  python3 demos/end_to_end_mock_verification.py
"""

import numpy as np

from claimcheck import (
    EntityNode,
    EntType,
    ERGraph,
    EvidenceItem,
    LocationData,
    RelationEdge,
    StubEmbedder,
    VisualFeatureBundle,
    verify_claim,
)
from claimcheck.imagematch import CHANNEL_DIMS
from claimcheck.providers import MockLlm
from claimcheck.verify import render_markdown

CLAIM_TEXT = "Buildings collapsed after an earthquake in Turkey."
CAPTION_TEXT = "Photo shows buildings collapsed after an earthquake in Turkey."
ARTICLE_TEXT = "The collapsed buildings are from an earthquake in Iran."


def quake_graph(country: str) -> ERGraph:
    """The shared event structure, parameterized by the reported country."""
    return ERGraph(
        nodes=(
            EntityNode(id="quake", name="Earthquake", ent_type=EntType.EVENT,
                       description="a strong earthquake"),
            EntityNode(id="buildings", name="Buildings", ent_type=EntType.OBJECT,
                       description="collapsed buildings"),
            EntityNode(id=country.lower(), name=country, ent_type=EntType.LOCATION,
                       description="a country",
                       location_data=LocationData(country=country)),
        ),
        edges=(
            RelationEdge(src="quake", dst="buildings", action="collapsed",
                         action_description="the earthquake collapsed the buildings"),
            RelationEdge(src="quake", dst=country.lower(), action="struck in",
                         action_description="the earthquake struck in the country"),
        ),
    )


def scripted_llm() -> MockLlm:
    """Answers every graph-building prompt from the embedded source text."""

    def responder(prompt: str) -> str:
        for text, country in ((CLAIM_TEXT, "Turkey"), (CAPTION_TEXT, "Turkey"),
                              (ARTICLE_TEXT, "Iran")):
            if f'"""{text}"""' in prompt:
                return quake_graph(country).to_json()
        raise RuntimeError("unexpected prompt")

    return MockLlm(responder=responder)


def random_bundle(image_id: str, rng) -> VisualFeatureBundle:
    return VisualFeatureBundle(
        image_id=image_id,
        objects=(rng.standard_normal(CHANNEL_DIMS["objects"]),),
        faces=(),
        place=rng.standard_normal(CHANNEL_DIMS["place"]),
        semantic=rng.standard_normal(CHANNEL_DIMS["semantic"]),
        caption_text="rubble of collapsed buildings",
        caption_emb=rng.standard_normal(CHANNEL_DIMS["caption"]),
    )


rng = np.random.default_rng(42)
claim_bundle = random_bundle("tweet-photo", rng)

# Visual cross evidence: the caption context supports the claim, but the
# image itself is a different picture -> an out-of-context re-use signal.
visual_evidence = [EvidenceItem(
    source_url="https://elpais.com/quake-photos",
    contextual_text=CAPTION_TEXT,
    feature_bundle=random_bundle("agency-photo", rng),
)]

# Text cross evidence: reverse search of the tweet photo finds the article
# that locates the very same scene in a different country.
text_evidence = [EvidenceItem(
    source_url="https://elmundo.es/quake-report",
    contextual_text=ARTICLE_TEXT,
)]

verdict = verify_claim(CLAIM_TEXT, claim_bundle, visual_evidence, text_evidence,
                       scripted_llm(), StubEmbedder(dim=64))

print(render_markdown(verdict))
