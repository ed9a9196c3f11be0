"""Walkthrough: deciding whether two images are the same picture.

Images are compared as five-channel feature bundles — object regions, face
embeddings, scene features, semantic class scores, and an embedded caption.
Two bundles count as the same image when at least three channels agree at
cosine >= 0.9; channels a bundle simply doesn't have (no faces, no caption)
can never count toward the three.

Run:  python3 demos/image_channels_walkthrough.py
"""

import numpy as np

from claimcheck import ABSENT, Channel, VisualFeatureBundle, image_match
from claimcheck.imagematch import CHANNEL_DIMS

rng = np.random.default_rng(0)


def random_bundle(image_id, n_faces=1, caption="a crowd in a square"):
    return VisualFeatureBundle(
        image_id=image_id,
        objects=(rng.standard_normal(CHANNEL_DIMS["objects"]),),
        faces=tuple(rng.standard_normal(CHANNEL_DIMS["faces"]) for _ in range(n_faces)),
        place=rng.standard_normal(CHANNEL_DIMS["place"]),
        semantic=rng.standard_normal(CHANNEL_DIMS["semantic"]),
        caption_text=caption,
        caption_emb=rng.standard_normal(CHANNEL_DIMS["caption"]) if caption else None,
    )


def show(result, title):
    print(f"--- {title} ---")
    for ch in Channel:
        score = result.channel_scores[ch]
        shown = "absent" if score is ABSENT else f"{score:+.3f}"
        print(f"  {ch.value:<9} {shown}")
    print(f"  channels passed: {result.channels_passed}  ->  "
          f"{'MATCH' if result.matched else 'no match'}\n")


# The exact same picture agrees on every channel.
claim = random_bundle("claim-photo")
show(image_match(claim, claim), "identical image")

# A completely unrelated picture agrees on nothing.
show(image_match(claim, random_bundle("unrelated-photo")), "unrelated image")

# Re-used photo, new crop: scene, semantics and caption still agree, the
# detected object regions and faces do not.  Three channels still carry it.
recrop = VisualFeatureBundle(
    image_id="re-cropped",
    objects=(rng.standard_normal(CHANNEL_DIMS["objects"]),),
    faces=(rng.standard_normal(CHANNEL_DIMS["faces"]),),
    place=claim.place,
    semantic=claim.semantic,
    caption_text=claim.caption_text,
    caption_emb=claim.caption_emb,
)
show(image_match(claim, recrop), "re-cropped image (3 of 5 agree)")

# Without faces or a caption only four / three channels are even nominal;
# absent channels never pass, so sparse bundles need the remaining ones.
faceless = random_bundle("screenshot", n_faces=0, caption="")
show(image_match(faceless, faceless), "sparse bundle vs itself")
