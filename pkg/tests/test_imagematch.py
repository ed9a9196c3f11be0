"""Channel scoring, the 3-of-5 rule, and the bundle file format."""

from __future__ import annotations

import numpy as np
import pytest

from claimcheck.errors import DimMismatchError
from claimcheck.imagematch import (
    ABSENT,
    CHANNEL_DIMS,
    Channel,
    VisualFeatureBundle,
    channel_score,
    image_match,
    load_bundle,
    save_bundle,
)

from helpers import make_bundle, vec_with_cosine


class TestChannelScore:
    def test_identical_bundles_score_one(self):
        b = make_bundle(seed=1)
        for ch in Channel:
            assert channel_score(b, b, ch) == pytest.approx(1.0)

    def test_missing_faces_absent(self):
        claim = make_bundle(seed=2, n_faces=0)
        evidence = make_bundle(seed=3)
        assert channel_score(claim, evidence, Channel.FACES) is ABSENT

    def test_missing_caption_absent(self):
        claim = make_bundle(seed=4, with_caption=False)
        evidence = make_bundle(seed=5)
        assert channel_score(claim, evidence, Channel.CAPTION) is ABSENT

    def test_objects_best_pair(self):
        dim = CHANNEL_DIMS["objects"]
        base = np.zeros(dim)
        base[0] = 1.0
        o1 = vec_with_cosine(base, 0.3)
        o2 = vec_with_cosine(base, 0.7)
        claim = make_bundle(seed=6)
        claim = VisualFeatureBundle(
            image_id="c", objects=(o1, o2), faces=(), place=claim.place,
            semantic=claim.semantic, caption_text="", caption_emb=None)
        evidence = VisualFeatureBundle(
            image_id="e", objects=(base,), faces=(), place=claim.place,
            semantic=claim.semantic, caption_text="", caption_emb=None)
        score = channel_score(claim, evidence, Channel.OBJECTS)
        assert score == pytest.approx(max(0.3, 0.7), abs=1e-9)

    def test_declared_dims_enforced(self):
        with pytest.raises(DimMismatchError):
            VisualFeatureBundle(image_id="x", place=np.zeros(10),
                                semantic=np.zeros(CHANNEL_DIMS["semantic"]))


class TestImageMatch:
    def test_identical_all_channels_pass(self):
        b = make_bundle(seed=7)
        result = image_match(b, b)
        assert result.channels_passed == 5
        assert result.matched is True

    def test_random_bundles_do_not_match(self):
        a, b = make_bundle(seed=8), make_bundle(seed=9)
        result = image_match(a, b)
        assert result.channels_passed == 0
        assert result.matched is False

    def test_boundary_three_of_five(self):
        claim = make_bundle(seed=10)
        evidence = make_bundle(
            seed=11, reference=claim,
            channel_cosines={"place": 0.95, "semantic": 0.95, "caption": 0.95,
                             "objects": 0.2, "faces": 0.2})
        result = image_match(claim, evidence)
        assert result.channels_passed == 3
        assert result.matched is True

    def test_two_channels_insufficient(self):
        claim = make_bundle(seed=12)
        evidence = make_bundle(
            seed=13, reference=claim,
            channel_cosines={"place": 0.95, "semantic": 0.95, "caption": 0.2,
                             "objects": 0.2, "faces": 0.2})
        result = image_match(claim, evidence)
        assert result.channels_passed == 2
        assert result.matched is False

    def test_absent_channels_never_pass(self):
        claim = make_bundle(seed=14, n_objects=0, n_faces=0, with_caption=False)
        result = image_match(claim, claim)
        assert result.channels_passed == 2  # place + semantic only
        assert result.matched is False

    def test_exclude_caption_mode(self):
        b = make_bundle(seed=15)
        result = image_match(b, b, use_caption=False)
        assert Channel.CAPTION not in result.channel_scores
        assert result.channels_passed == 4

    def test_symmetry_random_pairs(self):
        for seed in range(15):
            a = make_bundle(seed=100 + seed)
            b = make_bundle(seed=200 + seed, reference=a,
                            channel_cosines={"place": 0.91, "semantic": 0.5})
            fwd, rev = image_match(a, b), image_match(b, a)
            assert fwd.matched == rev.matched
            assert fwd.channels_passed == rev.channels_passed
            for ch in Channel:
                sa, sb = fwd.channel_scores[ch], rev.channel_scores[ch]
                if sa is ABSENT:
                    assert sb is ABSENT
                else:
                    assert sa == pytest.approx(sb, abs=1e-9)

    def test_threshold_monotonicity(self):
        claim = make_bundle(seed=16)
        evidence = make_bundle(seed=17, reference=claim,
                               channel_cosines={"place": 0.92, "semantic": 0.92,
                                                "caption": 0.92})
        for low, high in [(0.5, 0.91), (0.91, 0.95), (0.8, 0.99)]:
            if image_match(claim, evidence, threshold=low).matched is False:
                assert image_match(claim, evidence, threshold=high).matched is False

    def test_scale_invariance(self):
        claim = make_bundle(seed=18)
        scaled = VisualFeatureBundle(
            image_id=claim.image_id,
            objects=tuple(3.0 * v for v in claim.objects),
            faces=tuple(0.5 * v for v in claim.faces),
            place=7.0 * claim.place,
            semantic=2.0 * claim.semantic,
            caption_text=claim.caption_text,
            caption_emb=10.0 * claim.caption_emb)
        other = make_bundle(seed=19)
        for ch in Channel:
            assert channel_score(claim, other, ch) == pytest.approx(
                channel_score(scaled, other, ch), abs=1e-9)


class TestBundleIO:
    def test_json_round_trip(self, tmp_path):
        b = make_bundle(seed=20)
        path = tmp_path / "bundle.json"
        save_bundle(b, path)
        loaded = load_bundle(path)
        assert loaded.image_id == b.image_id
        np.testing.assert_allclose(loaded.place, b.place)
        np.testing.assert_allclose(loaded.caption_emb, b.caption_emb)
        assert loaded.caption_text == b.caption_text

    def test_sidecar_round_trip(self, tmp_path):
        b = make_bundle(seed=21)
        path = tmp_path / "bundle.json"
        save_bundle(b, path, sidecar=True)
        assert (tmp_path / "bundle.bin").exists()
        loaded = load_bundle(path)
        np.testing.assert_allclose(loaded.place, b.place, atol=1e-6)
        assert len(loaded.objects) == len(b.objects)
        np.testing.assert_allclose(loaded.objects[0], b.objects[0], atol=1e-6)

    def test_metadata_preserved(self, tmp_path):
        b = make_bundle(seed=22)
        tagged = VisualFeatureBundle(
            image_id=b.image_id, objects=b.objects, faces=b.faces, place=b.place,
            semantic=b.semantic, caption_text=b.caption_text,
            caption_emb=b.caption_emb, metadata={"class_label": "website"})
        path = tmp_path / "bundle.json"
        save_bundle(tagged, path)
        assert load_bundle(path).metadata["class_label"] == "website"
