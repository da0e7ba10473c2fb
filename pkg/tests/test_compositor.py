import numpy as np
import pytest

from motionforge.compositor import (
    Clip,
    FootprintMask,
    MotionPlan,
    SegmentedObject,
    composite,
    composite_many,
    make_background,
    resize_object,
    transform_sprite,
)
from motionforge.geometry import (
    AffinePlacement,
    Trajectory,
    TransformTrack,
)

from _oracles import bilinear_resize_align_corners, direct_paste, quarter_turn
from conftest import opaque_sprite, random_clip, random_sprite, rng_of


def placement(angle_deg: float, scale: float, center=(16.0, 16.0)) -> AffinePlacement:
    a = np.radians(angle_deg)
    rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    return AffinePlacement(rotation=rot, scale=np.eye(2) * scale, center=np.array(center))


def static_plan(t: int, angle: float, scale: float, center, base_size) -> MotionPlan:
    traj = Trajectory(centers=np.tile(np.asarray(center, dtype=float), (t, 1)))
    track = TransformTrack(
        angles=np.full(t, float(angle)),
        scales=np.full(t, float(scale)),
        keyframes=((0, angle, scale), (max(1, t // 2), angle, scale), (t - 1, angle, scale)),
    )
    return MotionPlan(trajectory=traj, transforms=track, base_size=base_size)


class TestResize:
    def test_identity_is_bit_exact(self, rng):
        obj = random_sprite(rng, 6, 9)
        out = resize_object(obj, (6, 9))
        assert out.rgba is obj.rgba

    def test_hand_checked_center(self):
        rgba = np.array(
            [
                [[0, 0, 0, 1], [1, 1, 1, 1]],
                [[1, 1, 1, 1], [0, 0, 0, 1]],
            ],
            dtype=float,
        )
        out = resize_object(SegmentedObject(rgba=rgba), (3, 3))
        np.testing.assert_allclose(out.rgba[1, 1, :3], 0.5, atol=1e-12)
        np.testing.assert_allclose(out.rgba[1, 1, 3], 1.0, atol=1e-12)

    def test_matches_oracle(self, rng):
        for _ in range(20):
            p, q = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            obj = random_sprite(rng, p, q)
            oh, ow = int(rng.integers(1, 15)), int(rng.integers(1, 15))
            got = resize_object(obj, (oh, ow)).rgba
            expected = bilinear_resize_align_corners(obj.rgba, oh, ow)
            np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_rejects_zero_dimension(self, rng):
        with pytest.raises(ValueError):
            resize_object(random_sprite(rng), (0, 4))


class TestTransformSprite:
    def test_identity_patch_equals_sprite(self, rng):
        obj = random_sprite(rng, 5, 7)
        out = transform_sprite(obj, placement(0.0, 1.0, center=(20.0, 30.0)))
        assert np.array_equal(out.rgba, obj.rgba)
        # offset = center - (P//2, Q//2)
        assert out.top_left == (20 - 5 // 2, 30 - 7 // 2)

    def test_quarter_turn_matches_permutation(self, rng):
        obj = random_sprite(rng, 9, 9)
        out = transform_sprite(obj, placement(90.0, 1.0))
        assert out.rgba.shape == obj.rgba.shape
        np.testing.assert_allclose(out.rgba, quarter_turn(obj.rgba), atol=1e-6)

    def test_double_scale_of_2x2(self):
        rgba = np.zeros((2, 2, 4))
        rgba[..., :3] = [[[0.1, 0.2, 0.3]] * 2, [[0.7, 0.8, 0.9]] * 2]
        rgba[..., 3] = 1.0
        obj = SegmentedObject(rgba=rgba)
        out = transform_sprite(obj, placement(0.0, 2.0))
        assert out.rgba.shape == (4, 4, 4)
        for (u, v), (i, j) in (((0, 0), (0, 0)), ((0, 3), (0, 1)), ((3, 0), (1, 0)), ((3, 3), (1, 1))):
            np.testing.assert_allclose(out.rgba[u, v], rgba[i, j], atol=1e-12)
        expected = bilinear_resize_align_corners(rgba, 4, 4)
        np.testing.assert_allclose(out.rgba, expected, atol=1e-12)

    def test_rotation_patch_accommodates_sprite(self, rng):
        obj = random_sprite(rng, 8, 8)
        out = transform_sprite(obj, placement(45.0, 1.0))
        assert out.rgba.shape[0] >= 8 and out.rgba.shape[1] >= 8
        # total opacity preserved within resampling tolerance
        assert out.rgba[..., 3].sum() == pytest.approx(obj.rgba[..., 3].sum(), rel=0.15)


class TestComposite:
    def test_fully_transparent_object_is_identity(self, rng):
        clip = random_clip(rng)
        rgba = rng.random((6, 6, 4))
        rgba[..., 3] = 0.0
        rgba[0, 0, 3] = 1e-9  # keep the sprite legal, essentially invisible
        obj = SegmentedObject(rgba=rgba)
        rgba0 = obj.rgba.copy()
        rgba0[0, 0, 3] = 0.0
        obj0 = SegmentedObject.__new__(SegmentedObject)
        object.__setattr__(obj0, "rgba", rgba0)
        object.__setattr__(obj0, "object_id", "")
        plan = static_plan(4, 0.0, 1.0, (16, 16), (6, 6))
        out, fp = composite(clip, plan, obj0)
        assert np.array_equal(out.frames, clip.frames)
        assert not fp.mask.any()

    def test_direct_paste_oracle(self, rng):
        for _ in range(20):
            clip = random_clip(rng, t=2)
            p = int(rng.integers(2, 7))
            obj = opaque_sprite(rng, p, p)
            cx, cy = int(rng.integers(0, 32)), int(rng.integers(0, 32))
            plan = static_plan(2, 0.0, 1.0, (cx, cy), (p, p))
            out, fp = composite(clip, plan, obj)
            top, left = cx - p // 2, cy - p // 2
            for t in range(2):
                expected = direct_paste(
                    clip.frames[t], obj.rgba[..., :3], obj.rgba[..., 3], top, left
                )
                np.testing.assert_allclose(out.frames[t], expected, atol=1e-12)

    def test_center_at_origin_clips_cleanly(self, rng):
        clip = random_clip(rng)
        obj = opaque_sprite(rng, 8, 8)
        plan = static_plan(4, 0.0, 1.0, (0, 0), (8, 8))
        out, fp = composite(clip, plan, obj)
        # only the in-frame quadrant is composited
        assert fp.mask[0, :4, :4].all()
        assert fp.mask[0].sum() == 16

    def test_locality(self, rng):
        clip = random_clip(rng)
        obj = random_sprite(rng, 6, 6)
        plan = static_plan(4, 30.0, 1.2, (10, 20), (6, 6))
        out, fp = composite(clip, plan, obj)
        outside = ~fp.mask
        assert np.array_equal(out.frames[outside], clip.frames[outside])

    def test_range_preservation(self, rng):
        clip = random_clip(rng)
        obj = random_sprite(rng, 10, 10)
        plan = static_plan(4, 65.0, 1.4, (16, 16), (10, 10))
        out, _ = composite(clip, plan, obj)
        assert out.frames.min() >= 0.0 and out.frames.max() <= 1.0

    def test_footprint_is_alpha_support(self, rng):
        clip = Clip(frames=np.full((2, 32, 32, 3), 0.25))
        rgba = np.zeros((4, 4, 4))
        rgba[..., :3] = 0.25  # same colour as background: still marked
        rgba[:2, :, 3] = 1.0
        obj = SegmentedObject(rgba=rgba)
        plan = static_plan(2, 0.0, 1.0, (16, 16), (4, 4))
        out, fp = composite(clip, plan, obj)
        assert fp.mask[0].sum() == 8
        assert np.array_equal(out.frames, clip.frames)  # colours identical everywhere

    def test_plan_length_mismatch(self, rng):
        clip = random_clip(rng, t=4)
        obj = random_sprite(rng)
        plan = static_plan(3, 0.0, 1.0, (16, 16), (8, 8))
        with pytest.raises(ValueError):
            composite(clip, plan, obj)

    def test_purity(self, rng):
        clip = random_clip(rng)
        before = clip.frames.copy()
        obj = opaque_sprite(rng, 6, 6)
        composite(clip, static_plan(4, 0.0, 1.0, (16, 16), (6, 6)), obj)
        assert np.array_equal(clip.frames, before)


class TestCompositeMany:
    def test_empty_plan_list_is_identity(self, rng):
        clip = random_clip(rng)
        out, fp = composite_many(clip, [])
        assert out is clip
        assert not fp.mask.any()

    def test_disjoint_objects_commute(self, rng):
        clip = random_clip(rng)
        a = opaque_sprite(rng, 4, 4)
        b = opaque_sprite(rng, 4, 4)
        plan_a = static_plan(4, 0.0, 1.0, (6, 6), (4, 4))
        plan_b = static_plan(4, 0.0, 1.0, (24, 24), (4, 4))
        out_ab, fp_ab = composite_many(clip, [(plan_a, a), (plan_b, b)])
        out_ba, fp_ba = composite_many(clip, [(plan_b, b), (plan_a, a)])
        assert np.array_equal(out_ab.frames, out_ba.frames)
        assert np.array_equal(fp_ab.mask, fp_ba.mask)

    def test_later_object_occludes(self, rng):
        clip = Clip(frames=np.zeros((2, 32, 32, 3)))
        first = SegmentedObject(rgba=np.concatenate([np.full((4, 4, 3), 0.2), np.ones((4, 4, 1))], axis=2))
        second = SegmentedObject(rgba=np.concatenate([np.full((4, 4, 3), 0.9), np.ones((4, 4, 1))], axis=2))
        plan = static_plan(2, 0.0, 1.0, (16, 16), (4, 4))
        out, _ = composite_many(clip, [(plan, first), (plan, second)])
        np.testing.assert_allclose(out.frames[0, 16, 16], 0.9, atol=1e-12)


class TestBackgrounds:
    def test_black(self):
        clip = make_background("black", frame_count=16, height=224, width=224)
        assert clip.frames.shape == (16, 224, 224, 3)
        assert not clip.frames.any()

    def test_repeated_frame_static(self, rng):
        source = random_clip(rng, t=6)
        clip = make_background(
            "repeated-frame", source=source, frame_count=4, height=32, width=32, rng=rng_of(0)
        )
        for t in range(1, 4):
            assert np.array_equal(clip.frames[t], clip.frames[0])
        assert any(np.array_equal(clip.frames[0], source.frames[i]) for i in range(6))

    def test_still_image_static(self, rng):
        image = rng.random((32, 32, 3))
        clip = make_background("still-image", source=image, frame_count=4, height=32, width=32)
        for t in range(4):
            assert np.array_equal(clip.frames[t], image)

    def test_noise_static_and_deterministic(self):
        a = make_background("noise", frame_count=4, height=32, width=32, rng=rng_of(5))
        b = make_background("noise", frame_count=4, height=32, width=32, rng=rng_of(5))
        assert np.array_equal(a.frames, b.frames)
        for t in range(1, 4):
            assert np.array_equal(a.frames[t], a.frames[0])

    def test_natural_clip_passthrough(self, rng):
        source = random_clip(rng)
        clip = make_background("natural-clip", source=source, frame_count=4, height=32, width=32)
        assert clip is source

    def test_missing_source_rejected(self):
        with pytest.raises(ValueError):
            make_background("repeated-frame", frame_count=4, height=32, width=32, rng=rng_of(0))
        with pytest.raises(ValueError):
            make_background("still-image", frame_count=4, height=32, width=32)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_background("plasma", frame_count=4, height=32, width=32)


class TestTypeInvariants:
    def test_clip_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Clip(frames=np.full((1, 4, 4, 3), 1.5))

    def test_sprite_requires_alpha_support(self):
        with pytest.raises(ValueError):
            SegmentedObject(rgba=np.zeros((4, 4, 4)))

    def test_footprint_shape(self):
        with pytest.raises(ValueError):
            FootprintMask(mask=np.zeros((4, 4), dtype=bool))
