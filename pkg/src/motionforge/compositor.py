"""Alpha compositing of transformed sprites onto clips, plus background builders.

Pixels are floats in [0, 1] everywhere; 8-bit sources are divided by 255 at
ingestion. Sprites are RGBA with the alpha channel acting as the segmentation
mask. All operations are pure: inputs are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import AffinePlacement, Trajectory, TransformTrack, placement_at, round_half_up

__all__ = [
    "Clip",
    "SegmentedObject",
    "MotionPlan",
    "FootprintMask",
    "PositionedSprite",
    "BACKGROUND_KINDS",
    "resize_object",
    "transform_sprite",
    "composite",
    "composite_many",
    "make_background",
]

BACKGROUND_KINDS = ("natural-clip", "repeated-frame", "still-image", "black", "noise")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Clip:
    """A (T, H, W, 3) pixel volume with values in [0, 1]."""

    frames: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise ValueError(f"frames must be (T, H, W, 3), got {frames.shape}")
        if frames.size and (frames.min() < 0.0 or frames.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "frames", _freeze(frames))

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True)
class SegmentedObject:
    """An RGBA sprite (P, Q, 4); alpha > 0 marks the segmented object."""

    rgba: np.ndarray
    object_id: str = ""

    def __post_init__(self):
        rgba = np.asarray(self.rgba, dtype=np.float64)
        if rgba.ndim != 3 or rgba.shape[2] != 4:
            raise ValueError(f"rgba must be (P, Q, 4), got {rgba.shape}")
        if rgba.min() < 0.0 or rgba.max() > 1.0:
            raise ValueError("rgba values must lie in [0, 1]")
        if not (rgba[:, :, 3] > 0).any():
            raise ValueError("sprite must have at least one pixel with alpha > 0")
        object.__setattr__(self, "rgba", _freeze(rgba))

    @property
    def size(self) -> tuple[int, int]:
        return self.rgba.shape[0], self.rgba.shape[1]


@dataclass(frozen=True)
class MotionPlan:
    """Everything needed to place one object on every frame of a clip."""

    trajectory: Trajectory
    transforms: TransformTrack
    base_size: tuple[int, int]
    object_ref: str = ""

    def __post_init__(self):
        if len(self.trajectory) != len(self.transforms):
            raise ValueError("trajectory and transform track lengths differ")
        p, q = self.base_size
        if p < 1 or q < 1:
            raise ValueError("base_size must be positive")

    def __len__(self) -> int:
        return len(self.trajectory)


@dataclass(frozen=True)
class FootprintMask:
    """Per-frame boolean (T, H, W) map of pixels with composited alpha > 0."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 3:
            raise ValueError(f"footprint must be (T, H, W), got {mask.shape}")
        object.__setattr__(self, "mask", _freeze(mask))

    def union(self, other: "FootprintMask") -> "FootprintMask":
        return FootprintMask(mask=self.mask | other.mask)


@dataclass(frozen=True)
class PositionedSprite:
    """A transformed RGBA patch plus its integer top-left offset in the frame."""

    rgba: np.ndarray
    top_left: tuple[int, int]


def _resample_align_corners(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling mapping corner pixel centers onto corner pixel centers."""
    in_h, in_w = image.shape[:2]

    def coords(n_out: int, n_in: int) -> np.ndarray:
        if n_out == 1:
            return np.array([(n_in - 1) / 2.0])
        return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)

    sx = coords(out_h, in_h)
    sy = coords(out_w, in_w)
    x0 = np.clip(np.floor(sx).astype(np.int64), 0, max(in_h - 2, 0))
    y0 = np.clip(np.floor(sy).astype(np.int64), 0, max(in_w - 2, 0))
    x1 = np.minimum(x0 + 1, in_h - 1)
    y1 = np.minimum(y0 + 1, in_w - 1)
    fx = (sx - x0)[:, None, None]
    fy = (sy - y0)[None, :, None]
    top = image[x0][:, y0] * (1 - fy) + image[x0][:, y1] * fy
    bot = image[x1][:, y0] * (1 - fy) + image[x1][:, y1] * fy
    return top * (1 - fx) + bot * fx


def resize_object(obj: SegmentedObject, target: tuple[int, int]) -> SegmentedObject:
    """Bilinear resize of all four channels to ``target`` = (P, Q)."""
    p, q = target
    if p < 1 or q < 1:
        raise ValueError(f"target size must be positive, got {target}")
    if (p, q) == obj.size:
        return obj
    resized = np.clip(_resample_align_corners(obj.rgba, p, q), 0.0, 1.0)
    return SegmentedObject(rgba=resized, object_id=obj.object_id)


def _sample_bilinear_transparent(image: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Bilinear sample at (sx, sy); contributions outside the image are zero."""
    in_h, in_w = image.shape[:2]
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    out = np.zeros(sx.shape + (image.shape[2],), dtype=np.float64)
    for dx, wx in ((0, 1 - fx), (1, fx)):
        for dy, wy in ((0, 1 - fy), (1, fy)):
            xi = x0 + dx
            yi = y0 + dy
            valid = (xi >= 0) & (xi < in_h) & (yi >= 0) & (yi < in_w)
            pix = image[np.clip(xi, 0, in_h - 1), np.clip(yi, 0, in_w - 1)]
            out += np.where(valid[..., None], pix * (wx * wy), 0.0)
    return out


def transform_sprite(obj: SegmentedObject, placement: AffinePlacement) -> PositionedSprite:
    """Scale then rotate the sprite about its center and position it.

    Scaling is an isotropic bilinear resize to round_half_up(S * dim); rotation
    inverse-maps each output pixel through the placement's rotation matrix,
    with samples outside the scaled sprite fully transparent. The returned
    patch is positioned so its center lies at the placement center (quantized
    to the pixel grid).
    """
    s = placement.scale_factor
    p, q = obj.size
    if s != 1.0:
        scaled = resize_object(obj, (max(1, round_half_up(p * s)), max(1, round_half_up(q * s))))
    else:
        scaled = obj
    sp, sq = scaled.size

    rot = placement.rotation
    if abs(rot[0, 0] - 1.0) < 1e-15 and abs(rot[1, 0]) < 1e-15:
        patch = np.asarray(scaled.rgba, dtype=np.float64)
    else:
        hx, hy = (sp - 1) / 2.0, (sq - 1) / 2.0
        corners = np.array([[hx, hy], [hx, -hy], [-hx, hy], [-hx, -hy]], dtype=np.float64)
        rotated = corners @ rot.T
        ext_x = float(np.max(np.abs(rotated[:, 0])))
        ext_y = float(np.max(np.abs(rotated[:, 1])))
        ph = int(math.ceil(2.0 * ext_x - 1e-9)) + 1
        pw = int(math.ceil(2.0 * ext_y - 1e-9)) + 1
        du = np.arange(ph, dtype=np.float64) - (ph - 1) / 2.0
        dv = np.arange(pw, dtype=np.float64) - (pw - 1) / 2.0
        dg, vg = np.meshgrid(du, dv, indexing="ij")
        # inverse map: source = R @ dest (centered coordinates)
        sx = rot[0, 0] * dg + rot[0, 1] * vg + hx
        sy = rot[1, 0] * dg + rot[1, 1] * vg + hy
        patch = _sample_bilinear_transparent(scaled.rgba, sx, sy)
        patch = np.clip(patch, 0.0, 1.0)

    ph, pw = patch.shape[:2]
    top = round_half_up(float(placement.center[0])) - ph // 2
    left = round_half_up(float(placement.center[1])) - pw // 2
    return PositionedSprite(rgba=patch, top_left=(top, left))


def _blend_frame(frame: np.ndarray, sprite: PositionedSprite) -> np.ndarray | None:
    """Alpha-blend the sprite patch into the frame window. Returns the frame's
    footprint rows/cols slice info or None when fully off-frame."""
    h, w = frame.shape[:2]
    ph, pw = sprite.rgba.shape[:2]
    top, left = sprite.top_left
    r0, r1 = max(0, top), min(h, top + ph)
    c0, c1 = max(0, left), min(w, left + pw)
    if r0 >= r1 or c0 >= c1:
        return None
    patch = sprite.rgba[r0 - top : r1 - top, c0 - left : c1 - left]
    alpha = patch[:, :, 3:4]
    window = frame[r0:r1, c0:c1]
    window[:] = np.clip(alpha * patch[:, :, :3] + (1.0 - alpha) * window, 0.0, 1.0)
    return r0, r1, c0, c1, alpha[:, :, 0] > 0


def composite(clip: Clip, plan: MotionPlan, obj: SegmentedObject) -> tuple[Clip, FootprintMask]:
    """Overlay one object along its motion plan; returns the new clip and footprint."""
    if len(plan) != clip.frame_count:
        raise ValueError(
            f"plan length {len(plan)} does not match clip frame count {clip.frame_count}"
        )
    frames = clip.frames.copy()
    footprint = np.zeros(frames.shape[:3], dtype=bool)
    base = resize_object(obj, plan.base_size)
    for t in range(clip.frame_count):
        placement = placement_at(plan.trajectory, plan.transforms, t)
        sprite = transform_sprite(base, placement)
        hit = _blend_frame(frames[t], sprite)
        if hit is not None:
            r0, r1, c0, c1, alpha_pos = hit
            footprint[t, r0:r1, c0:c1] |= alpha_pos
    return Clip(frames=frames, source_id=clip.source_id), FootprintMask(mask=footprint)


def composite_many(
    clip: Clip, plans: list[tuple[MotionPlan, SegmentedObject]]
) -> tuple[Clip, FootprintMask]:
    """Composite several objects in list order; later objects occlude earlier."""
    footprint = FootprintMask(mask=np.zeros(clip.frames.shape[:3], dtype=bool))
    out = clip
    for plan, obj in plans:
        out, fp = composite(out, plan, obj)
        footprint = footprint.union(fp)
    return out, footprint


def make_background(
    kind: str,
    *,
    source: Clip | np.ndarray | None = None,
    frame_count: int,
    height: int,
    width: int,
    rng: np.random.Generator | None = None,
) -> Clip:
    """Build one of the background clip constructions.

    ``repeated-frame`` duplicates one frame of the source clip (chosen with
    ``rng``) T times; ``still-image`` duplicates the given (H, W, 3) image;
    ``black`` is all zeros; ``noise`` draws a single uniform image and
    duplicates it, producing a static clip. ``natural-clip`` passes the source
    through unchanged.
    """
    if kind not in BACKGROUND_KINDS:
        raise ValueError(f"unknown background kind {kind!r}, expected one of {BACKGROUND_KINDS}")

    if kind == "natural-clip":
        if not isinstance(source, Clip):
            raise ValueError("natural-clip background requires a source clip")
        if source.frames.shape != (frame_count, height, width, 3):
            raise ValueError("source clip does not match requested geometry")
        return source

    if kind == "repeated-frame":
        if not isinstance(source, Clip):
            raise ValueError("repeated-frame background requires a source clip")
        if rng is None:
            raise ValueError("repeated-frame background requires an rng to pick the frame")
        if (source.height, source.width) != (height, width):
            raise ValueError("source clip does not match requested geometry")
        idx = int(rng.integers(source.frame_count))
        frame = source.frames[idx]
        return Clip(
            frames=np.broadcast_to(frame, (frame_count, height, width, 3)).copy(),
            source_id=f"{source.source_id}#frame{idx}",
        )

    if kind == "still-image":
        image = np.asarray(source, dtype=np.float64) if source is not None else None
        if image is None or image.shape != (height, width, 3):
            raise ValueError("still-image background requires an (H, W, 3) image source")
        return Clip(
            frames=np.broadcast_to(image, (frame_count, height, width, 3)).copy(),
            source_id="still-image",
        )

    if kind == "black":
        return Clip(
            frames=np.zeros((frame_count, height, width, 3), dtype=np.float64),
            source_id="black",
        )

    # noise: one uniform image duplicated across time (a static clip)
    if rng is None:
        raise ValueError("noise background requires an rng")
    image = rng.random((height, width, 3))
    return Clip(
        frames=np.broadcast_to(image, (frame_count, height, width, 3)).copy(),
        source_id="noise",
    )
