"""End-to-end sample generation: seeding, assembly, schedules, shard output.

Every sample is a pure function of (config, video_id, epoch, sample_index,
variant): a per-sample seed is derived by hashing those values, and all
randomness flows from role-scoped child streams of that seed. Shard assembly
sorts by sample_id, so worker count never changes output bytes.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .compositor import (
    BACKGROUND_KINDS,
    Clip,
    FootprintMask,
    MotionPlan,
    SegmentedObject,
    composite_many,
    make_background,
)
from .geometry import TrajectoryConfig, make_trajectory, sample_keyframe_transforms
from .masking import MaskConfig, MaskSet, mask_apply, object_token_set, trajectory_mask, tube_mask
from .shards import ShardManifest, TrainingSample, write_shards
from .sources import ClipSource, ObjectLibrary, list_image_dir, load_clip_manifest, load_rgb_image
from .targets import align_features, file_teacher, mock_teacher, pixel_targets
from .tokenizer import TokenGeometry, tokenize

__all__ = [
    "ObjectConfig",
    "BackgroundConfig",
    "ScheduleConfig",
    "TargetConfig",
    "PipelineConfig",
    "PipelineResources",
    "AssembledSample",
    "derive_seed",
    "schedule_variant",
    "effective_epochs",
    "build_sample",
    "assemble_sample",
    "load_resources",
    "generate",
    "config_hash",
]

VARIANT_AUGMENTED = "augmented"
VARIANT_ORIGINAL = "original"
SCHEDULES = ("single", "mixed", "progressive")
TARGET_KINDS = ("pixels", "features")


@dataclass(frozen=True)
class ObjectConfig:
    count: int = 2
    library: str = ""
    size_range: tuple[int, int] = (32, 128)
    angle_range: tuple[float, float] = (-90.0, 90.0)
    scale_range: tuple[float, float] = (0.5, 1.5)
    raw_point_multiplier: int = 10
    smoothing_factor: float = 8.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("object count must be >= 0")
        lo, hi = self.size_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad size_range {self.size_range}")
        for name, (lo, hi) in (("angle_range", self.angle_range), ("scale_range", self.scale_range)):
            if lo > hi:
                raise ValueError(f"bad {name} [{lo}, {hi}]")
        if self.scale_range[0] <= 0:
            raise ValueError("scale factors must be positive")
        if self.raw_point_multiplier < 2:
            raise ValueError("raw_point_multiplier must be >= 2")
        if self.smoothing_factor <= 0:
            raise ValueError("smoothing_factor must be positive")


@dataclass(frozen=True)
class BackgroundConfig:
    kind: str = "natural-clip"
    image_dir: str = ""

    def __post_init__(self):
        if self.kind not in BACKGROUND_KINDS:
            raise ValueError(f"unknown background kind {self.kind!r}")
        if self.kind == "still-image" and not self.image_dir:
            raise ValueError("still-image background requires image_dir")


@dataclass(frozen=True)
class ScheduleConfig:
    kind: str = "progressive"
    epochs: int = 2
    stage_split: tuple[int, int] = (1, 1)
    samples_per_video: int = 2

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}, expected one of {SCHEDULES}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.samples_per_video < 1:
            raise ValueError("samples_per_video must be >= 1")
        if self.kind == "progressive":
            s1, s2 = self.stage_split
            if s1 < 1 or s2 < 1 or s1 + s2 != self.epochs:
                raise ValueError(
                    f"progressive stage_split {self.stage_split} must be two positive "
                    f"lengths summing to epochs ({self.epochs})"
                )


@dataclass(frozen=True)
class TargetConfig:
    kind: str = "features"
    teacher: dict = field(default_factory=lambda: {"kind": "mock", "dim": 32, "seed": 0})

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind == "features":
            tk = self.teacher.get("kind")
            if tk == "mock":
                if int(self.teacher.get("dim", 0)) < 1:
                    raise ValueError("mock teacher needs dim >= 1")
            elif tk == "file":
                if not self.teacher.get("index"):
                    raise ValueError("file teacher needs an index path")
            else:
                raise ValueError(f"unknown teacher kind {tk!r}")


@dataclass(frozen=True)
class PipelineConfig:
    clips: str
    geometry: TokenGeometry = TokenGeometry(16, 224, 224, 2, 16)
    masking: MaskConfig = MaskConfig(ratio=0.8, use_trajectory=True)
    objects: ObjectConfig = ObjectConfig()
    background: BackgroundConfig = BackgroundConfig()
    schedule: ScheduleConfig = ScheduleConfig()
    targets: TargetConfig = TargetConfig()
    seed: int = 0

    def to_dict(self) -> dict:
        g = self.geometry
        return {
            "clips": self.clips,
            "geometry": {
                "frame_count": g.frame_count,
                "height": g.height,
                "width": g.width,
                "temporal_patch": g.temporal_patch,
                "spatial_patch": g.spatial_patch,
            },
            "masking": {"ratio": self.masking.ratio, "use_trajectory": self.masking.use_trajectory},
            "objects": {
                "count": self.objects.count,
                "library": self.objects.library,
                "size_range": list(self.objects.size_range),
                "angle_range": list(self.objects.angle_range),
                "scale_range": list(self.objects.scale_range),
                "raw_point_multiplier": self.objects.raw_point_multiplier,
                "smoothing_factor": self.objects.smoothing_factor,
            },
            "background": {"kind": self.background.kind, "image_dir": self.background.image_dir},
            "schedule": {
                "kind": self.schedule.kind,
                "epochs": self.schedule.epochs,
                "stage_split": list(self.schedule.stage_split),
                "samples_per_video": self.schedule.samples_per_video,
            },
            "targets": {"kind": self.targets.kind, "teacher": dict(self.targets.teacher)},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {"clips", "geometry", "masking", "objects", "background", "schedule", "targets", "seed"}
        unknown = set(raw.keys()) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        g = raw.get("geometry", {})
        sched = dict(raw.get("schedule", {}))
        if "stage_split" in sched:
            sched["stage_split"] = tuple(sched["stage_split"])
        obj = dict(raw.get("objects", {}))
        for key in ("size_range", "angle_range", "scale_range"):
            if key in obj:
                obj[key] = tuple(obj[key])
        return cls(
            clips=raw["clips"],
            geometry=TokenGeometry(**g) if g else TokenGeometry(16, 224, 224, 2, 16),
            masking=MaskConfig(**raw.get("masking", {"ratio": 0.8})),
            objects=ObjectConfig(**obj),
            background=BackgroundConfig(**raw.get("background", {})),
            schedule=ScheduleConfig(**sched),
            targets=TargetConfig(**raw.get("targets", {})),
            seed=int(raw.get("seed", 0)),
        )


def config_hash(cfg: PipelineConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def derive_seed(global_seed: int, video_id: str, sample_index: int, epoch: int) -> int:
    """Collision-resistant 64-bit seed from the sample coordinates.

    blake2b (8-byte digest) over the little-endian global seed, the
    length-prefixed utf-8 video id, and the little-endian sample index and
    epoch; stable across platforms and Python versions.
    """
    vid = video_id.encode("utf-8")
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", global_seed & 0xFFFFFFFFFFFFFFFF))
    h.update(struct.pack("<I", len(vid)))
    h.update(vid)
    h.update(struct.pack("<QQ", sample_index, epoch))
    return int.from_bytes(h.digest(), "little")


def _child_seed(seed: int, label: str) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", seed))
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def schedule_variant(schedule: str, epoch: int, stage_split: tuple[int, int] = (0, 0)) -> tuple[str, ...]:
    """Variants emitted for this epoch: augmented-only, original-only, or both."""
    if schedule == "single":
        return (VARIANT_AUGMENTED,)
    if schedule == "mixed":
        return (VARIANT_AUGMENTED, VARIANT_ORIGINAL)
    if schedule == "progressive":
        return (VARIANT_AUGMENTED,) if epoch < stage_split[0] else (VARIANT_ORIGINAL,)
    raise ValueError(f"unknown schedule {schedule!r}")


def effective_epochs(epochs: int, samples_per_video: int) -> int:
    """Scheduled epochs times clips sampled per video per epoch."""
    if epochs < 0 or samples_per_video < 0:
        raise ValueError("epochs and samples_per_video must be >= 0")
    return epochs * samples_per_video


@dataclass
class PipelineResources:
    library: ObjectLibrary | None = None
    teacher: object | None = None
    background_images: list[Path] = field(default_factory=list)


def load_resources(cfg: PipelineConfig) -> PipelineResources:
    res = PipelineResources()
    if cfg.objects.count > 0:
        if not cfg.objects.library:
            raise ValueError("object library path required when objects.count > 0")
        res.library = ObjectLibrary(cfg.objects.library)
    if cfg.targets.kind == "features":
        spec = cfg.targets.teacher
        if spec["kind"] == "mock":
            res.teacher = mock_teacher(
                seed=int(spec.get("seed", 0)),
                dim=int(spec["dim"]),
                spatial_patch=cfg.geometry.spatial_patch,
            )
        else:
            res.teacher = file_teacher(spec["index"])
    if cfg.background.kind == "still-image":
        res.background_images = list_image_dir(cfg.background.image_dir)
    return res


@dataclass(frozen=True)
class AssembledSample:
    """A built sample plus the intermediates preview and audits need."""

    sample: TrainingSample
    clip: Clip
    footprint: FootprintMask
    maskset: MaskSet
    plans: tuple[MotionPlan, ...]


def sample_id_for(video_id: str, epoch: int, sample_index: int, variant: str) -> str:
    # zero-padded so lexicographic order equals (epoch, video, index, variant)
    return f"e{epoch:06d}-{video_id}-s{sample_index:04d}-{variant}"


def _base_clip(
    clip: Clip,
    cfg: PipelineConfig,
    res: PipelineResources,
    rng_background: np.random.Generator,
) -> Clip:
    g = cfg.geometry
    kind = cfg.background.kind
    if kind == "natural-clip":
        return clip
    if kind == "repeated-frame":
        # frame choice is stable per video so the derived dataset is fixed
        video_rng = _rng(_child_seed(derive_seed(cfg.seed, clip.source_id, 0, 0), "video-frame"))
        return make_background(
            kind, source=clip, frame_count=g.frame_count, height=g.height, width=g.width, rng=video_rng
        )
    if kind == "still-image":
        video_rng = _rng(_child_seed(derive_seed(cfg.seed, clip.source_id, 0, 0), "video-image"))
        path = res.background_images[int(video_rng.integers(len(res.background_images)))]
        return make_background(
            kind,
            source=load_rgb_image(path),
            frame_count=g.frame_count,
            height=g.height,
            width=g.width,
        )
    return make_background(
        kind, frame_count=g.frame_count, height=g.height, width=g.width, rng=rng_background
    )


def _draw_plans(
    cfg: PipelineConfig,
    res: PipelineResources,
    rng: np.random.Generator,
) -> list[tuple[MotionPlan, SegmentedObject]]:
    g = cfg.geometry
    oc = cfg.objects
    plans = []
    for _ in range(oc.count):
        obj = res.library.pick(rng)
        size = int(rng.integers(oc.size_range[0], oc.size_range[1] + 1))
        traj_cfg = TrajectoryConfig(
            frame_count=g.frame_count,
            frame_height=g.height,
            frame_width=g.width,
            raw_point_count=oc.raw_point_multiplier * g.frame_count,
            smoothing_factor=oc.smoothing_factor,
        )
        trajectory = make_trajectory(traj_cfg, rng)
        transforms = sample_keyframe_transforms(rng, oc.angle_range, oc.scale_range, g.frame_count)
        plans.append(
            (MotionPlan(trajectory, transforms, (size, size), obj.object_id), obj)
        )
    return plans


def assemble_sample(
    clip: Clip,
    cfg: PipelineConfig,
    epoch: int,
    sample_index: int,
    variant: str = VARIANT_AUGMENTED,
    resources: PipelineResources | None = None,
) -> AssembledSample:
    """Build one sample and keep the composited clip/footprint/mask around."""
    if variant not in (VARIANT_AUGMENTED, VARIANT_ORIGINAL):
        raise ValueError(f"unknown variant {variant!r}")
    g = cfg.geometry
    if clip.frames.shape != (g.frame_count, g.height, g.width, 3):
        raise ValueError(
            f"clip shape {clip.frames.shape} does not match configured geometry"
        )
    res = resources if resources is not None else load_resources(cfg)

    sample_seed = derive_seed(cfg.seed, clip.source_id, sample_index, epoch)
    rng_background = _rng(_child_seed(sample_seed, "background"))
    rng_objects = _rng(_child_seed(sample_seed, "objects"))
    rng_masking = _rng(_child_seed(sample_seed, "masking"))

    base = _base_clip(clip, cfg, res, rng_background)

    plans: list[tuple[MotionPlan, SegmentedObject]] = []
    if variant == VARIANT_AUGMENTED and cfg.objects.count > 0:
        plans = _draw_plans(cfg, res, rng_objects)
    composited, footprint = composite_many(base, plans)

    if variant == VARIANT_AUGMENTED and cfg.masking.use_trajectory:
        obj_tokens = object_token_set(footprint.mask, g)
        maskset = trajectory_mask(g, cfg.masking.ratio, obj_tokens, rng_masking)
    else:
        maskset = tube_mask(g, cfg.masking.ratio, rng_masking)

    tokens = tokenize(composited.frames, g)
    unmasked_blocks, masked_idx = mask_apply(tokens, maskset)

    if cfg.targets.kind == "features":
        grids = res.teacher(composited)
        full_targets = align_features(grids, g)
    else:
        full_targets = pixel_targets(composited, g)
    targets = full_targets[masked_idx]

    sid = sample_id_for(clip.source_id, epoch, sample_index, variant)
    sample = TrainingSample(
        sample_id=sid,
        variant=variant,
        geometry=g,
        unmasked_blocks=unmasked_blocks.astype(np.float32),
        masked_indices=masked_idx.astype(np.uint32),
        targets=targets.astype(np.float32),
        provenance=dict(maskset.provenance),
        seeds={"sample": sample_seed, "global": cfg.seed},
        meta={
            "video_id": clip.source_id,
            "epoch": epoch,
            "sample_index": sample_index,
            "background": cfg.background.kind,
            "target_kind": cfg.targets.kind,
            "pair_id": f"e{epoch:06d}-{clip.source_id}-s{sample_index:04d}",
            "objects": [plan.object_ref for plan, _ in plans],
        },
    )
    return AssembledSample(
        sample=sample,
        clip=composited,
        footprint=footprint,
        maskset=maskset,
        plans=tuple(plan for plan, _ in plans),
    )


def build_sample(
    clip: Clip,
    cfg: PipelineConfig,
    epoch: int,
    sample_index: int,
    variant: str = VARIANT_AUGMENTED,
    resources: PipelineResources | None = None,
) -> TrainingSample:
    return assemble_sample(clip, cfg, epoch, sample_index, variant, resources).sample


# ---------------------------------------------------------------------------
# full-run orchestration

_WORKER: dict = {}


def _worker_init(cfg_dict: dict):
    cfg = PipelineConfig.from_dict(cfg_dict)
    _WORKER["cfg"] = cfg
    _WORKER["resources"] = load_resources(cfg)
    _WORKER["sources"] = {s.source_id: s for s in load_clip_manifest(cfg.clips)}
    _WORKER["clip_cache"] = {}


def _worker_build(spec: tuple[str, int, int, str]) -> TrainingSample:
    video_id, epoch, sample_index, variant = spec
    cache = _WORKER["clip_cache"]
    if video_id not in cache:
        cache.clear()  # keep at most one decoded clip per worker
        cache[video_id] = _WORKER["sources"][video_id].load()
    return build_sample(
        cache[video_id], _WORKER["cfg"], epoch, sample_index, variant, _WORKER["resources"]
    )


def plan_specs(cfg: PipelineConfig, video_ids: list[str]) -> list[tuple[str, int, int, str]]:
    """All (video_id, epoch, sample_index, variant) tuples, in sample_id order."""
    specs = []
    for epoch in range(cfg.schedule.epochs):
        variants = schedule_variant(cfg.schedule.kind, epoch, cfg.schedule.stage_split)
        for video_id in video_ids:
            for sample_index in range(cfg.schedule.samples_per_video):
                for variant in variants:
                    specs.append((video_id, epoch, sample_index, variant))
    specs.sort(key=lambda s: sample_id_for(s[0], s[1], s[2], s[3]))
    return specs


def generate(
    cfg: PipelineConfig,
    out_dir: str | Path,
    *,
    workers: int = 1,
    shard_size: int = 64,
    progress=None,
) -> ShardManifest:
    """Run the full pipeline and write shards plus manifest and config copy."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sources = load_clip_manifest(cfg.clips)
    specs = plan_specs(cfg, [s.source_id for s in sources])

    def produced() -> Iterator[TrainingSample]:
        if workers <= 1:
            _worker_init(cfg.to_dict())
            for i, spec in enumerate(specs):
                yield _worker_build(spec)
                if progress:
                    progress(i + 1, len(specs))
        else:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(workers, initializer=_worker_init, initargs=(cfg.to_dict(),)) as pool:
                for i, sample in enumerate(pool.imap(_worker_build, specs, chunksize=4)):
                    yield sample
                    if progress:
                        progress(i + 1, len(specs))

    chash = config_hash(cfg)
    variant_counts: dict[str, int] = {}
    for spec in specs:
        variant_counts[spec[3]] = variant_counts.get(spec[3], 0) + 1
    manifest = write_shards(
        produced(),
        out_dir,
        shard_size=shard_size,
        config_hash=chash,
        extra={
            "schedule": cfg.schedule.kind,
            "epochs": cfg.schedule.epochs,
            "samples_per_video": cfg.schedule.samples_per_video,
            "effective_epochs": effective_epochs(
                cfg.schedule.epochs, cfg.schedule.samples_per_video
            ),
            "video_count": len(sources),
            "variant_counts": variant_counts,
            "background": cfg.background.kind,
        },
    )
    with open(out_dir / "config.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest
