import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from motionforge.compositor import Clip, SegmentedObject
from motionforge.masking import MaskConfig
from motionforge.pipeline import (
    BackgroundConfig,
    ObjectConfig,
    PipelineConfig,
    ScheduleConfig,
    TargetConfig,
)
from motionforge.synthetic import build_clip_manifest, build_object_library
from motionforge.tokenizer import TokenGeometry


def rng_of(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@pytest.fixture
def rng():
    return rng_of(1234)


@pytest.fixture
def small_geom():
    # 2x2x2 token grid: tiny enough for exhaustive checks
    return TokenGeometry(frame_count=4, height=32, width=32, temporal_patch=2, spatial_patch=16)


@pytest.fixture
def default_geom():
    return TokenGeometry(frame_count=16, height=224, width=224, temporal_patch=2, spatial_patch=16)


def random_clip(rng: np.random.Generator, t=4, h=32, w=32, source_id="clip") -> Clip:
    return Clip(frames=rng.random((t, h, w, 3)), source_id=source_id)


def random_sprite(rng: np.random.Generator, p=8, q=8) -> SegmentedObject:
    rgba = rng.random((p, q, 4))
    rgba[..., 3] = np.maximum(rgba[..., 3], 0.05)  # keep at least one opaque pixel
    return SegmentedObject(rgba=rgba)


def opaque_sprite(rng: np.random.Generator, p=8, q=8) -> SegmentedObject:
    rgba = rng.random((p, q, 4))
    rgba[..., 3] = 1.0
    return SegmentedObject(rgba=rgba)


@pytest.fixture(scope="session")
def asset_dir(tmp_path_factory):
    """A small on-disk object library plus clip manifest shared across tests."""
    root = tmp_path_factory.mktemp("assets")
    library = build_object_library(root / "objects", count=4, seed=11, size=12)
    clips = build_clip_manifest(root / "clips", count=3, frame_count=4, height=64, width=64, seed=12)
    return {"root": root, "library": library, "clips": clips}


@pytest.fixture
def tiny_config(asset_dir):
    """A complete pipeline config at small geometry, feature targets."""
    return PipelineConfig(
        clips=str(asset_dir["clips"]),
        geometry=TokenGeometry(4, 64, 64, 2, 16),
        masking=MaskConfig(ratio=0.8, use_trajectory=True),
        objects=ObjectConfig(count=2, library=str(asset_dir["library"]), size_range=(8, 16)),
        background=BackgroundConfig(kind="natural-clip"),
        schedule=ScheduleConfig(kind="progressive", epochs=2, stage_split=(1, 1), samples_per_video=1),
        targets=TargetConfig(kind="features", teacher={"kind": "mock", "dim": 8, "seed": 3}),
        seed=99,
    )
