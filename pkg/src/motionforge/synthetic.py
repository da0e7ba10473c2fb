"""Procedural sprites and clips for demos, benchmarks, and tests.

Nothing here feeds the training pipeline in production; real deployments
ingest pre-segmented sprite libraries and decoded video frames.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .compositor import Clip, SegmentedObject

__all__ = [
    "blob_sprite",
    "texture_clip",
    "build_object_library",
    "build_clip_manifest",
]


def blob_sprite(rng: np.random.Generator, size: int = 48) -> SegmentedObject:
    """A soft-edged elliptical blob with random colour texture."""
    yy, xx = np.meshgrid(np.linspace(-1, 1, size), np.linspace(-1, 1, size), indexing="ij")
    ax, ay = rng.uniform(0.5, 1.0, size=2)
    r = np.sqrt((xx / ax) ** 2 + (yy / ay) ** 2)
    alpha = np.clip(1.2 - r, 0.0, 1.0)
    alpha[alpha < 0.15] = 0.0
    base = rng.uniform(0.2, 1.0, size=3)
    noise = rng.random((size, size, 3)) * 0.3
    rgb = np.clip(base[None, None, :] * (0.7 + noise), 0.0, 1.0)
    rgba = np.concatenate([rgb, alpha[:, :, None]], axis=2)
    return SegmentedObject(rgba=rgba)


def texture_clip(rng: np.random.Generator, frame_count: int, height: int, width: int) -> Clip:
    """A slowly drifting sinusoidal texture so frames differ but stay correlated."""
    t = np.arange(frame_count)[:, None, None]
    yy, xx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    phase = rng.uniform(0, 2 * np.pi, size=3)
    freq = rng.uniform(0.02, 0.08, size=3)
    frames = np.stack(
        [
            0.5 + 0.5 * np.sin(freq[c] * (xx + yy)[None] + 0.2 * t + phase[c])
            for c in range(3)
        ],
        axis=-1,
    )
    return Clip(frames=np.clip(frames, 0.0, 1.0))


def _save_rgba_png(path: Path, rgba: np.ndarray) -> None:
    img = Image.fromarray(np.round(rgba * 255.0).astype(np.uint8), mode="RGBA")
    img.save(path)


def build_object_library(out_dir: str | Path, count: int, seed: int = 0, size: int = 48) -> Path:
    """Write ``count`` blob sprites plus index.json; returns the index path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    index = {}
    for i in range(count):
        obj_id = f"blob-{i:03d}"
        name = f"{obj_id}.png"
        sprite = blob_sprite(rng, size=size)
        _save_rgba_png(out_dir / name, sprite.rgba)
        index[obj_id] = {"path": name, "category": "blob", "size": [size, size]}
    index_path = out_dir / "index.json"
    with open(index_path, "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
    return index_path


def build_clip_manifest(
    out_dir: str | Path,
    count: int,
    frame_count: int,
    height: int,
    width: int,
    seed: int = 0,
) -> Path:
    """Write ``count`` synthetic .npy clips plus manifest.json; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    entries = []
    for i in range(count):
        source_id = f"clip-{i:04d}"
        name = f"{source_id}.npy"
        clip = texture_clip(rng, frame_count, height, width)
        np.save(out_dir / name, clip.frames.astype(np.float32))
        entries.append({"source_id": source_id, "path": name, "kind": "npy"})
    manifest_path = out_dir / "clips.json"
    with open(manifest_path, "w") as fh:
        json.dump({"clips": entries}, fh, indent=2)
    return manifest_path
