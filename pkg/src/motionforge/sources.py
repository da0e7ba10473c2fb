"""Ingestion of object libraries, clip manifests, and background image sets.

Object library: a directory of RGBA image files plus ``index.json`` mapping
object_id -> {path, category, size}. Clip manifest: JSON listing clips stored
either as an .npy (T, H, W, 3) array (uint8 or float) or as a directory of
image frames. Compressed video decoding is out of scope; decode upstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .compositor import Clip, SegmentedObject

__all__ = [
    "ObjectLibrary",
    "ClipSource",
    "load_clip_manifest",
    "load_rgba_image",
    "load_rgb_image",
    "list_image_dir",
]


def _to_unit(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    arr = arr.astype(np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("float pixel data must already be in [0, 1]")
    return arr


def load_rgba_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return _to_unit(np.asarray(img.convert("RGBA")))


def load_rgb_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return _to_unit(np.asarray(img.convert("RGB")))


class ObjectLibrary:
    """Sprite lookup over an index file; loads lazily, caches decoded sprites."""

    def __init__(self, index_path: str | Path):
        self.index_path = Path(index_path)
        with open(self.index_path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict) or not raw:
            raise ValueError(f"{index_path}: object index must be a non-empty JSON object")
        self._entries = raw
        self._cache: dict[str, SegmentedObject] = {}
        self.object_ids = sorted(raw.keys())

    def __len__(self) -> int:
        return len(self.object_ids)

    def get(self, object_id: str) -> SegmentedObject:
        if object_id not in self._entries:
            raise KeyError(f"unknown object_id {object_id!r}")
        if object_id not in self._cache:
            entry = self._entries[object_id]
            path = self.index_path.parent / entry["path"]
            self._cache[object_id] = SegmentedObject(
                rgba=load_rgba_image(path), object_id=object_id
            )
        return self._cache[object_id]

    def pick(self, rng: np.random.Generator) -> SegmentedObject:
        idx = int(rng.integers(len(self.object_ids)))
        return self.get(self.object_ids[idx])


@dataclass(frozen=True)
class ClipSource:
    """A lazily-loadable clip reference from a manifest."""

    source_id: str
    path: Path
    kind: str  # "npy" or "frames"

    def load(self) -> Clip:
        if self.kind == "npy":
            frames = _to_unit(np.load(self.path))
        elif self.kind == "frames":
            files = sorted(
                p for p in self.path.iterdir()
                if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")
            )
            if not files:
                raise ValueError(f"{self.path}: no frame images found")
            frames = np.stack([load_rgb_image(p) for p in files])
        else:
            raise ValueError(f"unknown clip kind {self.kind!r}")
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise ValueError(f"{self.path}: clip must be (T, H, W, 3), got {frames.shape}")
        return Clip(frames=frames, source_id=self.source_id)


def load_clip_manifest(manifest_path: str | Path) -> list[ClipSource]:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        raw = json.load(fh)
    clips = raw["clips"] if isinstance(raw, dict) else raw
    sources = []
    for entry in clips:
        sources.append(
            ClipSource(
                source_id=entry["source_id"],
                path=manifest_path.parent / entry["path"],
                kind=entry.get("kind", "npy"),
            )
        )
    if not sources:
        raise ValueError(f"{manifest_path}: clip manifest is empty")
    ids = [s.source_id for s in sources]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{manifest_path}: duplicate source_ids")
    return sources


def list_image_dir(image_dir: str | Path) -> list[Path]:
    image_dir = Path(image_dir)
    files = sorted(
        p for p in image_dir.iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")
    )
    if not files:
        raise ValueError(f"{image_dir}: no images found")
    return files
