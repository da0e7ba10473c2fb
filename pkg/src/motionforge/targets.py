"""Reconstruction targets: teacher-feature alignment, pixel targets, loss oracles.

A teacher feature provider maps a clip to per-frame feature grids of shape
(T, H/p_s, W/p_s, D). Target vectors are taken from each token's first
constituent frame only, so the N feature targets line up one-to-one with the
N space-time tokens. Losses are means over masked tokens of squared Euclidean
norms, with no division by the vector dimension.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .compositor import Clip
from .masking import MaskSet
from .tokenizer import TokenGeometry, tokenize

__all__ = [
    "TeacherFeatureProvider",
    "align_features",
    "pixel_targets",
    "feature_loss",
    "pixel_loss",
    "mock_teacher",
    "file_teacher",
    "write_feature_archive",
    "read_feature_archive",
    "FeatureArchiveError",
]

ARCHIVE_MAGIC = b"SMTF"
ARCHIVE_VERSION = 1


class FeatureArchiveError(Exception):
    """Raised for missing keys, shape mismatches, or corrupt archives."""


class TeacherFeatureProvider(Protocol):
    def __call__(self, clip: Clip) -> np.ndarray: ...


def align_features(grids: np.ndarray, geom: TokenGeometry) -> np.ndarray:
    """Per-frame feature grids -> per-token targets via the first-slice rule.

    The target for token (tau, r, c) is grids[tau * p_t, r, c]; later frames
    inside the token cube never contribute. Returns (N, D) in flat token order.
    """
    grids = np.asarray(grids, dtype=np.float64)
    expected = (geom.frame_count, geom.grid_h, geom.grid_w)
    if grids.ndim != 4 or grids.shape[:3] != expected:
        raise ValueError(
            f"provider grid shape {grids.shape} does not match geometry "
            f"{expected} + (D,)"
        )
    if not np.all(np.isfinite(grids)):
        raise ValueError("provider features must be finite")
    first_frames = grids[:: geom.temporal_patch]  # (grid_t, gh, gw, D)
    return np.ascontiguousarray(first_frames.reshape(geom.token_count, grids.shape[3]))


def pixel_targets(clip: Clip, geom: TokenGeometry) -> np.ndarray:
    """Flattened pixel blocks per token, shape (N, p_t * p_s * p_s * 3)."""
    blocks = tokenize(clip.frames, geom)
    return blocks.reshape(geom.token_count, -1)


def _masked_loss(targets: np.ndarray, predictions: np.ndarray, maskset: MaskSet) -> float:
    targets = np.asarray(targets, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    if targets.ndim != 2:
        raise ValueError(f"targets must be (N, D), got {targets.shape}")
    if targets.shape[0] != maskset.token_count:
        raise ValueError(
            f"target count {targets.shape[0]} does not match mask set "
            f"{maskset.token_count}"
        )
    masked = maskset.masked
    if predictions.shape != (masked.size, targets.shape[1]):
        raise ValueError(
            f"predictions must cover exactly the masked indices: expected "
            f"{(masked.size, targets.shape[1])}, got {predictions.shape}"
        )
    if not np.all(np.isfinite(predictions)):
        raise ValueError("predictions must be finite")
    if masked.size == 0:
        raise ValueError("mask set has no masked tokens")
    residual = targets[masked] - predictions
    return float(np.sum(residual * residual) / masked.size)


def feature_loss(targets: np.ndarray, predictions: np.ndarray, maskset: MaskSet) -> float:
    """Mean over masked tokens of the squared L2 feature reconstruction error."""
    return _masked_loss(targets, predictions, maskset)


def pixel_loss(targets: np.ndarray, predictions: np.ndarray, maskset: MaskSet) -> float:
    """Mean over masked tokens of the squared L2 pixel reconstruction error."""
    return _masked_loss(targets, predictions, maskset)


def mock_teacher(seed: int, dim: int, spatial_patch: int = 16) -> TeacherFeatureProvider:
    """Deterministic stand-in for a frozen image teacher.

    The feature at (t, r, c) is a fixed seeded random projection of the
    mean-pooled p_s x p_s patch of frame t, so identical clips give identical
    grids and an all-zero clip maps to all-zero features.
    """
    if dim < 1:
        raise ValueError("feature dimension must be >= 1")
    projection = np.random.Generator(np.random.PCG64(seed)).standard_normal((dim, 3))

    def provider(clip: Clip) -> np.ndarray:
        h, w = clip.height, clip.width
        if h % spatial_patch or w % spatial_patch:
            raise ValueError(f"spatial_patch {spatial_patch} does not divide {h}x{w}")
        gh, gw = h // spatial_patch, w // spatial_patch
        pooled = clip.frames.reshape(
            clip.frame_count, gh, spatial_patch, gw, spatial_patch, 3
        ).mean(axis=(2, 4))
        return np.einsum("thwc,dc->thwd", pooled, projection)

    return provider


def write_feature_archive(path: str | Path, grids: np.ndarray) -> None:
    """Serialize (T, gh, gw, D) float grids: magic, u16 version, dims, f32 data."""
    grids = np.asarray(grids, dtype=np.float32)
    if grids.ndim != 4:
        raise ValueError(f"grids must be (T, gh, gw, D), got {grids.shape}")
    t, gh, gw, d = grids.shape
    with open(path, "wb") as fh:
        fh.write(ARCHIVE_MAGIC)
        fh.write(struct.pack("<H", ARCHIVE_VERSION))
        fh.write(struct.pack("<4I", t, gh, gw, d))
        fh.write(np.ascontiguousarray(grids).tobytes())


def read_feature_archive(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != ARCHIVE_MAGIC:
            raise FeatureArchiveError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != ARCHIVE_VERSION:
            raise FeatureArchiveError(f"{path}: unsupported version {version}")
        t, gh, gw, d = struct.unpack("<4I", fh.read(16))
        data = fh.read()
    expected = t * gh * gw * d * 4
    if len(data) != expected:
        raise FeatureArchiveError(
            f"{path}: payload is {len(data)} bytes, expected {expected}"
        )
    grids = np.frombuffer(data, dtype="<f4").reshape(t, gh, gw, d).astype(np.float64)
    if not np.all(np.isfinite(grids)):
        raise FeatureArchiveError(f"{path}: non-finite feature values")
    return grids


def file_teacher(index_path: str | Path) -> TeacherFeatureProvider:
    """Provider backed by precomputed feature archives.

    ``index_path`` is a JSON map from source_id to an archive file (relative
    paths resolve against the index location). Shapes are validated against
    the queried clip; lookups are cached and safe for concurrent reads.
    """
    index_path = Path(index_path)
    with open(index_path) as fh:
        index = json.load(fh)
    if not isinstance(index, dict):
        raise FeatureArchiveError(f"{index_path}: index must be a JSON object")
    base = index_path.parent
    cache: dict[str, np.ndarray] = {}

    def provider(clip: Clip) -> np.ndarray:
        key = clip.source_id
        if key not in index:
            raise FeatureArchiveError(f"no feature archive for source_id {key!r}")
        if key not in cache:
            cache[key] = read_feature_archive(base / index[key])
        grids = cache[key]
        if grids.shape[0] != clip.frame_count:
            raise FeatureArchiveError(
                f"{key}: archive has {grids.shape[0]} frames, clip has "
                f"{clip.frame_count}"
            )
        return grids

    return provider
