"""Non-overlapping 3D space-time token partition of a clip.

Flat token order is temporal-major row-major: flat = tau * gh * gw + r * gw + c
where (tau, r, c) are temporal/row/column grid coordinates. This order is
normative for mask serialization and the shard format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TokenGeometry",
    "tokenize",
    "untokenize",
    "token_of_pixel",
    "cube_of_token",
    "grid_of_token",
    "flat_of_grid",
]


@dataclass(frozen=True)
class TokenGeometry:
    frame_count: int
    height: int
    width: int
    temporal_patch: int = 2
    spatial_patch: int = 16

    def __post_init__(self):
        if self.temporal_patch <= 0 or self.spatial_patch <= 0:
            raise ValueError("patch sizes must be positive")
        if self.frame_count % self.temporal_patch != 0:
            raise ValueError(
                f"temporal_patch {self.temporal_patch} does not divide "
                f"frame_count {self.frame_count}"
            )
        if self.height % self.spatial_patch != 0 or self.width % self.spatial_patch != 0:
            raise ValueError(
                f"spatial_patch {self.spatial_patch} does not divide "
                f"{self.height}x{self.width}"
            )

    @property
    def grid_t(self) -> int:
        return self.frame_count // self.temporal_patch

    @property
    def grid_h(self) -> int:
        return self.height // self.spatial_patch

    @property
    def grid_w(self) -> int:
        return self.width // self.spatial_patch

    @property
    def spatial_positions(self) -> int:
        return self.grid_h * self.grid_w

    @property
    def token_count(self) -> int:
        return self.grid_t * self.grid_h * self.grid_w

    @property
    def block_size(self) -> int:
        """Flattened pixel count of one token cube (3 channels)."""
        return self.temporal_patch * self.spatial_patch * self.spatial_patch * 3


def flat_of_grid(tau: int, r: int, c: int, geom: TokenGeometry) -> int:
    if not (0 <= tau < geom.grid_t and 0 <= r < geom.grid_h and 0 <= c < geom.grid_w):
        raise IndexError(f"grid coordinate ({tau},{r},{c}) out of range")
    return tau * geom.grid_h * geom.grid_w + r * geom.grid_w + c


def grid_of_token(i: int, geom: TokenGeometry) -> tuple[int, int, int]:
    if not 0 <= i < geom.token_count:
        raise IndexError(f"token index {i} out of range [0, {geom.token_count})")
    per_slice = geom.grid_h * geom.grid_w
    tau, rest = divmod(i, per_slice)
    r, c = divmod(rest, geom.grid_w)
    return tau, r, c


def token_of_pixel(t: int, h: int, w: int, geom: TokenGeometry) -> int:
    """Flat index of the token whose cube contains pixel (t, h, w)."""
    if not (0 <= t < geom.frame_count and 0 <= h < geom.height and 0 <= w < geom.width):
        raise IndexError(f"pixel ({t},{h},{w}) out of range")
    return flat_of_grid(
        t // geom.temporal_patch, h // geom.spatial_patch, w // geom.spatial_patch, geom
    )


def cube_of_token(i: int, geom: TokenGeometry) -> tuple[range, range, range]:
    """Pixel ranges (frames, rows, cols) of token ``i``'s cube."""
    tau, r, c = grid_of_token(i, geom)
    pt, ps = geom.temporal_patch, geom.spatial_patch
    return (
        range(tau * pt, (tau + 1) * pt),
        range(r * ps, (r + 1) * ps),
        range(c * ps, (c + 1) * ps),
    )


def tokenize(frames: np.ndarray, geom: TokenGeometry) -> np.ndarray:
    """Clip pixels (T, H, W, 3) -> token blocks (N, p_t, p_s, p_s, 3)."""
    frames = np.asarray(frames)
    expected = (geom.frame_count, geom.height, geom.width, 3)
    if frames.shape != expected:
        raise ValueError(f"clip shape {frames.shape} does not match geometry {expected}")
    pt, ps = geom.temporal_patch, geom.spatial_patch
    blocks = frames.reshape(geom.grid_t, pt, geom.grid_h, ps, geom.grid_w, ps, 3)
    blocks = blocks.transpose(0, 2, 4, 1, 3, 5, 6)
    return np.ascontiguousarray(blocks.reshape(geom.token_count, pt, ps, ps, 3))


def untokenize(blocks: np.ndarray, geom: TokenGeometry) -> np.ndarray:
    """Inverse of :func:`tokenize`; reconstructs the (T, H, W, 3) clip."""
    blocks = np.asarray(blocks)
    pt, ps = geom.temporal_patch, geom.spatial_patch
    expected = (geom.token_count, pt, ps, ps, 3)
    if blocks.shape != expected:
        raise ValueError(f"blocks shape {blocks.shape} does not match geometry {expected}")
    grid = blocks.reshape(geom.grid_t, geom.grid_h, geom.grid_w, pt, ps, ps, 3)
    grid = grid.transpose(0, 3, 1, 4, 2, 5, 6)
    return np.ascontiguousarray(
        grid.reshape(geom.frame_count, geom.height, geom.width, 3)
    )
