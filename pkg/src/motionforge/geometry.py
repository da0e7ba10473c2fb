"""Smoothed random object trajectories and keyframe rotation/scale tracks.

Coordinate convention used throughout the package: ``x`` indexes rows
(vertical, continuous range ``[0, H]``) and ``y`` indexes columns
(horizontal, range ``[0, W]``). Angles are degrees at every interface and
become radians only inside rotation matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TrajectoryConfig",
    "Trajectory",
    "TransformTrack",
    "AffinePlacement",
    "generate_raw_path",
    "gaussian_smooth",
    "downsample_path",
    "sample_keyframe_transforms",
    "placement_at",
    "make_trajectory",
    "round_half_up",
]


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero toward +inf.

    Used for every fractional count/index in the package so that rounding
    behaviour is testable and identical everywhere.
    """
    return int(math.floor(x + 0.5))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TrajectoryConfig:
    """Geometry and sampling parameters for one trajectory draw.

    ``raw_point_count`` must strictly exceed ``frame_count``; the default is
    ten raw samples per output frame, which gives visibly non-linear smooth
    paths. ``smoothing_factor`` is in raw-sample units.
    """

    frame_count: int
    frame_height: int
    frame_width: int
    raw_point_count: int = 0  # 0 -> 10 * frame_count
    smoothing_factor: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.frame_count < 2:
            raise ValueError(f"frame_count must be >= 2, got {self.frame_count}")
        if self.frame_height <= 0 or self.frame_width <= 0:
            raise ValueError("frame dimensions must be positive")
        if self.raw_point_count == 0:
            object.__setattr__(self, "raw_point_count", 10 * self.frame_count)
        if self.raw_point_count <= self.frame_count:
            raise ValueError(
                f"raw_point_count ({self.raw_point_count}) must exceed "
                f"frame_count ({self.frame_count})"
            )
        if not self.smoothing_factor > 0:
            raise ValueError("smoothing_factor must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Per-frame object center coordinates, shape (T, 2) as (x, y) rows."""

    centers: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[1] != 2:
            raise ValueError(f"centers must be (T, 2), got {centers.shape}")
        if not np.all(np.isfinite(centers)):
            raise ValueError("trajectory coordinates must be finite")
        object.__setattr__(self, "centers", _freeze(centers))

    def __len__(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class TransformTrack:
    """Per-frame rotation angles (degrees) and scale factors.

    ``keyframes`` records the three (frame_index, angle, scale) anchors the
    interpolation was built from; values at those indices are exact.
    """

    angles: np.ndarray
    scales: np.ndarray
    keyframes: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        scales = np.asarray(self.scales, dtype=np.float64)
        if angles.shape != scales.shape or angles.ndim != 1:
            raise ValueError("angles and scales must be 1D and equal length")
        object.__setattr__(self, "angles", _freeze(angles))
        object.__setattr__(self, "scales", _freeze(scales))

    def __len__(self) -> int:
        return self.angles.shape[0]


@dataclass(frozen=True)
class AffinePlacement:
    """Rotation matrix, isotropic scale matrix, and center for one frame."""

    rotation: np.ndarray  # (2, 2), orthogonal, det +1
    scale: np.ndarray  # (2, 2), diag(S, S), S > 0
    center: np.ndarray  # (2,) as (x, y)

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        sc = np.asarray(self.scale, dtype=np.float64)
        center = np.asarray(self.center, dtype=np.float64)
        if rot.shape != (2, 2) or sc.shape != (2, 2) or center.shape != (2,):
            raise ValueError("bad placement shapes")
        if abs(np.linalg.det(rot) - 1.0) > 1e-9 or np.max(np.abs(rot @ rot.T - np.eye(2))) > 1e-9:
            raise ValueError("rotation must be orthogonal with det +1")
        if sc[0, 1] != 0 or sc[1, 0] != 0 or sc[0, 0] != sc[1, 1] or sc[0, 0] <= 0:
            raise ValueError("scale must be diag(S, S) with S > 0")
        object.__setattr__(self, "rotation", _freeze(rot))
        object.__setattr__(self, "scale", _freeze(sc))
        object.__setattr__(self, "center", _freeze(center))

    @property
    def scale_factor(self) -> float:
        return float(self.scale[0, 0])

    @property
    def angle_degrees(self) -> float:
        return float(math.degrees(math.atan2(self.rotation[1, 0], self.rotation[0, 0])))


def generate_raw_path(cfg: TrajectoryConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw ``raw_point_count`` i.i.d. uniform 2D points in [0,H] x [0,W]."""
    unit = rng.random((cfg.raw_point_count, 2))
    return unit * np.array([cfg.frame_height, cfg.frame_width], dtype=np.float64)


def gaussian_kernel(kappa: float) -> np.ndarray:
    """Discrete Gaussian taps at integer offsets in [-R, R], R = ceil(4*kappa).

    Renormalized to sum to one, so the continuous prefactor cancels.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    radius = math.ceil(4.0 * kappa)
    z = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(z**2) / (2.0 * kappa * kappa))
    return kernel / kernel.sum()


def gaussian_smooth(path: np.ndarray, kappa: float) -> np.ndarray:
    """Convolve each coordinate axis with the truncated Gaussian kernel.

    Boundaries are handled by symmetric reflection (the edge sample is
    repeated: ... b a | a b c ...). Accepts a 1D sequence or an (M, k) array;
    axes are smoothed independently.
    """
    pts = np.asarray(path, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("cannot smooth an empty path")
    kernel = gaussian_kernel(kappa)
    radius = (len(kernel) - 1) // 2

    squeeze = pts.ndim == 1
    if squeeze:
        pts = pts[:, None]
    padded = np.pad(pts, ((radius, radius), (0, 0)), mode="symmetric")
    out = np.empty_like(pts)
    for axis in range(pts.shape[1]):
        out[:, axis] = np.convolve(padded[:, axis], kernel, mode="valid")
    return out[:, 0] if squeeze else out


def downsample_path(path: np.ndarray, frame_count: int) -> np.ndarray:
    """Select ``frame_count`` points at rounded uniform indices.

    Output index t takes input index round_half_up(t * (M-1) / (T-1));
    the first and last input points are always retained.
    """
    pts = np.asarray(path, dtype=np.float64)
    m = pts.shape[0]
    if frame_count < 2:
        raise ValueError("frame_count must be >= 2")
    if m < frame_count:
        raise ValueError(f"path length {m} is shorter than frame_count {frame_count}")
    t = np.arange(frame_count, dtype=np.float64)
    idx = np.floor(t * (m - 1) / (frame_count - 1) + 0.5).astype(np.int64)
    return pts[idx]


def make_trajectory(cfg: TrajectoryConfig, rng: np.random.Generator) -> Trajectory:
    """Raw uniform path -> Gaussian smoothing -> clamp to frame -> downsample."""
    raw = generate_raw_path(cfg, rng)
    smooth = gaussian_smooth(raw, cfg.smoothing_factor)
    smooth[:, 0] = np.clip(smooth[:, 0], 0.0, cfg.frame_height)
    smooth[:, 1] = np.clip(smooth[:, 1], 0.0, cfg.frame_width)
    return Trajectory(centers=downsample_path(smooth, cfg.frame_count))


def sample_keyframe_transforms(
    rng: np.random.Generator,
    angle_range: tuple[float, float],
    scale_range: tuple[float, float],
    frame_count: int,
) -> TransformTrack:
    """Sample rotation/scale at three keyframes and interpolate linearly.

    Keyframes sit at frame 0, a middle frame drawn uniformly from
    {1, ..., T-2}, and frame T-1. Angle and scale keyframe values are drawn
    independently and uniformly from their ranges; every other frame is the
    linear interpolation within its segment. Keyframe values are exact in the
    output arrays.
    """
    t = frame_count
    if t < 3:
        raise ValueError("keyframe transforms need at least 3 frames")
    for lo, hi in (angle_range, scale_range):
        if lo > hi:
            raise ValueError(f"range lo must be <= hi, got [{lo}, {hi}]")

    middle = int(rng.integers(1, t - 1))
    angles_k = rng.uniform(angle_range[0], angle_range[1], size=3)
    scales_k = rng.uniform(scale_range[0], scale_range[1], size=3)

    frames = np.arange(t, dtype=np.float64)
    key_idx = np.array([0, middle, t - 1], dtype=np.float64)
    angles = np.interp(frames, key_idx, angles_k)
    scales = np.interp(frames, key_idx, scales_k)
    # np.interp is exact at the nodes, but pin them bit-exactly anyway
    for i, k in enumerate((0, middle, t - 1)):
        angles[k] = angles_k[i]
        scales[k] = scales_k[i]

    keyframes = tuple(
        (int(k), float(angles_k[i]), float(scales_k[i]))
        for i, k in enumerate((0, middle, t - 1))
    )
    return TransformTrack(angles=angles, scales=scales, keyframes=keyframes)


def placement_at(traj: Trajectory, track: TransformTrack, t: int) -> AffinePlacement:
    """Affine placement for frame ``t``: R(angle_t), diag(S_t, S_t), center_t."""
    n = len(traj)
    if len(track) != n:
        raise ValueError("trajectory and transform track lengths differ")
    if not 0 <= t < n:
        raise IndexError(f"frame index {t} out of range [0, {n})")
    alpha = math.radians(float(track.angles[t]))
    c, s = math.cos(alpha), math.sin(alpha)
    rotation = np.array([[c, -s], [s, c]], dtype=np.float64)
    scale_f = float(track.scales[t])
    scale = np.array([[scale_f, 0.0], [0.0, scale_f]], dtype=np.float64)
    return AffinePlacement(rotation=rotation, scale=scale, center=traj.centers[t].copy())
