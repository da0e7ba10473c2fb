"""Tube masking and trajectory-based masking over the token grid.

Counts are exact: every fractional target is resolved with round-half-up and
the trajectory strategy trims overshoot deterministically, so |masked| is a
pure function of (geometry, ratio, object token set).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .geometry import round_half_up
from .tokenizer import TokenGeometry

__all__ = [
    "MaskConfig",
    "MaskSet",
    "PROVENANCE_TUBE",
    "PROVENANCE_TRAJECTORY",
    "tube_mask",
    "object_token_set",
    "trajectory_mask",
    "mask_apply",
]

PROVENANCE_TUBE = "tube"
PROVENANCE_TRAJECTORY = "trajectory"


@dataclass(frozen=True)
class MaskConfig:
    ratio: float
    use_trajectory: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"masking ratio must be in (0, 1), got {self.ratio}")


@dataclass(frozen=True)
class MaskSet:
    """Partition of [0, N) into masked/unmasked index sets with provenance."""

    masked: np.ndarray
    unmasked: np.ndarray
    provenance: Mapping[int, str]

    def __post_init__(self):
        masked = np.asarray(self.masked, dtype=np.int64)
        unmasked = np.asarray(self.unmasked, dtype=np.int64)
        masked = np.sort(masked)
        unmasked = np.sort(unmasked)
        n = masked.size + unmasked.size
        union = np.concatenate([masked, unmasked])
        union.sort()
        if not np.array_equal(union, np.arange(n)):
            raise ValueError("masked/unmasked must partition [0, N)")
        if set(self.provenance.keys()) != set(masked.tolist()):
            raise ValueError("provenance keys must be exactly the masked indices")
        masked.flags.writeable = False
        unmasked.flags.writeable = False
        object.__setattr__(self, "masked", masked)
        object.__setattr__(self, "unmasked", unmasked)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def token_count(self) -> int:
        return self.masked.size + self.unmasked.size

    def provenance_counts(self) -> dict[str, int]:
        counts = {PROVENANCE_TRAJECTORY: 0, PROVENANCE_TUBE: 0}
        for v in self.provenance.values():
            counts[v] += 1
        return counts


def _build(masked: set[int], provenance: dict[int, str], n: int) -> MaskSet:
    masked_arr = np.array(sorted(masked), dtype=np.int64)
    unmasked_arr = np.setdiff1d(np.arange(n, dtype=np.int64), masked_arr, assume_unique=True)
    return MaskSet(masked=masked_arr, unmasked=unmasked_arr, provenance=provenance)


def _tube_token_indices(pos: int, geom: TokenGeometry) -> np.ndarray:
    """All flat token indices sharing spatial position ``pos``, ascending tau."""
    s = geom.spatial_positions
    return pos + s * np.arange(geom.grid_t, dtype=np.int64)


def tube_mask(geom: TokenGeometry, ratio: float, rng: np.random.Generator) -> MaskSet:
    """VideoMAE-style masking: the same spatial positions at every time slice.

    Selects round_half_up(ratio * spatial_positions) grid positions uniformly
    without replacement and masks every temporal slice at those positions.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"masking ratio must be in (0, 1), got {ratio}")
    s = geom.spatial_positions
    n_tubes = round_half_up(ratio * s)
    positions = rng.choice(s, size=n_tubes, replace=False)
    masked: set[int] = set()
    provenance: dict[int, str] = {}
    for pos in positions:
        for idx in _tube_token_indices(int(pos), geom):
            masked.add(int(idx))
            provenance[int(idx)] = PROVENANCE_TUBE
    return _build(masked, provenance, geom.token_count)


def object_token_set(footprint: np.ndarray, geom: TokenGeometry) -> np.ndarray:
    """Sorted flat indices of tokens whose cube intersects the footprint.

    A token is included iff any pixel in its p_t x p_s x p_s cube is True.
    """
    fp = np.asarray(footprint, dtype=bool)
    expected = (geom.frame_count, geom.height, geom.width)
    if fp.shape != expected:
        raise ValueError(f"footprint shape {fp.shape} does not match geometry {expected}")
    pt, ps = geom.temporal_patch, geom.spatial_patch
    grid = fp.reshape(geom.grid_t, pt, geom.grid_h, ps, geom.grid_w, ps)
    hit = grid.any(axis=(1, 3, 5))
    return np.flatnonzero(hit.reshape(-1)).astype(np.int64)


def trajectory_mask(
    geom: TokenGeometry,
    ratio: float,
    object_tokens: Iterable[int],
    rng: np.random.Generator,
) -> MaskSet:
    """Mask along the object trajectory first, then fill with tubes.

    Step 1 masks round_half_up(ratio * |object_tokens|) tokens drawn uniformly
    from the object token set (provenance "trajectory"). Step 2 selects
    uniformly-random spatial positions and masks their not-yet-masked slice
    tokens (provenance "tube") until the cumulative count reaches
    round_half_up(ratio * N); any overshoot is trimmed by unmasking the
    highest-tau tube tokens of the last-selected position. The final masked
    count is exact.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"masking ratio must be in (0, 1), got {ratio}")
    n = geom.token_count
    obj = np.unique(np.asarray(list(object_tokens), dtype=np.int64))
    if obj.size and (obj[0] < 0 or obj[-1] >= n):
        raise ValueError("object token indices out of range")

    masked: set[int] = set()
    provenance: dict[int, str] = {}

    n_traj = round_half_up(ratio * obj.size)
    if n_traj:
        chosen = rng.choice(obj, size=n_traj, replace=False)
        for idx in chosen:
            masked.add(int(idx))
            provenance[int(idx)] = PROVENANCE_TRAJECTORY

    target = round_half_up(ratio * n)
    if len(masked) < target:
        order = rng.permutation(geom.spatial_positions)
        last_added: list[int] = []
        for pos in order:
            last_added = []
            for idx in _tube_token_indices(int(pos), geom):
                idx = int(idx)
                if idx not in masked:
                    masked.add(idx)
                    provenance[idx] = PROVENANCE_TUBE
                    last_added.append(idx)
            if len(masked) >= target:
                break
        excess = len(masked) - target
        # trim from the last tube only, highest temporal slice first
        for idx in sorted(last_added, reverse=True)[:excess]:
            masked.remove(idx)
            del provenance[idx]

    return _build(masked, provenance, n)


def mask_apply(tokens: np.ndarray, maskset: MaskSet) -> tuple[np.ndarray, np.ndarray]:
    """Split a length-N token sequence into (unmasked tokens, masked indices).

    Selection is stable: unmasked tokens keep ascending index order, and the
    masked index list is ascending.
    """
    tokens = np.asarray(tokens)
    if tokens.shape[0] != maskset.token_count:
        raise ValueError(
            f"token count {tokens.shape[0]} does not match mask set "
            f"{maskset.token_count}"
        )
    return tokens[maskset.unmasked], maskset.masked.copy()
