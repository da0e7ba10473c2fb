"""Self-describing binary shards of training samples, with a JSON manifest.

Record layout (little-endian, normative):

    magic "SMLS" | u16 version=1 | u32 header_len | header JSON (utf-8)
    | unmasked token blocks as f32 | masked indices as u32 ascending
    | targets as f32 | u64 xxh64 checksum over all preceding record bytes

The header JSON uses sorted keys and compact separators so records are
byte-deterministic. Token flattening order (temporal-major, then row, then
column) is declared in the manifest and is part of the format contract.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import xxhash

from .tokenizer import TokenGeometry

__all__ = [
    "TrainingSample",
    "ShardManifest",
    "ShardIntegrityError",
    "pack_record",
    "unpack_record",
    "write_shards",
    "read_shards",
    "read_manifest",
    "TOKEN_ORDER_DECLARATION",
]

RECORD_MAGIC = b"SMLS"
RECORD_VERSION = 1
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
TOKEN_ORDER_DECLARATION = "temporal-major row-major: flat = tau*gh*gw + r*gw + c"


class ShardIntegrityError(Exception):
    """Raised when a shard fails checksum, magic, or version validation."""


@dataclass(frozen=True)
class TrainingSample:
    """One serialized training example.

    ``unmasked_blocks`` is (n_unmasked, p_t, p_s, p_s, 3) float32,
    ``masked_indices`` is ascending uint32, ``targets`` is (n_masked, D)
    float32 where D is the feature dimension or the flattened block size for
    pixel targets. ``provenance`` maps each masked index to "trajectory" or
    "tube".
    """

    sample_id: str
    variant: str
    geometry: TokenGeometry
    unmasked_blocks: np.ndarray
    masked_indices: np.ndarray
    targets: np.ndarray
    provenance: dict[int, str]
    seeds: dict[str, int]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        blocks = np.ascontiguousarray(self.unmasked_blocks, dtype=np.float32)
        masked = np.ascontiguousarray(self.masked_indices, dtype=np.uint32)
        targets = np.ascontiguousarray(self.targets, dtype=np.float32)
        g = self.geometry
        if masked.ndim != 1 or np.any(np.diff(masked.astype(np.int64)) <= 0):
            raise ValueError("masked indices must be strictly ascending")
        expected_blocks = (g.token_count - masked.size, g.temporal_patch, g.spatial_patch, g.spatial_patch, 3)
        if blocks.shape != expected_blocks:
            raise ValueError(f"unmasked blocks shape {blocks.shape} != {expected_blocks}")
        if targets.ndim != 2 or targets.shape[0] != masked.size:
            raise ValueError("target count must equal the masked token count")
        if set(self.provenance.keys()) != set(int(i) for i in masked):
            raise ValueError("provenance keys must be exactly the masked indices")
        for arr, name in ((blocks, "unmasked_blocks"), (masked, "masked_indices"), (targets, "targets")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def target_dim(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True)
class ShardManifest:
    format_version: int
    config_hash: str
    token_order: str
    sample_count: int
    shards: list[dict]
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "format_version": self.format_version,
            "config_hash": self.config_hash,
            "token_order": self.token_order,
            "sample_count": self.sample_count,
            "shards": self.shards,
        }
        out.update(self.extra)
        return out


_PROVENANCE_CODE = {"trajectory": "t", "tube": "b"}
_PROVENANCE_NAME = {v: k for k, v in _PROVENANCE_CODE.items()}


def _header_dict(sample: TrainingSample) -> dict:
    g = sample.geometry
    masked = sample.masked_indices
    return {
        "sample_id": sample.sample_id,
        "variant": sample.variant,
        "geometry": {
            "frame_count": g.frame_count,
            "height": g.height,
            "width": g.width,
            "temporal_patch": g.temporal_patch,
            "spatial_patch": g.spatial_patch,
        },
        "target_dim": sample.target_dim,
        "counts": {"unmasked": int(sample.unmasked_blocks.shape[0]), "masked": int(masked.size)},
        "provenance": "".join(_PROVENANCE_CODE[sample.provenance[int(i)]] for i in masked),
        "seeds": sample.seeds,
        "meta": sample.meta,
    }


def pack_record(sample: TrainingSample) -> bytes:
    header = json.dumps(_header_dict(sample), sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(
        [
            RECORD_MAGIC,
            struct.pack("<H", RECORD_VERSION),
            struct.pack("<I", len(header)),
            header,
            sample.unmasked_blocks.astype("<f4", copy=False).tobytes(),
            sample.masked_indices.astype("<u4", copy=False).tobytes(),
            sample.targets.astype("<f4", copy=False).tobytes(),
        ]
    )
    return body + struct.pack("<Q", xxhash.xxh64(body, seed=0).intdigest())


def unpack_record(buf: bytes, offset: int = 0, record_index: int = 0) -> tuple[TrainingSample, int]:
    """Parse one record at ``offset``; validates magic, version, and checksum."""

    def fail(why: str):
        raise ShardIntegrityError(f"record {record_index}: {why}")

    if len(buf) < offset + 10:
        fail("truncated before header")
    if buf[offset : offset + 4] != RECORD_MAGIC:
        fail(f"bad magic {buf[offset:offset + 4]!r}")
    (version,) = struct.unpack_from("<H", buf, offset + 4)
    if version != RECORD_VERSION:
        fail(f"unsupported record version {version}")
    (header_len,) = struct.unpack_from("<I", buf, offset + 6)
    header_start = offset + 10
    header_end = header_start + header_len
    if len(buf) < header_end:
        fail("truncated inside header")
    try:
        header = json.loads(buf[header_start:header_end])
        g = header["geometry"]
        geom = TokenGeometry(
            frame_count=g["frame_count"],
            height=g["height"],
            width=g["width"],
            temporal_patch=g["temporal_patch"],
            spatial_patch=g["spatial_patch"],
        )
        n_unmasked = header["counts"]["unmasked"]
        n_masked = header["counts"]["masked"]
        d = header["target_dim"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        fail(f"corrupt header ({exc})")
    block_floats = n_unmasked * geom.temporal_patch * geom.spatial_patch * geom.spatial_patch * 3

    pos = header_end
    blocks_bytes = block_floats * 4
    masked_bytes = n_masked * 4
    target_bytes = n_masked * d * 4
    end = pos + blocks_bytes + masked_bytes + target_bytes
    if len(buf) < end + 8:
        fail("truncated payload")
    payload_end = end
    (stored,) = struct.unpack_from("<Q", buf, payload_end)
    computed = xxhash.xxh64(buf[offset:payload_end], seed=0).intdigest()
    if stored != computed:
        fail(f"checksum mismatch (stored {stored:#x}, computed {computed:#x})")

    blocks = np.frombuffer(buf, dtype="<f4", count=block_floats, offset=pos).reshape(
        n_unmasked, geom.temporal_patch, geom.spatial_patch, geom.spatial_patch, 3
    )
    pos += blocks_bytes
    masked = np.frombuffer(buf, dtype="<u4", count=n_masked, offset=pos)
    pos += masked_bytes
    targets = np.frombuffer(buf, dtype="<f4", count=n_masked * d, offset=pos).reshape(n_masked, d)

    provenance = {
        int(idx): _PROVENANCE_NAME[code]
        for idx, code in zip(masked, header["provenance"])
    }
    sample = TrainingSample(
        sample_id=header["sample_id"],
        variant=header["variant"],
        geometry=geom,
        unmasked_blocks=blocks,
        masked_indices=masked,
        targets=targets,
        provenance=provenance,
        seeds={k: int(v) for k, v in header["seeds"].items()},
        meta=header["meta"],
    )
    return sample, payload_end + 8


def write_shards(
    samples: Iterable[TrainingSample],
    out_dir: str | Path,
    shard_size: int = 64,
    *,
    config_hash: str = "",
    extra: dict | None = None,
) -> ShardManifest:
    """Write samples into fixed-size shard files plus a manifest.

    ``shard_size`` is the record count per shard file. Per-record byte offsets
    are stored in the manifest so readers can seek without scanning.
    """
    if shard_size < 1:
        raise ValueError("shard_size must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    shards: list[dict] = []
    current: list[bytes] = []
    total = 0

    def flush():
        nonlocal current
        if not current:
            return
        name = f"shard-{len(shards):05d}.bin"
        offsets = []
        pos = 0
        for rec in current:
            offsets.append(pos)
            pos += len(rec)
        with open(out_dir / name, "wb") as fh:
            for rec in current:
                fh.write(rec)
        shards.append({"file": name, "records": len(current), "offsets": offsets, "bytes": pos})
        current = []

    for sample in samples:
        current.append(pack_record(sample))
        total += 1
        if len(current) == shard_size:
            flush()
    flush()

    manifest = ShardManifest(
        format_version=MANIFEST_VERSION,
        config_hash=config_hash,
        token_order=TOKEN_ORDER_DECLARATION,
        sample_count=total,
        shards=shards,
        extra=extra or {},
    )
    with open(out_dir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest


def read_manifest(manifest_path: str | Path) -> ShardManifest:
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    with open(manifest_path) as fh:
        raw = json.load(fh)
    if raw.get("format_version") != MANIFEST_VERSION:
        raise ShardIntegrityError(
            f"unsupported manifest version {raw.get('format_version')}"
        )
    known = {"format_version", "config_hash", "token_order", "sample_count", "shards"}
    return ShardManifest(
        format_version=raw["format_version"],
        config_hash=raw["config_hash"],
        token_order=raw["token_order"],
        sample_count=raw["sample_count"],
        shards=raw["shards"],
        extra={k: v for k, v in raw.items() if k not in known},
    )


def read_shards(manifest_path: str | Path) -> Iterator[TrainingSample]:
    """Stream samples back from a manifest; every record is checksum-verified."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    seen = 0
    for shard in manifest.shards:
        buf = (base / shard["file"]).read_bytes()
        offset = 0
        for _ in range(shard["records"]):
            sample, offset = unpack_record(buf, offset, record_index=seen)
            seen += 1
            yield sample
        if offset != len(buf):
            raise ShardIntegrityError(
                f"{shard['file']}: {len(buf) - offset} trailing bytes after last record"
            )
    if seen != manifest.sample_count:
        raise ShardIntegrityError(
            f"manifest declares {manifest.sample_count} samples, shards hold {seen}"
        )
