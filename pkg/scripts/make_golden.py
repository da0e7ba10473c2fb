#!/usr/bin/env python3
"""Build the 50-sample golden shard set used by the bindings parity tests.

Writes a shard tree plus golden_meta.json holding, per record: the sample id,
byte span, sha256 of the record bytes, and the feature loss against all-zero
predictions computed by the native loss oracle. Consumers re-derive all of it
through their own readers and compare.
"""

import argparse
import hashlib
import json
from pathlib import Path

import numpy as np

from motionforge.masking import MaskSet
from motionforge.pipeline import (
    MaskConfig,
    ObjectConfig,
    PipelineConfig,
    ScheduleConfig,
    TargetConfig,
    generate,
)
from motionforge.shards import read_manifest, read_shards
from motionforge.synthetic import build_clip_manifest, build_object_library
from motionforge.targets import feature_loss
from motionforge.tokenizer import TokenGeometry

GOLDEN_SEED = 31337


def golden_config(root: Path) -> PipelineConfig:
    library = build_object_library(root / "objects", 6, seed=GOLDEN_SEED, size=24)
    clips = build_clip_manifest(root / "clips", 5, 8, 64, 64, seed=GOLDEN_SEED + 1)
    return PipelineConfig(
        clips=str(clips),
        geometry=TokenGeometry(8, 64, 64, 2, 16),
        masking=MaskConfig(ratio=0.8, use_trajectory=True),
        objects=ObjectConfig(count=2, library=str(library), size_range=(12, 32)),
        schedule=ScheduleConfig(kind="progressive", epochs=5, stage_split=(3, 2), samples_per_video=2),
        targets=TargetConfig(kind="features", teacher={"kind": "mock", "dim": 8, "seed": 4}),
        seed=GOLDEN_SEED,
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    cfg = golden_config(args.out / "assets")
    shard_dir = args.out / "shards"
    manifest = generate(cfg, shard_dir, shard_size=16)
    assert manifest.sample_count == 50, manifest.sample_count

    config_path = args.out / "config.json"
    config_path.write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")

    records = []
    samples = list(read_shards(shard_dir))
    manifest = read_manifest(shard_dir)
    cursor = 0
    for shard in manifest.shards:
        blob = (shard_dir / shard["file"]).read_bytes()
        offsets = shard["offsets"] + [len(blob)]
        for i in range(shard["records"]):
            sample = samples[cursor]
            rec_bytes = blob[offsets[i] : offsets[i + 1]]
            n = sample.geometry.token_count
            full = np.zeros((n, sample.target_dim))
            full[sample.masked_indices] = sample.targets
            ms = MaskSet(
                masked=sample.masked_indices.astype(np.int64),
                unmasked=np.setdiff1d(np.arange(n), sample.masked_indices.astype(np.int64)),
                provenance=sample.provenance,
            )
            zero_loss = feature_loss(full, np.zeros_like(sample.targets, dtype=np.float64), ms)
            records.append(
                {
                    "sample_id": sample.sample_id,
                    "variant": sample.variant,
                    "shard": shard["file"],
                    "offset": offsets[i],
                    "length": offsets[i + 1] - offsets[i],
                    "sha256": hashlib.sha256(rec_bytes).hexdigest(),
                    "masked_count": int(sample.masked_indices.size),
                    "unmasked_count": int(sample.unmasked_blocks.shape[0]),
                    "target_dim": int(sample.target_dim),
                    "zero_prediction_feature_loss": zero_loss,
                }
            )
            cursor += 1

    meta = {
        "sample_count": manifest.sample_count,
        "config_hash": manifest.config_hash,
        "records": records,
    }
    (args.out / "golden_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"golden set: {manifest.sample_count} samples under {shard_dir}")


if __name__ == "__main__":
    main()
