#!/usr/bin/env python3
"""Report single-threaded augmented-sample throughput (not a gating check).

Builds 16x224x224 augmented samples with two objects, trajectory masking at
80%, and mock feature targets, then prints samples/minute.
"""

import argparse
import tempfile
import time
from pathlib import Path

from motionforge.pipeline import (
    MaskConfig,
    ObjectConfig,
    PipelineConfig,
    ScheduleConfig,
    TargetConfig,
    build_sample,
    load_resources,
)
from motionforge.shards import pack_record
from motionforge.sources import load_clip_manifest
from motionforge.synthetic import build_clip_manifest, build_object_library
from motionforge.tokenizer import TokenGeometry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--warmup", type=int, default=3)
    args = ap.parse_args()

    tmp = Path(tempfile.mkdtemp(prefix="motionforge-bench-"))
    library = build_object_library(tmp / "objects", 8, seed=1, size=64)
    clips = build_clip_manifest(tmp / "clips", 4, 16, 224, 224, seed=2)
    cfg = PipelineConfig(
        clips=str(clips),
        geometry=TokenGeometry(16, 224, 224, 2, 16),
        masking=MaskConfig(ratio=0.8, use_trajectory=True),
        objects=ObjectConfig(count=2, library=str(library)),
        schedule=ScheduleConfig(kind="single", epochs=1, samples_per_video=1),
        targets=TargetConfig(kind="features", teacher={"kind": "mock", "dim": 32, "seed": 0}),
        seed=0,
    )
    resources = load_resources(cfg)
    sources = load_clip_manifest(cfg.clips)
    clip_data = [s.load() for s in sources]

    for i in range(args.warmup):
        build_sample(clip_data[i % len(clip_data)], cfg, 0, i, "augmented", resources)

    start = time.perf_counter()
    total_bytes = 0
    for i in range(args.samples):
        sample = build_sample(clip_data[i % len(clip_data)], cfg, 1, i, "augmented", resources)
        total_bytes += len(pack_record(sample))
    elapsed = time.perf_counter() - start

    per_minute = args.samples / elapsed * 60.0
    print(f"built {args.samples} augmented 16x224x224 samples in {elapsed:.1f}s")
    print(f"throughput: {per_minute:.0f} samples/minute single-threaded")
    print(f"serialized: {total_bytes / 1e6:.0f} MB ({total_bytes / args.samples / 1e6:.2f} MB/sample)")


if __name__ == "__main__":
    main()
