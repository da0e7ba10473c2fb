#!/usr/bin/env python3
"""Create a small demo workspace: sprites, clips, and a ready-to-run config.

Usage:
    python scripts/make_demo_assets.py --out demo
    motionforge gen --config demo/config.json --out demo/shards
    motionforge preview --config demo/config.json --out demo/preview
"""

import argparse
import json
from pathlib import Path

from motionforge.synthetic import build_clip_manifest, build_object_library


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("demo"))
    ap.add_argument("--clips", type=int, default=8)
    ap.add_argument("--objects", type=int, default=8)
    ap.add_argument("--frames", type=int, default=16)
    ap.add_argument("--size", type=int, default=224, help="clip height/width")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    library = build_object_library(args.out / "objects", args.objects, seed=args.seed, size=64)
    clips = build_clip_manifest(
        args.out / "clips", args.clips, args.frames, args.size, args.size, seed=args.seed + 1
    )
    config = {
        "clips": str(clips.relative_to(args.out)),
        "geometry": {
            "frame_count": args.frames,
            "height": args.size,
            "width": args.size,
            "temporal_patch": 2,
            "spatial_patch": 16,
        },
        "masking": {"ratio": 0.8, "use_trajectory": True},
        "objects": {
            "count": 2,
            "library": str(library.relative_to(args.out)),
            "size_range": [32, 128],
            "angle_range": [-90, 90],
            "scale_range": [0.5, 1.5],
            "raw_point_multiplier": 10,
            "smoothing_factor": 8.0,
        },
        "background": {"kind": "natural-clip", "image_dir": ""},
        "schedule": {"kind": "progressive", "epochs": 2, "stage_split": [1, 1], "samples_per_video": 2},
        "targets": {"kind": "features", "teacher": {"kind": "mock", "dim": 32, "seed": 0}},
        "seed": args.seed,
    }
    config_path = args.out / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n")
    print(f"wrote {config_path}")


if __name__ == "__main__":
    main()
