"""Command-line front end: gen, mask, stats, preview, sample.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 data integrity
error. Progress and results are emitted as JSON lines; `stats` prints its
report as a single JSON document on stdout.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from .pipeline import (
    PipelineConfig,
    assemble_sample,
    generate,
    load_resources,
)
from .shards import ShardIntegrityError, pack_record, read_manifest, read_shards
from .sources import load_clip_manifest
from .targets import FeatureArchiveError
from .tokenizer import TokenGeometry

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INTEGRITY = 4

WORKERS_ENV = "MOTIONFORGE_WORKERS"


def _log(event: str, **fields):
    print(json.dumps({"event": event, **fields}, sort_keys=True), file=sys.stderr)


def _fail(code: int, message: str):
    _log("error", message=message, exit_code=code)
    sys.exit(code)


def _coerce(value: str, like):
    if isinstance(like, bool):
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, (list, tuple)):
        parsed = json.loads(value)
        if not isinstance(parsed, list):
            raise ValueError(f"expected a JSON list, got {value!r}")
        return parsed
    return value


def _apply_overrides(raw: dict, overrides: tuple[str, ...]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not key=value")
        dotted, value = item.split("=", 1)
        keys = dotted.split(".")
        node = raw
        for key in keys[:-1]:
            if not isinstance(node, dict) or key not in node:
                raise ValueError(f"unknown config key {dotted!r}")
            node = node[key]
        leaf = keys[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ValueError(f"unknown config key {dotted!r}")
        node[leaf] = _coerce(value, node[leaf])
    return raw


def _load_config(config_path: str, overrides: tuple[str, ...], seed: int | None) -> PipelineConfig:
    try:
        with open(config_path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_CONFIG, f"cannot load config {config_path}: {exc}")
    try:
        raw = _apply_overrides(raw, overrides)
        if seed is not None:
            raw["seed"] = seed
        base = Path(config_path).resolve().parent
        for key in ("clips",):
            if key in raw and raw[key]:
                raw[key] = str((base / raw[key]).resolve()) if not os.path.isabs(raw[key]) else raw[key]
        if "objects" in raw and raw["objects"].get("library"):
            lib = raw["objects"]["library"]
            raw["objects"]["library"] = lib if os.path.isabs(lib) else str((base / lib).resolve())
        if "background" in raw and raw["background"].get("image_dir"):
            d = raw["background"]["image_dir"]
            raw["background"]["image_dir"] = d if os.path.isabs(d) else str((base / d).resolve())
        if "targets" in raw and raw["targets"].get("teacher", {}).get("index"):
            idx = raw["targets"]["teacher"]["index"]
            raw["targets"]["teacher"]["index"] = idx if os.path.isabs(idx) else str((base / idx).resolve())
        return PipelineConfig.from_dict(raw)
    except (ValueError, KeyError, TypeError) as exc:
        _fail(EXIT_CONFIG, f"invalid config: {exc}")


def _resolve_workers(workers: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            _fail(EXIT_CONFIG, f"{WORKERS_ENV} must be an integer, got {env!r}")
    return max(1, workers)


def _sample_coordinates(cfg: PipelineConfig, video_index: int, video_id: str | None):
    try:
        sources = load_clip_manifest(cfg.clips)
    except (OSError, ValueError, KeyError) as exc:
        _fail(EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG, f"clip manifest: {exc}")
    if video_id is not None:
        matching = [s for s in sources if s.source_id == video_id]
        if not matching:
            _fail(EXIT_CONFIG, f"unknown video_id {video_id!r}")
        return matching[0]
    if not 0 <= video_index < len(sources):
        _fail(EXIT_CONFIG, f"video index {video_index} out of range (have {len(sources)})")
    return sources[video_index]


@click.group()
def main():
    """Deterministic synthetic-motion training-shard generator."""


_config_opt = click.option("--config", "config_path", required=True, type=click.Path())
_set_opt = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                        help="Override a config field by dotted key.")
_seed_opt = click.option("--seed", type=int, default=None, help="Override the global seed.")


@main.command()
@_config_opt
@_set_opt
@_seed_opt
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--shard-size", type=int, default=64, show_default=True)
@click.option("-v", "--verbose", is_flag=True)
def gen(config_path, overrides, seed, out_dir, workers, shard_size, verbose):
    """Generate training shards from a pipeline config."""
    cfg = _load_config(config_path, overrides, seed)
    workers = _resolve_workers(workers)
    _log("gen-start", out=str(out_dir), workers=workers)

    def progress(done, total):
        if verbose and (done % 50 == 0 or done == total):
            _log("gen-progress", done=done, total=total)

    try:
        manifest = generate(cfg, out_dir, workers=workers, shard_size=shard_size, progress=progress)
    except (ShardIntegrityError, FeatureArchiveError) as exc:
        _fail(EXIT_INTEGRITY, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except (ValueError, KeyError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    _log(
        "gen-done",
        samples=manifest.sample_count,
        shards=len(manifest.shards),
        config_hash=manifest.config_hash,
        effective_epochs=manifest.extra.get("effective_epochs"),
    )


@main.command()
@_config_opt
@_set_opt
@_seed_opt
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--video-index", type=int, default=0, show_default=True)
@click.option("--epoch", type=int, default=0, show_default=True)
@click.option("--sample-index", type=int, default=0, show_default=True)
@click.option("--variant", type=click.Choice(["augmented", "original"]), default="augmented")
def mask(config_path, overrides, seed, out_path, video_index, epoch, sample_index, variant):
    """Emit the mask set a sample would receive, as JSON."""
    cfg = _load_config(config_path, overrides, seed)
    source = _sample_coordinates(cfg, video_index, None)
    try:
        clip = source.load()
        assembled = assemble_sample(clip, cfg, epoch, sample_index, variant)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except (ValueError, KeyError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    ms = assembled.maskset
    report = {
        "sample_id": assembled.sample.sample_id,
        "token_count": ms.token_count,
        "masked": [int(i) for i in ms.masked],
        "provenance": "".join(
            "t" if ms.provenance[int(i)] == "trajectory" else "b" for i in ms.masked
        ),
        "counts": ms.provenance_counts(),
        "ratio": len(ms.masked) / ms.token_count,
    }
    try:
        with open(out_path, "w") as fh:
            json.dump(report, fh, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    _log("mask-done", out=str(out_path), masked=len(ms.masked))


@main.command()
@click.argument("manifest_path", type=click.Path())
def stats(manifest_path):
    """Audit a shard tree: masking ratios, provenance counts, backgrounds."""
    try:
        report = compute_stats(manifest_path)
    except ShardIntegrityError as exc:
        _fail(EXIT_INTEGRITY, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except (ValueError, KeyError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    print(json.dumps(report, sort_keys=True, indent=2))


def compute_stats(manifest_path: str | Path) -> dict:
    manifest = read_manifest(manifest_path)
    base = Path(manifest_path)
    if base.is_file():
        base = base.parent
    per_shard = []
    backgrounds: dict[str, int] = {}
    variants: dict[str, int] = {}
    total_masked = 0
    total_tokens = 0
    shard_start = 0
    samples = read_shards(base)
    for shard in manifest.shards:
        masked = 0
        tokens = 0
        prov = {"trajectory": 0, "tube": 0}
        masked_hist: dict[int, int] = {}
        for _ in range(shard["records"]):
            sample = next(samples)
            n_masked = int(sample.masked_indices.size)
            n = sample.geometry.token_count
            masked += n_masked
            tokens += n
            masked_hist[n_masked] = masked_hist.get(n_masked, 0) + 1
            for v in sample.provenance.values():
                prov[v] += 1
            backgrounds[sample.meta.get("background", "?")] = (
                backgrounds.get(sample.meta.get("background", "?"), 0) + 1
            )
            variants[sample.variant] = variants.get(sample.variant, 0) + 1
        per_shard.append(
            {
                "file": shard["file"],
                "records": shard["records"],
                "masked_tokens": masked,
                "total_tokens": tokens,
                "masking_ratio": masked / tokens if tokens else 0.0,
                "provenance": prov,
                "masked_count_histogram": {str(k): v for k, v in sorted(masked_hist.items())},
            }
        )
        shard_start += shard["records"]
        total_masked += masked
        total_tokens += tokens
    return {
        "sample_count": manifest.sample_count,
        "config_hash": manifest.config_hash,
        "masking_ratio": total_masked / total_tokens if total_tokens else 0.0,
        "background_histogram": backgrounds,
        "variant_histogram": variants,
        "shards": per_shard,
    }


def _overlay_mask_frame(frame: np.ndarray, masked_map: np.ndarray) -> np.ndarray:
    out = frame.copy()
    shade = out[masked_map] * 0.35
    shade[:, 0] = np.clip(shade[:, 0] + 0.35, 0.0, 1.0)  # red tint on masked tokens
    out[masked_map] = shade
    return out


@main.command()
@_config_opt
@_set_opt
@_seed_opt
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--video-index", type=int, default=0, show_default=True)
@click.option("--epoch", type=int, default=0, show_default=True)
@click.option("--sample-index", type=int, default=0, show_default=True)
@click.option("--variant", type=click.Choice(["augmented", "original"]), default="augmented")
def preview(config_path, overrides, seed, out_dir, video_index, epoch, sample_index, variant):
    """Dump composited frames and mask overlays as PNG files."""
    cfg = _load_config(config_path, overrides, seed)
    source = _sample_coordinates(cfg, video_index, None)
    try:
        clip = source.load()
        assembled = assemble_sample(clip, cfg, epoch, sample_index, variant)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        g = cfg.geometry
        masked_grid = np.zeros((g.grid_t, g.grid_h, g.grid_w), dtype=bool)
        for i in assembled.maskset.masked:
            per = g.grid_h * g.grid_w
            tau, rest = divmod(int(i), per)
            r, c = divmod(rest, g.grid_w)
            masked_grid[tau, r, c] = True
        pixel_mask = np.kron(masked_grid, np.ones((1, g.spatial_patch, g.spatial_patch), dtype=bool))
        for t in range(g.frame_count):
            frame = assembled.clip.frames[t]
            Image.fromarray(np.round(frame * 255).astype(np.uint8)).save(out / f"frame-{t:02d}.png")
            overlay = _overlay_mask_frame(frame, pixel_mask[t // g.temporal_patch])
            Image.fromarray(np.round(overlay * 255).astype(np.uint8)).save(out / f"mask-{t:02d}.png")
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except (ValueError, KeyError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    _log("preview-done", out=str(out_dir), frames=cfg.geometry.frame_count)


@main.command()
@_config_opt
@_set_opt
@_seed_opt
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--video-index", type=int, default=0, show_default=True)
@click.option("--video-id", type=str, default=None)
@click.option("--epoch", type=int, default=0, show_default=True)
@click.option("--sample-index", type=int, default=0, show_default=True)
@click.option("--variant", type=click.Choice(["augmented", "original"]), default="augmented")
def sample(config_path, overrides, seed, out_path, video_index, video_id, epoch, sample_index, variant):
    """Build a single sample and write its shard record bytes to a file.

    The record is byte-identical to the same sample inside a full `gen` run,
    which makes this the parity surface for language bindings.
    """
    cfg = _load_config(config_path, overrides, seed)
    source = _sample_coordinates(cfg, video_index, video_id)
    try:
        clip = source.load()
        assembled = assemble_sample(clip, cfg, epoch, sample_index, variant)
        record = pack_record(assembled.sample)
        with open(out_path, "wb") as fh:
            fh.write(record)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except (ValueError, KeyError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    _log("sample-done", out=str(out_path), bytes=len(record), sample_id=assembled.sample.sample_id)


if __name__ == "__main__":
    main()
