import numpy as np
import pytest

from motionforge.tokenizer import (
    TokenGeometry,
    cube_of_token,
    flat_of_grid,
    grid_of_token,
    token_of_pixel,
    tokenize,
    untokenize,
)

from conftest import rng_of


def test_default_geometry_token_count(default_geom):
    assert default_geom.token_count == 8 * 14 * 14 == 1568


def test_non_divisible_dimensions_rejected():
    with pytest.raises(ValueError):
        TokenGeometry(frame_count=15, height=224, width=224)
    with pytest.raises(ValueError):
        TokenGeometry(frame_count=16, height=225, width=224)


def test_round_trip_identity(small_geom):
    clip = rng_of(0).random((4, 32, 32, 3))
    blocks = tokenize(clip, small_geom)
    assert blocks.shape == (small_geom.token_count, 2, 16, 16, 3)
    assert np.array_equal(untokenize(blocks, small_geom), clip)


def test_block_contents_match_cubes(small_geom):
    clip = rng_of(1).random((4, 32, 32, 3))
    blocks = tokenize(clip, small_geom)
    for i in range(small_geom.token_count):
        ts, hs, ws = cube_of_token(i, small_geom)
        cube = clip[ts.start : ts.stop, hs.start : hs.stop, ws.start : ws.stop]
        assert np.array_equal(blocks[i], cube)


def test_index_examples(default_geom):
    assert token_of_pixel(0, 0, 0, default_geom) == 0
    # pixel (2,16,16) -> grid (1,1,1) -> 1*196 + 1*14 + 1 = 211
    assert token_of_pixel(2, 16, 16, default_geom) == 211
    ts, hs, ws = cube_of_token(default_geom.token_count - 1, default_geom)
    assert (ts.start, ts.stop) == (14, 16)
    assert (hs.start, hs.stop) == (208, 224)
    assert (ws.start, ws.stop) == (208, 224)


def test_flat_grid_bijection_exhaustive(default_geom):
    seen = set()
    for i in range(default_geom.token_count):
        tau, r, c = grid_of_token(i, default_geom)
        assert flat_of_grid(tau, r, c, default_geom) == i
        seen.add((tau, r, c))
    assert len(seen) == default_geom.token_count


def test_partition_covers_every_pixel(small_geom):
    counts = np.zeros((4, 32, 32), dtype=int)
    for i in range(small_geom.token_count):
        ts, hs, ws = cube_of_token(i, small_geom)
        counts[ts.start : ts.stop, hs.start : hs.stop, ws.start : ws.stop] += 1
    assert np.all(counts == 1)


def test_pixel_to_token_consistent_with_cubes(small_geom):
    for t in range(4):
        for h in range(0, 32, 7):
            for w in range(0, 32, 7):
                i = token_of_pixel(t, h, w, small_geom)
                ts, hs, ws = cube_of_token(i, small_geom)
                assert t in ts and h in hs and w in ws


def test_out_of_range_rejected(small_geom):
    with pytest.raises(IndexError):
        token_of_pixel(4, 0, 0, small_geom)
    with pytest.raises(IndexError):
        cube_of_token(small_geom.token_count, small_geom)


def test_tokenize_shape_mismatch(small_geom):
    with pytest.raises(ValueError):
        tokenize(np.zeros((4, 32, 33, 3)), small_geom)
