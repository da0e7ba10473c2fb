"""Deterministic synthetic-motion augmentation and masking engine.

Builds training-ready binary shards for masked video modeling: smoothed
random object trajectories, alpha-composited motion infusion, space-time
tokenization, tube/trajectory masking, teacher-feature targets, and loss
oracles.
"""

from .compositor import (
    Clip,
    FootprintMask,
    MotionPlan,
    SegmentedObject,
    composite,
    composite_many,
    make_background,
    resize_object,
    transform_sprite,
)
from .geometry import (
    AffinePlacement,
    Trajectory,
    TrajectoryConfig,
    TransformTrack,
    downsample_path,
    gaussian_smooth,
    generate_raw_path,
    make_trajectory,
    placement_at,
    round_half_up,
    sample_keyframe_transforms,
)
from .masking import (
    MaskConfig,
    MaskSet,
    mask_apply,
    object_token_set,
    trajectory_mask,
    tube_mask,
)
from .pipeline import (
    PipelineConfig,
    assemble_sample,
    build_sample,
    derive_seed,
    effective_epochs,
    generate,
    schedule_variant,
)
from .shards import (
    ShardIntegrityError,
    TrainingSample,
    pack_record,
    read_shards,
    unpack_record,
    write_shards,
)
from .targets import (
    align_features,
    feature_loss,
    file_teacher,
    mock_teacher,
    pixel_loss,
    pixel_targets,
)
from .tokenizer import TokenGeometry, cube_of_token, token_of_pixel, tokenize, untokenize

__version__ = "0.1.0"
