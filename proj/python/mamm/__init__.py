"""Metric-aligning motion matching: align a motion clip to a control signal."""

from ._core import (
    AlignmentResult,
    BvhClip,
    FeatureSequence,
    InputError,
    MotionSequence,
    RootAnchor,
    SolverError,
    align,
    blend_patches,
    extract_patches,
    from_audio_features,
    from_internal,
    from_labels,
    from_motion,
    from_sketch,
    from_waveform,
    gw_linearized_cost,
    gw_loss,
    motion_features,
    parse_bvh,
    project_rotation,
    read_bvh,
    root_anchor,
    self_patch_distances,
    semi_unbalanced_sinkhorn,
    solve_fsugw,
    to_clip,
    to_internal,
    write_bvh,
)

__all__ = [name for name in dir() if not name.startswith("_")]
