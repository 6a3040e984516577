#pragma once

#include "mamm/features.hpp"

namespace mamm {

/// Overlapping windows of `patch_size` frames at stride 1. Row i holds frames
/// [i, i + patch_size) concatenated.
struct PatchSet {
    RowMatrix patches;
    int patch_size = 1;
    int frame_width = 0;
    int source_length = 0;

    int count() const { return static_cast<int>(patches.rows()); }
};

PatchSet extract_patches(const FeatureSequence& seq, int patch_size);

/// Averages every patch slot covering a frame. Rotation blocks named by the
/// layout are projected back onto SO(3) after averaging.
FeatureSequence blend_patches(const RowMatrix& patches, int patch_size, const FeatureInfo& info = {});

/// Re-projects every rotation block of every frame in place.
void project_rotation_blocks(RowMatrix& frames, const FeatureLayout& layout);

/// Output length round(T / factor). Displacement channels are summed over
/// each window, rotation blocks take the window's center frame and generic
/// channels are averaged.
FeatureSequence downsample(const FeatureSequence& seq, double factor);
FeatureSequence downsample_to(const FeatureSequence& seq, int target_length);

/// Linear interpolation to `target_length` >= T frames. Displacement is
/// redistributed so partial sums are conserved; rotations are interpolated
/// entrywise and re-projected.
FeatureSequence upsample(const FeatureSequence& seq, int target_length);

}  // namespace mamm
