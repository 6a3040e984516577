#pragma once

#include <string>

#include "mamm/motion.hpp"
#include "mamm/types.hpp"

namespace mamm {

enum class Domain { motion, sketch2d, waveform1d, labels, audio };

std::string to_string(Domain domain);
Domain domain_from_string(const std::string& name);

/// Channel roles inside a frame. A frame is laid out as
/// [displacement channels | rotation_blocks x 9 (row-major 3x3) | generic].
struct FeatureLayout {
    int displacement = 0;
    int rotation_blocks = 0;

    int rotation_begin() const { return displacement; }
    int generic_begin() const { return displacement + 9 * rotation_blocks; }
    bool operator==(const FeatureLayout&) const = default;
};

struct FeatureInfo {
    double fps = 30.0;
    Domain domain = Domain::waveform1d;
    FeatureLayout layout;
};

/// Time-indexed feature vectors for any domain (frames x width).
struct FeatureSequence {
    RowMatrix frames;
    FeatureInfo info;

    int length() const { return static_cast<int>(frames.rows()); }
    int width() const { return static_cast<int>(frames.cols()); }
};

/// Throws InputError on NaN/Inf entries or a layout wider than the frames.
void validate(const FeatureSequence& seq);

/// Relative weights of the two motion channel groups used for patch distances.
struct MotionChannelWeights {
    double displacement = 1.0;
    double rotation = 1.0;
};

/// Per-frame [V | R(joint 0) | ... | R(joint J-1)], unweighted.
FeatureSequence motion_features(const MotionSequence& motion);

/// Per-channel weight vector matching motion_features' layout.
Vector motion_channel_weights(int joints, const MotionChannelWeights& weights);

/// Inverse of motion_features; rotation blocks must already be rotations.
MotionSequence features_to_motion(const FeatureSequence& features, const Skeleton& skeleton);

}  // namespace mamm
