#pragma once

#include <optional>
#include <vector>

#include "mamm/features.hpp"
#include "mamm/motion.hpp"

namespace mamm {

struct SketchPoint {
    double x = 0.0;
    double y = 0.0;
    double t_ms = 0.0;
};

/// Normalized discrete Gaussian taps for offsets -r..r, r = ceil(3 sigma).
/// sigma = 0 yields the single tap {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Convolves each column with gaussian_kernel(sigma), renormalizing the taps
/// that fall inside the sequence at both ends.
RowMatrix gaussian_smooth(const RowMatrix& frames, double sigma);

/// Resamples a drawn curve at uniform time steps and smooths it. `frames`
/// overrides the count implied by the duration and target_fps.
FeatureSequence from_sketch(const std::vector<SketchPoint>& points, double target_fps, double sigma = 2.0,
                            std::optional<int> frames = std::nullopt);

FeatureSequence from_waveform(const std::vector<double>& values, double fps = 30.0);

/// One-hot rows, width num_classes.
FeatureSequence from_labels(const std::vector<int>& labels, int num_classes, double fps = 30.0);

FeatureSequence from_audio_features(const RowMatrix& features, double fps = 30.0, int expected_columns = 40);

/// V and flattened R scaled by the channel weights; skeletons may differ
/// from the original motion's.
FeatureSequence from_motion(const MotionSequence& motion, const MotionChannelWeights& weights = {});

}  // namespace mamm
