#include "mamm/adapters.hpp"

#include <algorithm>
#include <cmath>

#include "mamm/error.hpp"

namespace mamm {

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("smoothing sigma must be >= 0");
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<size_t>(2 * radius + 1));
    double total = 0.0;
    for (int j = -radius; j <= radius; ++j) {
        taps[static_cast<size_t>(j + radius)] = std::exp(-0.5 * j * j / (sigma * sigma));
        total += taps[static_cast<size_t>(j + radius)];
    }
    for (double& t : taps) t /= total;
    return taps;
}

RowMatrix gaussian_smooth(const RowMatrix& frames, double sigma) {
    const std::vector<double> taps = gaussian_kernel(sigma);
    const int radius = static_cast<int>(taps.size() / 2);
    if (radius == 0) return frames;
    const int n = static_cast<int>(frames.rows());
    RowMatrix out = RowMatrix::Zero(n, frames.cols());
    for (int t = 0; t < n; ++t) {
        double weight = 0.0;
        for (int j = -radius; j <= radius; ++j) {
            const int s = t + j;
            if (s < 0 || s >= n) continue;
            const double w = taps[static_cast<size_t>(j + radius)];
            out.row(t) += w * frames.row(s);
            weight += w;
        }
        out.row(t) /= weight;
    }
    return out;
}

FeatureSequence from_sketch(const std::vector<SketchPoint>& points, double target_fps, double sigma,
                            std::optional<int> frames) {
    if (points.size() < 2) throw InputError("a sketch needs at least 2 points");
    if (!(target_fps > 0.0)) throw InputError("target fps must be positive");
    for (size_t i = 0; i < points.size(); ++i) {
        const SketchPoint& p = points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t_ms)) {
            throw InputError("sketch point " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && p.t_ms < points[i - 1].t_ms) throw InputError("sketch timestamps must be non-decreasing");
    }
    const double t0 = points.front().t_ms;
    const double duration = points.back().t_ms - t0;
    if (!(duration > 0.0)) throw InputError("sketch has zero duration");
    const int count = frames.value_or(std::max(2, static_cast<int>(std::lround(duration / 1000.0 * target_fps)) + 1));
    if (count < 2) throw InputError("a sketch must resample to at least 2 frames");

    RowMatrix resampled(count, 2);
    size_t seg = 0;
    for (int f = 0; f < count; ++f) {
        const double t = f == count - 1 ? points.back().t_ms : t0 + duration * f / (count - 1);
        while (seg + 2 < points.size() && points[seg + 1].t_ms <= t) ++seg;
        const SketchPoint& p0 = points[seg];
        const SketchPoint& p1 = points[seg + 1];
        const double span = p1.t_ms - p0.t_ms;
        const double u = span > 0.0 ? std::clamp((t - p0.t_ms) / span, 0.0, 1.0) : 1.0;
        resampled(f, 0) = p0.x + u * (p1.x - p0.x);
        resampled(f, 1) = p0.y + u * (p1.y - p0.y);
    }
    return FeatureSequence{gaussian_smooth(resampled, sigma), FeatureInfo{target_fps, Domain::sketch2d, {}}};
}

FeatureSequence from_waveform(const std::vector<double>& values, double fps) {
    if (values.empty()) throw InputError("waveform is empty");
    FeatureSequence seq{Eigen::Map<const RowMatrix>(values.data(), static_cast<Eigen::Index>(values.size()), 1),
                        FeatureInfo{fps, Domain::waveform1d, {}}};
    validate(seq);
    return seq;
}

FeatureSequence from_labels(const std::vector<int>& labels, int num_classes, double fps) {
    if (labels.empty()) throw InputError("label sequence is empty");
    if (num_classes < 1) throw InputError("num_classes must be >= 1");
    FeatureSequence seq{RowMatrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes),
                        FeatureInfo{fps, Domain::labels, {}}};
    for (size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] < 0 || labels[t] >= num_classes) {
            throw InputError("label " + std::to_string(labels[t]) + " at frame " + std::to_string(t) +
                             " is outside [0, " + std::to_string(num_classes) + ")");
        }
        seq.frames(static_cast<Eigen::Index>(t), labels[t]) = 1.0;
    }
    validate(seq);
    return seq;
}

FeatureSequence from_audio_features(const RowMatrix& features, double fps, int expected_columns) {
    if (features.rows() == 0) throw InputError("audio feature matrix is empty");
    if (expected_columns > 0 && features.cols() != expected_columns) {
        throw InputError("audio features have " + std::to_string(features.cols()) + " columns, expected " +
                         std::to_string(expected_columns));
    }
    for (Eigen::Index t = 0; t < features.rows(); ++t) {
        if (!features.row(t).allFinite()) throw InputError("audio feature row " + std::to_string(t) + " is not finite");
    }
    FeatureSequence seq{features, FeatureInfo{fps, Domain::audio, {}}};
    validate(seq);
    return seq;
}

FeatureSequence from_motion(const MotionSequence& motion, const MotionChannelWeights& weights) {
    FeatureSequence seq = motion_features(motion);
    seq.frames = seq.frames * motion_channel_weights(motion.joint_count(), weights).asDiagonal();
    return seq;
}

}  // namespace mamm
