#include "mamm/patching.hpp"

#include <cmath>

#include "mamm/error.hpp"

namespace mamm {

namespace {

// Window boundary j of n windows over T frames: round(j * T / n).
int window_start(int j, int source, int windows) {
    return static_cast<int>((2LL * j * source + windows) / (2LL * windows));
}

}  // namespace

PatchSet extract_patches(const FeatureSequence& seq, int patch_size) {
    if (patch_size < 1) throw InputError("patch size must be at least 1");
    const int frames = seq.length();
    if (frames < patch_size) {
        throw InputError("sequence of " + std::to_string(frames) + " frames is shorter than the patch size " +
                         std::to_string(patch_size) + "; use a smaller patch size at coarse stages");
    }
    const int width = seq.width();
    PatchSet set;
    set.patch_size = patch_size;
    set.frame_width = width;
    set.source_length = frames;
    set.patches.resize(frames - patch_size + 1, static_cast<Eigen::Index>(patch_size) * width);
    for (int i = 0; i < set.count(); ++i) {
        // Consecutive frames are contiguous in a row-major matrix.
        set.patches.row(i) = Eigen::Map<const Eigen::RowVectorXd>(seq.frames.row(i).data(), set.patches.cols());
    }
    return set;
}

void project_rotation_blocks(RowMatrix& frames, const FeatureLayout& layout) {
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
        for (int j = 0; j < layout.rotation_blocks; ++j) {
            Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> block(&frames(t, layout.rotation_begin() + 9 * j));
            block = project_rotation(block);
        }
    }
}

FeatureSequence blend_patches(const RowMatrix& patches, int patch_size, const FeatureInfo& info) {
    if (patch_size < 1 || patches.rows() < 1 || patches.cols() % patch_size != 0) {
        throw InputError("invalid patch matrix for blending");
    }
    const int count = static_cast<int>(patches.rows());
    const int width = static_cast<int>(patches.cols() / patch_size);
    const int frames = count + patch_size - 1;

    FeatureSequence out;
    out.info = info;
    out.frames = RowMatrix::Zero(frames, width);
    for (int i = 0; i < count; ++i) {
        for (int s = 0; s < patch_size; ++s) {
            out.frames.row(i + s) += patches.block(i, static_cast<Eigen::Index>(s) * width, 1, width);
        }
    }
    for (int t = 0; t < frames; ++t) {
        const int covering = std::min(t, count - 1) - std::max(0, t - patch_size + 1) + 1;
        out.frames.row(t) /= static_cast<double>(covering);
    }
    project_rotation_blocks(out.frames, info.layout);
    return out;
}

FeatureSequence downsample(const FeatureSequence& seq, double factor) {
    if (!(factor >= 1.0)) throw InputError("downsample factor must be >= 1");
    return downsample_to(seq, static_cast<int>(std::lround(seq.length() / factor)));
}

FeatureSequence downsample_to(const FeatureSequence& seq, int target_length) {
    const int source = seq.length();
    if (target_length < 2) throw InputError("downsampled sequence would be shorter than 2 frames");
    if (target_length > source) throw InputError("downsample target longer than the source");
    if (target_length == source) return seq;

    const FeatureLayout& layout = seq.info.layout;
    FeatureSequence out;
    out.info = seq.info;
    out.info.fps = seq.info.fps * target_length / source;
    out.frames.resize(target_length, seq.width());
    for (int j = 0; j < target_length; ++j) {
        const int begin = window_start(j, source, target_length);
        const int end = window_start(j + 1, source, target_length);
        const int n = end - begin;
        const int center = begin + (n - 1) / 2;
        auto window = seq.frames.middleRows(begin, n);
        out.frames.row(j).head(layout.displacement) = window.leftCols(layout.displacement).colwise().sum();
        const int rot = 9 * layout.rotation_blocks;
        out.frames.row(j).segment(layout.rotation_begin(), rot) = seq.frames.row(center).segment(layout.rotation_begin(), rot);
        const int generic = seq.width() - layout.generic_begin();
        out.frames.row(j).tail(generic) = window.rightCols(generic).colwise().mean();
    }
    return out;
}

FeatureSequence upsample(const FeatureSequence& seq, int target_length) {
    const int source = seq.length();
    if (target_length < source) throw InputError("upsample target shorter than the source");
    if (target_length == source) return seq;

    const FeatureLayout& layout = seq.info.layout;
    const double scale = static_cast<double>(source) / target_length;
    FeatureSequence out;
    out.info = seq.info;
    out.info.fps = seq.info.fps * target_length / source;
    out.frames.resize(target_length, seq.width());

    // Pose channels: sample at frame centers, extrapolating linearly past the ends.
    const int pose_begin = layout.displacement;
    const int pose_width = seq.width() - pose_begin;
    for (int i = 0; i < target_length; ++i) {
        if (source == 1) {
            out.frames.row(i).tail(pose_width) = seq.frames.row(0).tail(pose_width);
            continue;
        }
        const double x = (i + 0.5) * scale - 0.5;
        const int i0 = std::clamp(static_cast<int>(std::floor(x)), 0, source - 2);
        const double frac = x - i0;
        out.frames.row(i).tail(pose_width) =
            (1.0 - frac) * seq.frames.row(i0).tail(pose_width) + frac * seq.frames.row(i0 + 1).tail(pose_width);
    }
    project_rotation_blocks(out.frames, layout);

    // Displacement: interpolate the cumulative sum at target frame boundaries.
    if (layout.displacement > 0) {
        const int d = layout.displacement;
        RowMatrix cumulative = RowMatrix::Zero(source + 1, d);
        for (int t = 0; t < source; ++t) cumulative.row(t + 1) = cumulative.row(t) + seq.frames.row(t).head(d);
        auto at = [&](int boundary) -> Eigen::RowVectorXd {
            const double u = boundary * scale;
            const int j = std::min(static_cast<int>(std::floor(u)), source - 1);
            const double frac = u - j;
            return (1.0 - frac) * cumulative.row(j) + frac * cumulative.row(j + 1);
        };
        Eigen::RowVectorXd previous = at(0);
        for (int i = 0; i < target_length; ++i) {
            Eigen::RowVectorXd next = i + 1 == target_length ? Eigen::RowVectorXd(cumulative.row(source)) : at(i + 1);
            out.frames.row(i).head(d) = next - previous;
            previous = std::move(next);
        }
    }
    return out;
}

}  // namespace mamm
