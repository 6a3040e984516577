#include "mamm/metrics.hpp"

#include <cmath>

#include "mamm/error.hpp"

namespace mamm {

namespace {

// Squared distances between rows of two matrices. Entries that lose most of
// their precision to cancellation are recomputed directly.
Matrix squared_row_distances(const RowMatrix& a, const RowMatrix& b) {
    const Vector na = a.rowwise().squaredNorm();
    const Vector nb = b.rowwise().squaredNorm();
    Matrix sq = -2.0 * (a * b.transpose());
    sq.colwise() += na;
    sq.rowwise() += nb.transpose();
    for (Eigen::Index k = 0; k < sq.cols(); ++k) {
        for (Eigen::Index i = 0; i < sq.rows(); ++i) {
            double& v = sq(i, k);
            if (v < 1e-8 * (na[i] + nb[k])) v = (a.row(i) - b.row(k)).squaredNorm();
        }
    }
    return sq;
}

RowMatrix apply_weights(const RowMatrix& m, const Vector& weights, int frame_width) {
    if (weights.size() == 0) return m;
    if (weights.size() == m.cols()) return m * weights.asDiagonal();
    if (weights.size() == frame_width && m.cols() % frame_width == 0) {
        RowMatrix out = m;
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.col(c) *= weights[c % frame_width];
        return out;
    }
    throw InputError("channel weight vector has " + std::to_string(weights.size()) + " entries, expected " +
                     std::to_string(frame_width) + " or " + std::to_string(m.cols()));
}

// Sums frame-level squared distances along diagonals of length p.
Matrix patch_sums(const Matrix& frame_sq, int patch_size) {
    const Eigen::Index rows = frame_sq.rows() - patch_size + 1;
    const Eigen::Index cols = frame_sq.cols() - patch_size + 1;
    Matrix out = Matrix::Zero(rows, cols);
    for (int s = 0; s < patch_size; ++s) out += frame_sq.block(s, s, rows, cols);
    return out;
}

}  // namespace

std::string to_string(Normalization mode) {
    switch (mode) {
        case Normalization::none: return "none";
        case Normalization::max: return "max";
        case Normalization::mean: return "mean";
    }
    return "none";
}

Normalization normalization_from_string(const std::string& name) {
    if (name == "max") return Normalization::max;
    if (name == "mean") return Normalization::mean;
    if (name == "none") return Normalization::none;
    throw InputError("unknown normalization '" + name + "' (expected max or mean)");
}

DistanceMatrix pairwise_l2(const PatchSet& a, const PatchSet& b, const Vector& channel_weights) {
    if (a.patches.cols() != b.patches.cols()) {
        throw InputError("patch width mismatch: " + std::to_string(a.patches.cols()) + " vs " +
                         std::to_string(b.patches.cols()));
    }
    const RowMatrix wa = apply_weights(a.patches, channel_weights, a.frame_width);
    const RowMatrix wb = apply_weights(b.patches, channel_weights, b.frame_width);
    return {squared_row_distances(wa, wb).cwiseMax(0.0).cwiseSqrt(), Normalization::none};
}

DistanceMatrix self_distances(const PatchSet& a, const Vector& channel_weights) {
    DistanceMatrix d = pairwise_l2(a, a, channel_weights);
    d.values = 0.5 * (d.values + d.values.transpose()).eval();
    d.values.diagonal().setZero();
    return d;
}

DistanceMatrix patch_distances(const FeatureSequence& a, const FeatureSequence& b, int patch_size,
                               const Vector& frame_weights) {
    if (a.width() != b.width()) {
        throw InputError("frame width mismatch: " + std::to_string(a.width()) + " vs " + std::to_string(b.width()));
    }
    if (patch_size < 1 || a.length() < patch_size || b.length() < patch_size) {
        throw InputError("sequence shorter than the patch size " + std::to_string(patch_size));
    }
    const Matrix frame_sq = squared_row_distances(apply_weights(a.frames, frame_weights, a.width()),
                                                  apply_weights(b.frames, frame_weights, b.width()));
    return {patch_sums(frame_sq.cwiseMax(0.0), patch_size).cwiseSqrt(), Normalization::none};
}

DistanceMatrix self_patch_distances(const FeatureSequence& a, int patch_size, const Vector& frame_weights) {
    if (patch_size < 1 || a.length() < patch_size) {
        throw InputError("sequence shorter than the patch size " + std::to_string(patch_size));
    }
    const RowMatrix w = apply_weights(a.frames, frame_weights, a.width());
    Matrix frame_sq = squared_row_distances(w, w).cwiseMax(0.0);
    frame_sq = 0.5 * (frame_sq + frame_sq.transpose()).eval();
    frame_sq.diagonal().setZero();
    Matrix d = patch_sums(frame_sq, patch_size).cwiseSqrt();
    d = 0.5 * (d + d.transpose()).eval();
    d.diagonal().setZero();
    return {std::move(d), Normalization::none};
}

double normalization_scale(const Matrix& values, Normalization mode) {
    switch (mode) {
        case Normalization::none: return 1.0;
        case Normalization::max: return values.size() ? values.maxCoeff() : 0.0;
        case Normalization::mean: return values.size() ? values.mean() : 0.0;
    }
    return 1.0;
}

DistanceMatrix normalize(const DistanceMatrix& d, Normalization mode) {
    if (d.values.size() == 0) throw InputError("cannot normalize an empty distance matrix");
    const double scale = normalization_scale(d.values, mode);
    DistanceMatrix out{d.values, mode};
    if (scale > 0.0) out.values /= scale;
    return out;
}

}  // namespace mamm
