#pragma once

#include <string>

#include "mamm/patching.hpp"

namespace mamm {

enum class Normalization { none, max, mean };

std::string to_string(Normalization mode);
Normalization normalization_from_string(const std::string& name);

struct DistanceMatrix {
    Matrix values;
    Normalization normalization = Normalization::none;
};

/// Euclidean distances between every patch of `a` and every patch of `b`.
/// `channel_weights` scales channels before the distance; it is either empty
/// (unit weights), one weight per frame channel, or one per patch channel.
DistanceMatrix pairwise_l2(const PatchSet& a, const PatchSet& b, const Vector& channel_weights = {});

/// Symmetric variant for a set against itself: exact zero diagonal.
DistanceMatrix self_distances(const PatchSet& a, const Vector& channel_weights = {});

/// Same values as pairwise_l2(extract_patches(a, p), extract_patches(b, p), w)
/// computed from frame-level distances, which is cheaper by a factor of p.
DistanceMatrix patch_distances(const FeatureSequence& a, const FeatureSequence& b, int patch_size,
                               const Vector& frame_weights = {});
DistanceMatrix self_patch_distances(const FeatureSequence& a, int patch_size, const Vector& frame_weights = {});

/// Max or mean entry, or 1 for `none`. Zero when the matrix is all zeros.
double normalization_scale(const Matrix& values, Normalization mode);

/// Divides by normalization_scale; all-zero matrices are returned unchanged.
DistanceMatrix normalize(const DistanceMatrix& d, Normalization mode);

}  // namespace mamm
