#include <cmath>
#include <random>

#include "doctest.h"
#include "mamm/error.hpp"
#include "mamm/features.hpp"
#include "mamm/metrics.hpp"
#include "mamm/patching.hpp"
#include "synth.hpp"

using namespace mamm;

namespace {

FeatureSequence random_generic(int frames, int width, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    FeatureSequence s;
    s.frames = RowMatrix::NullaryExpr(frames, width, [&] { return n(rng); });
    return s;
}

double max_rotation_error(const FeatureSequence& s) {
    double err = 0.0;
    for (int t = 0; t < s.length(); ++t) {
        for (int b = 0; b < s.info.layout.rotation_blocks; ++b) {
            Mat3 r;
            for (int k = 0; k < 9; ++k) r(k / 3, k % 3) = s.frames(t, s.info.layout.rotation_begin() + 9 * b + k);
            err = std::max(err, (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff());
            err = std::max(err, std::abs(r.determinant() - 1.0));
        }
    }
    return err;
}

}  // namespace

TEST_CASE("extract_patches lays out consecutive frames") {
    std::mt19937_64 rng(1);
    const FeatureSequence s = random_generic(20, 3, rng);
    const PatchSet ps = extract_patches(s, 5);
    CHECK(ps.count() == 16);
    CHECK(ps.patches.cols() == 15);
    for (int i = 0; i < ps.count(); ++i)
        for (int f = 0; f < 5; ++f)
            for (int c = 0; c < 3; ++c) CHECK(ps.patches(i, 3 * f + c) == s.frames(i + f, c));
    CHECK_THROWS_AS(extract_patches(s, 21), InputError);
    CHECK(extract_patches(s, 20).count() == 1);
}

TEST_CASE("blend inverts extract") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 10; ++k) {
        const FeatureSequence g = random_generic(30 + k, 4, rng);
        const PatchSet ps = extract_patches(g, 7);
        CHECK((blend_patches(ps.patches, 7, g.info).frames - g.frames).cwiseAbs().maxCoeff() < 1e-12);

        const FeatureSequence m = motion_features(to_internal(synth::random_clip(40, rng)));
        const FeatureSequence back = blend_patches(extract_patches(m, 11).patches, 11, m.info);
        CHECK((back.frames - m.frames).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(back.info.layout == m.info.layout);
    }
}

TEST_CASE("blend averages overlapping slots") {
    std::mt19937_64 rng(3);
    const int p = 4, n = 9, w = 2;
    RowMatrix patches = random_generic(n, p * w, rng).frames;
    const FeatureSequence out = blend_patches(patches, p, {});
    REQUIRE(out.length() == n + p - 1);
    for (int t = 0; t < out.length(); ++t) {
        for (int c = 0; c < w; ++c) {
            double sum = 0.0;
            int count = 0;
            for (int i = 0; i < n; ++i) {
                const int slot = t - i;
                if (slot < 0 || slot >= p) continue;
                sum += patches(i, slot * w + c);
                ++count;
            }
            CHECK(out.frames(t, c) == doctest::Approx(sum / count).epsilon(1e-14));
        }
    }
}

TEST_CASE("blended rotation blocks are rotations") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.3);
    const FeatureSequence m = motion_features(to_internal(synth::random_clip(30, rng)));
    PatchSet ps = extract_patches(m, 5);
    ps.patches += RowMatrix::NullaryExpr(ps.patches.rows(), ps.patches.cols(), [&] { return noise(rng); });
    CHECK(max_rotation_error(blend_patches(ps.patches, 5, m.info)) < 1e-9);
}

TEST_CASE("downsample and upsample") {
    std::mt19937_64 rng(5);
    const FeatureSequence m = motion_features(to_internal(synth::walk(100)));
    for (double f : {1.0, 2.0, 3.7, 10.0}) {
        const FeatureSequence d = downsample(m, f);
        CHECK(d.length() == std::max(2, static_cast<int>(std::lround(100 / f))));
        CHECK(d.info.fps == doctest::Approx(m.info.fps * d.length() / 100.0));
        // total displacement is preserved
        CHECK((d.frames.leftCols(3).colwise().sum() - m.frames.leftCols(3).colwise().sum()).norm() < 1e-9);
        CHECK(max_rotation_error(d) < 1e-12);

        const FeatureSequence u = upsample(d, 100);
        CHECK(u.length() == 100);
        CHECK((u.frames.leftCols(3).colwise().sum() - m.frames.leftCols(3).colwise().sum()).norm() < 1e-9);
        CHECK(max_rotation_error(u) < 1e-9);
    }
    // identity when the length is unchanged
    CHECK((upsample(m, 100).frames - m.frames).cwiseAbs().maxCoeff() < 1e-12);

    // generic channels average over windows
    FeatureSequence g = random_generic(12, 2, rng);
    const FeatureSequence d = downsample_to(g, 4);
    for (int j = 0; j < 4; ++j)
        CHECK((d.frames.row(j) - g.frames.middleRows(3 * j, 3).colwise().mean()).norm() < 1e-12);

    // constant signals stay constant
    g.frames.setConstant(2.5);
    CHECK((upsample(g, 31).frames.array() - 2.5).abs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(downsample(g, 0.5), InputError);
}

TEST_CASE("pairwise_l2 matches direct loops") {
    std::mt19937_64 rng(6);
    const FeatureSequence a = random_generic(15, 3, rng), b = random_generic(12, 3, rng);
    const PatchSet pa = extract_patches(a, 4), pb = extract_patches(b, 4);
    Vector frame_w(3);
    frame_w << 1.0, 0.5, 2.0;
    Vector patch_w(12);
    for (int c = 0; c < 12; ++c) patch_w[c] = 0.1 + c;

    for (const Vector& w : {Vector(), frame_w, patch_w}) {
        const Matrix d = pairwise_l2(pa, pb, w).values;
        for (int i = 0; i < pa.count(); ++i) {
            for (int k = 0; k < pb.count(); ++k) {
                double s = 0.0;
                for (int c = 0; c < 12; ++c) {
                    const double wc = w.size() == 0 ? 1.0 : (w.size() == 3 ? w[c % 3] : w[c]);
                    const double diff = wc * (pa.patches(i, c) - pb.patches(k, c));
                    s += diff * diff;
                }
                CHECK(d(i, k) == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
            }
        }
        if (w.size() != 12) {
            const Matrix fast = patch_distances(a, b, 4, w).values;
            CHECK((fast - d).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    CHECK_THROWS_AS(pairwise_l2(pa, extract_patches(random_generic(10, 2, rng), 4)), InputError);
    CHECK_THROWS_AS(pairwise_l2(pa, pb, Vector::Ones(5)), InputError);
}

TEST_CASE("self distances") {
    std::mt19937_64 rng(7);
    FeatureSequence a = random_generic(30, 4, rng);
    a.frames.array() += 1e6;  // large offset, small differences
    const Matrix d = self_patch_distances(a, 5).values;
    const Matrix naive = pairwise_l2(extract_patches(a, 5), extract_patches(a, 5)).values;
    CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d - naive).cwiseAbs().maxCoeff() < 1e-6);
    const Matrix s = self_distances(extract_patches(a, 5)).values;
    CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalize") {
    Matrix m(2, 2);
    m << 0, 2, 4, 6;
    CHECK(normalize({m}, Normalization::max).values.maxCoeff() == doctest::Approx(1.0));
    CHECK(normalize({m}, Normalization::mean).values.mean() == doctest::Approx(1.0));
    CHECK(normalize({m}, Normalization::none).values == m);
    CHECK(normalize({m}, Normalization::max).normalization == Normalization::max);
    const Matrix z = Matrix::Zero(3, 3);
    CHECK(normalize({z}, Normalization::max).values == z);
    CHECK(normalize({z}, Normalization::mean).values == z);
    CHECK(normalization_from_string("mean") == Normalization::mean);
    CHECK_THROWS_AS(normalization_from_string("median"), InputError);
}
