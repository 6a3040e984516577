#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mamm/adapters.hpp"
#include "mamm/error.hpp"
#include "mamm/patching.hpp"
#include "mamm/pipeline.hpp"
#include "synth.hpp"

using namespace mamm;

namespace {

AlignmentConfig quick_config() {
    AlignmentConfig c;
    c.stages = 3;
    c.iters_per_stage = 3;
    c.mirror_steps = 30;
    return c;
}

FeatureSequence sine(int frames, double period) {
    std::vector<double> v(frames);
    for (int t = 0; t < frames; ++t) v[t] = std::sin(2.0 * M_PI * t / period);
    return from_waveform(v);
}

double frame_distance(const RowMatrix& x, int i, int j) { return (x.row(i) - x.row(j)).norm(); }

}  // namespace

TEST_CASE("stage schedule") {
    const auto l = stage_lengths(100, 6, 4.0);
    REQUIRE(l.size() == 6);
    CHECK(l.front() == 25);
    CHECK(l.back() == 100);
    CHECK(std::is_sorted(l.begin(), l.end()));
    CHECK(l[3] == std::lround(100 * std::pow(4.0, -2.0 / 5.0)));
    CHECK(stage_lengths(100, 1, 4.0) == std::vector<int>{100});
    CHECK(stage_lengths(5, 4, 10.0).front() == 2);
    CHECK(stage_patch_size(11, 100) == 11);
    CHECK(stage_patch_size(11, 8) == 7);
    CHECK(stage_patch_size(11, 1) == 1);
}

TEST_CASE("soft keyframes extend the coupling") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    FeatureSequence y, x;
    y.frames = RowMatrix::NullaryExpr(10, 2, [&] { return n(rng); });
    x.frames = RowMatrix::NullaryExpr(12, 3, [&] { return n(rng); });
    const PatchSet py = extract_patches(y, 3), px = extract_patches(x, 3);
    const Vector a = Vector::Constant(py.count(), 1.0 / py.count());
    const Vector b = Vector::Constant(px.count(), 1.0 / px.count());
    std::vector<ExamplePair> ex = {{Eigen::RowVectorXd::Ones(6), px.patches.row(2), 2.0},
                                   {Eigen::RowVectorXd::Zero(6), px.patches.row(5), 1.0}};
    const AugmentedPatches aug = augment_soft_keyframes(py, px, px, a, b, ex);
    CHECK(aug.control.count() == py.count() + 2);
    CHECK(aug.original.count() == px.count() + 2);
    CHECK(aug.aligned.patches.bottomRows(1) == px.patches.row(5));
    CHECK(aug.a.tail(2)(0) == doctest::Approx(1.0));
    CHECK(aug.b.tail(2)(1) == doctest::Approx(0.5));
    CHECK(aug.mask.topLeftCorner(py.count(), px.count()).all());
    CHECK(aug.mask(py.count(), px.count()));
    CHECK_FALSE(aug.mask(py.count(), px.count() + 1));
    CHECK_FALSE(aug.mask(py.count(), 0));
    CHECK_FALSE(aug.mask(0, px.count()));
    ex[0].weight = 0.0;
    CHECK_THROWS_AS(augment_soft_keyframes(py, px, px, a, b, ex), InputError);
}

TEST_CASE("hard keyframe bookkeeping") {
    std::vector<HardKeyframe> kf = {{{2, 5}, {10, 13}}, {{8, 9}, {0, 1}}};
    CHECK_NOTHROW(validate_hard_keyframes(kf, 20, 20));
    CHECK_THROWS_AS(validate_hard_keyframes(kf, 20, 12), InputError);
    CHECK_THROWS_AS(validate_hard_keyframes({{{2, 5}, {1, 3}}}, 20, 20), InputError);
    CHECK_THROWS_AS(validate_hard_keyframes({{{2, 5}, {1, 4}}, {{4, 6}, {8, 10}}}, 20, 20), InputError);

    const auto scaled = scale_hard_keyframes({{{0, 10}, {0, 10}}, {{10, 20}, {30, 40}}}, 40, 10, 40, 10);
    REQUIRE(scaled.size() == 2);
    CHECK(scaled[0].control.end <= scaled[1].control.begin);
    for (const auto& s : scaled) {
        CHECK(s.control.length() == s.motion.length());
        CHECK(s.motion.end <= 10);
    }
}

TEST_CASE("restricted mask keeps one column on pinned rows") {
    Mask mask = Mask::Constant(6, 8, true);
    restrict_hard_keyframes(mask, {{{1, 3}, {4, 6}}}, 6, 8);
    CHECK(mask.row(1).count() == 1);
    CHECK(mask(1, 4));
    CHECK(mask(2, 5));
    CHECK(mask.row(0).count() == 8);
}

TEST_CASE("apply_loop closes the seam") {
    FeatureSequence s;
    s.frames.resize(60, 2);
    for (int t = 0; t < 60; ++t) {
        s.frames(t, 0) = 0.1 * t;  // drifts away from the start
        s.frames(t, 1) = std::sin(t * 0.37);
    }
    apply_loop(s, 11);
    std::vector<double> steps;
    for (int t = 0; t + 1 < 60; ++t) steps.push_back(frame_distance(s.frames, t, t + 1));
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    CHECK(frame_distance(s.frames, 0, 59) <= steps[steps.size() / 2]);
    FeatureSequence short_seq;
    short_seq.frames = RowMatrix::Zero(20, 2);
    CHECK_THROWS_AS(apply_loop(short_seq, 11), InputError);
}

TEST_CASE("output length follows the control") {
    const MotionSequence walk = to_internal(synth::walk(60));
    const AlignmentConfig c = quick_config();
    for (const FeatureSequence& control :
         {sine(80, 20.0), sine(45, 10.0), from_labels(std::vector<int>(70, 1), 3),
          from_motion(to_internal(synth::jump(50)))}) {
        const AlignmentResult r = mamm_align(walk, control, c);
        CHECK(r.motion.frame_count() == control.length());
        CHECK(r.features.length() == control.length());
        CHECK(r.motion.fps() == walk.fps());
    }
}

TEST_CASE("trace order and determinism") {
    const MotionSequence walk = to_internal(synth::walk(50));
    const FeatureSequence control = sine(64, 16.0);
    AlignmentConfig c = quick_config();
    std::vector<TraceRecord> seen;
    const AlignmentResult r = mamm_align(walk, control, c, {}, {}, [&](const TraceRecord& t) { seen.push_back(t); });
    REQUIRE(seen.size() == r.trace.size());
    CHECK(seen.size() == static_cast<size_t>(1 + c.stages * c.iters_per_stage));
    CHECK(seen[0].iteration == -1);
    for (size_t i = 1; i < seen.size(); ++i) {
        CHECK(seen[i].stage == static_cast<int>((i - 1) / c.iters_per_stage));
        CHECK(seen[i].iteration == static_cast<int>((i - 1) % c.iters_per_stage));
        CHECK(seen[i].marginal_violation <= 1e-8);
    }
    const AlignmentResult again = mamm_align(walk, control, c);
    CHECK(again.features.frames == r.features.frames);

    c.seed = 7;
    const AlignmentResult s1 = mamm_align(walk, control, c);
    const AlignmentResult s2 = mamm_align(walk, control, c);
    CHECK(s1.features.frames == s2.features.frames);
}

TEST_CASE("hard keyframes pin frames exactly") {
    const MotionSequence walk = to_internal(synth::walk(80));
    const FeatureSequence control = sine(90, 30.0);
    const std::vector<HardKeyframe> kf = {{{5, 15}, {40, 50}}, {{60, 70}, {10, 20}}};
    const AlignmentResult r = mamm_align(walk, control, quick_config(), {}, kf);
    const FeatureSequence orig = motion_features(walk);
    const FeatureSequence out = motion_features(r.motion);
    for (const auto& k : kf)
        for (int s = 0; s < k.control.length(); ++s) {
            CHECK(r.features.frames.row(k.control.begin + s) == orig.frames.row(k.motion.begin + s));
            CHECK((out.frames.row(k.control.begin + s) - orig.frames.row(k.motion.begin + s)).cwiseAbs().maxCoeff() ==
                  0.0);
        }
}

TEST_CASE("soft keyframes are accepted at every stage") {
    const MotionSequence walk = to_internal(synth::walk(60));
    const FeatureSequence control = sine(70, 20.0);
    SoftKeyframe kf;
    kf.control_patch = control.frames.middleRows(10, 11);
    kf.motion_frame_start = 30;
    kf.weight = 0.5;
    const AlignmentResult r = mamm_align(walk, control, quick_config(), {kf});
    CHECK(r.motion.frame_count() == 70);
    kf.motion_frame_start = 55;
    CHECK_THROWS_AS(mamm_align(walk, control, quick_config(), {kf}), InputError);
}

TEST_CASE("looping output") {
    const MotionSequence walk = to_internal(synth::walk(60));
    AlignmentConfig c = quick_config();
    c.loop = true;
    const AlignmentResult r = mamm_align(walk, sine(90, 30.0), c);
    const RowMatrix& x = r.features.frames;
    std::vector<double> steps;
    for (int t = 0; t + 1 < x.rows(); ++t) steps.push_back(frame_distance(x, t, t + 1));
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    CHECK(frame_distance(x, 0, static_cast<int>(x.rows()) - 1) <= steps[steps.size() / 2]);
}

TEST_CASE("input errors") {
    const MotionSequence walk = to_internal(synth::walk(30));
    CHECK_THROWS_AS(mamm_align(walk, sine(8, 4.0), quick_config()), InputError);
    CHECK_THROWS_AS(mamm_align(to_internal(synth::walk(8)), sine(40, 4.0), quick_config()), InputError);
    AlignmentConfig c = quick_config();
    c.alpha = 2.0;
    CHECK_THROWS_AS(mamm_align(walk, sine(40, 4.0), c), InputError);
    c = quick_config();
    c.loop = true;
    CHECK_THROWS_AS(mamm_align(walk, sine(20, 4.0), c), InputError);
    CHECK_THROWS_AS(mamm_align(walk, sine(40, 4.0), quick_config(), {}, {{{0, 5}, {28, 33}}}), InputError);
}
