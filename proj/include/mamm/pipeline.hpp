#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mamm/features.hpp"
#include "mamm/fsugw.hpp"
#include "mamm/metrics.hpp"
#include "mamm/motion.hpp"

namespace mamm {

struct AlignmentConfig {
    double alpha = 0.8;
    double lambda = 0.05;
    double epsilon = 1.0;
    int stages = 6;
    int iters_per_stage = 20;
    int patch_size = 11;
    double coarse_factor = 4.0;  // coarsest stage is this many times shorter
    std::optional<Normalization> norm_x;  // unset: same as the control's mode
    std::optional<Normalization> norm_y;  // unset: default_normalization(domain)
    MotionChannelWeights channel_weights;
    bool loop = false;

    int mirror_steps = 100;
    int sinkhorn_steps = 200;
    double tol_objective = 1e-5;
    double tol_marginal = 1e-8;

    /// Enables a tiny seeded jitter of the first plan to break exact ties.
    std::optional<std::uint64_t> seed;

    void validate() const;
    SolverParams solver_params() const;
};

/// max for sketch, waveform and label controls; mean for audio and motion.
Normalization default_normalization(Domain domain);

/// Geometric schedule from final / coarse_factor up to final, N entries.
std::vector<int> stage_lengths(int final_length, int stages, double coarse_factor);

/// `patch_size`, or stage_length - 1 when the stage is too short.
int stage_patch_size(int patch_size, int stage_length);

struct FrameRange {
    int begin = 0;
    int end = 0;  // exclusive
    int length() const { return end - begin; }
};

/// Control patch (patch_size x control width) paired with the original-motion
/// patch starting at `motion_frame_start`.
struct SoftKeyframe {
    RowMatrix control_patch;
    int motion_frame_start = 0;
    double weight = 1.0;
};

/// Control frames pinned to an equally long range of original frames.
struct HardKeyframe {
    FrameRange control;
    FrameRange motion;
};

/// One example pair at stage resolution.
struct ExamplePair {
    Eigen::RowVectorXd control_patch;
    Eigen::RowVectorXd motion_patch;
    double weight = 1.0;
};

struct AugmentedPatches {
    PatchSet control;   // Y patches followed by example control patches
    PatchSet original;  // X patches followed by example motion patches
    PatchSet aligned;   // X' patches followed by example motion patches
    Vector a;
    Vector b;
    Mask mask;
};

/// Appends the example pairs to every patch set and to the marginals (each
/// pair gets weight / count of both), and builds the mask that ties example
/// rows and columns to their partner only.
AugmentedPatches augment_soft_keyframes(const PatchSet& control, const PatchSet& original, const PatchSet& aligned,
                                        const Vector& a, const Vector& b, const std::vector<ExamplePair>& examples);

/// Forbids every column but the paired one on pinned rows. Rows and columns
/// index the leading (non-example) block.
void restrict_hard_keyframes(Mask& mask, const std::vector<HardKeyframe>& keyframes, int rows, int cols);

/// Sets pinned rows of the plan to a delta of mass a_i on the paired patch
/// and copies the pinned original frames into `aligned`.
void apply_hard_keyframes(TransportPlan& plan, FeatureSequence& aligned, const FeatureSequence& original,
                          const std::vector<HardKeyframe>& keyframes, int patch_size);

/// Frame half of apply_hard_keyframes.
void pin_frames(FeatureSequence& aligned, const FeatureSequence& original, const std::vector<HardKeyframe>& keyframes);

/// Throws InputError for out-of-bounds, unequal or overlapping ranges.
void validate_hard_keyframes(const std::vector<HardKeyframe>& keyframes, int control_length, int original_length);

/// Hard keyframes mapped to a stage with the given lengths.
std::vector<HardKeyframe> scale_hard_keyframes(const std::vector<HardKeyframe>& keyframes, int control_full,
                                               int control_stage, int original_full, int original_stage);

/// Spreads the gap between the last and first frame over the last and first
/// patch_size - 1 frames with linear ramps, so the last frame ends on the
/// first (closed loop).
void apply_loop(FeatureSequence& aligned, int patch_size);

struct TraceRecord {
    int stage = 0;
    int iteration = 0;  // -1 for the pure-GW initialization
    ObjectiveTerms objective;
    double marginal_violation = 0.0;
    int solver_steps = 0;
};

/// Called after every solver run, in order. Throwing aborts the alignment.
using TraceObserver = std::function<void(const TraceRecord&)>;

struct AlignmentResult {
    MotionSequence motion;
    FeatureSequence features;
    std::vector<TraceRecord> trace;
};

/// Coarse-to-fine metric-aligning motion matching of `original` to `control`.
/// The result has exactly as many frames as the control.
AlignmentResult mamm_align(const MotionSequence& original, const FeatureSequence& control,
                           const AlignmentConfig& config, const std::vector<SoftKeyframe>& soft_keyframes = {},
                           const std::vector<HardKeyframe>& hard_keyframes = {}, const TraceObserver& observer = {});

}  // namespace mamm
