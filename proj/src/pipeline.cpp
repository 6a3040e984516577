#include "mamm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mamm/error.hpp"
#include "mamm/patching.hpp"

namespace mamm {

namespace {

struct MarginalsAndMask {
    Vector a;
    Vector b;
    Mask mask;
};

MarginalsAndMask example_marginals(const Vector& a, const Vector& b, const std::vector<ExamplePair>& examples) {
    const auto rows = a.size();
    const auto cols = b.size();
    const auto count = static_cast<Eigen::Index>(examples.size());
    MarginalsAndMask out{Vector(rows + count), Vector(cols + count), Mask::Constant(rows + count, cols + count, false)};
    out.a.head(rows) = a;
    out.b.head(cols) = b;
    out.mask.topLeftCorner(rows, cols).setConstant(true);
    for (Eigen::Index e = 0; e < count; ++e) {
        const double w = examples[static_cast<size_t>(e)].weight;
        if (!(w > 0.0)) throw InputError("soft keyframe weight must be positive");
        out.a[rows + e] = w / static_cast<double>(count);
        out.b[cols + e] = w / static_cast<double>(count);
        out.mask(rows + e, cols + e) = true;
    }
    return out;
}

PatchSet append_rows(const PatchSet& base, const RowMatrix& extra) {
    PatchSet out = base;
    out.patches.conservativeResize(base.count() + extra.rows(), Eigen::NoChange);
    out.patches.bottomRows(extra.rows()) = extra;
    return out;
}

PatchSet as_patch_set(const RowMatrix& rows, int patch_size, int frame_width) {
    return PatchSet{rows, patch_size, frame_width, patch_size};
}

// Self distances of a sequence's patches followed by example patches.
Matrix augmented_self_distances(const FeatureSequence& seq, int patch_size, const Vector& weights,
                                const RowMatrix& examples) {
    Matrix base = self_patch_distances(seq, patch_size, weights).values;
    if (examples.rows() == 0) return base;
    const PatchSet patches = extract_patches(seq, patch_size);
    const PatchSet ex = as_patch_set(examples, patch_size, seq.width());
    const auto n = base.rows();
    const auto e = examples.rows();
    Matrix out(n + e, n + e);
    out.topLeftCorner(n, n) = base;
    const Matrix cross = pairwise_l2(ex, patches, weights).values;
    out.bottomLeftCorner(e, n) = cross;
    out.topRightCorner(n, e) = cross.transpose();
    out.bottomRightCorner(e, e) = self_distances(ex, weights).values;
    return out;
}

// Distances from aligned patches (rows) to original patches (columns), each
// followed by the example motion patches.
Matrix augmented_cross_distances(const FeatureSequence& aligned, const FeatureSequence& original, int patch_size,
                                 const Vector& weights, const RowMatrix& examples) {
    Matrix base = patch_distances(aligned, original, patch_size, weights).values;
    if (examples.rows() == 0) return base;
    const PatchSet pa = extract_patches(aligned, patch_size);
    const PatchSet po = extract_patches(original, patch_size);
    const PatchSet ex = as_patch_set(examples, patch_size, original.width());
    const auto n = base.rows();
    const auto m = base.cols();
    const auto e = examples.rows();
    Matrix out(n + e, m + e);
    out.topLeftCorner(n, m) = base;
    out.topRightCorner(n, e) = pairwise_l2(pa, ex, weights).values;
    out.bottomLeftCorner(e, m) = pairwise_l2(ex, po, weights).values;
    out.bottomRightCorner(e, e) = self_distances(ex, weights).values;
    return out;
}

void divide_by(Matrix& m, double scale) {
    if (scale > 0.0) m /= scale;
}

RowMatrix resample_patch(const RowMatrix& patch, int frames, const FeatureInfo& info) {
    if (patch.rows() == frames) return patch;
    if (frames == 1) return patch.row((patch.rows() - 1) / 2);
    return downsample_to(FeatureSequence{patch, info}, frames).frames;
}

Eigen::RowVectorXd flatten(const RowMatrix& m) {
    return Eigen::Map<const Eigen::RowVectorXd>(m.data(), m.size());
}

}  // namespace

void AlignmentConfig::validate() const {
    solver_params().validate();
    if (stages < 1) throw InputError("stages must be >= 1");
    if (iters_per_stage < 1) throw InputError("iterations per stage must be >= 1");
    if (patch_size < 1) throw InputError("patch size must be >= 1");
    if (!(coarse_factor >= 1.0)) throw InputError("coarse factor must be >= 1");
    if (!(channel_weights.displacement >= 0.0) || !(channel_weights.rotation >= 0.0)) {
        throw InputError("channel weights must be nonnegative");
    }
}

SolverParams AlignmentConfig::solver_params() const {
    SolverParams p;
    p.alpha = alpha;
    p.lambda = lambda;
    p.epsilon = epsilon;
    p.mirror_steps = mirror_steps;
    p.sinkhorn_steps = sinkhorn_steps;
    p.tol_objective = tol_objective;
    p.tol_marginal = tol_marginal;
    return p;
}

Normalization default_normalization(Domain domain) {
    switch (domain) {
        case Domain::sketch2d:
        case Domain::waveform1d:
        case Domain::labels: return Normalization::max;
        case Domain::audio:
        case Domain::motion: return Normalization::mean;
    }
    return Normalization::max;
}

std::vector<int> stage_lengths(int final_length, int stages, double coarse_factor) {
    if (stages < 1) throw InputError("stages must be >= 1");
    std::vector<int> lengths(static_cast<size_t>(stages));
    for (int k = 0; k < stages; ++k) {
        const double exponent = stages == 1 ? 0.0 : -static_cast<double>(stages - 1 - k) / (stages - 1);
        const int length = static_cast<int>(std::lround(final_length * std::pow(coarse_factor, exponent)));
        lengths[k] = std::min(final_length, std::max(2, length));
    }
    return lengths;
}

int stage_patch_size(int patch_size, int stage_length) {
    return std::max(1, std::min(patch_size, stage_length - 1));
}

AugmentedPatches augment_soft_keyframes(const PatchSet& control, const PatchSet& original, const PatchSet& aligned,
                                        const Vector& a, const Vector& b, const std::vector<ExamplePair>& examples) {
    if (a.size() != control.count() || b.size() != original.count()) {
        throw InputError("marginals do not match the patch sets");
    }
    RowMatrix ex_control(static_cast<Eigen::Index>(examples.size()), control.patches.cols());
    RowMatrix ex_motion(static_cast<Eigen::Index>(examples.size()), original.patches.cols());
    for (size_t e = 0; e < examples.size(); ++e) {
        if (examples[e].control_patch.size() != control.patches.cols() ||
            examples[e].motion_patch.size() != original.patches.cols()) {
            throw InputError("soft keyframe patch width does not match its domain");
        }
        ex_control.row(static_cast<Eigen::Index>(e)) = examples[e].control_patch;
        ex_motion.row(static_cast<Eigen::Index>(e)) = examples[e].motion_patch;
    }
    MarginalsAndMask mm = example_marginals(a, b, examples);
    return AugmentedPatches{append_rows(control, ex_control), append_rows(original, ex_motion),
                            append_rows(aligned, ex_motion), std::move(mm.a), std::move(mm.b), std::move(mm.mask)};
}

void validate_hard_keyframes(const std::vector<HardKeyframe>& keyframes, int control_length, int original_length) {
    for (size_t i = 0; i < keyframes.size(); ++i) {
        const HardKeyframe& k = keyframes[i];
        if (k.control.length() <= 0 || k.control.begin < 0 || k.control.end > control_length) {
            throw InputError("hard keyframe " + std::to_string(i) + ": control range out of bounds");
        }
        if (k.motion.begin < 0 || k.motion.end > original_length) {
            throw InputError("hard keyframe " + std::to_string(i) + ": motion range out of bounds");
        }
        if (k.motion.length() != k.control.length()) {
            throw InputError("hard keyframe " + std::to_string(i) + ": ranges differ in length");
        }
        for (size_t j = 0; j < i; ++j) {
            const FrameRange& o = keyframes[j].control;
            if (k.control.begin < o.end && o.begin < k.control.end) {
                throw InputError("hard keyframes " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
            }
        }
    }
}

std::vector<HardKeyframe> scale_hard_keyframes(const std::vector<HardKeyframe>& keyframes, int control_full,
                                               int control_stage, int original_full, int original_stage) {
    std::vector<HardKeyframe> out;
    const double ry = static_cast<double>(control_stage) / control_full;
    const double rx = static_cast<double>(original_stage) / original_full;
    for (const HardKeyframe& k : keyframes) {
        HardKeyframe s;
        s.control.begin = static_cast<int>(std::lround(k.control.begin * ry));
        s.motion.begin = static_cast<int>(std::lround(k.motion.begin * rx));
        int length = std::max(1, static_cast<int>(std::lround(k.control.length() * ry)));
        length = std::min({length, control_stage - s.control.begin, original_stage - s.motion.begin});
        if (!out.empty()) {
            // Rounding can make neighbors touch; keep them disjoint.
            const int shift = std::max(0, out.back().control.end - s.control.begin);
            s.control.begin += shift;
            s.motion.begin += shift;
            length -= shift;
        }
        if (length <= 0) continue;
        s.control.end = s.control.begin + length;
        s.motion.end = s.motion.begin + length;
        out.push_back(s);
    }
    return out;
}

void restrict_hard_keyframes(Mask& mask, const std::vector<HardKeyframe>& keyframes, int rows, int cols) {
    for (const HardKeyframe& k : keyframes) {
        for (int i = k.control.begin; i < k.control.end && i < rows; ++i) {
            const int col = k.motion.begin + (i - k.control.begin);
            if (col >= cols) break;
            mask.row(i).setConstant(false);
            mask(i, col) = true;
        }
    }
}

void pin_frames(FeatureSequence& aligned, const FeatureSequence& original, const std::vector<HardKeyframe>& keyframes) {
    for (const HardKeyframe& k : keyframes) {
        for (int s = 0; s < k.control.length(); ++s) {
            const int dst = k.control.begin + s;
            const int src = k.motion.begin + s;
            if (dst >= aligned.length() || src >= original.length()) break;
            aligned.frames.row(dst) = original.frames.row(src);
        }
    }
}

void apply_hard_keyframes(TransportPlan& plan, FeatureSequence& aligned, const FeatureSequence& original,
                          const std::vector<HardKeyframe>& keyframes, int patch_size) {
    const int rows = std::min(static_cast<int>(plan.plan.rows()), aligned.length() - patch_size + 1);
    const int cols = std::min(static_cast<int>(plan.plan.cols()), original.length() - patch_size + 1);
    for (const HardKeyframe& k : keyframes) {
        for (int i = k.control.begin; i < k.control.end && i < rows; ++i) {
            const int col = k.motion.begin + (i - k.control.begin);
            if (col >= cols) break;
            plan.plan.row(i).setZero();
            plan.plan(i, col) = plan.a[i];
        }
    }
    pin_frames(aligned, original, keyframes);
}

void apply_loop(FeatureSequence& aligned, int patch_size) {
    const int frames = aligned.length();
    const int overlap = patch_size - 1;
    if (overlap < 1) return;
    if (frames <= 2 * patch_size) {
        throw InputError("sequence of " + std::to_string(frames) + " frames is too short to loop with patch size " +
                         std::to_string(patch_size));
    }
    RowMatrix& x = aligned.frames;
    // Closed loop: the last frame meets the first.
    const Eigen::RowVectorXd residual = x.row(0) - x.row(frames - 1);
    const double span = 2.0 * overlap;
    for (int s = 0; s < overlap; ++s) {
        x.row(frames - overlap + s) += residual * ((s + 1) / span);
        x.row(s) -= residual * ((overlap - s) / span);
    }
    project_rotation_blocks(x, aligned.info.layout);
}

AlignmentResult mamm_align(const MotionSequence& original, const FeatureSequence& control,
                           const AlignmentConfig& config, const std::vector<SoftKeyframe>& soft_keyframes,
                           const std::vector<HardKeyframe>& hard_keyframes, const TraceObserver& observer) {
    config.validate();
    validate(control);
    const FeatureSequence motion = motion_features(original);
    const Vector weights = motion_channel_weights(original.joint_count(), config.channel_weights);
    const int control_length = control.length();
    const int original_length = motion.length();
    const int p = config.patch_size;
    if (control_length < p) {
        throw InputError("control has " + std::to_string(control_length) + " frames, fewer than the patch size " +
                         std::to_string(p));
    }
    if (original_length < p) {
        throw InputError("original motion has " + std::to_string(original_length) +
                         " frames, fewer than the patch size " + std::to_string(p));
    }
    if (config.loop && control_length <= 2 * p) throw InputError("control is too short to loop");
    validate_hard_keyframes(hard_keyframes, control_length, original_length);
    for (const SoftKeyframe& k : soft_keyframes) {
        if (k.control_patch.rows() != p || k.control_patch.cols() != control.width()) {
            throw InputError("soft keyframe control patch must be " + std::to_string(p) + " x " +
                             std::to_string(control.width()));
        }
        if (k.motion_frame_start < 0 || k.motion_frame_start + p > original_length) {
            throw InputError("soft keyframe motion patch out of range");
        }
        if (!(k.weight > 0.0)) throw InputError("soft keyframe weight must be positive");
    }

    const Normalization norm_y = config.norm_y.value_or(default_normalization(control.info.domain));
    const Normalization norm_x = config.norm_x.value_or(norm_y);
    const std::vector<int> ly = stage_lengths(control_length, config.stages, config.coarse_factor);
    const std::vector<int> lx = stage_lengths(original_length, config.stages, config.coarse_factor);
    SolverParams params = config.solver_params();

    AlignmentResult result;
    FeatureSequence aligned;
    auto emit = [&](int stage, int iteration, const FsugwResult& solved) {
        TraceRecord rec{stage, iteration, solved.objective, solved.marginal_violation, solved.steps};
        result.trace.push_back(rec);
        if (observer) observer(rec);
    };

    for (int k = 0; k < config.stages; ++k) {
        const FeatureSequence ys = downsample_to(control, ly[k]);
        const FeatureSequence xs = downsample_to(motion, lx[k]);
        const int pk = stage_patch_size(p, std::min(ly[k], lx[k]));
        const int rows = ly[k] - pk + 1;
        const int cols = lx[k] - pk + 1;
        const std::vector<HardKeyframe> hard =
            scale_hard_keyframes(hard_keyframes, control_length, ly[k], original_length, lx[k]);

        // Example pairs at this stage's resolution.
        std::vector<ExamplePair> examples;
        RowMatrix ex_control(static_cast<Eigen::Index>(soft_keyframes.size()), static_cast<Eigen::Index>(pk) * ys.width());
        RowMatrix ex_motion(static_cast<Eigen::Index>(soft_keyframes.size()), static_cast<Eigen::Index>(pk) * xs.width());
        for (size_t e = 0; e < soft_keyframes.size(); ++e) {
            const SoftKeyframe& kf = soft_keyframes[e];
            const int start = std::clamp(static_cast<int>(std::lround(kf.motion_frame_start *
                                                                      static_cast<double>(lx[k]) / original_length)),
                                         0, lx[k] - pk);
            ExamplePair pair{flatten(resample_patch(kf.control_patch, pk, control.info)),
                             flatten(xs.frames.middleRows(start, pk)), kf.weight};
            ex_control.row(static_cast<Eigen::Index>(e)) = pair.control_patch;
            ex_motion.row(static_cast<Eigen::Index>(e)) = pair.motion_patch;
            examples.push_back(std::move(pair));
        }

        Matrix dist_y = augmented_self_distances(ys, pk, Vector(), ex_control);
        Matrix dist_x = augmented_self_distances(xs, pk, weights, ex_motion);
        const double scale_y = normalization_scale(dist_y.topLeftCorner(rows, rows), norm_y);
        const double scale_x = normalization_scale(dist_x.topLeftCorner(cols, cols), norm_x);
        divide_by(dist_y, scale_y);
        divide_by(dist_x, scale_x);

        MarginalsAndMask mm = example_marginals(Vector::Constant(rows, 1.0 / rows), Vector::Constant(cols, 1.0 / cols),
                                                examples);
        restrict_hard_keyframes(mm.mask, hard, rows, cols);
        const bool constrained = !examples.empty() || !hard.empty();
        params.mask = constrained ? std::optional<Mask>(mm.mask) : std::nullopt;
        const Mask* mask = constrained ? &mm.mask : nullptr;

        const PatchSet original_patches = extract_patches(xs, pk);
        FeatureInfo aligned_info = xs.info;
        aligned_info.fps = original.fps() * ly[k] / control_length;

        auto blend = [&](const TransportPlan& plan) {
            RowMatrix mixed = plan.plan.topLeftCorner(rows, cols) * original_patches.patches;
            mixed *= static_cast<double>(rows);
            aligned = blend_patches(mixed, pk, aligned_info);
            if (config.loop && aligned.length() > 2 * pk) apply_loop(aligned, pk);
            pin_frames(aligned, xs, hard);
        };

        TransportPlan plan = initial_plan(mm.a, mm.b, mask);
        if (k == 0) {
            if (config.seed) {
                std::mt19937_64 rng(*config.seed);
                std::uniform_real_distribution<double> jitter(0.0, 1e-6);
                for (Eigen::Index i = 0; i < plan.plan.size(); ++i) plan.plan.data()[i] *= 1.0 + jitter(rng);
                plan.plan = plan.a.cwiseQuotient(plan.plan.rowwise().sum()).asDiagonal() * plan.plan;
            }
            // Initialization: couple by structure alone, then blend.
            const FsugwResult init = solve_fsugw(dist_y, dist_x, nullptr, params, plan);
            emit(k, -1, init);
            blend(init.plan);
        } else {
            aligned = upsample(aligned, ly[k]);
            aligned.info = aligned_info;
            if (config.loop && aligned.length() > 2 * pk) apply_loop(aligned, pk);
            pin_frames(aligned, xs, hard);
        }

        for (int m = 0; m < config.iters_per_stage; ++m) {
            Matrix dist_w = augmented_cross_distances(aligned, xs, pk, weights, ex_motion);
            divide_by(dist_w, scale_x);
            FsugwResult solved = solve_fsugw(dist_y, dist_x, &dist_w, params, plan);
            plan = std::move(solved.plan);
            solved.plan = TransportPlan{};
            emit(k, m, solved);
            blend(plan);
        }
    }

    result.features = aligned;
    result.features.info.fps = original.fps();
    result.motion = features_to_motion(result.features, original.skeleton());
    return result;
}

}  // namespace mamm
