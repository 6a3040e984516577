#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mamm/adapters.hpp"
#include "mamm/error.hpp"
#include "mamm/fsugw.hpp"
#include "mamm/metrics.hpp"
#include "mamm/motion.hpp"
#include "mamm/patching.hpp"
#include "mamm/pipeline.hpp"

namespace py = pybind11;
using namespace mamm;

namespace {

py::dict objective_dict(const ObjectiveTerms& t) {
    py::dict d;
    d["gw"] = t.gw;
    d["wasserstein"] = t.wasserstein;
    d["kl"] = t.kl;
    d["entropy"] = t.entropy;
    d["total"] = t.total;
    d["regularized"] = t.regularized;
    return d;
}

std::optional<Mask> to_mask(const std::optional<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>>& m) {
    return m;
}

SolverParams solver_params(double alpha, double lambda, double epsilon, int mirror_steps, int sinkhorn_steps,
                           double tol_objective, double tol_marginal, const std::optional<Mask>& mask) {
    SolverParams p;
    p.alpha = alpha;
    p.lambda = lambda;
    p.epsilon = epsilon;
    p.mirror_steps = mirror_steps;
    p.sinkhorn_steps = sinkhorn_steps;
    p.tol_objective = tol_objective;
    p.tol_marginal = tol_marginal;
    p.mask = mask;
    return p;
}

std::optional<Normalization> norm_arg(const std::optional<std::string>& name) {
    if (!name || *name == "auto") return std::nullopt;
    return normalization_from_string(*name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Metric-aligning motion matching";

    static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
    static py::exception<SolverError> solver_error(m, "SolverError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InputError& e) {
            py::set_error(input_error, e.what());
        } catch (const SolverError& e) {
            py::set_error(solver_error, e.what());
        }
    });

    // motion
    py::class_<BvhClip>(m, "BvhClip")
        .def_property_readonly("channels", [](const BvhClip& c) { return c.channels; })
        .def_property_readonly("fps", &BvhClip::fps)
        .def_property_readonly("frame_count", &BvhClip::frame_count)
        .def_property_readonly("joint_names", [](const BvhClip& c) {
            std::vector<std::string> names;
            for (const Joint& j : c.skeleton.joints()) names.push_back(j.name);
            return names;
        })
        .def("world_positions", [](const BvhClip& c) {
            const auto frames = world_joint_positions(c);
            py::list out;
            for (const auto& f : frames) {
                RowMatrix p(static_cast<Eigen::Index>(f.size()), 3);
                for (size_t j = 0; j < f.size(); ++j) p.row(static_cast<Eigen::Index>(j)) = f[j].transpose();
                out.append(p);
            }
            return out;
        });

    py::class_<MotionSequence>(m, "MotionSequence")
        .def_property_readonly("frame_count", &MotionSequence::frame_count)
        .def_property_readonly("joint_count", &MotionSequence::joint_count)
        .def_property_readonly("fps", &MotionSequence::fps)
        .def_property_readonly("displacements", [](const MotionSequence& s) { return RowMatrix(s.displacements()); })
        .def("rotation", &MotionSequence::rotation, py::arg("frame"), py::arg("joint"));

    py::class_<RootAnchor>(m, "RootAnchor")
        .def(py::init<>())
        .def_readwrite("position", &RootAnchor::position)
        .def_readwrite("heading", &RootAnchor::heading);

    m.def("parse_bvh", [](const std::string& text) { return parse_bvh(text); }, py::arg("text"));
    m.def("read_bvh", &read_bvh_file, py::arg("path"));
    m.def("write_bvh", &write_bvh, py::arg("clip"));
    m.def("to_internal", &to_internal, py::arg("clip"));
    m.def("root_anchor", &root_anchor, py::arg("clip"));
    m.def("to_clip", &to_clip, py::arg("motion"), py::arg("anchor") = RootAnchor{});
    m.def("from_internal", &from_internal, py::arg("motion"), py::arg("anchor") = RootAnchor{});
    m.def("project_rotation", &project_rotation, py::arg("m"));

    // features and adapters
    py::class_<FeatureSequence>(m, "FeatureSequence")
        .def_property_readonly("frames", [](const FeatureSequence& s) { return s.frames; })
        .def_property_readonly("fps", [](const FeatureSequence& s) { return s.info.fps; })
        .def_property_readonly("domain", [](const FeatureSequence& s) { return to_string(s.info.domain); })
        .def("__len__", &FeatureSequence::length);

    m.def("motion_features", &motion_features, py::arg("motion"));
    m.def("from_waveform", &from_waveform, py::arg("values"), py::arg("fps") = 30.0);
    m.def("from_labels", &from_labels, py::arg("labels"), py::arg("num_classes"), py::arg("fps") = 30.0);
    m.def("from_audio_features", &from_audio_features, py::arg("features"), py::arg("fps") = 30.0,
          py::arg("expected_columns") = 40);
    m.def(
        "from_sketch",
        [](const std::vector<std::tuple<double, double, double>>& points, double fps, double sigma) {
            std::vector<SketchPoint> pts;
            for (const auto& [x, y, t] : points) pts.push_back({x, y, t});
            return from_sketch(pts, fps, sigma);
        },
        py::arg("points"), py::arg("target_fps") = 30.0, py::arg("sigma") = 2.0);
    m.def(
        "from_motion",
        [](const MotionSequence& motion, double displacement, double rotation) {
            return from_motion(motion, MotionChannelWeights{displacement, rotation});
        },
        py::arg("motion"), py::arg("displacement_weight") = 1.0, py::arg("rotation_weight") = 1.0);

    // patching and distances
    m.def(
        "extract_patches",
        [](const RowMatrix& frames, int patch_size) {
            return extract_patches(FeatureSequence{frames, {}}, patch_size).patches;
        },
        py::arg("frames"), py::arg("patch_size"));
    m.def(
        "blend_patches", [](const RowMatrix& patches, int patch_size) { return blend_patches(patches, patch_size).frames; },
        py::arg("patches"), py::arg("patch_size"));
    m.def(
        "self_patch_distances",
        [](const RowMatrix& frames, int patch_size) {
            return self_patch_distances(FeatureSequence{frames, {}}, patch_size).values;
        },
        py::arg("frames"), py::arg("patch_size"));

    // solver
    m.def("gw_loss", &gw_loss, py::arg("dist_y"), py::arg("dist_x"), py::arg("plan"));
    m.def("gw_linearized_cost", &gw_linearized_cost, py::arg("dist_y"), py::arg("dist_x"), py::arg("plan"));
    m.def(
        "semi_unbalanced_sinkhorn",
        [](const Matrix& kernel, const Vector& a, const Vector& b, double lambda, double epsilon,
           const std::optional<Mask>& mask, int max_iterations, double tolerance) {
            const SinkhornResult r = semi_unbalanced_sinkhorn(kernel, a, b, lambda, epsilon, mask ? &*mask : nullptr,
                                                              max_iterations, tolerance);
            return r.plan.plan;
        },
        py::arg("kernel"), py::arg("a"), py::arg("b"), py::arg("lam"), py::arg("epsilon"), py::arg("mask") = py::none(),
        py::arg("max_iterations") = 200, py::arg("tolerance") = 1e-8);
    m.def(
        "solve_fsugw",
        [](const Matrix& dist_y, const Matrix& dist_x, const std::optional<Matrix>& dist_w, const Vector& a,
           const Vector& b, double alpha, double lambda, double epsilon, const std::optional<Mask>& mask,
           int mirror_steps, int sinkhorn_steps, double tol_objective, double tol_marginal) {
            const SolverParams p = solver_params(alpha, lambda, epsilon, mirror_steps, sinkhorn_steps, tol_objective,
                                                 tol_marginal, to_mask(mask));
            const FsugwResult r =
                solve_fsugw(dist_y, dist_x, dist_w ? &*dist_w : nullptr, p, initial_plan(a, b, p.mask ? &*p.mask : nullptr));
            return py::make_tuple(r.plan.plan, objective_dict(r.objective), r.steps);
        },
        py::arg("dist_y"), py::arg("dist_x"), py::arg("dist_w") = py::none(), py::arg("a"), py::arg("b"),
        py::arg("alpha") = 0.8, py::arg("lam") = 0.05, py::arg("epsilon") = 1.0, py::arg("mask") = py::none(),
        py::arg("mirror_steps") = 100, py::arg("sinkhorn_steps") = 200, py::arg("tol_objective") = 1e-5,
        py::arg("tol_marginal") = 1e-8);

    // pipeline
    py::class_<AlignmentResult>(m, "AlignmentResult")
        .def_readonly("motion", &AlignmentResult::motion)
        .def_readonly("features", &AlignmentResult::features)
        .def_property_readonly("trace", [](const AlignmentResult& r) {
            py::list out;
            for (const TraceRecord& t : r.trace) {
                py::dict d = objective_dict(t.objective);
                d["stage"] = t.stage;
                d["iteration"] = t.iteration;
                d["marginal_violation"] = t.marginal_violation;
                d["solver_steps"] = t.solver_steps;
                out.append(d);
            }
            return out;
        });

    m.def(
        "align",
        [](const MotionSequence& original, const FeatureSequence& control, double alpha, double lambda,
           double epsilon, int stages, int iters, int patch_size, double coarse_factor,
           const std::optional<std::string>& norm_x, const std::optional<std::string>& norm_y, bool loop,
           std::optional<std::uint64_t> seed, const std::vector<std::tuple<RowMatrix, int, double>>& soft_keyframes,
           const std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>>& hard_keyframes,
           const std::function<void(py::dict)>& on_trace) {
            AlignmentConfig c;
            c.alpha = alpha;
            c.lambda = lambda;
            c.epsilon = epsilon;
            c.stages = stages;
            c.iters_per_stage = iters;
            c.patch_size = patch_size;
            c.coarse_factor = coarse_factor;
            c.norm_x = norm_arg(norm_x);
            c.norm_y = norm_arg(norm_y);
            c.loop = loop;
            c.seed = seed;
            std::vector<SoftKeyframe> soft;
            for (const auto& [patch, start, weight] : soft_keyframes) soft.push_back({patch, start, weight});
            std::vector<HardKeyframe> hard;
            for (const auto& [ctrl, mot] : hard_keyframes)
                hard.push_back({{ctrl.first, ctrl.second}, {mot.first, mot.second}});
            TraceObserver observer;
            if (on_trace) {
                observer = [&](const TraceRecord& t) {
                    py::gil_scoped_acquire gil;
                    py::dict d = objective_dict(t.objective);
                    d["stage"] = t.stage;
                    d["iteration"] = t.iteration;
                    on_trace(d);
                };
            }
            py::gil_scoped_release release;
            return mamm_align(original, control, c, soft, hard, observer);
        },
        py::arg("original"), py::arg("control"), py::kw_only(), py::arg("alpha") = 0.8, py::arg("lam") = 0.05,
        py::arg("epsilon") = 1.0, py::arg("stages") = 6, py::arg("iters") = 20, py::arg("patch_size") = 11,
        py::arg("coarse_factor") = 4.0, py::arg("norm_x") = py::none(), py::arg("norm_y") = py::none(),
        py::arg("loop") = false, py::arg("seed") = py::none(),
        py::arg("soft_keyframes") = std::vector<std::tuple<RowMatrix, int, double>>{},
        py::arg("hard_keyframes") = std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>>{},
        py::arg("on_trace") = py::none());
}
