#include "mamm/service.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>

#include "httplib.h"
#include "json.hpp"
#include "mamm/error.hpp"
#include "mamm/io.hpp"

namespace mamm {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Timeout : std::runtime_error {
    Timeout() : std::runtime_error("alignment timed out") {}
};

HttpReply error_reply(int status, const std::string& message) {
    return {status, json{{"error", message}}.dump()};
}

json positions_json(const BvhClip& clip) {
    json frames = json::array();
    for (const auto& frame : world_joint_positions(clip)) {
        json joints = json::array();
        for (const Vec3& p : frame) joints.push_back({p.x(), p.y(), p.z()});
        frames.push_back(std::move(joints));
    }
    return frames;
}

json skeleton_json(const Skeleton& skel) {
    json joints = json::array();
    for (int j = 0; j < skel.joint_count(); ++j) {
        const Joint& joint = skel.joint(j);
        joints.push_back({{"name", joint.name},
                          {"parent", joint.parent ? json(*joint.parent) : json(nullptr)},
                          {"offset", {joint.offset.x(), joint.offset.y(), joint.offset.z()}}});
    }
    return joints;
}

std::optional<long long> parse_id(const std::string& s) {
    if (s.empty() || s.size() > 18) return std::nullopt;
    long long v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

RowMatrix matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw InputError(std::string(what) + " must be a non-empty array of rows");
    const size_t width = j.front().is_array() ? j.front().size() : 0;
    RowMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(width));
    for (size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != width) throw InputError(std::string(what) + " rows must have equal length");
        for (size_t c = 0; c < width; ++c) {
            if (!j[r][c].is_number()) throw InputError(std::string(what) + " must hold numbers");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

FeatureSequence control_from_json(const MotionLibrary& library, ControlType type, const json& control,
                                  const AlignmentConfig& config) {
    switch (type) {
        case ControlType::sketch: return sketch_from_json(control);
        case ControlType::labels: return labels_from_json(control);
        case ControlType::waveform: {
            const json& values = control.is_object() ? control.value("values", json()) : control;
            if (!values.is_array()) throw InputError("waveform control needs a 'values' array");
            std::vector<double> v;
            for (const json& x : values) {
                if (!x.is_number()) throw InputError("waveform values must be numbers");
                v.push_back(x.get<double>());
            }
            const double fps = control.is_object() ? control.value("fps", 30.0) : 30.0;
            return from_waveform(v, fps);
        }
        case ControlType::audio: {
            if (!control.is_object() || !control.contains("features")) throw InputError("audio control needs 'features'");
            return from_audio_features(matrix_from_json(control.at("features"), "features"), control.value("fps", 30.0));
        }
        case ControlType::motion: {
            if (!control.is_object() || !control.contains("motion_id") || !control.at("motion_id").is_number_integer()) {
                throw InputError("motion control needs an integer 'motion_id'");
            }
            const LibraryEntry* entry = library.find(control.at("motion_id").get<long long>());
            if (!entry) throw std::out_of_range("unknown control motion");
            return from_motion(entry->motion, config.channel_weights);
        }
    }
    throw InputError("unknown control type");
}

}  // namespace

MotionLibrary MotionLibrary::load(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw InputError("motion library '" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (e.is_regular_file() && ext == ".bvh") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());

    MotionLibrary lib;
    for (const fs::path& f : files) {
        try {
            LibraryEntry entry;
            entry.clip = read_bvh_file(f.string());
            entry.motion = to_internal(entry.clip);
            entry.id = static_cast<int>(lib.entries_.size());
            entry.name = f.stem().string();
            entry.path = f.string();
            lib.entries_.push_back(std::move(entry));
        } catch (const Error& e) {
            lib.skipped_.push_back(f.string() + ": " + e.what());
        }
    }
    return lib;
}

const LibraryEntry* MotionLibrary::find(long long id) const {
    if (id < 0 || id >= static_cast<long long>(entries_.size())) return nullptr;
    return &entries_[static_cast<size_t>(id)];
}

HttpReply list_motions(const MotionLibrary& library) {
    json out = json::array();
    for (const LibraryEntry& e : library.entries()) {
        out.push_back({{"id", e.id},
                       {"name", e.name},
                       {"frames", e.clip.frame_count()},
                       {"fps", e.clip.fps()},
                       {"joints", e.clip.skeleton.joint_count()}});
    }
    return {200, out.dump()};
}

HttpReply get_motion(const MotionLibrary& library, const std::string& id) {
    const auto parsed = parse_id(id);
    const LibraryEntry* e = parsed ? library.find(*parsed) : nullptr;
    if (!e) return error_reply(404, "unknown motion '" + id + "'");
    json out{{"id", e->id},
             {"name", e->name},
             {"fps", e->clip.fps()},
             {"frames", e->clip.frame_count()},
             {"skeleton", skeleton_json(e->clip.skeleton)},
             {"positions", positions_json(e->clip)}};
    return {200, out.dump()};
}

HttpReply post_align(const MotionLibrary& library, const std::string& body, double timeout_seconds) {
    const auto started = std::chrono::steady_clock::now();
    json req;
    try {
        req = json::parse(body);
    } catch (const json::parse_error& e) {
        return error_reply(422, std::string("invalid JSON: ") + e.what());
    }
    if (!req.is_object()) return error_reply(422, "request body must be an object");
    if (!req.contains("motion_id") || !req.at("motion_id").is_number_integer()) {
        return error_reply(422, "'motion_id' must be an integer");
    }
    const LibraryEntry* entry = library.find(req.at("motion_id").get<long long>());
    if (!entry) return error_reply(404, "unknown motion " + req.at("motion_id").dump());

    try {
        if (!req.contains("control_type") || !req.at("control_type").is_string()) {
            throw InputError("'control_type' must be a string");
        }
        if (!req.contains("control")) throw InputError("missing 'control'");

        AlignmentConfig config;
        apply_config_json(config, req.value("params", json()));
        if (req.contains("loop")) {
            if (!req.at("loop").is_boolean()) throw InputError("'loop' must be a boolean");
            config.loop = req.at("loop").get<bool>();
        }
        config.validate();

        const ControlType type = control_type_from_string(req.at("control_type").get<std::string>());
        const FeatureSequence control = control_from_json(library, type, req.at("control"), config);

        std::vector<SoftKeyframe> soft;
        if (req.contains("soft_keyframes") && !req.at("soft_keyframes").is_null()) {
            soft = soft_keyframes_from_json(req.at("soft_keyframes"), config.patch_size,
                                            static_cast<int>(control.frames.cols()));
        }
        std::vector<HardKeyframe> hard;
        if (req.contains("hard_keyframes") && !req.at("hard_keyframes").is_null()) {
            hard = hard_keyframes_from_json(req.at("hard_keyframes"));
        }

        const auto deadline = started + std::chrono::duration<double>(timeout_seconds);
        auto observer = [&](const TraceRecord&) {
            if (std::chrono::steady_clock::now() > deadline) throw Timeout();
        };
        const AlignmentResult result = mamm_align(entry->motion, control, config, soft, hard, observer);

        const BvhClip clip = to_clip(result.motion, root_anchor(entry->clip));
        const TraceRecord& last = result.trace.back();
        json summary{{"records", result.trace.size()},
                     {"stages", config.stages},
                     {"final_objective", last.objective.total},
                     {"final_marginal_violation", last.marginal_violation}};
        json out{{"frames", positions_json(clip)}, {"fps", clip.fps()}, {"trace_summary", summary}};
        return {200, out.dump()};
    } catch (const Timeout& e) {
        return error_reply(504, e.what());
    } catch (const std::out_of_range& e) {
        return error_reply(404, e.what());
    } catch (const InputError& e) {
        return error_reply(422, e.what());
    } catch (const json::exception& e) {
        return error_reply(422, e.what());
    } catch (const SolverError& e) {
        return error_reply(500, e.what());
    }
}

struct Service::Impl {
    ServiceConfig config;
    MotionLibrary library;
    httplib::Server server;
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
    impl_->library = MotionLibrary::load(impl_->config.library_dir);
    for (const std::string& s : impl_->library.skipped()) std::cerr << "mamm: skipped " << s << "\n";

    auto send = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    Impl* impl = impl_.get();
    const auto timeout = std::chrono::duration<double>(impl->config.timeout_seconds);
    impl->server.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
    impl->server.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
    impl->server.Get("/api/motions", [impl, send](const httplib::Request&, httplib::Response& res) {
        send(res, list_motions(impl->library));
    });
    impl->server.Get(R"(/api/motions/([^/]+))", [impl, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_motion(impl->library, req.matches[1]));
    });
    impl->server.Post("/api/align", [impl, send](const httplib::Request& req, httplib::Response& res) {
        send(res, post_align(impl->library, req.body, impl->config.timeout_seconds));
    });
}

Service::~Service() { stop(); }

const MotionLibrary& Service::library() const { return impl_->library; }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace mamm
