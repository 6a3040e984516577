#include "mamm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mamm/error.hpp"

namespace mamm {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> to_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// "# fps=30" or "# fps: 30"
std::optional<double> fps_comment(std::string_view line) {
    line = trim(line.substr(1));
    if (line.substr(0, 3) != "fps") return std::nullopt;
    line = trim(line.substr(3));
    if (line.empty() || (line.front() != '=' && line.front() != ':')) return std::nullopt;
    auto v = to_number(line.substr(1));
    if (!v || !(*v > 0.0)) throw InputError("invalid fps comment");
    return v;
}

struct CsvTable {
    std::vector<std::vector<double>> rows;
    std::optional<double> fps;
};

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            if (auto f = fps_comment(view)) table.fps = f;
            continue;
        }
        std::vector<double> row;
        bool numeric = true;
        size_t start = 0;
        while (start <= view.size()) {
            size_t end = view.find(',', start);
            if (end == std::string_view::npos) end = view.size();
            auto v = to_number(view.substr(start, end - start));
            if (!v) {
                numeric = false;
                break;
            }
            row.push_back(*v);
            start = end + 1;
        }
        if (!numeric) {
            if (!seen_data) {
                seen_data = true;  // header line
                continue;
            }
            throw InputError("line " + std::to_string(line_no) + ": non-numeric value");
        }
        seen_data = true;
        table.rows.push_back(std::move(row));
    }
    return table;
}

template <typename T>
T required(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(std::string("field '") + key + "' has the wrong type");
    }
}

const json& list_field(const json& j, const char* key) {
    if (j.is_object() && j.contains(key)) return j.at(key);
    return j;
}

FrameRange range_from_json(const json& j, const char* key) {
    const auto v = required<std::vector<int>>(j, key);
    if (v.size() != 2) throw InputError(std::string("field '") + key + "' must be [begin, end]");
    return FrameRange{v[0], v[1]};
}

}  // namespace

ControlType control_type_from_string(const std::string& name) {
    if (name == "sketch") return ControlType::sketch;
    if (name == "waveform") return ControlType::waveform;
    if (name == "labels") return ControlType::labels;
    if (name == "audio") return ControlType::audio;
    if (name == "motion") return ControlType::motion;
    throw InputError("unknown control type '" + name + "'");
}

std::string to_string(ControlType type) {
    switch (type) {
        case ControlType::sketch: return "sketch";
        case ControlType::waveform: return "waveform";
        case ControlType::labels: return "labels";
        case ControlType::audio: return "audio";
        case ControlType::motion: return "motion";
    }
    return "unknown";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FeatureSequence read_waveform_csv(std::string_view text, double default_fps) {
    const CsvTable table = parse_csv(text);
    std::vector<double> values;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != 1) throw InputError("waveform row " + std::to_string(i) + " must hold one value");
        values.push_back(table.rows[i][0]);
    }
    return from_waveform(values, table.fps.value_or(default_fps));
}

FeatureSequence read_audio_csv(std::string_view text, int expected_columns, double default_fps) {
    const CsvTable table = parse_csv(text);
    if (table.rows.empty()) throw InputError("audio feature file is empty");
    const size_t width = table.rows.front().size();
    RowMatrix m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(width));
    for (size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != width) {
            throw InputError("ragged audio feature row " + std::to_string(i) + ": " +
                             std::to_string(table.rows[i].size()) + " values, expected " + std::to_string(width));
        }
        for (size_t c = 0; c < width; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = table.rows[i][c];
    }
    return from_audio_features(m, table.fps.value_or(default_fps), expected_columns);
}

FeatureSequence sketch_from_json(const json& j) {
    const json& pts = j.is_object() && j.contains("points") ? j.at("points") : json();
    if (!pts.is_array()) throw InputError("sketch payload needs a 'points' array");
    std::vector<SketchPoint> points;
    for (const json& p : pts) points.push_back({required<double>(p, "x"), required<double>(p, "y"), required<double>(p, "t_ms")});
    return from_sketch(points, optional_field<double>(j, "target_fps", 30.0), optional_field<double>(j, "sigma", 2.0));
}

FeatureSequence labels_from_json(const json& j) {
    return from_labels(required<std::vector<int>>(j, "labels"), required<int>(j, "num_classes"),
                       optional_field<double>(j, "fps", 30.0));
}

FeatureSequence load_control_file(const std::string& path, ControlType type, const MotionChannelWeights& weights) {
    switch (type) {
        case ControlType::waveform: return read_waveform_csv(read_text_file(path));
        case ControlType::audio: return read_audio_csv(read_text_file(path));
        case ControlType::motion: return from_motion(to_internal(read_bvh_file(path)), weights);
        case ControlType::sketch:
        case ControlType::labels: {
            json j;
            try {
                j = json::parse(read_text_file(path));
            } catch (const json::parse_error& e) {
                throw InputError(path + ": invalid JSON: " + e.what());
            }
            return type == ControlType::sketch ? sketch_from_json(j) : labels_from_json(j);
        }
    }
    throw InputError("unknown control type");
}

std::vector<SoftKeyframe> soft_keyframes_from_json(const json& j, int patch_size, int control_width) {
    const json& list = list_field(j, "soft_keyframes");
    if (!list.is_array()) throw InputError("soft keyframes must be an array");
    std::vector<SoftKeyframe> out;
    for (const json& item : list) {
        SoftKeyframe kf;
        kf.motion_frame_start = required<int>(item, "motion_frame_start");
        kf.weight = optional_field<double>(item, "weight", 1.0);
        kf.control_patch.resize(patch_size, control_width);
        if (item.contains("control_patch")) {
            const auto rows = required<std::vector<std::vector<double>>>(item, "control_patch");
            if (static_cast<int>(rows.size()) != patch_size) {
                throw InputError("control_patch must have " + std::to_string(patch_size) + " rows");
            }
            for (int r = 0; r < patch_size; ++r) {
                if (static_cast<int>(rows[r].size()) != control_width) {
                    throw InputError("control_patch rows must have " + std::to_string(control_width) + " values");
                }
                for (int c = 0; c < control_width; ++c) kf.control_patch(r, c) = rows[r][c];
            }
        } else {
            const auto point = required<std::vector<double>>(item, "canvas_patch");
            if (static_cast<int>(point.size()) != control_width) {
                throw InputError("canvas_patch must have " + std::to_string(control_width) + " values");
            }
            for (int r = 0; r < patch_size; ++r)
                for (int c = 0; c < control_width; ++c) kf.control_patch(r, c) = point[c];
        }
        if (!kf.control_patch.allFinite()) throw InputError("soft keyframe patch is not finite");
        out.push_back(std::move(kf));
    }
    return out;
}

std::vector<HardKeyframe> hard_keyframes_from_json(const json& j) {
    const json& list = list_field(j, "hard_keyframes");
    if (!list.is_array()) throw InputError("hard keyframes must be an array");
    std::vector<HardKeyframe> out;
    for (const json& item : list) out.push_back({range_from_json(item, "control"), range_from_json(item, "motion")});
    return out;
}

json trace_to_json(const TraceRecord& r, double epsilon) {
    return json{{"stage", r.stage},
                {"iteration", r.iteration},
                {"objective", r.objective.total},
                {"gw_term", r.objective.gw},
                {"w_term", r.objective.wasserstein},
                {"kl_term", r.objective.kl},
                {"entropy_term", -epsilon * r.objective.entropy},
                {"regularized_objective", r.objective.regularized},
                {"marginal_violation", r.marginal_violation},
                {"solver_steps", r.solver_steps}};
}

json config_to_json(const AlignmentConfig& c) {
    json j{{"alpha", c.alpha},
           {"lambda", std::isinf(c.lambda) ? json("inf") : json(c.lambda)},
           {"epsilon", c.epsilon},
           {"stages", c.stages},
           {"iters", c.iters_per_stage},
           {"patch_size", c.patch_size},
           {"coarse_factor", c.coarse_factor},
           {"norm_x", c.norm_x ? json(to_string(*c.norm_x)) : json("auto")},
           {"norm_y", c.norm_y ? json(to_string(*c.norm_y)) : json("auto")},
           {"loop", c.loop},
           {"mirror_steps", c.mirror_steps},
           {"sinkhorn_steps", c.sinkhorn_steps},
           {"tol_objective", c.tol_objective},
           {"tol_marginal", c.tol_marginal}};
    return j;
}

void apply_config_json(AlignmentConfig& c, const json& j) {
    if (j.is_null()) return;
    if (!j.is_object()) throw InputError("params must be an object");
    c.alpha = optional_field<double>(j, "alpha", c.alpha);
    if (j.contains("lambda") && j.at("lambda").is_string()) {
        if (j.at("lambda").get<std::string>() != "inf") throw InputError("lambda must be a number or \"inf\"");
        c.lambda = kInfinity;
    } else {
        c.lambda = optional_field<double>(j, "lambda", c.lambda);
    }
    c.epsilon = optional_field<double>(j, "epsilon", c.epsilon);
    c.stages = optional_field<int>(j, "stages", c.stages);
    c.iters_per_stage = optional_field<int>(j, "iters", c.iters_per_stage);
    c.patch_size = optional_field<int>(j, "patch_size", c.patch_size);
    c.coarse_factor = optional_field<double>(j, "coarse_factor", c.coarse_factor);
    if (j.contains("norm_x")) c.norm_x = normalization_from_string(required<std::string>(j, "norm_x"));
    if (j.contains("norm_y")) c.norm_y = normalization_from_string(required<std::string>(j, "norm_y"));
    c.loop = optional_field<bool>(j, "loop", c.loop);
    c.validate();
}

}  // namespace mamm
