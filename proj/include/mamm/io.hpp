#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mamm/adapters.hpp"
#include "mamm/pipeline.hpp"

namespace mamm {

enum class ControlType { sketch, waveform, labels, audio, motion };

ControlType control_type_from_string(const std::string& name);
std::string to_string(ControlType type);

std::string read_text_file(const std::string& path);

/// One scalar per line. A leading "# fps=<value>" comment sets the rate.
FeatureSequence read_waveform_csv(std::string_view text, double default_fps = 30.0);

/// Comma-separated rows of `expected_columns` reals; a non-numeric first line
/// is treated as a header and "# fps=<value>" comments set the rate.
FeatureSequence read_audio_csv(std::string_view text, int expected_columns = 40, double default_fps = 30.0);

/// {"points": [{"x", "y", "t_ms"}], "sigma", "target_fps"}
FeatureSequence sketch_from_json(const nlohmann::json& j);

/// {"labels": [int], "num_classes": int, "fps"?: real}
FeatureSequence labels_from_json(const nlohmann::json& j);

/// Reads a control file of the given type; motion controls are BVH files.
FeatureSequence load_control_file(const std::string& path, ControlType type, const MotionChannelWeights& weights = {});

/// Array (or {"soft_keyframes": [...]}) of {"control_patch": [[...]] or
/// "canvas_patch": [...], "motion_frame_start": int, "weight": real}. A
/// canvas patch is one control frame held constant over the patch.
std::vector<SoftKeyframe> soft_keyframes_from_json(const nlohmann::json& j, int patch_size, int control_width);

/// Array (or {"hard_keyframes": [...]}) of {"control": [begin, end], "motion": [begin, end]}.
std::vector<HardKeyframe> hard_keyframes_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const TraceRecord& record, double epsilon);
nlohmann::json config_to_json(const AlignmentConfig& config);

/// Overrides config fields present in {"alpha", "lambda", "epsilon", "stages",
/// "iters", "patch_size", "coarse_factor", "norm_x", "norm_y", "loop"}.
void apply_config_json(AlignmentConfig& config, const nlohmann::json& j);

}  // namespace mamm
