#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "mamm/error.hpp"
#include "mamm/io.hpp"
#include "mamm/service.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

int fail(const char* kind, const std::string& message, int code) {
    std::cerr << "mamm: error[" << kind << "]: " << message << "\n";
    return code;
}

struct AlignArgs {
    std::string original, control, control_type, out;
    std::string soft_kf, hard_kf, trace;
    std::string norm_x, norm_y;
    std::string lambda;
    std::optional<std::uint64_t> seed;
    bool print_config = false;
    mamm::AlignmentConfig config;
};

int run_align(AlignArgs& args) {
    using namespace mamm;
    AlignmentConfig& config = args.config;
    if (!args.lambda.empty()) {
        if (args.lambda == "inf") {
            config.lambda = kInfinity;
        } else {
            try {
                size_t used = 0;
                config.lambda = std::stod(args.lambda, &used);
                if (used != args.lambda.size()) throw std::invalid_argument(args.lambda);
            } catch (const std::exception&) {
                throw InputError("--lambda must be a number or 'inf'");
            }
        }
    }
    if (!args.norm_x.empty()) config.norm_x = normalization_from_string(args.norm_x);
    if (!args.norm_y.empty()) config.norm_y = normalization_from_string(args.norm_y);
    config.seed = args.seed;
    config.validate();

    if (args.print_config) {
        std::cout << config_to_json(config).dump(2) << "\n";
        return 0;
    }
    if (args.original.empty()) throw InputError("--original is required");
    if (args.control.empty()) throw InputError("--control is required");
    if (args.control_type.empty()) throw InputError("--control-type is required");
    if (args.out.empty()) throw InputError("--out is required");

    const BvhClip clip = read_bvh_file(args.original);
    const MotionSequence original = to_internal(clip);
    const ControlType type = control_type_from_string(args.control_type);
    const FeatureSequence control = load_control_file(args.control, type, config.channel_weights);

    std::vector<SoftKeyframe> soft;
    std::vector<HardKeyframe> hard;
    auto read_json = [](const std::string& path) {
        try {
            return nlohmann::json::parse(read_text_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(path + ": invalid JSON: " + e.what());
        }
    };
    if (!args.soft_kf.empty()) {
        soft = soft_keyframes_from_json(read_json(args.soft_kf), config.patch_size, static_cast<int>(control.frames.cols()));
    }
    if (!args.hard_kf.empty()) hard = hard_keyframes_from_json(read_json(args.hard_kf));

    std::ofstream trace;
    if (!args.trace.empty()) {
        trace.open(args.trace);
        if (!trace) throw InputError("cannot write '" + args.trace + "'");
    }
    TraceObserver observer;
    if (trace.is_open()) {
        observer = [&](const TraceRecord& r) { trace << trace_to_json(r, config.epsilon).dump() << "\n"; };
    }

    const AlignmentResult result = mamm_align(original, control, config, soft, hard, observer);

    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw InputError("cannot write '" + args.out + "'");
    out << from_internal(result.motion, root_anchor(clip));
    if (!out) throw InputError("failed writing '" + args.out + "'");
    return 0;
}

volatile std::sig_atomic_t g_stop = 0;
mamm::Service* g_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metric-aligning motion matching"};
    app.require_subcommand(1);

    AlignArgs a;
    auto* align = app.add_subcommand("align", "Align a BVH motion to a control signal");
    align->add_option("--original", a.original, "Original motion (BVH)");
    align->add_option("--control", a.control, "Control signal file");
    align->add_option("--control-type", a.control_type, "sketch|waveform|labels|audio|motion");
    align->add_option("--out", a.out, "Output BVH");
    align->add_option("--alpha", a.config.alpha, "GW weight");
    align->add_option("--lambda", a.lambda, "Marginal relaxation (number or 'inf')");
    align->add_option("--epsilon", a.config.epsilon, "Entropic regularization");
    align->add_option("--stages", a.config.stages, "Coarse-to-fine stages");
    align->add_option("--iters", a.config.iters_per_stage, "Iterations per stage");
    align->add_option("--patch-size", a.config.patch_size, "Patch length in frames");
    align->add_option("--coarse-factor", a.config.coarse_factor, "Length ratio between finest and coarsest stage");
    align->add_option("--norm-x", a.norm_x, "max|mean");
    align->add_option("--norm-y", a.norm_y, "max|mean");
    align->add_flag("--loop", a.config.loop, "Make the result loop seamlessly");
    align->add_option("--soft-kf", a.soft_kf, "Soft keyframes (JSON)");
    align->add_option("--hard-kf", a.hard_kf, "Hard keyframes (JSON)");
    align->add_option("--trace", a.trace, "Per-iteration trace (JSONL)");
    align->add_option("--seed", a.seed, "Seed for tie-breaking noise");
    align->add_flag("--print-config", a.print_config, "Print the effective configuration and exit");

    std::string library;
    if (const char* env = std::getenv("MAMM_LIBRARY_DIR")) library = env;
    std::string host = "127.0.0.1";
    int port = 8080;
    double timeout = 120.0;
    auto* serve = app.add_subcommand("serve", "Serve the alignment HTTP API");
    serve->add_option("--library", library, "Motion library directory (default: $MAMM_LIBRARY_DIR)");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--timeout", timeout, "Per-request alignment timeout in seconds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("input", e.what(), kExitInput);
    }

    try {
        if (*align) return run_align(a);

        if (library.empty()) throw mamm::InputError("--library or MAMM_LIBRARY_DIR is required");
        mamm::Service service({library, timeout});
        g_service = &service;
        std::signal(SIGINT, [](int) {
            g_stop = 1;
            if (g_service) g_service->stop();
        });
        std::cerr << "mamm: serving " << service.library().entries().size() << " motions on " << host << ":" << port
                  << "\n";
        if (!service.listen(host, port) && !g_stop) {
            return fail("input", "cannot listen on " + host + ":" + std::to_string(port), kExitInput);
        }
        return 0;
    } catch (const mamm::SolverError& e) {
        return fail("solver", e.what(), kExitSolver);
    } catch (const mamm::Error& e) {
        return fail("input", e.what(), kExitInput);
    } catch (const std::exception& e) {
        return fail("solver", e.what(), kExitSolver);
    }
}
