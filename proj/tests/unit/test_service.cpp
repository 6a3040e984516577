#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "mamm/error.hpp"
#include "mamm/service.hpp"
#include "synth.hpp"
// after Eigen: resolv.h defines a _res macro
#include "httplib.h"
#include "json.hpp"

using namespace mamm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("mamm_lib_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    void put(const std::string& name, const std::string& text) const { std::ofstream(path / name) << text; }
};

// two short clips plus a file that is not BVH
TempDir small_library() {
    TempDir dir;
    dir.put("b_jump.bvh", write_bvh(synth::jump(40)));
    dir.put("a_walk.bvh", write_bvh(synth::walk(48)));
    dir.put("broken.bvh", "HIERARCHY\nROOT Hips\n{\n");
    dir.put("notes.txt", "not a motion");
    return dir;
}

}  // namespace

TEST_CASE("empty library lists nothing") {
    TempDir dir;
    const MotionLibrary lib = MotionLibrary::load(dir.path.string());
    const HttpReply r = list_motions(lib);
    CHECK(r.status == 200);
    CHECK(json::parse(r.body) == json::array());
}

TEST_CASE("library listing and lookup") {
    const TempDir dir = small_library();
    const MotionLibrary lib = MotionLibrary::load(dir.path.string());
    CHECK(lib.skipped().size() == 1);

    const json list = json::parse(list_motions(lib).body);
    REQUIRE(list.size() == 2);
    CHECK(list[0]["id"] == 0);
    CHECK(list[0]["name"] == "a_walk");
    CHECK(list[0]["frames"] == 48);
    CHECK(list[0]["joints"] == 25);
    CHECK(list[1]["name"] == "b_jump");
    CHECK(list[1]["fps"].get<double>() == doctest::Approx(30.0));

    const HttpReply one = get_motion(lib, "1");
    REQUIRE(one.status == 200);
    const json m = json::parse(one.body);
    CHECK(m["frames"] == 40);
    CHECK(m["skeleton"].size() == 25);
    CHECK(m["skeleton"][0]["parent"].is_null());
    REQUIRE(m["positions"].size() == 40);
    CHECK(m["positions"][0].size() == 25);
    CHECK(m["positions"][0][0].size() == 3);

    CHECK(get_motion(lib, "2").status == 404);
    CHECK(get_motion(lib, "-1").status == 404);
    CHECK(get_motion(lib, "walk").status == 404);

    CHECK_THROWS_AS(MotionLibrary::load((dir.path / "nope").string()), InputError);
}

TEST_CASE("align rejects unknown motions and bad payloads") {
    const TempDir dir = small_library();
    const MotionLibrary lib = MotionLibrary::load(dir.path.string());
    const json waveform{{"values", std::vector<double>(30, 0.5)}, {"fps", 30}};

    json body{{"motion_id", 7}, {"control_type", "waveform"}, {"control", waveform}};
    CHECK(post_align(lib, body.dump(), 120).status == 404);
    body["motion_id"] = -3;
    CHECK(post_align(lib, body.dump(), 120).status == 404);

    body["motion_id"] = 0;
    CHECK(post_align(lib, "{not json", 120).status == 422);
    CHECK(post_align(lib, "[1,2]", 120).status == 422);
    CHECK(post_align(lib, json{{"motion_id", "0"}}.dump(), 120).status == 422);

    json bad = body;
    bad["control_type"] = "smell";
    CHECK(post_align(lib, bad.dump(), 120).status == 422);
    bad = body;
    bad.erase("control");
    CHECK(post_align(lib, bad.dump(), 120).status == 422);
    bad = body;
    bad["params"] = {{"alpha", 2.0}};
    CHECK(post_align(lib, bad.dump(), 120).status == 422);
    bad = body;
    bad["params"] = {{"epsilon", "big"}};
    CHECK(post_align(lib, bad.dump(), 120).status == 422);
    bad = body;
    bad["loop"] = "yes";
    CHECK(post_align(lib, bad.dump(), 120).status == 422);
    bad = body;
    bad["control"] = {{"values", {1, "x"}}};
    CHECK(post_align(lib, bad.dump(), 120).status == 422);
    bad = body;
    bad["control_type"] = "motion";
    bad["control"] = {{"motion_id", 99}};
    CHECK(post_align(lib, bad.dump(), 120).status == 404);

    const HttpReply r = post_align(lib, bad.dump(), 120);
    CHECK(json::parse(r.body).contains("error"));
}

TEST_CASE("echo alignment returns one frame per control frame") {
    const TempDir dir = small_library();
    const MotionLibrary lib = MotionLibrary::load(dir.path.string());
    const json body{{"motion_id", 0}, {"control_type", "motion"}, {"control", {{"motion_id", 0}}}};
    const HttpReply r = post_align(lib, body.dump(), 120);
    REQUIRE(r.status == 200);
    const json out = json::parse(r.body);
    CHECK(out["frames"].size() == 48);
    CHECK(out["frames"][0].size() == 25);
    CHECK(out["fps"].get<double>() == doctest::Approx(30.0));
    CHECK(out["trace_summary"]["records"] == 1 + 6 * 20);
    CHECK(out["trace_summary"]["final_marginal_violation"].get<double>() <= 1e-8);
}

TEST_CASE("align with waveform, keyframes and loop") {
    const TempDir dir = small_library();
    const MotionLibrary lib = MotionLibrary::load(dir.path.string());
    std::vector<double> wave(70);
    for (size_t i = 0; i < wave.size(); ++i) wave[i] = std::sin(0.2 * static_cast<double>(i));
    const json body{{"motion_id", 1},
                    {"control_type", "waveform"},
                    {"control", {{"values", wave}, {"fps", 30}}},
                    {"params", {{"stages", 3}, {"iters", 4}}},
                    {"soft_keyframes", {{{"canvas_patch", {0.9}}, {"motion_frame_start", 10}, {"weight", 1.0}}}},
                    {"hard_keyframes", {{{"control", {0, 10}}, {"motion", {5, 15}}}}},
                    {"loop", true}};
    const HttpReply r = post_align(lib, body.dump(), 120);
    REQUIRE(r.status == 200);
    const json out = json::parse(r.body);
    CHECK(out["frames"].size() == 70);
    CHECK(out["trace_summary"]["stages"] == 3);
    CHECK(out["trace_summary"]["records"] == 1 + 3 * 4);
}

TEST_CASE("align times out with 504") {
    const TempDir dir = small_library();
    const MotionLibrary lib = MotionLibrary::load(dir.path.string());
    const json body{{"motion_id", 0}, {"control_type", "motion"}, {"control", {{"motion_id", 1}}}};
    const HttpReply r = post_align(lib, body.dump(), 0.0);
    CHECK(r.status == 504);
}

TEST_CASE("http endpoints over a socket") {
    const TempDir dir = small_library();
    Service service(ServiceConfig{dir.path.string(), 120.0});
    const int port = service.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server([&] { service.listen_after_bind(); });
    service.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(120, 0);
    auto list = client.Get("/api/motions");
    REQUIRE(list);
    CHECK(list->status == 200);
    CHECK(json::parse(list->body).size() == 2);
    CHECK(list->get_header_value("Content-Type") == "application/json");

    auto missing = client.Get("/api/motions/12");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto bad = client.Post("/api/align", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 422);

    const json echo{{"motion_id", 1},
                    {"control_type", "motion"},
                    {"control", {{"motion_id", 1}}},
                    {"params", {{"stages", 2}, {"iters", 2}}}};
    auto aligned = client.Post("/api/align", echo.dump(), "application/json");
    REQUIRE(aligned);
    CHECK(aligned->status == 200);
    CHECK(json::parse(aligned->body)["frames"].size() == 40);

    service.stop();
    server.join();
}
