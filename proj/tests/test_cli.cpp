#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "stereopose/bopstore.hpp"

using namespace stereopose;
namespace fs = std::filesystem;

namespace {

const char* cli = STEREOPOSE_CLI_PATH;

int run(const std::string& args, std::string* output = nullptr) {
    fs::path log = fs::temp_directory_path() / "stereopose_cli_out.txt";
    std::string cmd = std::string(cli) + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(log);
        output->assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("stereopose_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string small_gen_flags(const fs::path& root, int seed = 3) {
    return "generate --out " + root.string() +
           " --scenes 1 --views 2 --min-objects 2 --max-objects 2 --objects 1 3 4"
           " --width 320 --height 240 --focal 300 --seed " +
           std::to_string(seed) + " --workers 1";
}

}  // namespace

TEST_CASE("cli rejects unknown flags and subcommands", "[cli]") {
    CHECK(run("explode") == 1);
    CHECK(run("generate --no-such-flag 1") == 1);
    CHECK(run("--help") == 0);
}

TEST_CASE("generate is reproducible byte for byte", "[cli]") {
    fs::path a = temp_dir("gen_a"), b = temp_dir("gen_b");
    REQUIRE(run(small_gen_flags(a)) == 0);
    REQUIRE(run(small_gen_flags(b)) == 0);
    CHECK(slurp(bop::scene_dir(a, 0) / "scene_gt.json") ==
          slurp(bop::scene_dir(b, 0) / "scene_gt.json"));
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("estimate then evaluate produces per-strategy columns", "[cli]") {
    fs::path root = temp_dir("pipeline");
    REQUIRE(run(small_gen_flags(root)) == 0);

    fs::path est = root / "estimates.json";
    fs::path rep = root / "report";
    REQUIRE(run("estimate --dataset " + root.string() + " --out " + est.string() +
                " --strategy MONO_LEFT,MID_JOINT_PNP --noise-px 2 --seed 5 --workers 2") == 0);
    std::string table;
    REQUIRE(run("evaluate --dataset " + root.string() + " --estimates " + est.string() +
                " --out " + rep.string(),
                &table) == 0);
    CHECK(table.find("MONO_LEFT") != std::string::npos);
    CHECK(table.find("MID_JOINT_PNP") != std::string::npos);
    CHECK(fs::exists(root / "report.json"));
    CHECK(fs::exists(root / "report.csv"));
    CHECK(fs::exists(root / "report.txt"));

    auto j = nlohmann::json::parse(std::ifstream(root / "report.json"));
    CHECK(j["strategies"].contains("MONO_LEFT"));
    CHECK(j["strategies"].contains("MID_JOINT_PNP"));
    // ground-truth features with mild noise solve essentially every pose
    CHECK(j["strategies"]["MID_JOINT_PNP"]["overall_recall"].get<double>() > 50.0);
    fs::remove_all(root);
}

TEST_CASE("estimate/evaluate runs are deterministic", "[cli]") {
    fs::path root = temp_dir("det");
    REQUIRE(run(small_gen_flags(root)) == 0);
    fs::path e1 = root / "e1.json", e2 = root / "e2.json";
    std::string flags = " --dataset " + root.string() +
                        " --strategy MONO_LEFT,DISPARITY_3D3D --noise-px 1 --noise-disp 0.5 "
                        "--seed 9";
    REQUIRE(run("estimate" + flags + " --out " + e1.string() + " --workers 1") == 0);
    REQUIRE(run("estimate" + flags + " --out " + e2.string() + " --workers 3") == 0);
    CHECK(slurp(e1) == slurp(e2));  // worker count must not change results
    fs::remove_all(root);
}

TEST_CASE("evaluate rejects mismatched estimates", "[cli]") {
    fs::path root = temp_dir("mismatch");
    fs::path other = temp_dir("mismatch_other");
    REQUIRE(run(small_gen_flags(root)) == 0);
    REQUIRE(run(small_gen_flags(other, /*seed=*/4)) == 0);

    fs::path est = root / "estimates.json";
    REQUIRE(run("estimate --dataset " + root.string() + " --out " + est.string() +
                " --strategy MONO_LEFT") == 0);

    // remove a frame from the other dataset's gt to force an id mismatch
    fs::path gt_path = bop::scene_dir(other, 0) / "scene_gt.json";
    auto gt = nlohmann::ordered_json::parse(std::ifstream(gt_path));
    gt.erase(gt.begin());
    {
        std::ofstream out(gt_path);
        out << gt.dump(2);
    }
    fs::path cam_path = bop::scene_dir(other, 0) / "scene_camera.json";
    auto cam = nlohmann::ordered_json::parse(std::ifstream(cam_path));
    cam.erase(cam.begin());
    {
        std::ofstream out(cam_path);
        out << cam.dump(2);
    }

    std::string output;
    int rc = run("evaluate --dataset " + other.string() + " --estimates " + est.string() +
                 " --out " + (other / "rep").string(),
                 &output);
    CHECK(rc == 1);
    CHECK(output.find("error") != std::string::npos);
    fs::remove_all(root);
    fs::remove_all(other);
}

TEST_CASE("report merges runs and writes SVG plots", "[cli]") {
    fs::path root = temp_dir("report");
    REQUIRE(run(small_gen_flags(root)) == 0);

    for (int noise : {0, 2}) {
        fs::path est = root / ("est_" + std::to_string(noise) + ".json");
        fs::path rep = root / ("rep_" + std::to_string(noise));
        REQUIRE(run("estimate --dataset " + root.string() + " --out " + est.string() +
                    " --strategy MONO_LEFT,MID_JOINT_PNP --noise-px " + std::to_string(noise) +
                    " --seed 2") == 0);
        REQUIRE(run("evaluate --dataset " + root.string() + " --estimates " + est.string() +
                    " --out " + rep.string()) == 0);
    }
    fs::path merged = root / "cmp";
    REQUIRE(run("report " + (root / "rep_0.json").string() + " " +
                (root / "rep_2.json").string() + " --out " + merged.string()) == 0);
    CHECK(fs::exists(root / "cmp.csv"));
    std::string svg = slurp(root / "cmp_recall.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("MONO_LEFT") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    fs::remove_all(root);
}

TEST_CASE("annotate is idempotent on generated data", "[cli]") {
    fs::path root = temp_dir("annotate");
    REQUIRE(run(small_gen_flags(root)) == 0);
    std::string before = slurp(bop::scene_dir(root, 0) / "scene_gt.json");
    REQUIRE(run("annotate --dataset " + root.string() + " --workers 1") == 0);
    CHECK(slurp(bop::scene_dir(root, 0) / "scene_gt.json") == before);
    fs::remove_all(root);
}

TEST_CASE("bench reports throughput and honors the baseline gate", "[cli]") {
    fs::path root = temp_dir("bench");
    fs::path out = root / "bench.json";
    std::string output;
    REQUIRE(run("bench --frames 2 --workers 2 --out " + out.string(), &output) == 0);
    CHECK(output.find("frames/s") != std::string::npos);
    auto j = nlohmann::json::parse(std::ifstream(out));
    CHECK(j["fps"].get<double>() > 0.0);

    // absurd baseline forces the 50% regression gate
    fs::path base = root / "baseline.json";
    {
        std::ofstream b(base);
        b << "{\"fps\": 1e9}";
    }
    CHECK(run("bench --frames 1 --workers 1 --baseline " + base.string()) == 2);
    fs::remove_all(root);
}

TEST_CASE("config file values are overridden by flags", "[cli]") {
    fs::path root = temp_dir("config");
    fs::path cfg = root / "run.ini";
    {
        std::ofstream c(cfg);
        c << "[generate]\nscenes=1\nviews=3\nseed=5\n";
    }
    // flag --views 2 overrides the file's views=3
    REQUIRE(run("generate --config " + cfg.string() + " --out " + (root / "ds").string() +
                " --views 2 --min-objects 2 --max-objects 2 --objects 1 4 --width 320 "
                "--height 240 --focal 300") == 0);
    bop::StereoScene scene = bop::read_scene(root / "ds", 0);
    CHECK(scene.frames.size() == 2);
    fs::remove_all(root);
}
