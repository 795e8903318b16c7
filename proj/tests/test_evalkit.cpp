#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "stereopose/evalkit.hpp"
#include "stereopose/mesh.hpp"
#include "stereopose/rng.hpp"

using namespace stereopose;
using namespace stereopose::eval;

namespace {

Pose random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ut(-100.0, 100.0);
    return {random_rotation(rng), {ut(rng), ut(rng), 600.0 + ut(rng)}};
}

// ring of n points, exactly symmetric under 180-degree z rotation for even n
std::vector<Eigen::Vector3d> ring_points(int n, double radius, double z) {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < n; ++i) {
        double a = 2.0 * M_PI * i / n;
        pts.push_back({radius * std::cos(a), radius * std::sin(a), z});
    }
    return pts;
}

}  // namespace

TEST_CASE("add_error known answers", "[evalkit]") {
    auto rng = make_rng(211);
    Pose gt = random_pose(rng);
    auto points = ring_points(64, 40.0, 10.0);

    CHECK(add_error(gt, gt, points) == Catch::Approx(0.0).margin(1e-12));

    Pose shifted = gt;
    shifted.t += Eigen::Vector3d(0, 0, 10);
    CHECK(add_error(gt, shifted, points) == Catch::Approx(10.0).margin(1e-9));

    CHECK_THROWS_AS(add_error(gt, gt, {}), InvalidInputError);
}

TEST_CASE("adds_error handles symmetry", "[evalkit]") {
    // z-symmetric cylinder ring: 180-degree rotation maps the point set to
    // itself, so ADD is large but ADD-S vanishes
    auto points = ring_points(256, 40.0, 0.0);
    Pose gt{Matrix3d::Identity(), {0, 0, 600}};
    Pose rotated = gt;
    rotated.R = rot_z(M_PI);

    double add = add_error(gt, rotated, points);
    double adds = adds_error(gt, rotated, points);
    CHECK(add > 40.0);          // points travel across the ring
    CHECK(adds < 0.01 * 80.0);  // < 1% of the 80 mm diameter
    CHECK(adds <= add);
}

TEST_CASE("adds is never larger than add", "[evalkit]") {
    auto rng = make_rng(223);
    auto points = ring_points(128, 35.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        Pose gt = random_pose(rng);
        Pose est = random_pose(rng);
        CHECK(adds_error(gt, est, points) <= add_error(gt, est, points) + 1e-12);
    }
}

TEST_CASE("add_error is a pseudometric", "[evalkit]") {
    auto rng = make_rng(227);
    auto points = ring_points(64, 30.0, 0.0);
    for (int i = 0; i < 200; ++i) {
        Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
        double ab = add_error(a, b, points);
        CHECK(ab == Catch::Approx(add_error(b, a, points)).margin(1e-9));
        CHECK(ab <= add_error(a, c, points) + add_error(c, b, points) + 1e-9);
    }
}

TEST_CASE("recall_table counting", "[evalkit]") {
    TriMesh mesh = make_cube(100.0, 2);  // diameter 100*sqrt(3)
    std::map<int, ObjectMeta> meta;
    meta[1] = make_object_meta(1, mesh, false);
    meta[2] = make_object_meta(2, make_cylinder(30, 90, 24), true);
    const double d1 = meta[1].diameter, d2 = meta[2].diameter;

    SECTION("all zero errors") {
        std::vector<std::pair<int, double>> results = {{1, 0.0}, {1, 0.0}, {2, 0.0}};
        EvalReport report = recall_table(results, meta);
        CHECK(report.per_object.size() == 2);
        CHECK(report.per_object[0].recall == 100.0);
        CHECK(report.per_object[1].recall == 100.0);
        CHECK(report.overall == 100.0);
    }

    SECTION("all errors beyond the diameter") {
        std::vector<std::pair<int, double>> results = {{1, d1 * 2}, {2, d2 * 3}};
        EvalReport report = recall_table(results, meta);
        CHECK(report.overall == 0.0);
    }

    SECTION("two of three under threshold is 66.67") {
        std::vector<std::pair<int, double>> results = {
            {1, 0.05 * d1}, {1, 0.15 * d1}, {1, 0.09 * d1}};
        EvalReport report = recall_table(results, meta);
        CHECK(report.per_object[0].recall == Catch::Approx(66.6667).margin(0.01));
    }

    SECTION("unknown object id") {
        std::vector<std::pair<int, double>> results = {{99, 0.0}};
        CHECK_THROWS_AS(recall_table(results, meta), InvalidInputError);
    }

    SECTION("order invariance") {
        std::vector<std::pair<int, double>> results = {
            {1, 0.05 * d1}, {2, 0.2 * d2}, {1, 0.15 * d1}, {2, 0.01 * d2}};
        EvalReport a = recall_table(results, meta);
        std::reverse(results.begin(), results.end());
        EvalReport b = recall_table(results, meta);
        CHECK(a.overall == b.overall);
        CHECK(a.per_object[0].recall == b.per_object[0].recall);
    }

    SECTION("recall weakly decreases when errors scale up") {
        auto rng = make_rng(229);
        std::uniform_real_distribution<double> u(0.0, 0.3);
        std::vector<std::pair<int, double>> results;
        for (int i = 0; i < 100; ++i) results.push_back({1, u(rng) * d1});
        double prev = 101.0;
        for (double scale : {1.0, 1.5, 2.0, 4.0}) {
            auto scaled = results;
            for (auto& [id, e] : scaled) e *= scale;
            EvalReport report = recall_table(scaled, meta);
            CHECK(report.overall <= prev);
            prev = report.overall;
        }
    }
}

TEST_CASE("subsampled model points keep the spread", "[evalkit]") {
    TriMesh mesh = make_icosphere(45.0, 4);  // 2562 vertices
    ObjectMeta meta = make_object_meta(3, mesh, true);
    CHECK(meta.model_points.size() == 1024);
    CHECK(meta.diameter == Catch::Approx(90.0));
    // farthest-point subsample keeps extreme points: recomputed diameter
    // stays close to the full-set diameter
    CHECK(compute_diameter(meta.model_points) > 0.99 * meta.diameter);
}

TEST_CASE("report rendering has one column per strategy", "[evalkit]") {
    std::map<int, ObjectMeta> meta;
    meta[1] = make_object_meta(1, make_cube(80.0, 2), false);
    meta[4] = make_object_meta(4, make_cylinder(30, 90, 24), true);

    std::vector<EvalReport> reports;
    for (const char* name : {"MONO_LEFT", "MID_JOINT_PNP"}) {
        std::vector<std::pair<int, double>> results = {{1, 1.0}, {4, 50.0}};
        EvalReport r = recall_table(results, meta);
        r.strategy = name;
        reports.push_back(r);
    }
    std::string text = render_text_table(reports, meta);
    CHECK(text.find("MONO_LEFT") != std::string::npos);
    CHECK(text.find("MID_JOINT_PNP") != std::string::npos);
    CHECK(text.find("overall") != std::string::npos);
    CHECK(text.find("obj_000004*") != std::string::npos);  // symmetric marker

    std::string csv = render_csv(reports, meta);
    CHECK(csv.find("object,symmetric,MONO_LEFT,MID_JOINT_PNP") == 0);
}
