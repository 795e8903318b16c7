#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stereopose/errors.hpp"
#include "stereopose/geometry.hpp"
#include "stereopose/mesh.hpp"

namespace stereopose::eval {

struct ObjectMeta {
    int obj_id = 0;
    std::vector<Eigen::Vector3d> model_points;  // subsampled vertices, mm
    double diameter = 0.0;                      // from the FULL vertex set
    bool symmetric = false;                     // score with adds_error upstream
};

// Farthest-point subsample for bounded nearest-neighbour cost; diameter is
// computed on the full set by the caller.
inline std::vector<Eigen::Vector3d> subsample_model_points(
    const std::vector<Eigen::Vector3d>& vertices, size_t max_points = 1024) {
    if (vertices.size() <= max_points) return vertices;
    std::vector<Eigen::Vector3d> out;
    out.reserve(max_points);
    out.push_back(vertices[0]);
    std::vector<double> dist(vertices.size(), std::numeric_limits<double>::infinity());
    while (out.size() < max_points) {
        const Eigen::Vector3d& last = out.back();
        size_t far_idx = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < vertices.size(); ++i) {
            dist[i] = std::min(dist[i], (vertices[i] - last).squaredNorm());
            if (dist[i] > far_d) {
                far_d = dist[i];
                far_idx = i;
            }
        }
        out.push_back(vertices[far_idx]);
    }
    return out;
}

inline ObjectMeta make_object_meta(int obj_id, const TriMesh& mesh, bool symmetric,
                                   size_t max_points = 1024) {
    ObjectMeta meta;
    meta.obj_id = obj_id;
    meta.model_points = subsample_model_points(mesh.vertices, max_points);
    meta.diameter = mesh.diameter > 0 ? mesh.diameter : compute_diameter(mesh.vertices);
    meta.symmetric = symmetric;
    return meta;
}

// Mean distance between corresponding model points under the two poses.
inline double add_error(const Pose& pose_gt, const Pose& pose_est,
                        const std::vector<Eigen::Vector3d>& model_points) {
    if (model_points.empty()) throw InvalidInputError("add_error: empty model point set");
    double sum = 0.0;
    for (const auto& p : model_points) sum += (pose_est.apply(p) - pose_gt.apply(p)).norm();
    return sum / double(model_points.size());
}

// Mean distance to the CLOSEST transformed model point (ADD-S); exact
// nearest neighbour.
inline double adds_error(const Pose& pose_gt, const Pose& pose_est,
                         const std::vector<Eigen::Vector3d>& model_points) {
    if (model_points.empty()) throw InvalidInputError("adds_error: empty model point set");
    std::vector<Eigen::Vector3d> est_pts(model_points.size());
    for (size_t i = 0; i < model_points.size(); ++i) est_pts[i] = pose_est.apply(model_points[i]);
    double sum = 0.0;
    for (const auto& p : model_points) {
        Eigen::Vector3d gt = pose_gt.apply(p);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : est_pts) best = std::min(best, (e - gt).squaredNorm());
        sum += std::sqrt(best);
    }
    return sum / double(model_points.size());
}

// Metric selected by the object's symmetry flag.
inline double pose_error(const Pose& pose_gt, const Pose& pose_est, const ObjectMeta& meta) {
    return meta.symmetric ? adds_error(pose_gt, pose_est, meta.model_points)
                          : add_error(pose_gt, pose_est, meta.model_points);
}

struct ObjectRecall {
    int obj_id = 0;
    int count = 0;
    int hits = 0;
    double recall = 0.0;  // percent
    bool symmetric = false;
};

struct EvalReport {
    std::vector<ObjectRecall> per_object;  // ordered by obj_id
    double overall = 0.0;                  // unweighted mean of per-object recalls
    int total_count = 0;
    std::string strategy;
};

// Per-object ADD(-S) < tau * diameter recall plus the unweighted overall
// mean, mirroring the results-table layout.
inline EvalReport recall_table(const std::vector<std::pair<int, double>>& results,
                               const std::map<int, ObjectMeta>& meta, double tau = 0.1) {
    std::map<int, ObjectRecall> acc;
    for (const auto& [obj_id, error_mm] : results) {
        auto it = meta.find(obj_id);
        if (it == meta.end())
            throw InvalidInputError("recall_table: no metadata for obj_id " +
                                    std::to_string(obj_id));
        ObjectRecall& r = acc[obj_id];
        r.obj_id = obj_id;
        r.symmetric = it->second.symmetric;
        ++r.count;
        if (error_mm < tau * it->second.diameter) ++r.hits;
    }
    EvalReport report;
    double sum = 0.0;
    for (auto& [obj_id, r] : acc) {
        r.recall = r.count > 0 ? 100.0 * r.hits / r.count : 0.0;
        sum += r.recall;
        report.total_count += r.count;
        report.per_object.push_back(r);
    }
    report.overall = report.per_object.empty() ? 0.0 : sum / report.per_object.size();
    return report;
}

// --- report rendering --------------------------------------------------------

// Aligned text table, one row per object, overall footer row. Columns are
// one recall value per strategy; symmetric objects are marked with '*'.
inline std::string render_text_table(const std::vector<EvalReport>& reports,
                                     const std::map<int, ObjectMeta>& meta) {
    if (reports.empty()) return "";
    std::vector<int> obj_ids;
    for (const auto& r : reports.front().per_object) obj_ids.push_back(r.obj_id);

    std::string out;
    char line[256];
    out += "# ADD-0.1d recall (%); overall = unweighted mean over objects; * = symmetric "
           "(ADD-S)\n";
    std::snprintf(line, sizeof line, "%-12s", "object");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, " %24s", r.strategy.c_str());
        out += line;
    }
    out += "\n";
    for (int obj_id : obj_ids) {
        bool symmetric = false;
        auto it = meta.find(obj_id);
        if (it != meta.end()) symmetric = it->second.symmetric;
        std::snprintf(line, sizeof line, "obj_%06d%s ", obj_id, symmetric ? "*" : " ");
        out += line;
        for (const auto& r : reports) {
            double v = 0.0;
            for (const auto& o : r.per_object)
                if (o.obj_id == obj_id) v = o.recall;
            std::snprintf(line, sizeof line, " %24.2f", v);
            out += line;
        }
        out += "\n";
    }
    std::snprintf(line, sizeof line, "%-12s", "overall");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, " %24.2f", r.overall);
        out += line;
    }
    out += "\n";
    return out;
}

inline std::string render_csv(const std::vector<EvalReport>& reports,
                              const std::map<int, ObjectMeta>& meta) {
    std::string out = "object,symmetric";
    for (const auto& r : reports) out += "," + r.strategy;
    out += "\n";
    if (reports.empty()) return out;
    char line[128];
    for (const auto& o : reports.front().per_object) {
        bool symmetric = false;
        auto it = meta.find(o.obj_id);
        if (it != meta.end()) symmetric = it->second.symmetric;
        std::snprintf(line, sizeof line, "%d,%d", o.obj_id, symmetric ? 1 : 0);
        out += line;
        for (const auto& r : reports) {
            double v = 0.0;
            for (const auto& ro : r.per_object)
                if (ro.obj_id == o.obj_id) v = ro.recall;
            std::snprintf(line, sizeof line, ",%.4f", v);
            out += line;
        }
        out += "\n";
    }
    out += "overall,";
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, ",%.4f", r.overall);
        out += line;
    }
    out += "\n";
    return out;
}

}  // namespace stereopose::eval
