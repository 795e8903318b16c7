#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "stereopose/errors.hpp"
#include "stereopose/rng.hpp"

namespace stereopose {

// Triangle mesh in the object frame (mm), optionally with per-face surface
// region labels. Meshes are immutable after construction by convention.
struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<int> region_of_face;  // empty or one id in [0, k) per face
    double diameter = 0.0;            // max pairwise vertex distance
};

inline double compute_diameter(const std::vector<Eigen::Vector3d>& vertices) {
    double best = 0.0;
    for (size_t i = 0; i < vertices.size(); ++i)
        for (size_t j = i + 1; j < vertices.size(); ++j)
            best = std::max(best, (vertices[i] - vertices[j]).squaredNorm());
    return std::sqrt(best);
}

inline double face_area(const TriMesh& mesh, size_t f) {
    const auto& v0 = mesh.vertices[mesh.faces[f][0]];
    const auto& v1 = mesh.vertices[mesh.faces[f][1]];
    const auto& v2 = mesh.vertices[mesh.faces[f][2]];
    return 0.5 * (v1 - v0).cross(v2 - v0).norm();
}

inline Eigen::Vector3d face_centroid(const TriMesh& mesh, size_t f) {
    return (mesh.vertices[mesh.faces[f][0]] + mesh.vertices[mesh.faces[f][1]] +
            mesh.vertices[mesh.faces[f][2]]) /
           3.0;
}

inline void validate_mesh(const TriMesh& mesh) {
    const int n = static_cast<int>(mesh.vertices.size());
    for (const auto& f : mesh.faces)
        for (int idx : f)
            if (idx < 0 || idx >= n)
                throw InvalidInputError("mesh: face index " + std::to_string(idx) +
                                        " out of range (n=" + std::to_string(n) + ")");
    if (!mesh.region_of_face.empty() && mesh.region_of_face.size() != mesh.faces.size())
        throw InvalidInputError("mesh: region_of_face size mismatch");
}

// Nearest-seed assignment over face centroids; ties break to the lowest
// seed id so results are deterministic.
inline std::vector<int> assign_faces_to_seeds(const TriMesh& mesh,
                                              const std::vector<Eigen::Vector3d>& seeds) {
    if (seeds.empty()) throw InvalidInputError("assign_faces_to_seeds: no seeds");
    std::vector<int> labels(mesh.faces.size(), 0);
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        Eigen::Vector3d c = face_centroid(mesh, f);
        double best = std::numeric_limits<double>::infinity();
        int best_k = 0;
        for (size_t k = 0; k < seeds.size(); ++k) {
            double d = (c - seeds[k]).squaredNorm();
            if (d < best) {
                best = d;
                best_k = static_cast<int>(k);
            }
        }
        labels[f] = best_k;
    }
    return labels;
}

// Farthest-point sampling of k face-centroid seeds, then nearest-seed
// assignment. Deterministic given the seed.
inline std::vector<int> region_partition(const TriMesh& mesh, int k, std::uint64_t seed,
                                         std::vector<Eigen::Vector3d>* seeds_out = nullptr) {
    const size_t m = mesh.faces.size();
    if (k < 1) throw InvalidInputError("region_partition: k must be >= 1");
    if (static_cast<size_t>(k) > m)
        throw InvalidInputError("region_partition: k=" + std::to_string(k) + " exceeds face count " +
                                std::to_string(m));

    std::vector<Eigen::Vector3d> centroids(m);
    for (size_t f = 0; f < m; ++f) centroids[f] = face_centroid(mesh, f);

    auto rng = make_rng(seed);
    std::vector<size_t> chosen;
    chosen.reserve(k);
    chosen.push_back(static_cast<size_t>(rng() % m));

    std::vector<double> dist(m, std::numeric_limits<double>::infinity());
    while (chosen.size() < static_cast<size_t>(k)) {
        const Eigen::Vector3d& last = centroids[chosen.back()];
        size_t far_idx = 0;
        double far_d = -1.0;
        for (size_t f = 0; f < m; ++f) {
            dist[f] = std::min(dist[f], (centroids[f] - last).squaredNorm());
            if (dist[f] > far_d) {
                far_d = dist[f];
                far_idx = f;
            }
        }
        chosen.push_back(far_idx);
    }

    std::vector<Eigen::Vector3d> seeds;
    seeds.reserve(k);
    for (size_t idx : chosen) seeds.push_back(centroids[idx]);
    if (seeds_out) *seeds_out = seeds;
    return assign_faces_to_seeds(mesh, seeds);
}

// ---------------------------------------------------------------------------
// Procedural primitives (all centered at the object-frame origin).

namespace detail {
inline void push_quad(std::vector<std::array<int, 3>>& faces, int a, int b, int c, int d) {
    faces.push_back({a, b, c});
    faces.push_back({a, c, d});
}
}  // namespace detail

// Axis-aligned box, each side split into an n x n grid of quads.
inline TriMesh make_box(double sx, double sy, double sz, int n = 4) {
    TriMesh mesh;
    const double hx = sx / 2, hy = sy / 2, hz = sz / 2;
    // six faces; u,v axes per face, w the outward axis
    struct Side {
        Eigen::Vector3d origin, du, dv;
    };
    const std::vector<Side> sides = {
        {{-hx, -hy, +hz}, {sx, 0, 0}, {0, sy, 0}},   // +z
        {{+hx, -hy, -hz}, {-sx, 0, 0}, {0, sy, 0}},  // -z
        {{+hx, -hy, +hz}, {0, 0, -sz}, {0, sy, 0}},  // +x
        {{-hx, -hy, -hz}, {0, 0, sz}, {0, sy, 0}},   // -x
        {{-hx, +hy, +hz}, {sx, 0, 0}, {0, 0, -sz}},  // +y
        {{-hx, -hy, -hz}, {sx, 0, 0}, {0, 0, sz}},   // -y
    };
    for (const auto& s : sides) {
        int base = static_cast<int>(mesh.vertices.size());
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
                mesh.vertices.push_back(s.origin + s.du * (double(i) / n) + s.dv * (double(j) / n));
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                int v00 = base + j * (n + 1) + i;
                int v10 = v00 + 1;
                int v01 = v00 + (n + 1);
                int v11 = v01 + 1;
                detail::push_quad(mesh.faces, v00, v10, v11, v01);
            }
    }
    mesh.diameter = compute_diameter(mesh.vertices);
    return mesh;
}

inline TriMesh make_cube(double side, int n = 4) { return make_box(side, side, side, n); }

// Icosphere by subdividing an icosahedron.
inline TriMesh make_icosphere(double radius, int subdivisions = 2) {
    TriMesh mesh;
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
        {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : verts) v = v.normalized() * radius;
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Eigen::Vector3d m = ((verts[a] + verts[b]) * 0.5).normalized() * radius;
            verts.push_back(m);
            int idx = static_cast<int>(verts.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    mesh.vertices = std::move(verts);
    mesh.faces = std::move(faces);
    mesh.diameter = 2.0 * radius;
    return mesh;
}

// Closed cylinder along +z. With an even segment count the vertex set maps
// onto itself under a 180-degree rotation about z.
inline TriMesh make_cylinder(double radius, double height, int segments = 24) {
    if (segments < 3) throw InvalidInputError("make_cylinder: need >= 3 segments");
    TriMesh mesh;
    const double hz = height / 2;
    for (int ring = 0; ring < 2; ++ring) {
        double z = ring == 0 ? -hz : hz;
        for (int i = 0; i < segments; ++i) {
            double a = 2.0 * M_PI * i / segments;
            mesh.vertices.push_back({radius * std::cos(a), radius * std::sin(a), z});
        }
    }
    int bottom_center = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({0, 0, -hz});
    int top_center = bottom_center + 1;
    mesh.vertices.push_back({0, 0, hz});

    for (int i = 0; i < segments; ++i) {
        int j = (i + 1) % segments;
        int b0 = i, b1 = j, t0 = segments + i, t1 = segments + j;
        mesh.faces.push_back({b0, b1, t1});
        mesh.faces.push_back({b0, t1, t0});
        mesh.faces.push_back({bottom_center, b1, b0});
        mesh.faces.push_back({top_center, t0, t1});
    }
    mesh.diameter = compute_diameter(mesh.vertices);
    return mesh;
}

inline TriMesh make_tetrahedron(double side) {
    TriMesh mesh;
    const double s = side / std::sqrt(2.0);
    mesh.vertices = {Eigen::Vector3d(s / 2, s / 2, s / 2), Eigen::Vector3d(s / 2, -s / 2, -s / 2),
                     Eigen::Vector3d(-s / 2, s / 2, -s / 2), Eigen::Vector3d(-s / 2, -s / 2, s / 2)};
    // center at origin already (centroid is zero)
    mesh.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    mesh.diameter = compute_diameter(mesh.vertices);
    return mesh;
}

}  // namespace stereopose
