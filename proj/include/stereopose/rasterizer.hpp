#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "stereopose/geometry.hpp"
#include "stereopose/image.hpp"
#include "stereopose/mesh.hpp"

namespace stereopose {

constexpr std::uint16_t kBackgroundId = 0xFFFF;

// Per-pixel ground-truth feature maps for one view. Background pixels carry
// depth 0, region/object id 0xFFFF and zeroed coordinates.
struct DenseFeatureMaps {
    ImageU8 mask;              // H x W, 0/1
    ImageF64 depth;            // H x W, mm
    ImageF64 xyz;              // H x W x 3, object-frame mm
    ImageU16 region;           // H x W surface-region ids
    ImageU16 obj_index;        // H x W scene-object indices (composite renders)
    ImageF64 selfocc;          // H x W x 6 plane-intersection coordinates
    ImageU8 selfocc_valid;     // H x W x 3, one flag per coordinate plane
    ImageF64 disparity;        // H x W, px (optional)
    ImageU8 disparity_valid;   // H x W (optional)
};

namespace raster {

struct RenderStats {
    int degenerate_faces = 0;  // skipped faces with area <= 1e-12 mm^2
};

namespace detail {

struct ClipVertex {
    Eigen::Vector3d cam;  // camera-frame position
    Eigen::Vector3d obj;  // object-frame position carried through clipping
};

constexpr double kNearPlane = 1e-3;  // mm

// Clip a triangle against z >= kNearPlane; returns a convex polygon of
// 0..4 vertices with object coordinates interpolated at the cuts.
inline int clip_near(const ClipVertex in[3], ClipVertex out[4]) {
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const ClipVertex& a = in[i];
        const ClipVertex& b = in[(i + 1) % 3];
        bool a_in = a.cam.z() >= kNearPlane;
        bool b_in = b.cam.z() >= kNearPlane;
        if (a_in) out[n++] = a;
        if (a_in != b_in) {
            double s = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
            out[n++] = {a.cam + s * (b.cam - a.cam), a.obj + s * (b.obj - a.obj)};
        }
    }
    return n;
}

struct ScreenVertex {
    double u, v;     // continuous pixel coordinates
    double inv_z;    // 1/z
    Eigen::Vector3d obj_over_z;
};

}  // namespace detail

// Z-buffered rasterization of one object. Pixel centers are sampled at
// (x+0.5, y+0.5); both triangle orientations are drawn (no culling).
inline DenseFeatureMaps rasterize(const TriMesh& mesh, const Pose& pose,
                                  const CameraIntrinsics& K, RenderStats* stats = nullptr) {
    if (!pose.is_valid(1e-6)) throw InvalidInputError("rasterize: invalid pose");
    if (!K.is_valid()) throw InvalidInputError("rasterize: invalid intrinsics");
    if (mesh.vertices.empty() || mesh.faces.empty())
        throw InvalidInputError("rasterize: empty mesh");

    const int W = K.width, H = K.height;
    DenseFeatureMaps maps;
    maps.mask = ImageU8(W, H, 1, 0);
    maps.depth = ImageF64(W, H, 1, 0.0);
    maps.xyz = ImageF64(W, H, 3, 0.0);
    maps.region = ImageU16(W, H, 1, kBackgroundId);

    std::vector<double> zbuf(static_cast<size_t>(W) * H,
                             std::numeric_limits<double>::infinity());

    std::vector<Eigen::Vector3d> cam(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) cam[i] = pose.apply(mesh.vertices[i]);

    int degenerate = 0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        if (face_area(mesh, f) <= 1e-12) {
            ++degenerate;
            continue;
        }
        const auto& face = mesh.faces[f];
        detail::ClipVertex tri[3];
        for (int i = 0; i < 3; ++i) tri[i] = {cam[face[i]], mesh.vertices[face[i]]};

        detail::ClipVertex poly[4];
        int n = detail::clip_near(tri, poly);
        if (n < 3) continue;

        detail::ScreenVertex sv[4];
        for (int i = 0; i < n; ++i) {
            double z = poly[i].cam.z();
            sv[i] = {K.fx * poly[i].cam.x() / z + K.cx, K.fy * poly[i].cam.y() / z + K.cy,
                     1.0 / z, poly[i].obj / z};
        }

        std::uint16_t region = mesh.region_of_face.empty()
                                   ? 0
                                   : static_cast<std::uint16_t>(mesh.region_of_face[f]);

        // fan-triangulate the clipped polygon
        for (int k = 2; k < n; ++k) {
            const detail::ScreenVertex& A = sv[0];
            const detail::ScreenVertex& B = sv[k - 1];
            const detail::ScreenVertex& C = sv[k];

            double area = (B.u - A.u) * (C.v - A.v) - (B.v - A.v) * (C.u - A.u);
            if (std::abs(area) < 1e-12) continue;

            int x0 = std::max(0, static_cast<int>(std::floor(std::min({A.u, B.u, C.u}) - 0.5)));
            int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({A.u, B.u, C.u}))));
            int y0 = std::max(0, static_cast<int>(std::floor(std::min({A.v, B.v, C.v}) - 0.5)));
            int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({A.v, B.v, C.v}))));

            double inv_area = 1.0 / area;
            for (int y = y0; y <= y1; ++y) {
                double py = y + 0.5;
                for (int x = x0; x <= x1; ++x) {
                    double px = x + 0.5;
                    double w0 = (B.u - px) * (C.v - py) - (B.v - py) * (C.u - px);
                    double w1 = (C.u - px) * (A.v - py) - (C.v - py) * (A.u - px);
                    double w2 = (A.u - px) * (B.v - py) - (A.v - py) * (B.u - px);
                    bool pos = w0 >= 0 && w1 >= 0 && w2 >= 0;
                    bool neg = w0 <= 0 && w1 <= 0 && w2 <= 0;
                    if (!pos && !neg) continue;
                    double l0 = w0 * inv_area, l1 = w1 * inv_area, l2 = w2 * inv_area;
                    double inv_z = l0 * A.inv_z + l1 * B.inv_z + l2 * C.inv_z;
                    if (inv_z <= 0) continue;
                    double z = 1.0 / inv_z;
                    size_t pix = static_cast<size_t>(y) * W + x;
                    if (z >= zbuf[pix]) continue;
                    zbuf[pix] = z;
                    Eigen::Vector3d obj =
                        (l0 * A.obj_over_z + l1 * B.obj_over_z + l2 * C.obj_over_z) * z;
                    maps.mask.at(x, y) = 1;
                    maps.depth.at(x, y) = z;
                    maps.xyz.at(x, y, 0) = obj.x();
                    maps.xyz.at(x, y, 1) = obj.y();
                    maps.xyz.at(x, y, 2) = obj.z();
                    maps.region.at(x, y) = region;
                }
            }
        }
    }
    if (stats) stats->degenerate_faces = degenerate;
    return maps;
}

// For each foreground pixel, intersect the pixel-center ray (expressed in
// the object frame) with the planes X=0, Y=0, Z=0 and store the remaining
// two coordinates of each intersection: (y,z), (x,z), (x,y). A plane's pair
// is flagged invalid where the ray is parallel to it.
inline void self_occlusion_maps(const Pose& pose, const CameraIntrinsics& K, const ImageU8& mask,
                                ImageF64& selfocc, ImageU8& flags) {
    if (mask.width != K.width || mask.height != K.height)
        throw InvalidInputError("self_occlusion_maps: mask does not match intrinsics");
    if (selfocc.width != K.width || selfocc.height != K.height || selfocc.channels != 6)
        selfocc = ImageF64(K.width, K.height, 6, 0.0);
    if (flags.width != K.width || flags.height != K.height || flags.channels != 3)
        flags = ImageU8(K.width, K.height, 3, 0);

    const Eigen::Matrix3d Rt = pose.R.transpose();
    const Eigen::Vector3d origin_obj = -(Rt * pose.t);

    // which two coordinates to keep per plane
    static constexpr int keep[3][2] = {{1, 2}, {0, 2}, {0, 1}};

    for (int y = 0; y < K.height; ++y)
        for (int x = 0; x < K.width; ++x) {
            if (!mask.at(x, y)) continue;
            Eigen::Vector3d dir_cam((x + 0.5 - K.cx) / K.fx, (y + 0.5 - K.cy) / K.fy, 1.0);
            Eigen::Vector3d dir_obj = (Rt * dir_cam).normalized();
            for (int plane = 0; plane < 3; ++plane) {
                double denom = dir_obj[plane];
                if (std::abs(denom) < 1e-9) {
                    flags.at(x, y, plane) = 0;
                    continue;
                }
                double t_hit = -origin_obj[plane] / denom;
                Eigen::Vector3d p = origin_obj + t_hit * dir_obj;
                selfocc.at(x, y, 2 * plane + 0) = p[keep[plane][0]];
                selfocc.at(x, y, 2 * plane + 1) = p[keep[plane][1]];
                flags.at(x, y, plane) = 1;
            }
        }
}

inline DenseFeatureMaps rasterize_with_selfocc(const TriMesh& mesh, const Pose& pose,
                                               const CameraIntrinsics& K,
                                               RenderStats* stats = nullptr) {
    DenseFeatureMaps maps = rasterize(mesh, pose, K, stats);
    self_occlusion_maps(pose, K, maps.mask, maps.selfocc, maps.selfocc_valid);
    return maps;
}

struct SceneObject {
    const TriMesh* mesh = nullptr;
    Pose pose;
};

// Composite of independently rendered objects plus per-object stats. The
// joint z-buffer winner at a pixel is the object with the smallest own
// depth there, so compositing per-object renders is exact.
struct SceneRender {
    DenseFeatureMaps frame;                 // winning-object features per pixel
    std::vector<double> visibility;         // wins / alone-pixels, 0/0 -> 0
    std::vector<BoundingBox> visible_bbox;  // tight box of winning pixels
    std::vector<int> alone_pixels;
    std::vector<int> visible_pixels;
};

inline SceneRender render_scene(const std::vector<SceneObject>& scene, const CameraIntrinsics& K,
                                bool with_selfocc = true) {
    if (scene.empty()) throw InvalidInputError("render_scene: empty scene");
    const int W = K.width, H = K.height;
    const size_t n = scene.size();

    std::vector<DenseFeatureMaps> alone;
    alone.reserve(n);
    for (const auto& obj : scene) alone.push_back(rasterize(*obj.mesh, obj.pose, K));

    SceneRender out;
    out.frame.mask = ImageU8(W, H, 1, 0);
    out.frame.depth = ImageF64(W, H, 1, 0.0);
    out.frame.xyz = ImageF64(W, H, 3, 0.0);
    out.frame.region = ImageU16(W, H, 1, kBackgroundId);
    out.frame.obj_index = ImageU16(W, H, 1, kBackgroundId);
    out.visibility.assign(n, 0.0);
    out.visible_bbox.assign(n, BoundingBox{});
    out.alone_pixels.assign(n, 0);
    out.visible_pixels.assign(n, 0);

    for (size_t i = 0; i < n; ++i)
        for (const auto& m : alone[i].mask.data) out.alone_pixels[i] += m;

    std::vector<int> min_x(n, W), min_y(n, H), max_x(n, -1), max_y(n, -1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double best = std::numeric_limits<double>::infinity();
            int winner = -1;
            for (size_t i = 0; i < n; ++i) {
                if (!alone[i].mask.at(x, y)) continue;
                double z = alone[i].depth.at(x, y);
                if (z < best) {
                    best = z;
                    winner = static_cast<int>(i);
                }
            }
            if (winner < 0) continue;
            const DenseFeatureMaps& src = alone[winner];
            out.frame.mask.at(x, y) = 1;
            out.frame.depth.at(x, y) = src.depth.at(x, y);
            for (int c = 0; c < 3; ++c) out.frame.xyz.at(x, y, c) = src.xyz.at(x, y, c);
            out.frame.region.at(x, y) = src.region.at(x, y);
            out.frame.obj_index.at(x, y) = static_cast<std::uint16_t>(winner);
            ++out.visible_pixels[winner];
            min_x[winner] = std::min(min_x[winner], x);
            min_y[winner] = std::min(min_y[winner], y);
            max_x[winner] = std::max(max_x[winner], x);
            max_y[winner] = std::max(max_y[winner], y);
        }

    for (size_t i = 0; i < n; ++i) {
        out.visibility[i] =
            out.alone_pixels[i] == 0
                ? 0.0
                : static_cast<double>(out.visible_pixels[i]) / out.alone_pixels[i];
        if (max_x[i] >= 0)
            out.visible_bbox[i] = {static_cast<double>(min_x[i]), static_cast<double>(min_y[i]),
                                   static_cast<double>(max_x[i] + 1),
                                   static_cast<double>(max_y[i] + 1)};
    }

    if (with_selfocc) {
        out.frame.selfocc = ImageF64(W, H, 6, 0.0);
        out.frame.selfocc_valid = ImageU8(W, H, 3, 0);
        for (size_t i = 0; i < n; ++i) {
            if (out.visible_pixels[i] == 0) continue;
            ImageU8 win_mask(W, H, 1, 0);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    if (out.frame.obj_index.at(x, y) == i) win_mask.at(x, y) = 1;
            ImageF64 so;
            ImageU8 fl;
            self_occlusion_maps(scene[i].pose, K, win_mask, so, fl);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    if (!win_mask.at(x, y)) continue;
                    for (int c = 0; c < 6; ++c) out.frame.selfocc.at(x, y, c) = so.at(x, y, c);
                    for (int c = 0; c < 3; ++c)
                        out.frame.selfocc_valid.at(x, y, c) = fl.at(x, y, c);
                }
        }
    }
    return out;
}

// Fraction of each object's silhouette that survives the joint z-buffer.
inline std::vector<double> compute_visibility(const std::vector<SceneObject>& scene,
                                              const CameraIntrinsics& K) {
    return render_scene(scene, K, /*with_selfocc=*/false).visibility;
}

}  // namespace raster
}  // namespace stereopose
