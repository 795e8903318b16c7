#pragma once

// Test-side oracles kept independent of the library's rasterization path:
// analytic ray/box intersection for cube scenes and small numeric helpers.

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>

#include "stereopose/geometry.hpp"

namespace oracle {

using stereopose::CameraIntrinsics;
using stereopose::Pose;

// Nearest intersection parameter of ray o + s*d with the axis-aligned box
// [-half, half]^3, restricted to s > 0. The parameter equals camera depth
// when d is the unnormalized pixel ray (z component 1).
inline std::optional<double> ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                     const Eigen::Vector3d& half) {
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) {
            if (o[a] < -half[a] || o[a] > half[a]) return std::nullopt;
            continue;
        }
        double t0 = (-half[a] - o[a]) / d[a];
        double t1 = (half[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
    }
    if (t_near > t_far || t_far < 0) return std::nullopt;
    return t_near > 0 ? t_near : t_far;
}

// Depth (mm) of a centered box of the given side lengths under `pose`,
// sampled through the pixel-center ray of (x, y); nullopt off-silhouette.
inline std::optional<double> box_depth_at_pixel(const Eigen::Vector3d& sides, const Pose& pose,
                                                const CameraIntrinsics& K, int x, int y) {
    Eigen::Vector3d dir_cam((x + 0.5 - K.cx) / K.fx, (y + 0.5 - K.cy) / K.fy, 1.0);
    Eigen::Matrix3d Rt = pose.R.transpose();
    Eigen::Vector3d o_obj = -(Rt * pose.t);
    Eigen::Vector3d d_obj = Rt * dir_cam;
    auto s = ray_box(o_obj, d_obj, sides / 2.0);
    if (!s || *s <= 0) return std::nullopt;
    return *s;  // dir_cam.z() == 1, so the ray parameter is camera depth
}

}  // namespace oracle
