#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <string>

#include "stereopose/errors.hpp"

// Camera convention: right-handed, +Z forward, +X right, +Y down (BOP).
// Units are millimeters and pixels throughout.

namespace stereopose {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

inline double rotation_orthonormality_gap(const Matrix3d& R) {
    return (R.transpose() * R - Matrix3d::Identity()).norm();
}

inline bool is_rotation(const Matrix3d& R, double tol = 1e-6) {
    return rotation_orthonormality_gap(R) <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

// Rigid transform object frame -> camera frame, translation in mm.
struct Pose {
    Matrix3d R = Matrix3d::Identity();
    Vector3d t = Vector3d::Zero();

    static Pose identity() { return {}; }

    Vector3d apply(const Vector3d& p) const { return R * p + t; }

    // this ∘ other: first other, then this.
    Pose compose(const Pose& other) const { return {R * other.R, R * other.t + t}; }
    Pose operator*(const Pose& other) const { return compose(other); }

    Pose inverse() const {
        Matrix3d Rt = R.transpose();
        return {Rt, -(Rt * t)};
    }

    bool is_valid(double tol = 1e-9) const {
        return rotation_orthonormality_gap(R) <= tol && std::abs(R.determinant() - 1.0) <= tol &&
               t.allFinite();
    }
};

inline Matrix3d rot_x(double angle) {
    return Eigen::AngleAxisd(angle, Vector3d::UnitX()).toRotationMatrix();
}
inline Matrix3d rot_y(double angle) {
    return Eigen::AngleAxisd(angle, Vector3d::UnitY()).toRotationMatrix();
}
inline Matrix3d rot_z(double angle) {
    return Eigen::AngleAxisd(angle, Vector3d::UnitZ()).toRotationMatrix();
}

// Pinhole camera, BOP cam_K layout. Focal lengths and principal point in
// pixels, image size in pixels.
struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    bool is_valid() const { return fx > 0 && fy > 0 && width >= 1 && height >= 1; }
};

// point is in the camera frame (mm); requires z > 0.
inline Vector2d project(const Vector3d& point, const CameraIntrinsics& K) {
    if (point.z() <= 0.0)
        throw BehindCameraError("project: point has z <= 0 (z=" + std::to_string(point.z()) + ")");
    return {K.fx * point.x() / point.z() + K.cx, K.fy * point.y() / point.z() + K.cy};
}

inline Vector3d backproject(const Vector2d& pixel, double depth, const CameraIntrinsics& K) {
    if (depth <= 0.0)
        throw InvalidInputError("backproject: depth must be > 0 (got " + std::to_string(depth) + ")");
    return {(pixel.x() - K.cx) / K.fx * depth, (pixel.y() - K.cy) / K.fy * depth, depth};
}

// d = f*B/Z and Z = f*B/d; the same map in both directions.
inline double depth_to_disparity(double depth_mm, double focal_px, double baseline_mm) {
    if (focal_px <= 0 || baseline_mm <= 0)
        throw InvalidInputError("depth_to_disparity: focal and baseline must be > 0");
    if (depth_mm <= 0)
        throw InvalidInputError("depth_to_disparity: depth must be > 0");
    return focal_px * baseline_mm / depth_mm;
}

inline double disparity_to_depth(double disparity_px, double focal_px, double baseline_mm) {
    if (focal_px <= 0 || baseline_mm <= 0)
        throw InvalidInputError("disparity_to_depth: focal and baseline must be > 0");
    if (disparity_px <= 0)
        throw InvalidInputError("disparity_to_depth: disparity must be > 0");
    return focal_px * baseline_mm / disparity_px;
}

// Two pinhole cameras; extrinsic_l2r maps left-camera coordinates into the
// right-camera frame. For a rectified rig R = I and t = (-B, 0, 0).
struct StereoRig {
    CameraIntrinsics left;
    CameraIntrinsics right;
    Pose extrinsic_l2r;

    double baseline() const { return extrinsic_l2r.t.norm(); }

    bool is_rectified(double tol = 1e-6) const {
        const Vector3d& t = extrinsic_l2r.t;
        return (extrinsic_l2r.R - Matrix3d::Identity()).norm() <= tol && t.x() < 0 &&
               std::abs(t.y()) <= tol && std::abs(t.z()) <= tol;
    }

    static StereoRig rectified(const CameraIntrinsics& K, double baseline_mm) {
        StereoRig rig;
        rig.left = K;
        rig.right = K;
        rig.extrinsic_l2r = {Matrix3d::Identity(), {-baseline_mm, 0.0, 0.0}};
        return rig;
    }
};

// Half-open pixel box: [x_min, x_max) x [y_min, y_max).
struct BoundingBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    bool is_valid() const { return x_min < x_max && y_min < y_max; }
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }

    bool operator==(const BoundingBox& o) const {
        return x_min == o.x_min && y_min == o.y_min && x_max == o.x_max && y_max == o.y_max;
    }
};

// Minimal axis-aligned box containing both inputs. The caller crops both
// stereo views with the same unified box so that rows stay aligned.
inline BoundingBox unify_bboxes(const BoundingBox& a, const BoundingBox& b) {
    if (!a.is_valid() || !b.is_valid())
        throw InvalidInputError("unify_bboxes: both boxes must be valid");
    return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min), std::max(a.x_max, b.x_max),
            std::max(a.y_max, b.y_max)};
}

// Geodesic distance on SO(3): arccos((trace(Ra^T Rb) - 1) / 2).
inline double rotation_geodesic(const Matrix3d& Ra, const Matrix3d& Rb) {
    if (!is_rotation(Ra) || !is_rotation(Rb))
        throw InvalidInputError("rotation_geodesic: input is not orthonormal");
    double c = ((Ra.transpose() * Rb).trace() - 1.0) * 0.5;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace stereopose
