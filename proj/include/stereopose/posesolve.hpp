#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stereopose/geometry.hpp"
#include "stereopose/rasterizer.hpp"
#include "stereopose/rng.hpp"
#include "stereopose/stereomatch.hpp"

namespace stereopose::solve {

enum class ViewTag { Left, Right };

struct Correspondence {
    Eigen::Vector2d pixel;     // px, pixel-center convention
    Eigen::Vector3d obj_point; // mm, object frame
    double weight = 1.0;       // [0,1]
    ViewTag view = ViewTag::Left;
};

using CorrespondenceSet = std::vector<Correspondence>;

struct SolverParams {
    double ransac_threshold_px = 3.0;
    double ransac_confidence = 0.999;
    int max_iterations = 10000;
    int refine_iterations = 20;
    double inlier_threshold_mm = 10.0;   // 3D-3D alignment
    double depth_residual_weight = 1.0;  // px of cost per mm of depth residual
    std::uint64_t seed = 0;
};

// Solver-level analogues of the fusion taxonomy: per-view solve + pose
// combination (late), joint two-camera PnP over concatenated
// correspondences (mid), disparity-lifted 3D-3D alignment, and joint PnP
// with added depth residuals (early + disparity).
enum class FusionStrategy {
    MonoLeft,
    LatePoseCombine,
    MidJointPnp,
    Disparity3d3d,
    EarlyJointPnpPlusDepth,
};

inline const char* to_string(FusionStrategy s) {
    switch (s) {
        case FusionStrategy::MonoLeft: return "MONO_LEFT";
        case FusionStrategy::LatePoseCombine: return "LATE_POSE_COMBINE";
        case FusionStrategy::MidJointPnp: return "MID_JOINT_PNP";
        case FusionStrategy::Disparity3d3d: return "DISPARITY_3D3D";
        case FusionStrategy::EarlyJointPnpPlusDepth: return "EARLY_JOINT_PNP_PLUS_DEPTH";
    }
    return "?";
}

inline FusionStrategy strategy_from_string(const std::string& name) {
    for (FusionStrategy s : {FusionStrategy::MonoLeft, FusionStrategy::LatePoseCombine,
                             FusionStrategy::MidJointPnp, FusionStrategy::Disparity3d3d,
                             FusionStrategy::EarlyJointPnpPlusDepth})
        if (name == to_string(s)) return s;
    throw ConfigError("unknown fusion strategy '" + name + "'");
}

inline std::vector<FusionStrategy> all_strategies() {
    return {FusionStrategy::MonoLeft, FusionStrategy::LatePoseCombine, FusionStrategy::MidJointPnp,
            FusionStrategy::Disparity3d3d, FusionStrategy::EarlyJointPnpPlusDepth};
}

struct PoseEstimate {
    Pose pose;  // object -> LEFT camera
    int inlier_count = 0;
    double inlier_ratio = 0.0;
    double mean_reproj_px = 0.0;    // over inliers, reprojection routes
    double mean_residual_mm = 0.0;  // over inliers, 3D-3D routes
    FusionStrategy strategy = FusionStrategy::MonoLeft;
    bool converged = false;
    bool used_fallback = false;  // stereo strategy fell back to mono signal
};

// ---------------------------------------------------------------------------
// Kabsch / Umeyama rigid alignment (object -> camera, no scale)

using PointPair = std::pair<Eigen::Vector3d, Eigen::Vector3d>;  // (object, camera)

inline Pose kabsch_exact(const std::vector<PointPair>& pairs) {
    if (pairs.size() < 3)
        throw InsufficientDataError("kabsch: need >= 3 point pairs, got " +
                                    std::to_string(pairs.size()));
    Eigen::Vector3d mean_obj = Eigen::Vector3d::Zero(), mean_cam = Eigen::Vector3d::Zero();
    for (const auto& [o, c] : pairs) {
        mean_obj += o;
        mean_cam += c;
    }
    mean_obj /= double(pairs.size());
    mean_cam /= double(pairs.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    double spread = 0.0;
    for (const auto& [o, c] : pairs) {
        cov += (c - mean_cam) * (o - mean_obj).transpose();
        spread = std::max(spread, (o - mean_obj).squaredNorm());
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    // collinear object points leave the rotation about the line unconstrained
    if (svd.singularValues()(1) <= 1e-9 * std::max(1.0, svd.singularValues()(0)))
        throw DegenerateConfigError("kabsch: point pairs are (nearly) collinear");
    Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    if ((U * V.transpose()).determinant() < 0) D(2, 2) = -1;
    Pose pose;
    pose.R = U * D * V.transpose();
    pose.t = mean_cam - pose.R * mean_obj;
    return pose;
}

// ---------------------------------------------------------------------------
// Grunert P3P: object points + unit bearings -> up to 4 candidate poses.

namespace detail {

inline int solve_quartic(const std::array<double, 5>& c, std::array<double, 4>& roots) {
    // c[0] x^4 + ... + c[4] = 0, real roots via companion eigenvalues with
    // a few Newton polish steps
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    if (scale == 0.0 || std::abs(c[0]) < 1e-14 * scale) return 0;

    Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
    for (int i = 0; i < 4; ++i) companion(0, i) = -c[i + 1] / c[0];
    companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix4d> es(companion, /*computeEigenvectors=*/false);

    auto eval = [&](double x) { return (((c[0] * x + c[1]) * x + c[2]) * x + c[3]) * x + c[4]; };
    auto deriv = [&](double x) { return ((4 * c[0] * x + 3 * c[1]) * x + 2 * c[2]) * x + c[3]; };

    int n = 0;
    for (int i = 0; i < 4; ++i) {
        std::complex<double> ev = es.eigenvalues()(i);
        if (std::abs(ev.imag()) > 1e-4 * std::max(1.0, std::abs(ev.real()))) continue;
        double x = ev.real();
        for (int it = 0; it < 4; ++it) {
            double d = deriv(x);
            if (std::abs(d) < 1e-300) break;
            x -= eval(x) / d;
        }
        bool dup = false;
        for (int j = 0; j < n; ++j)
            if (std::abs(roots[j] - x) < 1e-10 * std::max(1.0, std::abs(x))) dup = true;
        if (!dup) roots[n++] = x;
    }
    return n;
}

}  // namespace detail

inline int p3p_grunert(const std::array<Eigen::Vector3d, 3>& obj,
                       const std::array<Eigen::Vector3d, 3>& bearing, std::array<Pose, 4>& out) {
    const double a = (obj[1] - obj[2]).norm();
    const double b = (obj[0] - obj[2]).norm();
    const double c = (obj[0] - obj[1]).norm();
    if (a < 1e-9 || b < 1e-9 || c < 1e-9) return 0;

    const double ca = bearing[1].dot(bearing[2]);
    const double cb = bearing[0].dot(bearing[2]);
    const double cg = bearing[0].dot(bearing[1]);
    const double A = (a * a) / (b * b);
    const double B = (c * c) / (b * b);

    // quartic in v = s3/s1 (resultant of the two law-of-cosines ratios)
    const std::array<double, 5> q = {
        A * A - 2 * A * B - 2 * A + B * B - 4 * B * ca * ca + 2 * B + 1,
        -4 * (A * A * cb - 2 * A * B * cb - A * ca * cg - A * cb + B * B * cb -
              2 * B * ca * ca * cb - B * ca * cg + B * cb + ca * cg),
        2 * (2 * A * A * cb * cb + A * A - 4 * A * B * cb * cb - 2 * A * B - 4 * A * ca * cb * cg -
             2 * A * cg * cg + 2 * B * B * cb * cb + B * B - 2 * B * ca * ca -
             4 * B * ca * cb * cg + 2 * ca * ca + 2 * cg * cg - 1),
        -4 * (A * A * cb - 2 * A * B * cb - A * ca * cg - 2 * A * cb * cg * cg + A * cb +
              B * B * cb - B * ca * cg - B * cb + ca * cg),
        A * A - 2 * A * B - 4 * A * cg * cg + 2 * A + B * B - 2 * B + 1};

    std::array<double, 4> roots{};
    int n_roots = detail::solve_quartic(q, roots);

    int n_out = 0;
    for (int i = 0; i < n_roots && n_out < 4; ++i) {
        double v = roots[i];
        if (v <= 0) continue;
        double denom_s1 = 1 + v * v - 2 * v * cb;
        if (denom_s1 <= 0) continue;
        double s1 = b / std::sqrt(denom_s1);

        // candidate u values: linear elimination plus the quadratic roots
        std::array<double, 3> us{};
        int n_u = 0;
        double lin_den = 2 * (cg - v * ca);
        double lin_num = (A - B) * (1 + v * v - 2 * v * cb) + 1 - v * v;
        if (std::abs(lin_den) > 1e-9 * std::max(1.0, std::abs(lin_num))) us[n_u++] = lin_num / lin_den;
        double disc = cg * cg - (1 - B * (1 + v * v - 2 * v * cb));
        if (disc >= 0) {
            double sq = std::sqrt(disc);
            us[n_u++] = cg + sq;
            us[n_u++] = cg - sq;
        }

        double best_u = -1, best_res = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n_u; ++k) {
            double u = us[k];
            if (u <= 0) continue;
            double r1 = u * u + v * v - 2 * u * v * ca - A * (1 + v * v - 2 * v * cb);
            double r2 = 1 + u * u - 2 * u * cg - B * (1 + v * v - 2 * v * cb);
            double res = std::abs(r1) + std::abs(r2);
            if (res < best_res) {
                best_res = res;
                best_u = u;
            }
        }
        if (best_u <= 0) continue;

        std::vector<PointPair> pairs = {{obj[0], bearing[0] * s1},
                                        {obj[1], bearing[1] * (best_u * s1)},
                                        {obj[2], bearing[2] * (v * s1)}};
        try {
            out[n_out++] = kabsch_exact(pairs);
        } catch (const DegenerateConfigError&) {
        }
    }
    return n_out;
}

// ---------------------------------------------------------------------------
// Reprojection machinery shared by RANSAC scoring and refinement.

// Camera context: right view present iff K_right != nullptr; right-view
// residuals compose the pose with the left->right extrinsic.
struct CameraContext {
    const CameraIntrinsics* K_left = nullptr;
    const CameraIntrinsics* K_right = nullptr;
    Pose l2r;

    const CameraIntrinsics& intrinsics(ViewTag v) const {
        if (v == ViewTag::Left) return *K_left;
        if (!K_right) throw ConfigError("right-view correspondence without right camera");
        return *K_right;
    }
};

// Reprojection error in px of one correspondence; infinity when the point
// lands behind the camera.
inline double reprojection_error(const Correspondence& c, const Pose& pose,
                                 const CameraContext& ctx) {
    Eigen::Vector3d q = pose.apply(c.obj_point);
    if (c.view == ViewTag::Right) q = ctx.l2r.apply(q);
    if (q.z() <= 0) return std::numeric_limits<double>::infinity();
    const CameraIntrinsics& K = ctx.intrinsics(c.view);
    Eigen::Vector2d proj(K.fx * q.x() / q.z() + K.cx, K.fy * q.y() / q.z() + K.cy);
    return (proj - c.pixel).norm();
}

// Nonlinear refinement problem: weighted reprojection residuals over one or
// two views plus optional 3D point-to-point residuals from disparity lifts.
struct RefineProblem {
    CorrespondenceSet corrs;
    CameraContext ctx;
    std::vector<PointPair> depth_pairs;  // (object point, lifted left-camera point)
    double depth_weight = 1.0;

    int residual_count() const {
        return static_cast<int>(2 * corrs.size() + 3 * depth_pairs.size());
    }
};

// Residuals (and optionally the analytic Jacobian) at pose perturbed by
// delta = [omega; dt]: R' = exp([omega]x) R, t' = t + dt, evaluated at
// delta = 0. Exposed so tests can check the Jacobian against finite
// differences of `residuals_at`.
inline void residuals_and_jacobian(const RefineProblem& prob, const Pose& pose,
                                   Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    const int m = prob.residual_count();
    r.resize(m);
    if (J) J->setZero(m, 6);

    auto skew = [](const Eigen::Vector3d& v) {
        Eigen::Matrix3d s;
        s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
        return s;
    };

    int row = 0;
    for (const auto& c : prob.corrs) {
        const Eigen::Vector3d a = pose.R * c.obj_point;  // rotated point, pre-translation
        Eigen::Vector3d q = a + pose.t;
        Eigen::Matrix3d dq_dw = -skew(a);
        Eigen::Matrix3d dq_dt = Eigen::Matrix3d::Identity();
        if (c.view == ViewTag::Right) {
            q = prob.ctx.l2r.apply(q);
            dq_dw = prob.ctx.l2r.R * dq_dw;
            dq_dt = prob.ctx.l2r.R * dq_dt;
        }
        const CameraIntrinsics& K = prob.ctx.intrinsics(c.view);
        const double z = std::max(q.z(), 1e-9);
        const double w = std::sqrt(std::clamp(c.weight, 0.0, 1.0));
        r[row] = w * (K.fx * q.x() / z + K.cx - c.pixel.x());
        r[row + 1] = w * (K.fy * q.y() / z + K.cy - c.pixel.y());
        if (J) {
            Eigen::Matrix<double, 2, 3> duv_dq;
            duv_dq << K.fx / z, 0, -K.fx * q.x() / (z * z), 0, K.fy / z, -K.fy * q.y() / (z * z);
            J->block<2, 3>(row, 0) = w * duv_dq * dq_dw;
            J->block<2, 3>(row, 3) = w * duv_dq * dq_dt;
        }
        row += 2;
    }
    for (const auto& [obj, cam] : prob.depth_pairs) {
        const Eigen::Vector3d a = pose.R * obj;
        Eigen::Vector3d q = a + pose.t;
        r.segment<3>(row) = prob.depth_weight * (q - cam);
        if (J) {
            J->block<3, 3>(row, 0) = prob.depth_weight * -skew(a);
            J->block<3, 3>(row, 3) = prob.depth_weight * Eigen::Matrix3d::Identity();
        }
        row += 3;
    }
    if (!r.allFinite()) throw NumericError("refine: non-finite residuals");
}

inline Eigen::VectorXd residuals_at(const RefineProblem& prob, const Pose& pose,
                                    const Eigen::Matrix<double, 6, 1>& delta) {
    Eigen::Vector3d omega = delta.head<3>();
    Pose perturbed;
    double angle = omega.norm();
    perturbed.R = (angle < 1e-16 ? Eigen::Matrix3d::Identity()
                                 : Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix()) *
                  pose.R;
    perturbed.t = pose.t + delta.tail<3>();
    Eigen::VectorXd r;
    residuals_and_jacobian(prob, perturbed, r, nullptr);
    return r;
}

// Damped Gauss-Newton; the cost over accepted steps is non-increasing and
// the damping doubles whenever a step would increase it.
inline Pose refine_pose(const RefineProblem& prob, const Pose& pose0, int iterations = 20) {
    if (!pose0.is_valid(1e-6)) throw InvalidInputError("refine_pose: invalid initial pose");
    Pose pose = pose0;
    double lambda = 1e-6;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    residuals_and_jacobian(prob, pose, r, &J);
    double cost = r.squaredNorm();

    for (int it = 0; it < iterations; ++it) {
        Eigen::Matrix<double, 6, 6> H = J.transpose() * J;
        H.diagonal().array() += lambda;
        Eigen::Matrix<double, 6, 1> delta = H.ldlt().solve(-J.transpose() * r);
        if (!delta.allFinite()) throw NumericError("refine: non-finite step");

        Eigen::Vector3d omega = delta.head<3>();
        double angle = omega.norm();
        Pose trial;
        trial.R = (angle < 1e-16 ? Eigen::Matrix3d::Identity()
                                 : Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix()) *
                  pose.R;
        trial.t = pose.t + delta.tail<3>();

        Eigen::VectorXd r_trial;
        Eigen::MatrixXd J_trial;
        residuals_and_jacobian(prob, trial, r_trial, &J_trial);
        double cost_trial = r_trial.squaredNorm();
        if (cost_trial <= cost) {
            pose = trial;
            r = std::move(r_trial);
            J = std::move(J_trial);
            cost = cost_trial;
            lambda = std::max(lambda * 0.5, 1e-12);
        } else {
            lambda *= 2.0;
        }
    }
    return pose;
}

// Convenience overload for plain single/two-view reprojection refinement.
inline Pose refine_pose(const Pose& pose0, const CorrespondenceSet& corrs,
                        const CameraContext& ctx, int iterations = 20) {
    RefineProblem prob;
    prob.corrs = corrs;
    prob.ctx = ctx;
    return refine_pose(prob, pose0, iterations);
}

// ---------------------------------------------------------------------------
// RANSAC PnP over one or two views.

namespace detail {

inline void validate_corrs(const CorrespondenceSet& corrs) {
    for (const auto& c : corrs)
        if (c.weight < 0.0 || c.weight > 1.0)
            throw InvalidInputError("correspondence weight outside [0,1]");
}

inline Eigen::Vector3d bearing_of(const Correspondence& c, const CameraIntrinsics& K) {
    return Eigen::Vector3d((c.pixel.x() - K.cx) / K.fx, (c.pixel.y() - K.cy) / K.fy, 1.0)
        .normalized();
}

struct Score {
    int inliers = 0;
    double residual_sum = 0.0;

    bool better_than(const Score& o) const {
        return inliers > o.inliers || (inliers == o.inliers && residual_sum < o.residual_sum);
    }
};

inline Score score_pose(const CorrespondenceSet& corrs, const Pose& pose,
                        const CameraContext& ctx, double threshold,
                        std::vector<char>* inlier_mask = nullptr) {
    Score s;
    if (inlier_mask) inlier_mask->assign(corrs.size(), 0);
    for (size_t i = 0; i < corrs.size(); ++i) {
        double e = reprojection_error(corrs[i], pose, ctx);
        if (e < threshold) {
            ++s.inliers;
            s.residual_sum += e;
            if (inlier_mask) (*inlier_mask)[i] = 1;
        }
    }
    return s;
}

inline int adaptive_iterations(double inlier_ratio, double confidence, int sample_size,
                               int max_iterations) {
    if (inlier_ratio <= 0) return max_iterations;
    double p_good = std::pow(inlier_ratio, sample_size);
    if (p_good >= 1.0 - 1e-12) return 1;
    double n = std::log(std::max(1e-12, 1.0 - confidence)) / std::log(1.0 - p_good);
    if (!std::isfinite(n) || n > max_iterations) return max_iterations;
    return std::max(1, static_cast<int>(std::ceil(n)));
}

// RANSAC over P3P hypotheses drawn from single-view minimal samples
// (3 points + 1 disambiguation point), scored on the full set, followed by
// damped Gauss-Newton refinement on the inliers.
inline PoseEstimate ransac_pnp(const CorrespondenceSet& corrs, const CameraContext& ctx,
                               const SolverParams& params) {
    validate_corrs(corrs);
    if (corrs.size() < 4)
        throw InsufficientDataError("pnp: need >= 4 correspondences, got " +
                                    std::to_string(corrs.size()));

    std::vector<int> idx_left, idx_right;
    for (size_t i = 0; i < corrs.size(); ++i)
        (corrs[i].view == ViewTag::Left ? idx_left : idx_right).push_back(static_cast<int>(i));
    if (!idx_right.empty() && !ctx.K_right)
        throw ConfigError("pnp: right-view correspondences but no right camera");

    std::vector<const std::vector<int>*> sample_views;
    if (idx_left.size() >= 4) sample_views.push_back(&idx_left);
    if (idx_right.size() >= 4) sample_views.push_back(&idx_right);
    if (sample_views.empty())
        throw InsufficientDataError("pnp: no single view has the 4 points needed for hypotheses");

    auto rng = make_rng(params.seed);
    Pose best_pose;
    Score best_score;
    bool have_pose = false;
    int needed = params.max_iterations;

    for (int iter = 0; iter < needed && iter < params.max_iterations; ++iter) {
        const std::vector<int>& pool = *sample_views[iter % sample_views.size()];
        // 4 distinct indices by rejection
        std::array<int, 4> pick{};
        std::uniform_int_distribution<int> uni(0, static_cast<int>(pool.size()) - 1);
        for (int k = 0; k < 4;) {
            int cand = pool[uni(rng)];
            bool dup = false;
            for (int j = 0; j < k; ++j) dup |= (pick[j] == cand);
            if (!dup) pick[k++] = cand;
        }
        const ViewTag view = corrs[pick[0]].view;
        const CameraIntrinsics& K = ctx.intrinsics(view);

        std::array<Eigen::Vector3d, 3> obj, bearings;
        for (int k = 0; k < 3; ++k) {
            obj[k] = corrs[pick[k]].obj_point;
            bearings[k] = bearing_of(corrs[pick[k]], K);
        }
        std::array<Pose, 4> candidates;
        int n = p3p_grunert(obj, bearings, candidates);
        if (n == 0) continue;

        // p3p poses are object->sampled-camera; bring right-view hypotheses
        // into the left frame
        for (int k = 0; k < n; ++k)
            if (view == ViewTag::Right) candidates[k] = ctx.l2r.inverse() * candidates[k];

        // disambiguate with the 4th point, then score the winner on all
        int best_k = -1;
        double best_e = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
            double e = reprojection_error(corrs[pick[3]], candidates[k], ctx);
            if (e < best_e) {
                best_e = e;
                best_k = k;
            }
        }
        if (best_k < 0 || !std::isfinite(best_e)) continue;

        Score s = score_pose(corrs, candidates[best_k], ctx, params.ransac_threshold_px);
        if (!have_pose || s.better_than(best_score)) {
            best_score = s;
            best_pose = candidates[best_k];
            have_pose = true;
            needed = adaptive_iterations(double(s.inliers) / corrs.size(),
                                         params.ransac_confidence, 4, params.max_iterations);
        }
    }

    if (!have_pose || best_score.inliers < 4)
        throw DegenerateConfigError("pnp: no non-degenerate hypothesis reached 4 inliers");

    // refine on inliers, re-classify, refine once more
    std::vector<char> mask;
    score_pose(corrs, best_pose, ctx, params.ransac_threshold_px, &mask);
    Pose pose = best_pose;
    for (int round = 0; round < 2; ++round) {
        RefineProblem prob;
        prob.ctx = ctx;
        for (size_t i = 0; i < corrs.size(); ++i)
            if (mask[i]) prob.corrs.push_back(corrs[i]);
        if (prob.corrs.size() < 4) break;
        pose = refine_pose(prob, pose, params.refine_iterations);
        score_pose(corrs, pose, ctx, params.ransac_threshold_px, &mask);
    }

    Score final_score = score_pose(corrs, pose, ctx, params.ransac_threshold_px, &mask);
    PoseEstimate est;
    est.pose = pose;
    est.inlier_count = final_score.inliers;
    est.inlier_ratio = double(final_score.inliers) / corrs.size();
    est.mean_reproj_px =
        final_score.inliers > 0 ? final_score.residual_sum / final_score.inliers : 0.0;
    est.converged = final_score.inliers >= 4;
    return est;
}

}  // namespace detail

// Single-view PnP in the camera of the given intrinsics.
inline PoseEstimate pnp_solve(const CorrespondenceSet& corrs, const CameraIntrinsics& K,
                              const SolverParams& params = {}) {
    for (const auto& c : corrs)
        if (c.view != ViewTag::Left)
            throw ConfigError("pnp_solve: expected single-view correspondences tagged Left");
    CameraContext ctx;
    ctx.K_left = &K;
    PoseEstimate est = detail::ransac_pnp(corrs, ctx, params);
    est.strategy = FusionStrategy::MonoLeft;
    return est;
}

// Joint two-camera PnP: one pose in the LEFT camera frame minimizing
// reprojection residuals across both views; hypotheses come from either
// view and are scored on the union. An empty right set reduces exactly to
// pnp_solve on the left view.
inline PoseEstimate joint_stereo_pnp(const CorrespondenceSet& corrs, const StereoRig& rig,
                                     const SolverParams& params = {}) {
    CameraContext ctx;
    ctx.K_left = &rig.left;
    ctx.K_right = &rig.right;
    ctx.l2r = rig.extrinsic_l2r;
    PoseEstimate est = detail::ransac_pnp(corrs, ctx, params);
    est.strategy = FusionStrategy::MidJointPnp;
    return est;
}

// ---------------------------------------------------------------------------
// 3D-3D alignment routes.

// Closed-form Kabsch with an optional 3-point RANSAC wrapper (mm threshold).
inline PoseEstimate kabsch_align(const std::vector<PointPair>& pairs, const SolverParams& params = {},
                                 bool use_ransac = false) {
    if (pairs.size() < 3)
        throw InsufficientDataError("kabsch_align: need >= 3 pairs, got " +
                                    std::to_string(pairs.size()));

    auto count_inliers = [&](const Pose& pose, std::vector<char>* mask) {
        int n = 0;
        double sum = 0.0;
        if (mask) mask->assign(pairs.size(), 0);
        for (size_t i = 0; i < pairs.size(); ++i) {
            double e = (pose.apply(pairs[i].first) - pairs[i].second).norm();
            if (e < params.inlier_threshold_mm) {
                ++n;
                sum += e;
                if (mask) (*mask)[i] = 1;
            }
        }
        return std::pair<int, double>(n, sum);
    };

    Pose pose;
    if (!use_ransac) {
        pose = kabsch_exact(pairs);
    } else {
        auto rng = make_rng(params.seed);
        std::uniform_int_distribution<int> uni(0, static_cast<int>(pairs.size()) - 1);
        int best_inliers = -1;
        double best_sum = 0.0;
        bool have = false;
        int needed = params.max_iterations;
        for (int iter = 0; iter < needed && iter < params.max_iterations; ++iter) {
            std::array<int, 3> pick{};
            for (int k = 0; k < 3;) {
                int cand = uni(rng);
                bool dup = false;
                for (int j = 0; j < k; ++j) dup |= (pick[j] == cand);
                if (!dup) pick[k++] = cand;
            }
            std::vector<PointPair> sample = {pairs[pick[0]], pairs[pick[1]], pairs[pick[2]]};
            Pose cand;
            try {
                cand = kabsch_exact(sample);
            } catch (const DegenerateConfigError&) {
                continue;
            }
            auto [n, sum] = count_inliers(cand, nullptr);
            if (!have || n > best_inliers || (n == best_inliers && sum < best_sum)) {
                best_inliers = n;
                best_sum = sum;
                pose = cand;
                have = true;
                needed = detail::adaptive_iterations(double(n) / pairs.size(),
                                                     params.ransac_confidence, 3,
                                                     params.max_iterations);
            }
        }
        if (!have || best_inliers < 3)
            throw DegenerateConfigError("kabsch_align: all RANSAC samples degenerate");
        // final fit on the consensus set
        std::vector<char> mask;
        count_inliers(pose, &mask);
        std::vector<PointPair> inliers;
        for (size_t i = 0; i < pairs.size(); ++i)
            if (mask[i]) inliers.push_back(pairs[i]);
        if (inliers.size() >= 3) {
            try {
                pose = kabsch_exact(inliers);
            } catch (const DegenerateConfigError&) {
            }
        }
    }

    std::vector<char> mask;
    auto [n, sum] = count_inliers(pose, &mask);
    PoseEstimate est;
    est.pose = pose;
    est.inlier_count = n;
    est.inlier_ratio = double(n) / pairs.size();
    est.mean_residual_mm = n > 0 ? sum / n : 0.0;
    est.converged = n >= 3;
    est.strategy = FusionStrategy::Disparity3d3d;
    return est;
}

// Lift left-view correspondences to camera-frame 3D points through the
// disparity (Z = f*B/d) and align against the object points.
inline PoseEstimate disparity_3d3d_solve(const CorrespondenceSet& corrs,
                                         const std::vector<double>& corr_disparity,
                                         const StereoRig& rig, const SolverParams& params = {}) {
    if (!rig.is_rectified())
        throw ConfigError("disparity_3d3d_solve: rig must be rectified");
    if (corr_disparity.size() != corrs.size())
        throw InvalidInputError("disparity_3d3d_solve: disparity count mismatch");
    const double fB = rig.left.fx * rig.baseline();

    std::vector<PointPair> pairs;
    for (size_t i = 0; i < corrs.size(); ++i) {
        double d = corr_disparity[i];
        if (!std::isfinite(d) || d <= 0) continue;
        double z = fB / d;
        pairs.push_back({corrs[i].obj_point, backproject(corrs[i].pixel, z, rig.left)});
    }
    if (pairs.size() < 3)
        throw InsufficientDataError("disparity_3d3d_solve: only " + std::to_string(pairs.size()) +
                                    " correspondences have valid disparity");
    return kabsch_align(pairs, params, /*use_ransac=*/true);
}

// Sample a dense disparity map at the correspondence pixels (NaN where
// invalid or out of bounds).
inline std::vector<double> sample_disparity(const CorrespondenceSet& corrs,
                                            const stereo::DisparityMap& map) {
    std::vector<double> out(corrs.size(), std::numeric_limits<double>::quiet_NaN());
    for (size_t i = 0; i < corrs.size(); ++i) {
        if (corrs[i].view != ViewTag::Left) continue;
        int x = static_cast<int>(std::floor(corrs[i].pixel.x()));
        int y = static_cast<int>(std::floor(corrs[i].pixel.y()));
        if (x < 0 || y < 0 || x >= map.values.width || y >= map.values.height) continue;
        if (!map.validity.at(x, y)) continue;
        out[i] = map.values.at(x, y);
    }
    return out;
}

inline PoseEstimate disparity_3d3d_solve(const CorrespondenceSet& corrs,
                                         const stereo::DisparityMap& disparity,
                                         const StereoRig& rig, const SolverParams& params = {}) {
    return disparity_3d3d_solve(corrs, sample_disparity(corrs, disparity), rig, params);
}

// ---------------------------------------------------------------------------
// Late fusion: combine per-view estimates into the left frame.

inline PoseEstimate fuse_late(const PoseEstimate& left, const PoseEstimate& right,
                              const StereoRig& rig) {
    auto right_in_left = [&](const PoseEstimate& r) {
        PoseEstimate m = r;
        m.pose = rig.extrinsic_l2r.inverse() * r.pose;
        return m;
    };
    if (!left.converged && !right.converged) {
        PoseEstimate est = left;
        est.strategy = FusionStrategy::LatePoseCombine;
        est.converged = false;
        est.used_fallback = true;
        return est;
    }
    if (!left.converged || !right.converged) {
        PoseEstimate est = left.converged ? left : right_in_left(right);
        est.strategy = FusionStrategy::LatePoseCombine;
        est.used_fallback = true;
        return est;
    }

    PoseEstimate r_mapped = right_in_left(right);
    Eigen::Quaterniond qa(left.pose.R), qb(r_mapped.pose.R);
    if (qa.dot(qb) < 0) qb.coeffs() = -qb.coeffs();  // sign alignment
    Eigen::Quaterniond mean(qa.coeffs() + qb.coeffs());
    mean.normalize();

    PoseEstimate est;
    est.pose.R = mean.toRotationMatrix();
    est.pose.t = 0.5 * (left.pose.t + r_mapped.pose.t);
    est.inlier_count = left.inlier_count + right.inlier_count;
    est.inlier_ratio = 0.5 * (left.inlier_ratio + right.inlier_ratio);
    int total = left.inlier_count + right.inlier_count;
    est.mean_reproj_px = total > 0 ? (left.mean_reproj_px * left.inlier_count +
                                      right.mean_reproj_px * right.inlier_count) /
                                         total
                                   : 0.0;
    est.strategy = FusionStrategy::LatePoseCombine;
    est.converged = true;
    return est;
}

// ---------------------------------------------------------------------------
// Strategy dispatcher.

struct FrameInputs {
    CorrespondenceSet left;   // tagged ViewTag::Left
    CorrespondenceSet right;  // tagged ViewTag::Right, pixels in the right image
    StereoRig rig;
    const stereo::DisparityMap* disparity = nullptr;  // dense left-view map
    std::vector<double> corr_disparity;  // per-left-corr values; overrides `disparity`
};

namespace detail {

inline std::vector<double> disparity_for(const FrameInputs& in) {
    if (!in.corr_disparity.empty()) {
        if (in.corr_disparity.size() != in.left.size())
            throw InvalidInputError("corr_disparity size mismatch");
        return in.corr_disparity;
    }
    if (in.disparity) return sample_disparity(in.left, *in.disparity);
    return {};
}

}  // namespace detail

inline PoseEstimate estimate(FusionStrategy strategy, const FrameInputs& in,
                             const SolverParams& params = {}) {
    switch (strategy) {
        case FusionStrategy::MonoLeft:
            return pnp_solve(in.left, in.rig.left, params);

        case FusionStrategy::MidJointPnp: {
            CorrespondenceSet all = in.left;
            all.insert(all.end(), in.right.begin(), in.right.end());
            return joint_stereo_pnp(all, in.rig, params);
        }

        case FusionStrategy::LatePoseCombine: {
            PoseEstimate left_est = pnp_solve(in.left, in.rig.left, params);
            if (in.right.size() < 4) {
                PoseEstimate est = left_est;
                est.strategy = FusionStrategy::LatePoseCombine;
                est.used_fallback = true;
                return est;
            }
            CorrespondenceSet right_mono = in.right;
            for (auto& c : right_mono) c.view = ViewTag::Left;  // solve in the right camera
            PoseEstimate right_est;
            try {
                right_est = pnp_solve(right_mono, in.rig.right, params);
            } catch (const Error&) {
                PoseEstimate est = left_est;
                est.strategy = FusionStrategy::LatePoseCombine;
                est.used_fallback = true;
                return est;
            }
            return fuse_late(left_est, right_est, in.rig);
        }

        case FusionStrategy::Disparity3d3d: {
            std::vector<double> disp = detail::disparity_for(in);
            if (disp.empty())
                throw ConfigError("DISPARITY_3D3D requires a disparity signal");
            return disparity_3d3d_solve(in.left, disp, in.rig, params);
        }

        case FusionStrategy::EarlyJointPnpPlusDepth: {
            CorrespondenceSet all = in.left;
            all.insert(all.end(), in.right.begin(), in.right.end());
            PoseEstimate est = joint_stereo_pnp(all, in.rig, params);

            std::vector<double> disp = detail::disparity_for(in);
            CameraContext ctx;
            ctx.K_left = &in.rig.left;
            ctx.K_right = &in.rig.right;
            ctx.l2r = in.rig.extrinsic_l2r;

            RefineProblem prob;
            prob.ctx = ctx;
            prob.depth_weight = params.depth_residual_weight;
            for (const auto& c : all)
                if (reprojection_error(c, est.pose, ctx) < params.ransac_threshold_px)
                    prob.corrs.push_back(c);
            const double fB = in.rig.left.fx * in.rig.baseline();
            for (size_t i = 0; i < disp.size() && i < in.left.size(); ++i) {
                if (!std::isfinite(disp[i]) || disp[i] <= 0) continue;
                double z = fB / disp[i];
                Eigen::Vector3d cam = backproject(in.left[i].pixel, z, in.rig.left);
                // gate lifted points like any other residual
                if ((est.pose.apply(in.left[i].obj_point) - cam).norm() <
                    params.inlier_threshold_mm * 3)
                    prob.depth_pairs.push_back({in.left[i].obj_point, cam});
            }
            if (!prob.depth_pairs.empty() && prob.corrs.size() >= 4) {
                est.pose = refine_pose(prob, est.pose, params.refine_iterations);
                detail::Score s =
                    detail::score_pose(all, est.pose, ctx, params.ransac_threshold_px);
                est.inlier_count = s.inliers;
                est.inlier_ratio = double(s.inliers) / all.size();
                est.mean_reproj_px = s.inliers > 0 ? s.residual_sum / s.inliers : 0.0;
            }
            est.strategy = FusionStrategy::EarlyJointPnpPlusDepth;
            return est;
        }
    }
    throw ConfigError("estimate: unknown strategy");
}

// Decimate a dense frame to at most max_count correspondences by stratified
// grid sampling over the object's pixel footprint (the per-cell pixel
// nearest the cell center wins; deterministic).
inline CorrespondenceSet correspondences_from_maps(const DenseFeatureMaps& maps,
                                                   std::uint16_t obj_index, ViewTag tag,
                                                   int max_count = 2000) {
    auto is_ours = [&](int x, int y) {
        if (!maps.mask.at(x, y)) return false;
        if (maps.obj_index.empty()) return true;  // single-object maps
        return maps.obj_index.at(x, y) == obj_index;
    };

    int min_x = maps.mask.width, min_y = maps.mask.height, max_x = -1, max_y = -1;
    for (int y = 0; y < maps.mask.height; ++y)
        for (int x = 0; x < maps.mask.width; ++x)
            if (is_ours(x, y)) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
    if (max_x < 0) return {};

    const int grid = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(max_count)))));
    const double cell_w = double(max_x - min_x + 1) / grid;
    const double cell_h = double(max_y - min_y + 1) / grid;

    std::vector<int> best_pix(static_cast<size_t>(grid) * grid, -1);
    std::vector<double> best_d2(static_cast<size_t>(grid) * grid,
                                std::numeric_limits<double>::infinity());
    for (int y = min_y; y <= max_y; ++y)
        for (int x = min_x; x <= max_x; ++x) {
            if (!is_ours(x, y)) continue;
            int gx = std::min(grid - 1, static_cast<int>((x - min_x) / cell_w));
            int gy = std::min(grid - 1, static_cast<int>((y - min_y) / cell_h));
            double cx = min_x + (gx + 0.5) * cell_w;
            double cy = min_y + (gy + 0.5) * cell_h;
            double d2 = (x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy);
            size_t cell = static_cast<size_t>(gy) * grid + gx;
            if (d2 < best_d2[cell]) {
                best_d2[cell] = d2;
                best_pix[cell] = y * maps.mask.width + x;
            }
        }

    CorrespondenceSet out;
    out.reserve(max_count);
    for (int pix : best_pix) {
        if (pix < 0 || static_cast<int>(out.size()) >= max_count) continue;
        int x = pix % maps.mask.width, y = pix / maps.mask.width;
        Correspondence c;
        c.pixel = {x + 0.5, y + 0.5};
        c.obj_point = {maps.xyz.at(x, y, 0), maps.xyz.at(x, y, 1), maps.xyz.at(x, y, 2)};
        c.weight = 1.0;
        c.view = tag;
        out.push_back(c);
    }
    return out;
}

}  // namespace stereopose::solve
