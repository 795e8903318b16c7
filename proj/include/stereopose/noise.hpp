#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "stereopose/geometry.hpp"
#include "stereopose/posesolve.hpp"
#include "stereopose/rng.hpp"

// Controlled corruption of ground-truth correspondences, emulating the
// error profile of learned dense features: Gaussian pixel noise, Gaussian
// object-coordinate noise, uniform in-box pixel outliers, and Gaussian
// disparity noise.

namespace stereopose::noise {

struct NoiseSpec {
    double pixel_sigma_px = 0.0;
    double coord_sigma_mm = 0.0;
    double outlier_fraction = 0.0;   // replaced by uniform pixels inside the box
    double disparity_sigma_px = 0.0;

    bool any() const {
        return pixel_sigma_px > 0 || coord_sigma_mm > 0 || outlier_fraction > 0 ||
               disparity_sigma_px > 0;
    }
};

inline void corrupt_correspondences(solve::CorrespondenceSet& corrs, const NoiseSpec& spec,
                                    const BoundingBox& box, const CameraIntrinsics& K,
                                    std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> ux(box.x_min, box.x_max);
    std::uniform_real_distribution<double> uy(box.y_min, box.y_max);

    for (auto& c : corrs) {
        if (spec.outlier_fraction > 0 && uni(rng) < spec.outlier_fraction) {
            c.pixel = {ux(rng), uy(rng)};
        } else if (spec.pixel_sigma_px > 0) {
            c.pixel.x() += spec.pixel_sigma_px * gauss(rng);
            c.pixel.y() += spec.pixel_sigma_px * gauss(rng);
        }
        if (spec.coord_sigma_mm > 0)
            c.obj_point += spec.coord_sigma_mm *
                           Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
        c.pixel.x() = std::clamp(c.pixel.x(), 0.0, double(K.width) - 1e-6);
        c.pixel.y() = std::clamp(c.pixel.y(), 0.0, double(K.height) - 1e-6);
    }
}

inline void corrupt_disparities(std::vector<double>& disparities, double sigma_px,
                                std::mt19937_64& rng) {
    if (sigma_px <= 0) return;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& d : disparities)
        if (std::isfinite(d) && d > 0) d += sigma_px * gauss(rng);
}

}  // namespace stereopose::noise
