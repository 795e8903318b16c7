#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "stereopose/geometry.hpp"
#include "stereopose/image.hpp"
#include "stereopose/rng.hpp"

namespace stereopose::stereo {

// Disparity in px with per-pixel validity and a [0,1] confidence from the
// normalized cost margin between best and second-best candidate.
struct DisparityMap {
    ImageF64 values;
    ImageU8 validity;
    ImageF64 confidence;

    DisparityMap() = default;
    DisparityMap(int w, int h)
        : values(w, h, 1, 0.0), validity(w, h, 1, 0), confidence(w, h, 1, 0.0) {}
};

struct BlockMatchParams {
    int max_disparity = 128;
    int window = 9;                  // odd SAD window
    double lr_threshold = 1.0;       // px
    double tie_epsilon = 1e-9;       // equal-cost candidates are ambiguous
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Box-filtered SAD plane for one disparity. base is the image matched at
// x, shifted at x - d. Only positions with a full window inside both
// images get a finite cost.
inline void sad_plane(const ImageF64& base, const ImageF64& shifted, int d, int window,
                      std::vector<double>& plane, std::vector<double>& row_acc) {
    const int W = base.width, H = base.height, half = window / 2;
    std::fill(plane.begin(), plane.end(), kInf);
    const int x_lo = d + half;      // first center with a full horizontal window
    const int x_hi = W - 1 - half;  // last
    if (x_lo > x_hi || H < window) return;

    // horizontal window sums of |base(x) - shifted(x-d)|
    for (int y = 0; y < H; ++y) {
        double run = 0.0;
        double* acc = row_acc.data() + static_cast<size_t>(y) * W;
        for (int x = d; x < W; ++x) {
            run += std::abs(base.at(x, y) - shifted.at(x - d, y));
            if (x - d >= window)
                run -= std::abs(base.at(x - window, y) - shifted.at(x - d - window, y));
            if (x >= d + window - 1) acc[x - half] = run;
        }
    }
    // vertical window sums; the horizontal validity range is y-independent
    for (int x = x_lo; x <= x_hi; ++x) {
        double run = 0.0;
        for (int y = 0; y < H; ++y) {
            run += row_acc[static_cast<size_t>(y) * W + x];
            if (y >= window) run -= row_acc[static_cast<size_t>(y - window) * W + x];
            if (y >= window - 1) plane[static_cast<size_t>(y - half) * W + x] = run;
        }
    }
}

struct WtaResult {
    std::vector<int> best_d;
    std::vector<double> best_c, cm, cp, second_c;
};

inline WtaResult winner_take_all(const ImageF64& base, const ImageF64& shifted, int max_d,
                                 int window) {
    const int W = base.width, H = base.height;
    const size_t n = static_cast<size_t>(W) * H;
    WtaResult r;
    r.best_d.assign(n, -1);
    r.best_c.assign(n, kInf);
    r.cm.assign(n, kInf);
    r.cp.assign(n, kInf);
    r.second_c.assign(n, kInf);

    std::vector<double> cur(n), prev(n, kInf), row_acc(n);
    // pass 1: best disparity plus neighbour costs
    for (int d = 0; d <= max_d; ++d) {
        sad_plane(base, shifted, d, window, cur, row_acc);
        for (size_t p = 0; p < n; ++p) {
            if (r.best_d[p] == d - 1) r.cp[p] = cur[p];
            if (cur[p] < r.best_c[p]) {
                r.best_d[p] = d;
                r.best_c[p] = cur[p];
                r.cm[p] = prev[p];
                r.cp[p] = kInf;
            }
        }
        std::swap(prev, cur);
    }
    // pass 2: second-best cost excluding the best's immediate neighbours
    for (int d = 0; d <= max_d; ++d) {
        sad_plane(base, shifted, d, window, cur, row_acc);
        for (size_t p = 0; p < n; ++p) {
            if (r.best_d[p] < 0 || std::abs(d - r.best_d[p]) <= 1) continue;
            r.second_c[p] = std::min(r.second_c[p], cur[p]);
        }
    }
    return r;
}

inline double subpixel_offset(double cm, double c0, double cp) {
    if (!std::isfinite(cm) || !std::isfinite(cp)) return 0.0;
    double denom = cm - 2.0 * c0 + cp;
    if (denom <= 0.0) return 0.0;
    return std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
}

inline ImageF64 mirror_x(const ImageF64& img) {
    ImageF64 out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
    return out;
}

}  // namespace detail

// SAD winner-take-all disparity of a rectified pair with parabolic
// sub-pixel refinement, tie rejection and left-right consistency check.
inline DisparityMap block_match(const ImageF64& left, const ImageF64& right,
                                const BlockMatchParams& params = {}) {
    if (!left.same_shape(right)) throw InvalidInputError("block_match: image sizes differ");
    if (left.channels != 1) throw InvalidInputError("block_match: expected grayscale images");
    if (params.window < 1 || params.window % 2 == 0)
        throw InvalidInputError("block_match: window must be odd and >= 1");
    if (params.window >= left.width)
        throw InvalidInputError("block_match: window >= image width");
    if (params.max_disparity < 0) throw InvalidInputError("block_match: max_disparity < 0");

    const int W = left.width, H = left.height;
    const int max_d = std::min(params.max_disparity, W - params.window);

    auto wta_l = detail::winner_take_all(left, right, max_d, params.window);
    // right-view disparity via mirrored matching: d_R(x) = d_L'(W-1-x) on
    // the pair (mirror(right), mirror(left))
    auto mr = detail::mirror_x(right);
    auto ml = detail::mirror_x(left);
    auto wta_r = detail::winner_take_all(mr, ml, max_d, params.window);

    DisparityMap map(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            size_t p = static_cast<size_t>(y) * W + x;
            if (wta_l.best_d[p] < 0 || !std::isfinite(wta_l.best_c[p])) continue;

            double c1 = wta_l.best_c[p];
            double c2 = wta_l.second_c[p];
            if (std::isfinite(c2) && c2 - c1 <= params.tie_epsilon) continue;  // ambiguous

            double d = wta_l.best_d[p] +
                       detail::subpixel_offset(wta_l.cm[p], c1, wta_l.cp[p]);

            // left-right consistency
            int xr = static_cast<int>(std::lround(x - d));
            if (xr < 0 || xr >= W) continue;
            size_t pr = static_cast<size_t>(y) * W + (W - 1 - xr);
            if (wta_r.best_d[pr] < 0) continue;
            double dr = wta_r.best_d[pr] +
                        detail::subpixel_offset(wta_r.cm[pr], wta_r.best_c[pr], wta_r.cp[pr]);
            if (std::abs(d - dr) > params.lr_threshold) continue;

            map.values.at(x, y) = d;
            map.validity.at(x, y) = 1;
            map.confidence.at(x, y) =
                std::isfinite(c2) ? std::clamp((c2 - c1) / std::max(c2, 1e-12), 0.0, 1.0) : 1.0;
        }
    return map;
}

// Ground-truth pathway: d = f*B/Z per foreground pixel plus seeded Gaussian
// noise. Background pixels stay invalid.
inline DisparityMap disparity_from_depth(const ImageF64& depth_mm, const StereoRig& rig,
                                         double noise_sigma_px, std::uint64_t seed) {
    if (!rig.is_rectified())
        throw InvalidInputError("disparity_from_depth: rig must be rectified");
    DisparityMap map(depth_mm.width, depth_mm.height);
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double fB = rig.left.fx * rig.baseline();
    for (int y = 0; y < depth_mm.height; ++y)
        for (int x = 0; x < depth_mm.width; ++x) {
            double z = depth_mm.at(x, y);
            if (z <= 0.0) continue;
            double d = fB / z;
            if (noise_sigma_px > 0.0) d += noise_sigma_px * noise(rng);
            if (d <= 0.0) continue;
            map.values.at(x, y) = d;
            map.validity.at(x, y) = 1;
            map.confidence.at(x, y) = 1.0;
        }
    return map;
}

}  // namespace stereopose::stereo
