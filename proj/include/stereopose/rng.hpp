#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <random>

namespace stereopose {

// splitmix64 step; decent avalanche, cheap.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mix an arbitrary list of seed components into one 64-bit stream seed.
// Used to derive independent per-scene / per-frame / per-object streams
// from a single master seed without shared mutable RNG state.
template <typename... Parts>
std::uint64_t mix_seed(std::uint64_t first, Parts... rest) {
    std::uint64_t s = first;
    std::uint64_t h = splitmix64(s);
    ((s ^= static_cast<std::uint64_t>(rest) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2),
      h ^= splitmix64(s)),
     ...);
    return h;
}

template <typename... Parts>
std::mt19937_64 make_rng(std::uint64_t first, Parts... rest) {
    return std::mt19937_64(mix_seed(first, rest...));
}

// Uniform rotation: normalized 4-gaussian quaternion.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    while (q.norm() < 1e-12) q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

}  // namespace stereopose
