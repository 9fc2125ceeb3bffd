#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vascnet/simulate.hpp"
#include "vascnet/volume.hpp"

namespace vascnet::test {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("vascnet-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline BinaryVolume random_mask(const Dims& d, double density, std::mt19937_64& rng) {
    BinaryVolume b(d, {});
    std::bernoulli_distribution on(density);
    for (std::size_t i = 0; i < b.size(); ++i) b.set(i, on(rng));
    return b;
}

/// Builds a mask from voxel coordinates.
inline BinaryVolume mask_of(const Dims& d, const std::vector<Index3>& voxels, Spacing s = {}) {
    BinaryVolume b(d, s);
    for (const auto& v : voxels) b.set(v.x, v.y, v.z, true);
    return b;
}

/// Union of straight tubes between random points, unit spacing.
inline BinaryVolume random_tubes(const Dims& d, int count, std::mt19937_64& rng) {
    BinaryVolume b(d, {});
    std::uniform_real_distribution<double> ux(3.0, static_cast<double>(d.nx) - 4.0);
    std::uniform_real_distribution<double> uy(3.0, static_cast<double>(d.ny) - 4.0);
    std::uniform_real_distribution<double> uz(3.0, static_cast<double>(d.nz) - 4.0);
    std::uniform_real_distribution<double> ur(0.8, 2.2);
    for (int i = 0; i < count; ++i) {
        const Vec3 a{ux(rng), uy(rng), uz(rng)};
        const Vec3 c{ux(rng), uy(rng), uz(rng)};
        const double r = ur(rng);
        rasterize_tube({a, c}, {r, r}, b);
    }
    return b;
}

}  // namespace vascnet::test
