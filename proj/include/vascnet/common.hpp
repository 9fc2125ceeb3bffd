#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vascnet {

enum class ErrorKind {
    Format,
    UnsupportedFormat,
    Parameter,
    Io,
    Dimension,
    EmptyClass,
    Degenerate,
    Consistency,
    IncompleteLandmarks,
    Landmark,
    Ambiguity,
    NotFound,
    InsufficientScale,
    Undefined,
    Join,
    Bounds,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets callers map failures
/// onto exit codes or HTTP statuses without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct Dims {
    std::int64_t nx = 0;
    std::int64_t ny = 0;
    std::int64_t nz = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    std::int64_t operator[](int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
    bool operator==(const Dims&) const = default;
};

struct Spacing {
    double x = 1.0;
    double y = 1.0;
    double z = 1.0;

    double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
    double min() const { return std::min(x, std::min(y, z)); }
    double max() const { return std::max(x, std::max(y, z)); }
    bool operator==(const Spacing&) const = default;
};

struct Index3 {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t z = 0;
    bool operator==(const Index3&) const = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    bool operator==(const Vec3&) const = default;
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Voxel order is x-fastest: index = x + nx * (y + ny * z).
inline std::size_t linear_index(const Dims& d, std::int64_t x, std::int64_t y, std::int64_t z) {
    return static_cast<std::size_t>(x + d.nx * (y + d.ny * z));
}
inline std::size_t linear_index(const Dims& d, const Index3& i) {
    return linear_index(d, i.x, i.y, i.z);
}
inline Index3 unravel(const Dims& d, std::size_t idx) {
    const auto i = static_cast<std::int64_t>(idx);
    return {i % d.nx, (i / d.nx) % d.ny, i / (d.nx * d.ny)};
}
inline bool in_bounds(const Dims& d, std::int64_t x, std::int64_t y, std::int64_t z) {
    return x >= 0 && y >= 0 && z >= 0 && x < d.nx && y < d.ny && z < d.nz;
}

/// Physical position (mm) of a voxel center; the first voxel sits at the origin.
inline Vec3 to_physical(const Index3& i, const Spacing& s) {
    return {static_cast<double>(i.x) * s.x, static_cast<double>(i.y) * s.y,
            static_cast<double>(i.z) * s.z};
}

/// The 26 neighbor offsets in ascending linear-offset order.
const std::array<std::array<int, 3>, 26>& neighbor_offsets_26();
/// The 6 face-neighbor offsets.
const std::array<std::array<int, 3>, 6>& neighbor_offsets_6();

}  // namespace vascnet
