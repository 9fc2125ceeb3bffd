#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vascnet/common.hpp"

namespace vascnet {

/// Dense scalar grid with physical spacing. Immutable once built.
class Volume3D {
public:
    Volume3D(Dims dims, Spacing spacing, std::vector<float> data);

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    std::span<const float> data() const { return data_; }
    std::size_t size() const { return data_.size(); }

    float operator[](std::size_t i) const { return data_[i]; }
    float at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return data_[linear_index(dims_, x, y, z)];
    }

    float min_value() const { return min_; }
    float max_value() const { return max_; }
    double intensity_range() const { return static_cast<double>(max_) - static_cast<double>(min_); }

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<float> data_;
    float min_ = 0.0f;
    float max_ = 0.0f;
};

/// One boolean (stored as 0/1 bytes) per voxel.
class BinaryVolume {
public:
    BinaryVolume(Dims dims, Spacing spacing);
    BinaryVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> bits);

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    std::span<const std::uint8_t> bits() const { return bits_; }
    std::size_t size() const { return bits_.size(); }

    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    bool at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return bits_[linear_index(dims_, x, y, z)] != 0;
    }
    /// Out-of-bounds reads are background.
    bool get(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return in_bounds(dims_, x, y, z) && bits_[linear_index(dims_, x, y, z)] != 0;
    }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    void set(std::int64_t x, std::int64_t y, std::int64_t z, bool v) {
        bits_[linear_index(dims_, x, y, z)] = v ? 1 : 0;
    }

    std::size_t foreground_count() const;
    std::vector<std::size_t> foreground_indices() const;
    bool operator==(const BinaryVolume& o) const {
        return dims_ == o.dims_ && spacing_ == o.spacing_ && bits_ == o.bits_;
    }

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<std::uint8_t> bits_;
};

/// Per-voxel class labels (1..k where masked, 0 elsewhere) plus the evaluation mask.
struct LabelMap {
    Dims dims;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint8_t> mask;

    void validate(int k) const;
};

void validate_dims(const Dims& d);
void validate_spacing(const Spacing& s);

Volume3D to_volume(const BinaryVolume& bin);
/// Class-2 voxels of a label map as foreground.
BinaryVolume foreground_of(const LabelMap& labels, Spacing spacing, std::uint8_t cls = 2);

// I/O. `.nii` selects NIfTI-1 single file; `.json` selects the raw sidecar format.
Volume3D read_volume(const std::filesystem::path& path);
void write_volume(const Volume3D& vol, const std::filesystem::path& path);
/// Binary volumes are stored as 8-bit data.
void write_volume(const BinaryVolume& vol, const std::filesystem::path& path);
BinaryVolume read_binary_volume(const std::filesystem::path& path);

/// Trilinear sample at a physical position (mm, voxel-center origin); clamps to the edge voxels.
double sample_trilinear(const Volume3D& vol, const Vec3& p);

Volume3D resample_isotropic(const Volume3D& vol, double target_mm);
/// Binary input is interpolated as 0/1 and re-thresholded at 0.5.
BinaryVolume resample_isotropic(const BinaryVolume& vol, double target_mm);

/// Default mask: voxels with nonzero intensity.
std::vector<std::uint8_t> default_mask(const Volume3D& vol);

/// Voxels at or above the `percentile` intensity quantile (within the mask) get
/// class 2, the remaining masked voxels class 1.
LabelMap threshold_initial(const Volume3D& vol, double percentile,
                           std::optional<std::vector<std::uint8_t>> mask = std::nullopt);

}  // namespace vascnet
