#pragma once

#include <cstdint>
#include <vector>

#include "vascnet/volume.hpp"

namespace vascnet {

/// Distance (voxel units) from each foreground voxel to the nearest background
/// voxel, and that voxel's linear index. Background voxels map to themselves.
struct DistanceField {
    Dims dims;
    std::vector<double> dist;
    std::vector<std::int64_t> nearest;
};

/// Exact EDT with feature transform. Ties go to the smallest linear index.
DistanceField distance_transform(const BinaryVolume& bin);

/// Topology-preserving 6-subiteration thinning (26/6 connectivity). One-voxel
/// branches hanging off a branch voxel are removed and thinning resumes.
BinaryVolume skeletonize_3d(const BinaryVolume& bin);

/// Simple-point test (26-connected foreground, 6-connected background).
bool is_simple_point(const BinaryVolume& bin, std::int64_t x, std::int64_t y, std::int64_t z);

struct CenterlinePoint {
    Index3 voxel;
    double radius_mm = 0.0;
};

/// Skeleton voxels in ascending linear-index order with their radii.
struct SparseCenterline {
    Dims dims;
    Spacing spacing;
    std::vector<CenterlinePoint> points;
};

SparseCenterline compute_radii(const BinaryVolume& skel, const DistanceField& field, const Spacing& spacing);

/// Connected components of the foreground under 6- or 26-connectivity.
std::size_t count_components(const BinaryVolume& bin, int connectivity = 26);

}  // namespace vascnet
