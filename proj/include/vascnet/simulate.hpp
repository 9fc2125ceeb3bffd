#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vascnet/features.hpp"

namespace vascnet {

using Point2 = std::array<double, 2>;

/// In-plane artery shape: for each coordinate, a0 followed by (a_k, b_k) for
/// k = 1..order, as a function of normalized arclength s in [0, 1], plus a
/// linear term s * trend.
struct FourierArtery {
    int order = 0;
    std::vector<double> coeffs_u;
    std::vector<double> coeffs_v;
    double trend_u = 0.0;
    double trend_v = 0.0;

    void validate() const;
    Point2 evaluate(double s) const;
};

/// Least-squares fit at normalized-arclength parameters. With `remove_trend`
/// the endpoint difference is taken out as a linear term before fitting.
FourierArtery encode_fourier(const std::vector<Point2>& curve, int order, bool remove_trend = true);
FourierArtery encode_fourier(const std::vector<Point2>& curve, const std::vector<double>& params, int order, bool remove_trend);
/// Samples at s = i / (n - 1).
std::vector<Point2> decode_fourier(const FourierArtery& fa, int n_samples);

struct OrientationPlane {
    Vec3 origin;
    Vec3 u{1, 0, 0};
    Vec3 v{0, 1, 0};
    double jitter_angle = 0.0;
};

struct RadiusProfile {
    std::vector<double> samples;
    void validate() const;
    /// Linear interpolation at s in [0, 1].
    double at(double s) const;
};

/// Decodes the shape, rotates the bending plane about the chord by a seeded
/// angle drawn from [-jitter_range, jitter_range] (radians) and pins the ends
/// to `start` and `end`.
std::vector<Vec3> orient_trace(const FourierArtery& fa, OrientationPlane& plane, const Vec3& start, const Vec3& end,
                               std::uint64_t seed, double jitter_range, int n_samples = 1001);

struct GridSpec {
    Dims dims;
    Spacing spacing;
};

/// Capsule-union rasterization into `out` (union). Also sets the nearest-voxel
/// chain along the centerline so thin tubes stay connected.
void rasterize_tube(const std::vector<Vec3>& trace, const std::vector<double>& radii, BinaryVolume& out);
BinaryVolume rasterize_tube(const std::vector<Vec3>& trace, const std::vector<double>& radii, const GridSpec& grid);
/// Nearest voxel of every point of a densely resampled centerline.
std::vector<Index3> centerline_voxels(const std::vector<Vec3>& trace, const GridSpec& grid);

/// Feature row of one continuous tube.
FeatureRow ground_truth_features(const std::string& name, const std::vector<Vec3>& trace, const std::vector<double>& radii,
                                 const GridSpec& grid);

struct SimArtery {
    std::string name;
    std::string start_label;
    std::string end_label;
    RadiusProfile radius;
    std::string fbd_key;
    std::string group;  // report row; defaults to name
    Vec3 plane_normal{0, 0, 1};
};

struct SimGroup {
    std::string name;
    /// Tortuosity path starts; defaults to the first artery's start landmark.
    std::vector<std::string> roots;
};

struct SimAggregate {
    std::string name;
    std::vector<std::string> groups;
};

struct IntensityModel {
    double mu_b = 100.0;
    double sigma_b = 20.0;
    double mu_v = 200.0;
    double sigma_v = 20.0;
};

struct SimConfig {
    GridSpec grid;
    std::map<std::string, Vec3> landmarks;
    std::vector<SimArtery> arteries;
    std::vector<SimGroup> groups;
    std::vector<SimAggregate> aggregates;
    IntensityModel intensity;
    double jitter_deg = 15.0;
    std::uint64_t seed = 1;
    int samples_per_artery = 2001;

    void validate(const std::map<std::string, FourierArtery>& fbd) const;
};

struct GeneratedArtery {
    std::string name;
    std::string group;
    std::string start_label;
    std::string end_label;
    std::vector<Vec3> points;
    std::vector<double> radii;
    double jitter_angle = 0.0;
};

struct GroundTruth {
    std::vector<FeatureRow> rows;
    std::vector<GeneratedArtery> arteries;
    std::map<std::string, Vec3> landmarks;
    std::uint64_t seed = 0;
    /// Nodes and edges of the generating graph after merging pass-through
    /// landmarks (landmarks joining exactly two arteries).
    std::size_t graph_nodes = 0;
    std::size_t graph_edges = 0;
};

struct SimResult {
    Volume3D intensity;
    BinaryVolume mask;
    GroundTruth truth;
};

SimResult simulate_subject(const SimConfig& cfg, const std::map<std::string, FourierArtery>& fbd);

/// Counter-based standard normal draw for (seed, index).
double counter_normal(std::uint64_t seed, std::uint64_t index);

}  // namespace vascnet
