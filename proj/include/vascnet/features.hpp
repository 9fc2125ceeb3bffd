#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vascnet/landmarks.hpp"

namespace vascnet {

/// Physical centerline (mm) with one radius per point.
struct Polyline {
    std::vector<Vec3> points;
    std::vector<double> radii;
};

/// Binomial (1/4, 1/2, 1/4) passes over interior points; the ends stay fixed.
Polyline smooth_polyline(Polyline p, int passes);

/// Passes applied to voxel-center traces before measuring them.
inline constexpr int kTraceSmoothingPasses = 2;
Polyline trace_polyline(const GraphTrace& t, const Spacing& spacing, int smoothing_passes = kTraceSmoothingPasses);
/// Joins traces end to start; the shared junction point appears once.
Polyline concatenate(const std::vector<Polyline>& parts);

double polyline_length(const Polyline& p);
double total_length(const std::vector<Polyline>& traces);
/// Sum of truncated-cone volumes between consecutive points.
double segment_volume(const Polyline& p);
/// Mean of pi r^2 over all points of all traces.
double mean_section_area(const std::vector<Polyline>& traces);
/// Sum of frustum lateral areas between consecutive points.
double surface_area(const Polyline& p);
/// Path length over start-to-end chord.
double tortuosity(const Polyline& path);

struct BoxCount {
    std::vector<std::int64_t> sizes;
    std::vector<std::size_t> counts;
    double slope = 0.0;
};
/// Box counting over s = 1, 2, 4, ... < 2^floor(log2(min dim)), boxes anchored at the origin.
BoxCount box_count(const std::vector<Index3>& voxels, const Dims& dims);
double fractal_dimension(const std::vector<Index3>& voxels, const Dims& dims);
double fractal_dimension(const BinaryVolume& bin);

struct FeatureRow {
    std::string artery;
    bool present = false;
    double total_length = 0.0;
    double mean_radius = 0.0;
    double total_volume = 0.0;
    int branch_count = 0;
    double mean_section_area = 0.0;
    double surface_area = 0.0;
    std::optional<double> tortuosity;
    std::optional<double> fractal_dimension;
};

/// Everything one feature row is computed from.
struct ArteryGeometry {
    std::string name;
    bool present = false;
    std::vector<Polyline> traces;
    /// Tortuosity is sum of path lengths over sum of chords across these paths.
    std::vector<Polyline> tortuosity_paths;
    std::vector<Index3> voxels;
    int branch_count = 0;
};

FeatureRow compute_row(const ArteryGeometry& g, const Dims& grid);

/// Geometry per named segment, per subnetwork and for the Proximal/Distal groups.
std::vector<ArteryGeometry> table_geometry(const DynamicGraphTable& table);
std::vector<FeatureRow> extract_features(const DynamicGraphTable& table);

/// Names of the eight numeric features in report column order.
const std::vector<std::string>& feature_names();
/// Feature value by name; empty when absent.
std::optional<double> feature_value(const FeatureRow& row, const std::string& feature);

// Statistics

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};
PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// 100 (a - b) / b per entry.
std::vector<double> percent_difference(const std::vector<double>& a, const std::vector<double>& b);

struct FeatureComparison {
    std::string feature;
    std::vector<std::string> arteries;
    std::vector<double> extracted;
    std::vector<double> truth;
    std::vector<double> percent_diff;
    std::optional<PearsonResult> correlation;
};

struct ComparisonReport {
    std::vector<FeatureComparison> features;
};

/// Joins rows by artery name (present rows only) and compares each feature.
ComparisonReport compare(const std::vector<FeatureRow>& extracted, const std::vector<FeatureRow>& truth);

}  // namespace vascnet
