#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vascnet/features.hpp"
#include "vascnet/hmrf.hpp"
#include "vascnet/simulate.hpp"

namespace vascnet {

using Json = nlohmann::json;

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see a partial file.
void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Fixed six-decimal rendering used by every CSV writer.
std::string format_fixed(double v);

Json to_json(const VesselNetwork& net);
VesselNetwork network_from_json(const Json& j);

/// Landmark file: {assignments:{label:node}, deleted_edges:[...], version, positions:{label:[x,y,z]}}.
/// `positions` (mm) are optional and are snapped to nodes by the pipeline.
struct LandmarkFile {
    LandmarkSet set;
    std::map<std::string, Vec3> positions;
};
Json to_json(const LandmarkSet& lm);
Json to_json(const LandmarkFile& lf);
LandmarkFile landmark_file_from_json(const Json& j);

ClassificationConfig classification_from_json(const Json& j);
Json to_json(const ClassificationConfig& cfg);

Json to_json(const DynamicGraphTable& table);

std::string centerline_csv(const SparseCenterline& cl);

std::string features_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> features_from_csv(const std::string& text);
Json to_json(const std::vector<FeatureRow>& rows);

Json to_json(const GuidePackage& guide);

Json fbd_to_json(const std::map<std::string, FourierArtery>& fbd);
std::map<std::string, FourierArtery> fbd_from_json(const Json& j);

Json to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const Json& j);

Json provenance_json(const GroundTruth& truth, const SimConfig& cfg);

Json to_json(const ComparisonReport& report);

/// One row per EM iteration: iteration, log_p_before, log_p_after, rel_change, accepted.
std::string em_trace_csv(const EmResult& res);

}  // namespace vascnet
