#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vascnet/serialize.hpp"

namespace vascnet {

struct PipelineConfig {
    std::filesystem::path input;
    std::filesystem::path output_dir = "out";
    /// Input is already a vessel mask; segmentation is skipped.
    bool input_is_binary = false;
    EmParams em;
    /// Intensity quantile that seeds the vessel class before EM.
    double init_percentile = 0.95;
    /// Isotropic spacing (mm) for skeletonization; 0 keeps the finest input spacing.
    double target_spacing = 0.0;
    /// Resample the intensity volume before segmentation instead of the mask after it.
    bool resample_first = false;
    std::optional<std::filesystem::path> classification;
    std::optional<std::filesystem::path> landmarks;
    double snap_tolerance_mm = 3.0;
    /// Terminal traces shorter than this multiple of the junction radius are
    /// deleted before snapping positions; 0 disables.
    double spur_factor = 3.0;
    std::uint64_t seed = 1;
    /// Not part of the configuration hash: results do not depend on it.
    unsigned threads = 0;
    bool write_em_trace = false;

    void validate() const;
    /// Effective parameters, the input of the configuration hash.
    Json effective() const;
    std::uint64_t hash() const;
};

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig base = {});

/// Error raised by a pipeline stage, tagged with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.kind(), "stage '" + stage + "' failed: " + cause.what()), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct SegmentationResult {
    BinaryVolume mask;
    EmResult em;
};

SegmentationResult segment_vessels(const Volume3D& vol, const PipelineConfig& cfg);

struct NetworkResult {
    BinaryVolume skeleton;
    SparseCenterline centerline;
    VesselNetwork network;
};

NetworkResult build_network_from_mask(const BinaryVolume& mask);

/// Uses explicit node assignments when present. Otherwise deletes spur traces
/// (recorded in deleted_edges) and snaps positions on the pruned network.
LandmarkSet resolve_landmarks(const VesselNetwork& net, const LandmarkFile& file, double tolerance_mm,
                              double spur_factor = 0.0);

struct PipelineResult {
    std::filesystem::path subject_dir;
    Volume3D volume;  // after any resampling
    BinaryVolume mask;
    std::optional<EmResult> em;
    NetworkResult graph;
    std::optional<LandmarkSet> landmarks;
    std::optional<DynamicGraphTable> table;
    std::vector<FeatureRow> features;
    std::vector<StageTiming> timings;
};

/// In-memory pipeline over a loaded volume. Without `landmarks` it stops after
/// the network stage.
PipelineResult process_volume(const Volume3D& vol, const PipelineConfig& cfg, const std::optional<LandmarkFile>& landmarks,
                              const ClassificationConfig& classes = ClassificationConfig::defaults());

/// Artifact directory for an input: `<output_dir>/subject-<hash of the input bytes>`.
std::filesystem::path subject_directory(const PipelineConfig& cfg);

/// Full batch run writing every artifact and `manifest.json`. Without a
/// landmark file the graph artifacts are written and an IncompleteLandmarks
/// stage error is raised.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Writes features for a landmark set over an existing network (shared by the
/// batch path and the labeling service).
std::vector<FeatureRow> features_for(const VesselNetwork& net, const LandmarkSet& lm, const ClassificationConfig& classes,
                                     DynamicGraphTable* table_out = nullptr);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace vascnet
