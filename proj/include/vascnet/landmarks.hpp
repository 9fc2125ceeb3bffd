#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vascnet/graph.hpp"

namespace vascnet {

/// The 16 canonical landmark labels in annotation order.
const std::vector<std::string>& canonical_labels();
bool is_canonical_label(const std::string& label);

struct LandmarkSet {
    std::map<std::string, int> assignments;
    std::vector<int> deleted_edges;
    int version = 1;

    /// Label names, node uniqueness and (when given) existence in the network.
    void validate(const VesselNetwork* net = nullptr) const;
};

/// Snaps physical landmark positions (mm) to the nearest node within
/// `tolerance_mm`.
LandmarkSet snap_landmarks(const VesselNetwork& net, const std::map<std::string, Vec3>& positions, double tolerance_mm = 3.0);

/// A named proximal segment between two landmarks.
struct SegmentDef {
    std::string name;
    std::string from;
    std::string to;
    /// Landmarks the path may pass through without being blocked.
    std::vector<std::string> via;
    bool fault_tolerant = false;
};

/// A distal subnetwork grown from one or more landmarks.
struct SubnetworkDef {
    std::string name;
    std::vector<std::string> roots;
};

struct ClassificationConfig {
    std::vector<SegmentDef> segments;
    std::vector<SubnetworkDef> subnetworks;

    static ClassificationConfig defaults();
    /// Labels required by at least one non-fault-tolerant segment.
    std::vector<std::string> mandatory_labels() const;
    void validate() const;
};

struct SegmentEntry {
    std::string name;
    bool present = false;
    /// Traces in path order from the `from` landmark to the `to` landmark.
    std::vector<int> trace_ids;
    /// True where the trace runs end-to-start along the path.
    std::vector<bool> reversed;
    std::vector<int> node_path;
};

struct SubnetworkEntry {
    std::string name;
    bool present = false;
    std::vector<int> root_nodes;
    std::vector<int> trace_ids;  // ascending
};

struct DynamicGraphTable {
    VesselNetwork network;  // after edge deletions
    std::vector<SegmentEntry> segments;
    std::vector<SubnetworkEntry> subnetworks;

    const SegmentEntry* find_segment(const std::string& name) const;
    const SubnetworkEntry* find_subnetwork(const std::string& name) const;
};

DynamicGraphTable apply_landmarks(const VesselNetwork& net, const LandmarkSet& lm,
                                  const ClassificationConfig& cfg = ClassificationConfig::defaults());

}  // namespace vascnet
