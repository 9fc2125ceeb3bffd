#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vascnet/skeleton.hpp"

namespace vascnet {

/// Skeleton voxels split by their 26-neighbor count.
struct SkeletonGraph {
    Dims dims;
    std::vector<std::size_t> voxels;  // ascending linear index
    std::vector<std::uint8_t> degree;  // parallel to voxels
    std::vector<std::size_t> endpoints;        // degree <= 1
    std::vector<std::size_t> between;          // degree == 2
    std::vector<std::size_t> node_candidates;  // degree >= 3
};

SkeletonGraph classify_voxels(const BinaryVolume& skel);

struct Hub {
    std::vector<std::size_t> members;        // ascending
    std::vector<std::size_t> hub_endpoints;  // ascending
    std::size_t center = 0;
};

/// 26-connected clusters of node candidates, each with its elected center.
std::vector<Hub> detect_hubs(const SkeletonGraph& sg);

/// Member minimizing the variance of hop distances (through members and hub
/// endpoints) to the hub endpoints; ties by mean, then by linear index.
std::size_t hub_center(const Hub& hub, const Dims& dims);

enum class NodeKind { Endpoint, Junction, HubCenter };
const char* to_string(NodeKind k);
NodeKind node_kind_from_string(const std::string& s);

struct GraphNode {
    int id = 0;
    Index3 voxel;
    NodeKind kind = NodeKind::Endpoint;
};

struct TracePoint {
    Index3 voxel;
    double radius_mm = 0.0;
    /// False when the voxel is a hub member already attributed to another trace.
    bool owned = true;
};

struct GraphTrace {
    int id = 0;
    int start = 0;
    int end = 0;
    /// Ordered path including both terminal node voxels.
    std::vector<TracePoint> points;
    /// Hub members attributed to this trace that do not lie on its path.
    std::vector<Index3> absorbed;
    bool closed = false;
};

struct VesselNetwork {
    Dims dims;
    Spacing spacing;
    std::vector<GraphNode> nodes;   // ascending id
    std::vector<GraphTrace> traces; // ascending id
    int next_node_id = 0;
    int next_trace_id = 0;

    const GraphNode* find_node(int id) const;
    const GraphTrace* find_trace(int id) const;
    /// Number of trace ends at each node (closed traces count twice).
    std::vector<int> node_degrees() const;
    std::size_t component_count() const;
};

VesselNetwork build_vessel_network(const BinaryVolume& skel, const SparseCenterline& centerline);

/// Removes the given traces, drops nodes left without traces and merges the
/// two traces meeting at any node left with exactly two, unless that node is
/// listed in `keep_nodes`.
VesselNetwork remove_traces(const VesselNetwork& net, const std::vector<int>& trace_ids,
                            const std::vector<int>& keep_nodes = {});
VesselNetwork delete_edge(const VesselNetwork& net, int trace_id);

/// Short traces that thinning leaves around junction bulges: terminal spurs and
/// chords of small loops between junctions. A trace is short when its voxel-path
/// length is below `length_factor` times the radius at its junction end. A forked
/// vessel end keeps the tip reaching furthest along the vessel axis, and each loop
/// of short traces loses the chords that close it (longest first).
std::vector<int> spurious_traces(const VesselNetwork& net, double length_factor);

struct NetworkAudit {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks handshake, unique voxel attribution and (when given) exact coverage
/// and component agreement with the skeleton.
NetworkAudit audit_network(const VesselNetwork& net, const BinaryVolume* skel = nullptr);

/// Maximum-intensity projections along x, y and z, with node positions in each view.
struct GuideView {
    std::string axis;  // projection axis
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::vector<float> pixels;  // row-major, width fastest
    struct NodePos {
        int id;
        std::int64_t u;
        std::int64_t v;
    };
    std::vector<NodePos> nodes;
};
struct GuidePackage {
    std::vector<GuideView> views;
};
GuidePackage labeling_guide(const Volume3D& vol, const VesselNetwork& net);

}  // namespace vascnet
