#pragma once

#include <map>
#include <string>
#include <vector>

#include "vascnet/simulate.hpp"

namespace vascnet {

struct PhantomOptions {
    /// Grid edge in voxels; the field of view is fixed at 96 mm.
    std::int64_t dim = 192;
    bool include_pcomm_l = true;
    bool include_pcomm_r = true;
    std::uint64_t seed = 7;
    double jitter_deg = 15.0;
    /// Multiplies every vessel radius.
    double radius_scale = 1.0;
};

/// Circle-of-Willis phantom: proximal segments between the 16 canonical
/// landmarks plus branching MCA, ACA and PCA trees.
struct Phantom {
    SimConfig config;
    std::map<std::string, FourierArtery> fbd;
};

Phantom build_cow_phantom(const PhantomOptions& opt = {});

/// Canonical landmark positions (mm) that are nodes of the generated graph
/// (pass-through landmarks are left out).
std::map<std::string, Vec3> phantom_landmarks(const SimConfig& cfg);

struct ClearanceIssue {
    std::string a;
    std::string b;
    double gap_mm = 0.0;
};
/// Pairs of arteries without a shared landmark whose tube surfaces come
/// closer than `margin_mm`.
std::vector<ClearanceIssue> clearance_issues(const GroundTruth& truth, double margin_mm);

}  // namespace vascnet
