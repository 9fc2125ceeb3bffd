#include <gtest/gtest.h>

#include <random>
#include <set>

#include "test_util.hpp"
#include "vascnet/graph.hpp"

using namespace vascnet;

namespace {

std::vector<Index3> chain(Index3 from, std::array<int, 3> step, int n) {
    std::vector<Index3> out;
    for (int i = 0; i < n; ++i) out.push_back({from.x + step[0] * i, from.y + step[1] * i, from.z + step[2] * i});
    return out;
}

// Three diagonal arms meeting at (10,10,2); no two arms touch.
std::vector<Index3> y_shape(int arm) {
    std::vector<Index3> v{{10, 10, 2}};
    for (auto s : {std::array<int, 3>{1, 1, 0}, {-1, 1, 0}, {0, -1, 0}}) {
        auto c = chain({10 + s[0], 10 + s[1], 2}, s, arm);
        v.insert(v.end(), c.begin(), c.end());
    }
    return v;
}

VesselNetwork network_of(const BinaryVolume& skel) {
    return build_vessel_network(skel, compute_radii(skel, distance_transform(skel), skel.spacing()));
}

std::size_t flood_components(const std::vector<std::size_t>& voxels, const Dims& d) {
    std::set<std::size_t> left(voxels.begin(), voxels.end());
    std::size_t n = 0;
    while (!left.empty()) {
        ++n;
        std::vector<std::size_t> stack{*left.begin()};
        left.erase(left.begin());
        while (!stack.empty()) {
            const Index3 p = unravel(d, stack.back());
            stack.pop_back();
            for (const auto& o : neighbor_offsets_26()) {
                const Index3 q{p.x + o[0], p.y + o[1], p.z + o[2]};
                if (!in_bounds(d, q.x, q.y, q.z)) continue;
                auto it = left.find(linear_index(d, q));
                if (it == left.end()) continue;
                stack.push_back(*it);
                left.erase(it);
            }
        }
    }
    return n;
}

}  // namespace

TEST(ClassifyVoxels, StraightChain) {
    const auto sg = classify_voxels(test::mask_of({12, 3, 3}, chain({1, 1, 1}, {1, 0, 0}, 10)));
    EXPECT_EQ(sg.endpoints.size(), 2u);
    EXPECT_EQ(sg.between.size(), 8u);
    EXPECT_TRUE(sg.node_candidates.empty());
}

TEST(ClassifyVoxels, YShape) {
    const auto sg = classify_voxels(test::mask_of({24, 24, 5}, y_shape(5)));
    EXPECT_EQ(sg.endpoints.size(), 3u);
    EXPECT_EQ(sg.node_candidates.size(), 1u);
}

TEST(ClassifyVoxels, IsolatedVoxelIsEndpoint) {
    const auto sg = classify_voxels(test::mask_of({3, 3, 3}, {{1, 1, 1}}));
    ASSERT_EQ(sg.degree.size(), 1u);
    EXPECT_EQ(sg.degree[0], 0);
    EXPECT_EQ(sg.endpoints.size(), 1u);
}

TEST(Hubs, SingleJunctionVoxel) {
    const Dims d{24, 24, 5};
    const auto hubs = detect_hubs(classify_voxels(test::mask_of(d, y_shape(4))));
    ASSERT_EQ(hubs.size(), 1u);
    EXPECT_EQ(hubs[0].members.size(), 1u);
    EXPECT_EQ(hubs[0].center, linear_index(d, 10, 10, 2));
    EXPECT_EQ(hubs[0].hub_endpoints.size(), 3u);
}

TEST(Hubs, AdjacentCandidatesFormOneHub) {
    // H shape: two degree-3 voxels side by side.
    const Dims d{16, 16, 3};
    std::vector<Index3> v{{7, 7, 1}, {8, 7, 1}};
    for (auto c : {chain({6, 8, 1}, {-1, 1, 0}, 4), chain({6, 6, 1}, {-1, -1, 0}, 4), chain({9, 8, 1}, {1, 1, 0}, 4),
                   chain({9, 6, 1}, {1, -1, 0}, 4)})
        v.insert(v.end(), c.begin(), c.end());
    const auto hubs = detect_hubs(classify_voxels(test::mask_of(d, v)));
    ASSERT_EQ(hubs.size(), 1u);
    EXPECT_EQ(hubs[0].members.size(), 2u);
}

TEST(Hubs, CountMatchesFloodFill) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Dims d{14, 14, 14};
        const BinaryVolume b = test::random_mask(d, 0.08 + 0.02 * trial, rng);
        const SkeletonGraph sg = classify_voxels(b);
        const auto hubs = detect_hubs(sg);
        EXPECT_EQ(hubs.size(), flood_components(sg.node_candidates, d)) << "trial " << trial;
        std::size_t members = 0;
        for (const auto& h : hubs) {
            members += h.members.size();
            EXPECT_TRUE(std::find(h.members.begin(), h.members.end(), h.center) != h.members.end());
        }
        EXPECT_EQ(members, sg.node_candidates.size());
    }
}

TEST(HubCenter, SymmetricCross) {
    const Dims d{21, 21, 3};
    std::vector<Index3> v{{10, 10, 1}};
    for (auto s : {std::array<int, 3>{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}) {
        auto c = chain({10 + s[0], 10 + s[1], 1}, s, 6);
        v.insert(v.end(), c.begin(), c.end());
    }
    const auto hubs = detect_hubs(classify_voxels(test::mask_of(d, v)));
    ASSERT_EQ(hubs.size(), 1u);
    EXPECT_EQ(hubs[0].center, linear_index(d, 10, 10, 1));
}

TEST(Network, YGivesFourNodesThreeTraces) {
    const auto net = network_of(test::mask_of({24, 24, 5}, y_shape(5)));
    EXPECT_EQ(net.nodes.size(), 4u);
    EXPECT_EQ(net.traces.size(), 3u);
    EXPECT_TRUE(audit_network(net).ok());
}

TEST(Network, ChainGivesOneTrace) {
    const BinaryVolume b = test::mask_of({14, 3, 3}, chain({1, 1, 1}, {1, 0, 0}, 12));
    const auto net = network_of(b);
    ASSERT_EQ(net.nodes.size(), 2u);
    ASSERT_EQ(net.traces.size(), 1u);
    EXPECT_EQ(net.traces[0].points.size(), 12u);
    EXPECT_TRUE(audit_network(net, &b).ok());
}

TEST(Network, PureLoopGetsOneNodeAndClosedTrace) {
    const Dims d{10, 10, 3};
    std::vector<Index3> v;
    // Square ring without its corners, so every voxel has exactly two neighbors.
    for (int i = 3; i <= 5; ++i) v.insert(v.end(), {{i, 2, 1}, {i, 7, 1}});
    for (int j = 3; j <= 6; ++j) v.insert(v.end(), {{2, j, 1}, {6, j, 1}});
    std::sort(v.begin(), v.end(), [](auto a, auto b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
    v.erase(std::unique(v.begin(), v.end()), v.end());
    const BinaryVolume b = test::mask_of(d, v);
    const auto net = network_of(b);
    ASSERT_EQ(net.nodes.size(), 1u);
    ASSERT_EQ(net.traces.size(), 1u);
    EXPECT_TRUE(net.traces[0].closed);
    EXPECT_EQ(net.traces[0].start, net.traces[0].end);
    EXPECT_TRUE(audit_network(net, &b).ok());
}

TEST(Network, RandomTubesPartitionAndHandshake) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const BinaryVolume b = test::random_tubes({30, 30, 30}, 2 + trial % 3, rng);
        const BinaryVolume s = skeletonize_3d(b);
        const auto net = network_of(s);
        const auto audit = audit_network(net, &s);
        EXPECT_TRUE(audit.ok()) << (audit.ok() ? "" : audit.violations.front());
        std::size_t ends = 0;
        for (int deg : net.node_degrees()) ends += static_cast<std::size_t>(deg);
        EXPECT_EQ(ends, 2 * net.traces.size());
        EXPECT_EQ(net.component_count(), count_components(s, 26));
    }
}

TEST(EdgeDeletion, YArmLeavesChain) {
    const auto net = network_of(test::mask_of({24, 24, 5}, y_shape(5)));
    const auto out = remove_traces(net, {net.traces.front().id});
    EXPECT_EQ(out.nodes.size(), 2u);
    EXPECT_EQ(out.traces.size(), 1u);
    EXPECT_TRUE(audit_network(out).ok());
    EXPECT_EQ(out.traces[0].points.size(), 11u);
}

TEST(EdgeDeletion, OnlyTraceLeavesEmptyNetwork) {
    const auto net = network_of(test::mask_of({14, 3, 3}, chain({1, 1, 1}, {1, 0, 0}, 8)));
    const auto out = delete_edge(net, net.traces[0].id);
    EXPECT_TRUE(out.nodes.empty());
    EXPECT_TRUE(out.traces.empty());
}

TEST(EdgeDeletion, UnknownTrace) {
    const auto net = network_of(test::mask_of({14, 3, 3}, chain({1, 1, 1}, {1, 0, 0}, 8)));
    try {
        delete_edge(net, 99);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
}

TEST(EdgeDeletion, AuditHoldsAfterRandomDeletions) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        auto net = network_of(skeletonize_3d(test::random_tubes({30, 30, 30}, 4, rng)));
        while (!net.traces.empty()) {
            const int id = net.traces[rng() % net.traces.size()].id;
            net = delete_edge(net, id);
            const auto a = audit_network(net);
            ASSERT_TRUE(a.ok()) << a.violations.front();
        }
    }
}

TEST(KeepNodes, PassThroughNodeSurvivesWhenKept) {
    const auto net = network_of(test::mask_of({24, 24, 5}, y_shape(5)));
    int center = -1;
    for (const auto& n : net.nodes)
        if (n.kind != NodeKind::Endpoint) center = n.id;
    const auto out = remove_traces(net, {net.traces.front().id}, {center});
    EXPECT_EQ(out.traces.size(), 2u);
    EXPECT_NE(out.find_node(center), nullptr);
}

TEST(Spurs, ShortTerminalTraceIsFlagged) {
    // Long chain with a two-voxel side branch at its middle.
    const Dims d{40, 10, 3};
    std::vector<Index3> v = chain({2, 2, 1}, {1, 0, 0}, 34);
    v.push_back({19, 3, 1});
    v.push_back({19, 4, 1});
    BinaryVolume b(d, {});
    for (const auto& p : v) b.set(p.x, p.y, p.z, true);
    VesselNetwork net = network_of(b);
    for (auto& t : net.traces)
        for (auto& p : t.points) p.radius_mm = 2.0;
    ASSERT_EQ(net.traces.size(), 3u);
    const auto spurs = spurious_traces(net, 3.0);
    ASSERT_EQ(spurs.size(), 1u);
    const auto* t = net.find_trace(spurs[0]);
    ASSERT_NE(t, nullptr);
    EXPECT_LE(t->points.size(), 4u);
    EXPECT_TRUE(spurious_traces(net, 0.0).empty());
    const auto pruned = remove_traces(net, spurs);
    EXPECT_EQ(pruned.traces.size(), 1u);
}

TEST(Spurs, ForkedTipKeepsLongestBranch) {
    // Chain ending in a fork of two short branches of different length.
    const Dims d{40, 12, 3};
    std::vector<Index3> v = chain({2, 5, 1}, {1, 0, 0}, 20);
    for (auto p : chain({22, 6, 1}, {1, 1, 0}, 3)) v.push_back(p);
    for (auto p : chain({22, 4, 1}, {1, -1, 0}, 2)) v.push_back(p);
    VesselNetwork net = network_of(test::mask_of(d, v));
    for (auto& t : net.traces)
        for (auto& p : t.points) p.radius_mm = 2.0;
    ASSERT_EQ(net.traces.size(), 3u);
    const auto spurs = spurious_traces(net, 3.0);
    ASSERT_EQ(spurs.size(), 1u);
    const auto pruned = remove_traces(net, spurs);
    ASSERT_EQ(pruned.traces.size(), 1u);
    EXPECT_EQ(pruned.traces[0].points.size(), 23u);
}

TEST(Spurs, ForkedTipKeepsAxialBranch) {
    // The longer branch turns sideways; the shorter one continues the chain.
    const Dims d{40, 12, 3};
    std::vector<Index3> v = chain({2, 5, 1}, {1, 0, 0}, 20);
    v.push_back({22, 6, 1});
    v.push_back({23, 6, 1});
    for (auto p : chain({22, 4, 1}, {0, -1, 0}, 4)) v.push_back(p);
    VesselNetwork net = network_of(test::mask_of(d, v));
    for (auto& t : net.traces)
        for (auto& p : t.points) p.radius_mm = 2.0;
    ASSERT_EQ(net.traces.size(), 3u);
    const auto spurs = spurious_traces(net, 3.0);
    ASSERT_EQ(spurs.size(), 1u);
    const auto pruned = remove_traces(net, spurs);
    ASSERT_EQ(pruned.traces.size(), 1u);
    const auto& pts = pruned.traces[0].points;
    ASSERT_EQ(pts.size(), 22u);
    EXPECT_TRUE(pts.front().voxel == (Index3{23, 6, 1}) || pts.back().voxel == (Index3{23, 6, 1}));
}

TEST(Guide, ConstantVolumeAndBrightVoxel) {
    const Dims d{5, 4, 3};
    const Volume3D flat(d, Spacing{}, std::vector<float>(d.count(), 2.0f));
    const VesselNetwork none{d, {}, {}, {}, 0, 0};
    for (const auto& v : labeling_guide(flat, none).views)
        for (float p : v.pixels) EXPECT_EQ(p, 2.0f);

    std::vector<float> data(d.count(), 0.0f);
    data[linear_index(d, 3, 2, 1)] = 9.0f;
    const auto g = labeling_guide(Volume3D(d, Spacing{}, data), none);
    ASSERT_EQ(g.views.size(), 3u);
    for (const auto& v : g.views) {
        std::size_t bright = 0;
        for (float p : v.pixels) bright += p == 9.0f;
        EXPECT_EQ(bright, 1u) << v.axis;
    }
    const auto& vz = g.views[2];
    EXPECT_EQ(vz.pixels[static_cast<std::size_t>(2 * vz.width + 3)], 9.0f);
}
