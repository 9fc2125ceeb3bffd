#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "test_util.hpp"
#include "vascnet/graph.hpp"
#include "vascnet/skeleton.hpp"

using namespace vascnet;

namespace {

// All-pairs oracle: squared distance to the nearest background voxel, ties to the smallest index.
void brute_force_edt(const BinaryVolume& b, std::vector<double>& dist, std::vector<std::int64_t>& nearest) {
    const Dims& d = b.dims();
    std::vector<std::size_t> bg;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (!b[i]) bg.push_back(i);
    dist.assign(b.size(), 0.0);
    nearest.assign(b.size(), -1);
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (!b[i]) {
            nearest[i] = static_cast<std::int64_t>(i);
            continue;
        }
        const Index3 p = unravel(d, i);
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        std::size_t arg = 0;
        for (std::size_t j : bg) {
            const Index3 q = unravel(d, j);
            const std::int64_t s = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) + (p.z - q.z) * (p.z - q.z);
            if (s < best) {
                best = s;
                arg = j;
            }
        }
        dist[i] = std::sqrt(static_cast<double>(best));
        nearest[i] = static_cast<std::int64_t>(arg);
    }
}

BinaryVolume solid_ring(const Dims& d, Vec3 c, double major, double minor) {
    BinaryVolume b(d, {});
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
                const double dx = static_cast<double>(x) - c.x, dy = static_cast<double>(y) - c.y, dz = static_cast<double>(z) - c.z;
                const double q = std::sqrt(dx * dx + dy * dy) - major;
                if (q * q + dz * dz <= minor * minor) b.set(x, y, z, true);
            }
    return b;
}

std::int64_t cycle_rank(const BinaryVolume& skel) {
    const DistanceField f = distance_transform(skel);
    const VesselNetwork net = build_vessel_network(skel, compute_radii(skel, f, skel.spacing()));
    return static_cast<std::int64_t>(net.traces.size()) - static_cast<std::int64_t>(net.nodes.size()) +
           static_cast<std::int64_t>(net.component_count());
}

}  // namespace

TEST(DistanceTransform, IsolatedVoxel) {
    const Dims d{3, 3, 3};
    const BinaryVolume b = test::mask_of(d, {{1, 1, 1}});
    const DistanceField f = distance_transform(b);
    const std::size_t c = linear_index(d, 1, 1, 1);
    EXPECT_DOUBLE_EQ(f.dist[c], 1.0);
    EXPECT_EQ(f.nearest[c], static_cast<std::int64_t>(linear_index(d, 1, 1, 0)));
    EXPECT_EQ(f.nearest[0], 0);
    EXPECT_DOUBLE_EQ(f.dist[0], 0.0);
}

TEST(DistanceTransform, SlabCenterPlane) {
    const Dims d{7, 7, 9};
    BinaryVolume b(d, {});
    for (std::int64_t z = 2; z < 7; ++z)
        for (std::int64_t y = 0; y < 7; ++y)
            for (std::int64_t x = 0; x < 7; ++x) b.set(x, y, z, true);
    const DistanceField f = distance_transform(b);
    EXPECT_DOUBLE_EQ(f.dist[linear_index(d, 3, 3, 4)], 3.0);
}

TEST(DistanceTransform, MatchesBruteForce) {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 25; ++trial) {
        const Dims d{static_cast<std::int64_t>(4 + rng() % 13), static_cast<std::int64_t>(4 + rng() % 13),
                     static_cast<std::int64_t>(4 + rng() % 13)};
        const BinaryVolume b = test::random_mask(d, 0.55 + 0.4 * static_cast<double>(trial % 5) / 5.0, rng);
        if (b.foreground_count() == b.size()) continue;
        std::vector<double> dist;
        std::vector<std::int64_t> nearest;
        brute_force_edt(b, dist, nearest);
        const DistanceField f = distance_transform(b);
        for (std::size_t i = 0; i < b.size(); ++i) {
            ASSERT_DOUBLE_EQ(f.dist[i], dist[i]) << "trial " << trial << " voxel " << i;
            ASSERT_EQ(f.nearest[i], nearest[i]) << "trial " << trial << " voxel " << i;
        }
    }
}

TEST(Thinning, SingleVoxelIsFixedPoint) {
    const BinaryVolume b = test::mask_of({5, 5, 5}, {{2, 2, 2}});
    EXPECT_TRUE(skeletonize_3d(b) == b);
}

TEST(Thinning, StraightTubeGivesAxisChain) {
    const Dims d{50, 13, 13};
    BinaryVolume b(d, {});
    rasterize_tube({{5, 6, 6}, {44, 6, 6}}, {3.0, 3.0}, b);
    const BinaryVolume s = skeletonize_3d(b);
    EXPECT_EQ(count_components(s, 26), 1u);
    const SkeletonGraph sg = classify_voxels(s);
    EXPECT_EQ(sg.endpoints.size(), 2u);
    EXPECT_TRUE(sg.node_candidates.empty());
    for (std::size_t v : sg.voxels) {
        const Index3 p = unravel(d, v);
        EXPECT_LE(std::abs(p.y - 6), 1);
        EXPECT_LE(std::abs(p.z - 6), 1);
    }
}

TEST(Thinning, RingKeepsOneCycle) {
    const BinaryVolume ring = solid_ring({32, 32, 12}, {15.5, 15.5, 5.5}, 9.0, 2.8);
    const BinaryVolume s = skeletonize_3d(ring);
    EXPECT_EQ(count_components(s, 26), 1u);
    EXPECT_EQ(cycle_rank(s), 1);
}

TEST(Thinning, PreservesComponentsAndIsIdempotent) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        const BinaryVolume b = test::random_tubes({28, 28, 28}, 1 + trial % 4, rng);
        const BinaryVolume s = skeletonize_3d(b);
        EXPECT_EQ(count_components(s, 26), count_components(b, 26)) << "trial " << trial;
        EXPECT_TRUE(skeletonize_3d(s) == s) << "trial " << trial;
        for (std::size_t i : s.foreground_indices()) EXPECT_TRUE(b[i]);
    }
}

TEST(Thinning, CornerStubIsDropped) {
    std::vector<Index3> v;
    for (std::int64_t y = 2; y <= 14; ++y) v.push_back({5, y, 5 + std::abs(y - 8)});
    const BinaryVolume path = test::mask_of({11, 17, 13}, v);
    v.push_back({5, 8, 4});
    EXPECT_TRUE(skeletonize_3d(test::mask_of({11, 17, 13}, v)) == path);
}

TEST(Thinning, ForkedEndKeepsBothProngs) {
    std::vector<Index3> v{{4, 5, 4}, {6, 5, 4}, {7, 5, 3}};
    for (std::int64_t z = 5; z <= 15; ++z) v.push_back({5, 5, z});
    const BinaryVolume b = test::mask_of({11, 11, 18}, v);
    EXPECT_TRUE(skeletonize_3d(b) == b);
}

TEST(Thinning, SimplePointTest) {
    const BinaryVolume line = test::mask_of({5, 3, 3}, {{1, 1, 1}, {2, 1, 1}, {3, 1, 1}});
    EXPECT_FALSE(is_simple_point(line, 2, 1, 1));
    EXPECT_TRUE(is_simple_point(line, 3, 1, 1));
}

TEST(Radii, DirectSubstitution) {
    const Dims d{8, 3, 3};
    BinaryVolume b(d, Spacing{0.5, 0.5, 0.5});
    for (int x = 0; x < 3; ++x) b.set(x, 0, 0, true);
    DistanceField f;
    f.dims = d;
    f.dist.assign(d.count(), 0.0);
    f.nearest.resize(d.count());
    for (std::size_t i = 0; i < d.count(); ++i) f.nearest[i] = static_cast<std::int64_t>(i);
    f.nearest[0] = static_cast<std::int64_t>(linear_index(d, 3, 0, 0));
    BinaryVolume skel(d, b.spacing());
    skel.set(0, 0, 0, true);
    const SparseCenterline c = compute_radii(skel, f, b.spacing());
    ASSERT_EQ(c.points.size(), 1u);
    EXPECT_DOUBLE_EQ(c.points[0].radius_mm, 1.5);
}

TEST(Radii, UnitSpacingEqualsDistance) {
    std::mt19937_64 rng(3);
    const BinaryVolume b = test::random_tubes({24, 24, 24}, 3, rng);
    const DistanceField f = distance_transform(b);
    const BinaryVolume s = skeletonize_3d(b);
    for (const auto& p : compute_radii(s, f, Spacing{}).points)
        EXPECT_DOUBLE_EQ(p.radius_mm, f.dist[linear_index(b.dims(), p.voxel)]);
}

TEST(Radii, BackgroundSkeletonVoxelIsError) {
    const Dims d{3, 3, 3};
    const BinaryVolume empty(d, {});
    const BinaryVolume skel = test::mask_of(d, {{1, 1, 1}});
    EXPECT_THROW(compute_radii(skel, distance_transform(empty), Spacing{}), Error);
}

TEST(Radii, DigitalCylinder) {
    const Dims d{60, 24, 24};
    const Spacing sp{0.5, 0.5, 0.5};
    BinaryVolume b(d, sp);
    rasterize_tube({{5.0, 5.75, 5.75}, {24.5, 5.75, 5.75}}, {2.0, 2.0}, b);
    const BinaryVolume s = skeletonize_3d(b);
    const auto c = compute_radii(s, distance_transform(b), sp);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : c.points) {
        // Ends of the chain sit inside the caps; measure the straight part.
        if (p.voxel.x < 16 || p.voxel.x > 44) continue;
        sum += p.radius_mm;
        ++n;
    }
    ASSERT_GT(n, 10u);
    EXPECT_NEAR(sum / static_cast<double>(n), 2.0, 0.25);
}

TEST(Components, SixVersusTwentySix) {
    const BinaryVolume diag = test::mask_of({3, 3, 3}, {{0, 0, 0}, {1, 1, 1}});
    EXPECT_EQ(count_components(diag, 26), 1u);
    EXPECT_EQ(count_components(diag, 6), 2u);
    EXPECT_THROW(count_components(diag, 18), Error);
}
