#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "vascnet/phantom.hpp"
#include "vascnet/simulate.hpp"

using namespace vascnet;

namespace {

constexpr double kPi = std::numbers::pi;

FourierArtery sine_wave(double amplitude, double chord) {
    FourierArtery fa;
    fa.order = 1;
    fa.coeffs_u = {0, 0, 0};
    fa.coeffs_v = {0, 0, amplitude};
    fa.trend_u = chord;
    return fa;
}

}  // namespace

TEST(Fourier, EncodeDecodeRoundTrip) {
    FourierArtery src;
    src.order = 3;
    src.coeffs_u = {1.0, 0.4, -0.2, 0.1, 0.05, -0.03, 0.02};
    src.coeffs_v = {-2.0, 0.3, 0.6, -0.1, 0.2, 0.01, -0.04};
    std::vector<Point2> curve;
    std::vector<double> params;
    for (int i = 0; i < 64; ++i) {
        const double s = i / 63.0;
        params.push_back(s);
        curve.push_back(src.evaluate(s));
    }
    const FourierArtery fit = encode_fourier(curve, params, 3, false);
    for (std::size_t j = 0; j < 7; ++j) {
        EXPECT_NEAR(fit.coeffs_u[j], src.coeffs_u[j], 1e-10);
        EXPECT_NEAR(fit.coeffs_v[j], src.coeffs_v[j], 1e-10);
    }
    const auto dec = decode_fourier(fit, 64);
    for (std::size_t i = 0; i < dec.size(); ++i) {
        EXPECT_NEAR(dec[i][0], curve[i][0], 1e-10);
        EXPECT_NEAR(dec[i][1], curve[i][1], 1e-10);
    }
}

TEST(Fourier, TrendRemovalKeepsEndpoints) {
    std::vector<Point2> curve;
    for (int i = 0; i < 200; ++i) {
        const double s = i / 199.0;
        curve.push_back({10.0 * s, 1.5 * std::sin(2 * kPi * s) + 3.0 * s});
    }
    const FourierArtery fa = encode_fourier(curve, 4);
    EXPECT_DOUBLE_EQ(fa.trend_u, 10.0);
    EXPECT_DOUBLE_EQ(fa.trend_v, 3.0);
    const auto dec = decode_fourier(fa, 2);
    EXPECT_NEAR(dec.front()[0], 0.0, 0.05);
    EXPECT_NEAR(dec.back()[0], 10.0, 0.05);
}

TEST(Fourier, UnderdeterminedAndBadCoefficients) {
    EXPECT_THROW(encode_fourier({{0, 0}, {1, 1}}, 1), Error);
    FourierArtery bad;
    bad.order = 1;
    bad.coeffs_u = {0, 0};
    bad.coeffs_v = {0, 0, 0};
    EXPECT_THROW(decode_fourier(bad, 10), Error);
}

TEST(Orient, PinsEndsAndIsSeeded) {
    const FourierArtery fa = sine_wave(2.0, 1.0);
    const Vec3 a{10, 10, 10}, b{30, 12, 14};
    OrientationPlane p1, p2, p3;
    const auto t1 = orient_trace(fa, p1, a, b, 5, 0.5, 301);
    const auto t2 = orient_trace(fa, p2, a, b, 5, 0.5, 301);
    const auto t3 = orient_trace(fa, p3, a, b, 6, 0.5, 301);
    EXPECT_EQ(t1.front(), a);
    EXPECT_EQ(t1.back(), b);
    EXPECT_EQ(t1, t2);
    EXPECT_EQ(p1.jitter_angle, p2.jitter_angle);
    EXPECT_NE(p1.jitter_angle, p3.jitter_angle);
    EXPECT_LE(std::abs(p1.jitter_angle), 0.5);
    EXPECT_NEAR(p1.v.dot(p1.u), 0.0, 1e-12);
}

TEST(Orient, ZeroJitterStaysInPlane) {
    OrientationPlane p;
    p.v = {0, 1, 0};
    const auto t = orient_trace(sine_wave(3.0, 1.0), p, {0, 0, 5}, {20, 0, 5}, 1, 0.0, 101);
    for (const auto& q : t) EXPECT_NEAR(q.z, 5.0, 1e-12);
    EXPECT_NEAR(t[25].y, 3.0, 1e-9);
    EXPECT_THROW(orient_trace(sine_wave(1, 1), p, {1, 1, 1}, {1, 1, 1}, 1, 0.0), Error);
}

TEST(Orient, SinusoidLengthMatchesQuadrature) {
    const double amp = 4.0, chord = 30.0;
    OrientationPlane p;
    const auto t = orient_trace(sine_wave(amp, 1.0), p, {0, 0, 0}, {chord, 0, 0}, 1, 0.0, 20001);
    Polyline pl{t, std::vector<double>(t.size(), 1.0)};
    // Composite Simpson on |c'(s)| = sqrt(L^2 + (2 pi A cos 2 pi s)^2).
    const int n = 4000;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const double g = 2 * kPi * amp * std::cos(2 * kPi * s);
        const double f = std::sqrt(chord * chord + g * g);
        acc += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    const double exact = acc / (3.0 * n);
    EXPECT_NEAR(polyline_length(pl) / exact, 1.0, 1e-6);
}

TEST(Rasterize, CapsuleVolume) {
    const GridSpec g{{48, 24, 24}, {1, 1, 1}};
    const double r = 4.0, len = 24.0;
    const BinaryVolume b = rasterize_tube({{12, 11.5, 11.5}, {12 + len, 11.5, 11.5}}, {r, r}, g);
    const double exact = kPi * r * r * len + 4.0 / 3.0 * kPi * r * r * r;
    EXPECT_NEAR(static_cast<double>(b.foreground_count()) / exact, 1.0, 0.05);
}

TEST(Rasterize, IsUnionOfTubes) {
    const GridSpec g{{32, 32, 32}, {0.5, 0.5, 0.5}};
    const std::vector<Vec3> t1{{2, 2, 2}, {12, 10, 8}}, t2{{12, 2, 3}, {3, 13, 12}};
    BinaryVolume both(g.dims, g.spacing);
    rasterize_tube(t1, {1.2, 0.8}, both);
    rasterize_tube(t2, {0.6, 1.5}, both);
    const BinaryVolume a = rasterize_tube(t1, {1.2, 0.8}, g);
    const BinaryVolume b = rasterize_tube(t2, {0.6, 1.5}, g);
    for (std::size_t i = 0; i < both.size(); ++i) ASSERT_EQ(both[i], a[i] || b[i]) << i;
    EXPECT_THROW(rasterize_tube({{-5, 2, 2}, {3, 3, 3}}, {1, 1}, g), Error);
}

TEST(Rasterize, ThinTubeStaysConnected) {
    const GridSpec g{{40, 40, 40}, {0.5, 0.5, 0.5}};
    const BinaryVolume b = rasterize_tube({{2, 3, 4}, {17, 15, 11}}, {0.1, 0.1}, g);
    EXPECT_GT(b.foreground_count(), 0u);
    EXPECT_EQ(count_components(b, 26), 1u);
}

TEST(GroundTruth, MatchesFeatureFunctions) {
    const GridSpec g{{64, 64, 64}, {0.5, 0.5, 0.5}};
    OrientationPlane p;
    const auto t = orient_trace(sine_wave(2.0, 1.0), p, {5, 5, 5}, {25, 20, 15}, 3, 0.3, 2001);
    std::vector<double> radii;
    for (std::size_t i = 0; i < t.size(); ++i) radii.push_back(1.5 - 0.5 * static_cast<double>(i) / (t.size() - 1));
    const FeatureRow row = ground_truth_features("X", t, radii, g);
    const Polyline pl{t, radii};
    EXPECT_TRUE(row.present);
    EXPECT_EQ(row.branch_count, 1);
    EXPECT_NEAR(row.total_length, polyline_length(pl), 1e-9);
    EXPECT_NEAR(row.total_volume, segment_volume(pl), 1e-9);
    EXPECT_NEAR(row.surface_area, surface_area(pl), 1e-9);
    EXPECT_NEAR(*row.tortuosity, tortuosity(pl), 1e-9);
    EXPECT_NEAR(row.mean_radius, 1.25, 1e-3);
}

TEST(CounterNormal, DeterministicWithUnitMoments) {
    EXPECT_EQ(counter_normal(9, 123), counter_normal(9, 123));
    EXPECT_NE(counter_normal(9, 123), counter_normal(10, 123));
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = counter_normal(42, static_cast<std::uint64_t>(i));
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Phantom, SimulationIsSeeded) {
    PhantomOptions opt;
    opt.dim = 64;
    const Phantom ph = build_cow_phantom(opt);
    const SimResult a = simulate_subject(ph.config, ph.fbd);
    const SimResult b = simulate_subject(ph.config, ph.fbd);
    EXPECT_TRUE(a.mask == b.mask);
    for (std::size_t i = 0; i < a.intensity.size(); ++i) ASSERT_EQ(a.intensity[i], b.intensity[i]);
    SimConfig other = ph.config;
    other.seed += 1;
    const SimResult c = simulate_subject(other, ph.fbd);
    EXPECT_FALSE(a.mask == c.mask);
}

TEST(Phantom, GraphAndClearance) {
    const Phantom ph = build_cow_phantom({});
    const SimResult res = simulate_subject(ph.config, ph.fbd);
    EXPECT_EQ(res.truth.graph_nodes, 68u);
    EXPECT_EQ(res.truth.graph_edges, 68u);
    EXPECT_TRUE(clearance_issues(res.truth, 1.0).empty());
    EXPECT_EQ(phantom_landmarks(ph.config).size(), 16u);
    std::size_t present = 0;
    for (const auto& r : res.truth.rows) present += r.present;
    EXPECT_GE(present, 8u);
}

TEST(Phantom, MissingPcomm) {
    PhantomOptions opt;
    opt.include_pcomm_l = false;
    opt.dim = 96;
    const Phantom ph = build_cow_phantom(opt);
    const SimResult res = simulate_subject(ph.config, ph.fbd);
    for (const auto& r : res.truth.rows) EXPECT_FALSE(r.artery == "Pcomm_L" && r.present);
    for (const auto& a : res.truth.arteries) EXPECT_NE(a.name, "Pcomm_L");
    EXPECT_LT(phantom_landmarks(ph.config).size(), 16u);
}
