#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"
#include "vascnet/phantom.hpp"
#include "vascnet/pipeline.hpp"
#include "vascnet/serialize.hpp"

using namespace vascnet;

TEST(Serialize, FixedFormat) {
    EXPECT_EQ(format_fixed(1.23456789), "1.234568");
    EXPECT_EQ(format_fixed(-0.0), "0.000000");
    EXPECT_EQ(format_fixed(-2.5), "-2.500000");
}

TEST(Serialize, TextIsReplacedWhole) {
    test::TempDir tmp("ser");
    write_text(tmp / "a.txt", "first");
    write_text(tmp / "a.txt", "second");
    EXPECT_EQ(read_text(tmp / "a.txt"), "second");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(tmp.path())) ++files;
    EXPECT_EQ(files, 1u);
    EXPECT_THROW(read_text(tmp / "none.txt"), Error);
}

TEST(Serialize, MalformedJsonIsFormatError) {
    test::TempDir tmp("ser");
    std::ofstream(tmp / "bad.json") << "{\"a\": ";
    try {
        read_json(tmp / "bad.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Format);
    }
}

TEST(Serialize, NetworkRoundTrip) {
    std::mt19937_64 rng(11);
    const BinaryVolume mask = test::random_tubes({30, 30, 30}, 3, rng);
    const VesselNetwork net = build_network_from_mask(mask).network;
    ASSERT_FALSE(net.traces.empty());
    const Json j = to_json(net);
    const VesselNetwork back = network_from_json(Json::parse(j.dump()));
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.nodes.size(), net.nodes.size());
    EXPECT_EQ(back.traces.front().points.size(), net.traces.front().points.size());
    EXPECT_EQ(back.traces.front().points.front().radius_mm, net.traces.front().points.front().radius_mm);
}

TEST(Serialize, LandmarkFileRoundTrip) {
    LandmarkFile lf;
    lf.set.assignments = {{"BA-VA", 4}, {"M1-M2_L", 9}};
    lf.set.deleted_edges = {7, 2};
    lf.positions = {{"VA_Root_L", {1.5, 2.25, 3.0}}};
    const LandmarkFile back = landmark_file_from_json(Json::parse(to_json(lf).dump()));
    EXPECT_EQ(back.set.assignments, lf.set.assignments);
    EXPECT_EQ(back.set.deleted_edges, lf.set.deleted_edges);
    EXPECT_EQ(back.positions.at("VA_Root_L"), (Vec3{1.5, 2.25, 3.0}));
    EXPECT_THROW(landmark_file_from_json(Json::parse(R"({"assignments": {"BA-VA": "x"}})")), Error);
}

TEST(Serialize, ClassificationRoundTrip) {
    const ClassificationConfig c = ClassificationConfig::defaults();
    const Json j = to_json(c);
    EXPECT_EQ(to_json(classification_from_json(j)), j);
}

TEST(Serialize, FeatureCsvRoundTrip) {
    std::vector<FeatureRow> rows{{"BA", true, 12.5, 1.25, 60.0, 1, 4.9, 98.1, 1.0625, 1.3},
                                 {"Pcomm_L", false, 0, 0, 0, 0, 0, 0, std::nullopt, std::nullopt},
                                 {"MCA_L", true, 80.123456, 0.9, 210.0, 7, 2.6, 450.0, std::nullopt, 1.21}};
    const std::string csv = features_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "artery,present,total_length_mm,mean_radius_mm,total_volume_mm3,branch_count,mean_section_area_mm2,"
              "surface_area_mm2,tortuosity,fractal_dimension");
    const auto back = features_from_csv(csv);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_FALSE(back[1].present);
    EXPECT_FALSE(back[2].tortuosity.has_value());
    EXPECT_EQ(back[2].branch_count, 7);
    EXPECT_EQ(features_csv(back), csv);
    EXPECT_THROW(features_from_csv("artery,present\nBA,1,2\n"), Error);
}

TEST(Serialize, SimulationInputsRoundTrip) {
    PhantomOptions opt;
    opt.dim = 64;
    const Phantom ph = build_cow_phantom(opt);
    const Json fj = fbd_to_json(ph.fbd);
    EXPECT_EQ(fbd_to_json(fbd_from_json(Json::parse(fj.dump()))), fj);
    const Json cj = to_json(ph.config);
    const SimConfig back = sim_config_from_json(Json::parse(cj.dump()));
    EXPECT_EQ(to_json(back), cj);
    const SimResult a = simulate_subject(ph.config, ph.fbd);
    const SimResult b = simulate_subject(back, fbd_from_json(fj));
    EXPECT_TRUE(a.mask == b.mask);
    EXPECT_EQ(features_csv(a.truth.rows), features_csv(b.truth.rows));
}
