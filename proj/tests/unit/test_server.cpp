#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "test_util.hpp"
#include "vascnet/phantom.hpp"
#include "vascnet/pipeline.hpp"
#include "vascnet/server.hpp"

using namespace vascnet;

namespace {

struct Fixture {
    VesselNetwork net;
    LandmarkSet labels;
    Json guide;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        PhantomOptions opt;
        opt.dim = 128;
        const Phantom ph = build_cow_phantom(opt);
        const SimResult sim = simulate_subject(ph.config, ph.fbd);
        const NetworkResult nr = build_network_from_mask(sim.mask);
        Fixture out;
        out.net = nr.network;
        out.labels = resolve_landmarks(nr.network, LandmarkFile{{}, phantom_landmarks(ph.config)}, 3.0, 3.0);
        out.guide = to_json(labeling_guide(sim.intensity, nr.network));
        return out;
    }();
    return f;
}

/// Serves a service on an ephemeral local port for the lifetime of the object.
class LiveServer {
public:
    explicit LiveServer(LabelingService& svc) {
        svc.mount(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LiveServer() {
        server_.stop();
        thread_.join();
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

Json labels_body(const LandmarkSet& lm) { return to_json(lm); }

}  // namespace

TEST(Server, GraphEndpointReportsCounts) {
    const Fixture& f = fixture();
    LabelingService svc(f.net, f.guide);
    LiveServer live(svc);
    auto cli = live.client();
    const auto res = cli.Get("/v1/graph");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const Json j = Json::parse(res->body);
    EXPECT_EQ(j.at("nodes").size(), f.net.nodes.size());
    EXPECT_EQ(j.at("traces").size(), f.net.traces.size());
    const auto guide = cli.Get("/v1/guide");
    ASSERT_TRUE(guide);
    EXPECT_EQ(Json::parse(guide->body).at("views").size(), 3u);
}

TEST(Server, DuplicateNodeIsRejected) {
    const Fixture& f = fixture();
    LabelingService svc(f.net, f.guide);
    LiveServer live(svc);
    auto cli = live.client();
    LandmarkSet dup = f.labels;
    dup.assignments["ICA_Root_R"] = dup.assignments.at("ICA_Root_L");
    const auto res = cli.Put("/v1/labels", labels_body(dup).dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);
    const auto bad = cli.Put("/v1/labels", "{not json", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    const auto cur = cli.Get("/v1/labels");
    EXPECT_TRUE(Json::parse(cur->body).at("assignments").empty());
}

TEST(Server, FinalizeReportsMissingLabels) {
    const Fixture& f = fixture();
    LabelingService svc(f.net, f.guide);
    LandmarkSet partial = f.labels;
    partial.assignments.erase("BA-VA");
    partial.assignments.erase("M1-M2_L");
    ASSERT_EQ(svc.put_labels(labels_body(partial).dump()).status, 200);
    const ServiceResponse r = svc.finalize();
    EXPECT_EQ(r.status, 409);
    const auto missing = r.body.at("missing").get<std::vector<std::string>>();
    EXPECT_NE(std::find(missing.begin(), missing.end(), "BA-VA"), missing.end());
    EXPECT_NE(std::find(missing.begin(), missing.end(), "M1-M2_L"), missing.end());
}

TEST(Server, FinalizeMatchesBatchFeatures) {
    const Fixture& f = fixture();
    test::TempDir tmp("srv");
    LabelingService svc(f.net, f.guide, ClassificationConfig::defaults(), tmp.path());
    LiveServer live(svc);
    auto cli = live.client();
    const auto put = cli.Put("/v1/labels", labels_body(f.labels).dump(), "application/json");
    ASSERT_TRUE(put);
    ASSERT_EQ(put->status, 200) << put->body;
    const auto fin = cli.Post("/v1/finalize", "", "application/json");
    ASSERT_TRUE(fin);
    ASSERT_EQ(fin->status, 200) << fin->body;
    const std::string batch = features_csv(features_for(f.net, f.labels, ClassificationConfig::defaults()));
    EXPECT_EQ(Json::parse(fin->body).at("csv").get<std::string>(), batch);
    EXPECT_EQ(read_text(tmp / "features.csv"), batch);
}

TEST(Server, EdgeDeletion) {
    const Fixture& f = fixture();
    LabelingService svc(f.net, f.guide);
    LiveServer live(svc);
    auto cli = live.client();
    const auto missing = cli.Post("/v1/edges/delete", R"({"trace_id": 987654})", "application/json");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
    const auto malformed = cli.Post("/v1/edges/delete", R"({"trace": 1})", "application/json");
    EXPECT_EQ(malformed->status, 400);

    // A terminal trace can go without breaking anything.
    const auto deg = f.net.node_degrees();
    int tip_trace = -1;
    for (const auto& t : f.net.traces) {
        const auto a = std::lower_bound(f.net.nodes.begin(), f.net.nodes.end(), t.start,
                                        [](const GraphNode& n, int id) { return n.id < id; }) - f.net.nodes.begin();
        const auto b = std::lower_bound(f.net.nodes.begin(), f.net.nodes.end(), t.end,
                                        [](const GraphNode& n, int id) { return n.id < id; }) - f.net.nodes.begin();
        if (!t.closed && (deg[static_cast<std::size_t>(a)] == 1) != (deg[static_cast<std::size_t>(b)] == 1)) {
            tip_trace = t.id;
            break;
        }
    }
    ASSERT_GE(tip_trace, 0);
    const std::string body = Json{{"trace_id", tip_trace}}.dump();
    const auto first = cli.Post("/v1/edges/delete", body, "application/json");
    const auto second = cli.Post("/v1/edges/delete", body, "application/json");
    ASSERT_TRUE(first && second);
    EXPECT_EQ(first->status, 200);
    EXPECT_EQ(second->status, 200);
    EXPECT_EQ(Json::parse(second->body).at("deleted_edges"), Json::array({tip_trace}));
    const auto graph = cli.Get("/v1/graph");
    EXPECT_EQ(Json::parse(graph->body).at("deleted_edges"), Json::array({tip_trace}));
}
