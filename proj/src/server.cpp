#include "vascnet/server.hpp"

#include <set>

#include "httplib.h"
#include "vascnet/pipeline.hpp"

namespace vascnet {

namespace {

ServiceResponse error_response(int status, const std::string& what, const std::string& message) {
    return {status, {{"error", what}, {"message", message}}};
}

int status_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::IncompleteLandmarks: return 409;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Format: return 400;
        default: return 422;
    }
}

Json parse_body(const std::string& body) {
    try {
        return Json::parse(body);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Format, std::string("request body is not JSON: ") + e.what());
    }
}

}  // namespace

LabelingService::LabelingService(VesselNetwork network, Json guide, ClassificationConfig classes,
                                 std::optional<std::filesystem::path> output_dir)
    : network_(std::move(network)), guide_(std::move(guide)), classes_(std::move(classes)), output_dir_(std::move(output_dir)) {
    classes_.validate();
}

void LabelingService::check(const LandmarkSet& lm) const {
    lm.validate(&network_);
    std::vector<int> keep;
    for (const auto& [label, id] : lm.assignments) keep.push_back(id);
    const VesselNetwork pruned = remove_traces(network_, lm.deleted_edges, keep);
    const NetworkAudit audit = audit_network(pruned);
    if (!audit.ok()) throw Error(ErrorKind::Consistency, "edge deletion breaks the network: " + audit.violations.front());
    for (const auto& [label, id] : lm.assignments)
        if (!pruned.find_node(id))
            throw Error(ErrorKind::Landmark, "landmark " + label + " is on node " + std::to_string(id) + " which the deleted edges remove");
}

ServiceResponse LabelingService::get_graph() const {
    std::shared_lock lock(state_mutex_);
    Json j = to_json(network_);
    j["deleted_edges"] = labels_.deleted_edges;
    return {200, std::move(j)};
}

ServiceResponse LabelingService::get_guide() const {
    std::shared_lock lock(state_mutex_);
    return {200, guide_};
}

ServiceResponse LabelingService::get_labels() const {
    std::shared_lock lock(state_mutex_);
    return {200, to_json(labels_)};
}

ServiceResponse LabelingService::put_labels(const std::string& body) {
    std::lock_guard writer(writer_mutex_);
    try {
        const LandmarkFile lf = landmark_file_from_json(parse_body(body));
        LandmarkSet next = lf.set;
        if (next.assignments.empty() && !lf.positions.empty()) next.assignments = snap_landmarks(network_, lf.positions).assignments;
        check(next);
        std::unique_lock lock(state_mutex_);
        labels_ = std::move(next);
        return {200, to_json(labels_)};
    } catch (const Error& e) {
        return error_response(e.kind() == ErrorKind::Format ? 400 : 422, to_string(e.kind()), e.what());
    }
}

ServiceResponse LabelingService::delete_edge(const std::string& body) {
    std::lock_guard writer(writer_mutex_);
    try {
        const Json j = parse_body(body);
        if (!j.is_object() || !j.contains("trace_id") || !j.at("trace_id").is_number_integer())
            throw Error(ErrorKind::Format, "body must be {\"trace_id\": <int>}");
        const int id = j.at("trace_id").get<int>();
        if (!network_.find_trace(id)) return error_response(404, "NotFound", "trace " + std::to_string(id) + " does not exist");
        LandmarkSet next = labels_;
        if (std::find(next.deleted_edges.begin(), next.deleted_edges.end(), id) == next.deleted_edges.end())
            next.deleted_edges.push_back(id);
        check(next);
        std::unique_lock lock(state_mutex_);
        labels_ = std::move(next);
        return {200, to_json(labels_)};
    } catch (const Error& e) {
        return error_response(e.kind() == ErrorKind::Format ? 400 : 422, to_string(e.kind()), e.what());
    }
}

ServiceResponse LabelingService::finalize() {
    std::lock_guard writer(writer_mutex_);
    LandmarkSet lm;
    {
        std::shared_lock lock(state_mutex_);
        lm = labels_;
    }
    std::vector<std::string> missing;
    for (const auto& m : classes_.mandatory_labels())
        if (!lm.assignments.count(m)) missing.push_back(m);
    if (!missing.empty()) {
        ServiceResponse r = error_response(409, "IncompleteLandmarks", "mandatory landmarks are not assigned");
        r.body["missing"] = missing;
        return r;
    }
    try {
        const auto rows = features_for(network_, lm, classes_);
        const std::string csv = features_csv(rows);
        if (output_dir_) {
            write_text(*output_dir_ / "features.csv", csv);
            write_json(*output_dir_ / "features.json", to_json(rows));
            write_json(*output_dir_ / "landmarks.json", to_json(lm));
        }
        Json body = to_json(rows);
        body["csv"] = csv;
        return {200, std::move(body)};
    } catch (const Error& e) {
        return error_response(status_for(e), to_string(e.kind()), e.what());
    }
}

void LabelingService::mount(httplib::Server& server) {
    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/v1/graph", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, get_graph()); });
    server.Get("/v1/guide", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, get_guide()); });
    server.Get("/v1/labels", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, get_labels()); });
    server.Put("/v1/labels", [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, put_labels(req.body)); });
    server.Post("/v1/edges/delete",
                [this, reply](const httplib::Request& req, httplib::Response& res) { reply(res, delete_edge(req.body)); });
    server.Post("/v1/finalize", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, finalize()); });
}

void serve(LabelingService& service, const std::string& host, int port) {
    httplib::Server server;
    service.mount(server);
    if (!server.listen(host, port)) throw Error(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace vascnet
