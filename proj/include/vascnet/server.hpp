#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "vascnet/serialize.hpp"

namespace httplib {
class Server;
}

namespace vascnet {

struct ServiceResponse {
    int status = 200;
    Json body;
};

/// State behind the /v1 labeling API. Readers run concurrently; mutations are
/// serialized and validated before they replace the current state.
class LabelingService {
public:
    LabelingService(VesselNetwork network, Json guide, ClassificationConfig classes = ClassificationConfig::defaults(),
                    std::optional<std::filesystem::path> output_dir = std::nullopt);

    ServiceResponse get_graph() const;
    ServiceResponse get_guide() const;
    ServiceResponse get_labels() const;
    ServiceResponse put_labels(const std::string& body);
    ServiceResponse delete_edge(const std::string& body);
    ServiceResponse finalize();

    /// Registers the routes under /v1.
    void mount(httplib::Server& server);

private:
    /// Throws on any violated invariant.
    void check(const LandmarkSet& lm) const;

    VesselNetwork network_;
    Json guide_;
    ClassificationConfig classes_;
    std::optional<std::filesystem::path> output_dir_;
    LandmarkSet labels_;
    mutable std::shared_mutex state_mutex_;
    std::mutex writer_mutex_;
};

/// Blocks serving on host:port until the server is stopped.
void serve(LabelingService& service, const std::string& host, int port);

}  // namespace vascnet
