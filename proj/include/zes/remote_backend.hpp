#pragma once

#include "zes/backend.hpp"
#include "zes/wire.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace zes {

struct RemoteEndpoint {
    std::string host;
    int port = 80;
};

// Parses "remote:http://host:port" (scheme and port optional). Throws
// ConfigError.
RemoteEndpoint parse_remote_spec(std::string_view spec);

/// Client for a perception server speaking the envelope protocol in wire.hpp.
/// One request in flight at a time; capabilities are fetched once, lazily.
class RemoteBackend final : public PerceptionBackend {
public:
    explicit RemoteBackend(RemoteEndpoint endpoint, double timeout_seconds = 60.0);
    ~RemoteBackend() override;

    // Pixel data sent with every request about this image id.
    void attach_pixels(const std::string& image_id, WireArray pixels);

    BackendCapabilities capabilities() const override;
    ScalarMap text_similarity(const ImageRef& image, const ClassPrompt& prompt) const override;
    std::vector<Detection> detect(const ImageRef& image, const ClassPrompt& prompt, double threshold) const override;
    std::optional<Mask> segment_point(const ImageRef& image, Point point) const override;
    FeatureMap feature_map(const ImageRef& image) const override;
    ScalarMap count_density(const ImageRef& image, std::span<const BBox> exemplars) const override;

private:
    WireImage wire_image(const ImageRef& image) const;
    // Sends the envelope and returns the response payload. Throws
    // BackendError on transport failure, non-200 status or a malformed or
    // mismatched response.
    nlohmann::json call(WireCapability cap, nlohmann::json payload) const;

    struct Client;
    std::unique_ptr<Client> client_;
    RemoteEndpoint endpoint_;
    std::map<std::string, WireArray> pixels_;
    mutable std::mutex mutex_;
    mutable unsigned long long next_request_ = 0;
    mutable std::optional<BackendCapabilities> caps_;
};

} // namespace zes
