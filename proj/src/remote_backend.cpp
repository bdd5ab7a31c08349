#include "zes/remote_backend.hpp"

#include "zes/errors.hpp"

#include <charconv>

#include <fmt/format.h>
#include <httplib.h>

namespace zes {

using nlohmann::json;

RemoteEndpoint parse_remote_spec(std::string_view spec)
{
    if (!spec.starts_with("remote:")) {
        throw ConfigError(fmt::format("backend '{}' is not of the form remote:URL", spec));
    }
    spec.remove_prefix(7);
    if (spec.starts_with("https://")) {
        throw ConfigError("https endpoints are not supported");
    }
    if (spec.starts_with("http://")) {
        spec.remove_prefix(7);
    }
    while (spec.ends_with('/')) {
        spec.remove_suffix(1);
    }
    RemoteEndpoint ep;
    const auto colon = spec.rfind(':');
    if (colon != std::string_view::npos) {
        const auto port = spec.substr(colon + 1);
        const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), ep.port);
        if (ec != std::errc{} || ptr != port.data() + port.size() || ep.port < 1 || ep.port > 65535) {
            throw ConfigError(fmt::format("bad port in '{}'", spec));
        }
        spec = spec.substr(0, colon);
    }
    if (spec.empty() || spec.find('/') != std::string_view::npos) {
        throw ConfigError("remote backend needs a host");
    }
    ep.host = std::string(spec);
    return ep;
}

struct RemoteBackend::Client {
    httplib::Client http;
    Client(const RemoteEndpoint& ep, double timeout) : http(ep.host, ep.port)
    {
        const auto secs = static_cast<time_t>(timeout);
        const auto usecs = static_cast<time_t>((timeout - static_cast<double>(secs)) * 1e6);
        http.set_connection_timeout(secs, usecs);
        http.set_read_timeout(secs, usecs);
        http.set_write_timeout(secs, usecs);
        http.set_keep_alive(true);
    }
};

RemoteBackend::RemoteBackend(RemoteEndpoint endpoint, double timeout_seconds)
    : client_(std::make_unique<Client>(endpoint, timeout_seconds)), endpoint_(std::move(endpoint))
{
}

RemoteBackend::~RemoteBackend() = default;

void RemoteBackend::attach_pixels(const std::string& image_id, WireArray pixels)
{
    std::lock_guard lock(mutex_);
    pixels_[image_id] = std::move(pixels);
}

WireImage RemoteBackend::wire_image(const ImageRef& image) const
{
    std::lock_guard lock(mutex_);
    WireImage w{image, std::nullopt};
    if (const auto it = pixels_.find(image.id); it != pixels_.end()) {
        w.pixels = it->second;
    }
    return w;
}

json RemoteBackend::call(WireCapability cap, json payload) const
{
    std::lock_guard lock(mutex_);
    const WireEnvelope request{fmt::format("req-{}", next_request_++), cap, std::move(payload)};
    const auto path = endpoint_path(cap);
    const auto res = client_->http.Post(path, envelope_to_json(request).dump(), "application/json");
    if (!res) {
        throw BackendError(fmt::format("{}:{}{}: {}", endpoint_.host, endpoint_.port, path,
                                       httplib::to_string(res.error())));
    }
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw BackendError(fmt::format("{} returned a non-JSON body (status {})", path, res->status));
    }
    if (res->status != 200) {
        std::string message = "no detail";
        if (body.contains("error") && body["error"].contains("message")) {
            message = body["error"]["message"].get<std::string>();
        }
        throw BackendError(fmt::format("{} failed with status {}: {}", path, res->status, message));
    }
    const auto response = envelope_from_json(body);
    if (response.request_id != request.request_id || response.capability != cap) {
        throw BackendError(fmt::format("{} answered request '{}' ({}) instead of '{}'", path, response.request_id,
                                       to_string(response.capability), request.request_id));
    }
    return response.payload;
}

namespace {

void check_map(const ScalarMap& map, const ImageRef& image, std::string_view what)
{
    if (map.width() != image.width || map.height() != image.height) {
        throw BackendError(fmt::format("{} map is {}x{}, image is {}x{}", what, map.width(), map.height(),
                                       image.width, image.height));
    }
}

} // namespace

BackendCapabilities RemoteBackend::capabilities() const
{
    {
        std::lock_guard lock(mutex_);
        if (caps_) {
            return *caps_;
        }
    }
    const auto caps = capabilities_from_response(call(WireCapability::Capabilities, json::object()));
    std::lock_guard lock(mutex_);
    caps_ = caps;
    return caps;
}

ScalarMap RemoteBackend::text_similarity(const ImageRef& image, const ClassPrompt& prompt) const
{
    auto map = map_from_response(call(WireCapability::Similarity, similarity_request(wire_image(image), prompt)));
    check_map(map, image, "similarity");
    return map;
}

std::vector<Detection> RemoteBackend::detect(const ImageRef& image, const ClassPrompt& prompt, double threshold) const
{
    return detections_from_response(
        call(WireCapability::Detect, detect_request(wire_image(image), prompt, threshold)));
}

std::optional<Mask> RemoteBackend::segment_point(const ImageRef& image, Point point) const
{
    auto mask = mask_from_response(call(WireCapability::Segment, segment_request(wire_image(image), point)));
    if (mask && (mask->width() != image.width || mask->height() != image.height)) {
        throw BackendError("segmentation mask does not match the image size");
    }
    return mask;
}

FeatureMap RemoteBackend::feature_map(const ImageRef& image) const
{
    return features_from_response(call(WireCapability::Features, features_request(wire_image(image))));
}

ScalarMap RemoteBackend::count_density(const ImageRef& image, std::span<const BBox> exemplars) const
{
    if (exemplars.empty()) {
        throw ContractError("the counter needs at least one exemplar");
    }
    auto map = map_from_response(call(WireCapability::Density, density_request(wire_image(image), exemplars)));
    check_map(map, image, "density");
    return map;
}

} // namespace zes
