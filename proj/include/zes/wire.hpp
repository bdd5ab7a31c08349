#pragma once

#include "zes/backend.hpp"
#include "zes/core_types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace zes {

// Wire-level format shared by the remote backend client and any server
// speaking the same protocol. Every request and response body is an
// envelope {request_id, capability, payload}; arrays inside a payload are
// {dtype, shape, data} with data the base64 of the little-endian bytes.

enum class WireCapability { Capabilities, Similarity, Detect, Segment, Features, Density };

std::string_view to_string(WireCapability cap);
// Throws BackendError for an unknown name.
WireCapability wire_capability_from_string(std::string_view name);
// "/similarity" etc.
std::string endpoint_path(WireCapability cap);

enum class WireDtype { UInt8, Int32, Float32, Float64 };

std::string_view to_string(WireDtype dtype);
WireDtype wire_dtype_from_string(std::string_view name);
std::size_t dtype_size(WireDtype dtype);

struct WireArray {
    WireDtype dtype = WireDtype::Float64;
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> bytes; // little-endian payload

    std::size_t element_count() const;
    bool operator==(const WireArray&) const = default;
};

WireArray make_array(std::span<const std::uint8_t> values, std::vector<std::size_t> shape);
WireArray make_array(std::span<const std::int32_t> values, std::vector<std::size_t> shape);
WireArray make_array(std::span<const float> values, std::vector<std::size_t> shape);
WireArray make_array(std::span<const double> values, std::vector<std::size_t> shape);

// Typed views; throw BackendError when the dtype differs.
std::vector<std::uint8_t> array_as_u8(const WireArray& a);
std::vector<std::int32_t> array_as_i32(const WireArray& a);
std::vector<float> array_as_f32(const WireArray& a);
std::vector<double> array_as_f64(const WireArray& a);

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws BackendError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

nlohmann::json array_to_json(const WireArray& a);
// Enforces shape product x dtype size == decoded length.
WireArray array_from_json(const nlohmann::json& doc);

struct WireEnvelope {
    std::string request_id;
    WireCapability capability = WireCapability::Capabilities;
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const WireEnvelope&) const = default;
};

nlohmann::json envelope_to_json(const WireEnvelope& env);
// Throws BackendError for a malformed envelope.
WireEnvelope envelope_from_json(const nlohmann::json& doc);

// Optional pixel data sent along with an image reference.
struct WireImage {
    ImageRef ref;
    std::optional<WireArray> pixels; // uint8 [height, width, 3]
};

// ---- payload codecs (request side) ----
nlohmann::json image_to_json(const WireImage& image);
WireImage image_from_json(const nlohmann::json& doc);

nlohmann::json similarity_request(const WireImage& image, const ClassPrompt& prompt);
nlohmann::json detect_request(const WireImage& image, const ClassPrompt& prompt, double threshold);
nlohmann::json segment_request(const WireImage& image, Point point);
nlohmann::json features_request(const WireImage& image);
nlohmann::json density_request(const WireImage& image, std::span<const BBox> exemplars);

// ---- payload codecs (response side) ----
nlohmann::json capabilities_response(const BackendCapabilities& caps);
BackendCapabilities capabilities_from_response(const nlohmann::json& payload);

nlohmann::json map_response(const ScalarMap& map);
ScalarMap map_from_response(const nlohmann::json& payload);

nlohmann::json detections_response(const std::vector<Detection>& detections);
std::vector<Detection> detections_from_response(const nlohmann::json& payload);

// A failed segmentation is {"mask": null}.
nlohmann::json mask_response(const std::optional<Mask>& mask);
std::optional<Mask> mask_from_response(const nlohmann::json& payload);

nlohmann::json features_response(const FeatureMap& features);
FeatureMap features_from_response(const nlohmann::json& payload);

// Structured error body: {request_id, error: {status, message}}.
nlohmann::json error_body(const std::string& request_id, int status, const std::string& message);

} // namespace zes
