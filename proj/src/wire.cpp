#include "zes/wire.hpp"

#include "zes/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace zes {

using nlohmann::json;

namespace {

constexpr std::pair<WireCapability, std::string_view> kCapabilityNames[] = {
    {WireCapability::Capabilities, "capabilities"}, {WireCapability::Similarity, "similarity"},
    {WireCapability::Detect, "detect"},             {WireCapability::Segment, "segment"},
    {WireCapability::Features, "features"},         {WireCapability::Density, "density"},
};

constexpr std::pair<WireDtype, std::string_view> kDtypeNames[] = {
    {WireDtype::UInt8, "uint8"},
    {WireDtype::Int32, "int32"},
    {WireDtype::Float32, "float32"},
    {WireDtype::Float64, "float64"},
};

template <typename T>
WireArray pack(WireDtype dtype, std::span<const T> values, std::vector<std::size_t> shape)
{
    WireArray a{dtype, std::move(shape), {}};
    if (a.element_count() != values.size()) {
        throw ContractError(fmt::format("array of {} values does not fit shape with {} elements", values.size(),
                                        a.element_count()));
    }
    a.bytes.resize(values.size() * sizeof(T));
    std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (std::size_t i = 0; i < a.bytes.size(); i += sizeof(T)) {
            std::reverse(a.bytes.begin() + i, a.bytes.begin() + i + sizeof(T));
        }
    }
    return a;
}

template <typename T>
std::vector<T> unpack(const WireArray& a, WireDtype expected)
{
    if (a.dtype != expected) {
        throw BackendError(fmt::format("expected a {} array, got {}", to_string(expected), to_string(a.dtype)));
    }
    std::vector<std::uint8_t> bytes = a.bytes;
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (std::size_t i = 0; i < bytes.size(); i += sizeof(T)) {
            std::reverse(bytes.begin() + i, bytes.begin() + i + sizeof(T));
        }
    }
    std::vector<T> out(bytes.size() / sizeof(T));
    std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
    return out;
}

const json& require(const json& doc, const char* key)
{
    if (!doc.is_object() || !doc.contains(key)) {
        throw BackendError(fmt::format("payload is missing '{}'", key));
    }
    return doc.at(key);
}

template <typename T>
T require_as(const json& doc, const char* key)
{
    try {
        return require(doc, key).get<T>();
    } catch (const json::exception& e) {
        throw BackendError(fmt::format("payload field '{}': {}", key, e.what()));
    }
}

std::vector<std::int32_t> box_ints(std::span<const BBox> boxes)
{
    std::vector<std::int32_t> v;
    for (const auto& b : boxes) {
        v.insert(v.end(), {b.x0, b.y0, b.x1, b.y1});
    }
    return v;
}

} // namespace

std::string_view to_string(WireCapability cap)
{
    for (const auto& [c, name] : kCapabilityNames) {
        if (c == cap) {
            return name;
        }
    }
    return "?";
}

WireCapability wire_capability_from_string(std::string_view name)
{
    for (const auto& [c, n] : kCapabilityNames) {
        if (n == name) {
            return c;
        }
    }
    throw BackendError(fmt::format("unknown capability '{}'", name));
}

std::string endpoint_path(WireCapability cap) { return fmt::format("/{}", to_string(cap)); }

std::string_view to_string(WireDtype dtype)
{
    for (const auto& [d, name] : kDtypeNames) {
        if (d == dtype) {
            return name;
        }
    }
    return "?";
}

WireDtype wire_dtype_from_string(std::string_view name)
{
    for (const auto& [d, n] : kDtypeNames) {
        if (n == name) {
            return d;
        }
    }
    throw BackendError(fmt::format("unknown dtype '{}'", name));
}

std::size_t dtype_size(WireDtype dtype)
{
    switch (dtype) {
    case WireDtype::UInt8: return 1;
    case WireDtype::Int32: return 4;
    case WireDtype::Float32: return 4;
    case WireDtype::Float64: return 8;
    }
    return 0;
}

std::size_t WireArray::element_count() const
{
    std::size_t n = 1;
    for (const auto d : shape) {
        n *= d;
    }
    return n;
}

WireArray make_array(std::span<const std::uint8_t> v, std::vector<std::size_t> shape)
{
    return pack(WireDtype::UInt8, v, std::move(shape));
}
WireArray make_array(std::span<const std::int32_t> v, std::vector<std::size_t> shape)
{
    return pack(WireDtype::Int32, v, std::move(shape));
}
WireArray make_array(std::span<const float> v, std::vector<std::size_t> shape)
{
    return pack(WireDtype::Float32, v, std::move(shape));
}
WireArray make_array(std::span<const double> v, std::vector<std::size_t> shape)
{
    return pack(WireDtype::Float64, v, std::move(shape));
}

std::vector<std::uint8_t> array_as_u8(const WireArray& a) { return unpack<std::uint8_t>(a, WireDtype::UInt8); }
std::vector<std::int32_t> array_as_i32(const WireArray& a) { return unpack<std::int32_t>(a, WireDtype::Int32); }
std::vector<float> array_as_f32(const WireArray& a) { return unpack<float>(a, WireDtype::Float32); }
std::vector<double> array_as_f64(const WireArray& a) { return unpack<double>(a, WireDtype::Float64); }

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0) {
        throw BackendError("base64 length is not a multiple of 4");
    }
    if (text.empty()) {
        return {};
    }
    std::vector<std::uint8_t> out(text.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) {
        throw BackendError("malformed base64 data");
    }
    // EVP_DecodeBlock keeps the zero bytes behind '=' padding.
    std::size_t pad = 0;
    for (auto it = text.rbegin(); it != text.rend() && *it == '=' && pad < 2; ++it) {
        ++pad;
    }
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

json array_to_json(const WireArray& a)
{
    return {{"dtype", to_string(a.dtype)}, {"shape", a.shape}, {"data", base64_encode(a.bytes)}};
}

WireArray array_from_json(const json& doc)
{
    WireArray a;
    a.dtype = wire_dtype_from_string(require_as<std::string>(doc, "dtype"));
    a.shape = require_as<std::vector<std::size_t>>(doc, "shape");
    a.bytes = base64_decode(require_as<std::string>(doc, "data"));
    if (a.element_count() * dtype_size(a.dtype) != a.bytes.size()) {
        throw BackendError(fmt::format("array data is {} bytes but shape and dtype imply {}", a.bytes.size(),
                                       a.element_count() * dtype_size(a.dtype)));
    }
    return a;
}

json envelope_to_json(const WireEnvelope& env)
{
    return {{"request_id", env.request_id}, {"capability", to_string(env.capability)}, {"payload", env.payload}};
}

WireEnvelope envelope_from_json(const json& doc)
{
    WireEnvelope env;
    env.request_id = require_as<std::string>(doc, "request_id");
    env.capability = wire_capability_from_string(require_as<std::string>(doc, "capability"));
    env.payload = require(doc, "payload");
    if (!env.payload.is_object()) {
        throw BackendError("envelope payload must be an object");
    }
    return env;
}

json image_to_json(const WireImage& image)
{
    json j = {{"id", image.ref.id}, {"width", image.ref.width}, {"height", image.ref.height}};
    if (image.pixels) {
        j["pixels"] = array_to_json(*image.pixels);
    }
    return j;
}

WireImage image_from_json(const json& doc)
{
    WireImage image;
    try {
        image.ref = ImageRef::make(require_as<std::string>(doc, "id"), require_as<int>(doc, "width"),
                                   require_as<int>(doc, "height"));
    } catch (const ConfigError& e) {
        throw BackendError(e.what());
    }
    if (doc.contains("pixels")) {
        image.pixels = array_from_json(doc.at("pixels"));
        const std::vector<std::size_t> expected = {static_cast<std::size_t>(image.ref.height),
                                                   static_cast<std::size_t>(image.ref.width), 3};
        if (image.pixels->dtype != WireDtype::UInt8 || image.pixels->shape != expected) {
            throw BackendError("image pixels must be uint8 [height, width, 3]");
        }
    }
    return image;
}

json similarity_request(const WireImage& image, const ClassPrompt& prompt)
{
    return {{"image", image_to_json(image)}, {"prompt", prompt.text}};
}

json detect_request(const WireImage& image, const ClassPrompt& prompt, double threshold)
{
    return {{"image", image_to_json(image)}, {"prompt", prompt.text}, {"threshold", threshold}};
}

json segment_request(const WireImage& image, Point point)
{
    return {{"image", image_to_json(image)}, {"point", {point.x, point.y}}};
}

json features_request(const WireImage& image) { return {{"image", image_to_json(image)}}; }

json density_request(const WireImage& image, std::span<const BBox> exemplars)
{
    const auto ints = box_ints(exemplars);
    return {{"image", image_to_json(image)},
            {"exemplars", array_to_json(make_array(std::span<const std::int32_t>(ints), {exemplars.size(), 4}))}};
}

json capabilities_response(const BackendCapabilities& caps)
{
    return {{"has_text_similarity", caps.has_text_similarity},
            {"has_detection", caps.has_detection},
            {"has_point_segmentation", caps.has_point_segmentation},
            {"has_feature_map", caps.has_feature_map},
            {"has_counter", caps.has_counter},
            {"feature_channels", caps.feature_channels},
            {"shareable", caps.shareable}};
}

BackendCapabilities capabilities_from_response(const json& p)
{
    BackendCapabilities caps;
    caps.has_text_similarity = require_as<bool>(p, "has_text_similarity");
    caps.has_detection = require_as<bool>(p, "has_detection");
    caps.has_point_segmentation = require_as<bool>(p, "has_point_segmentation");
    caps.has_feature_map = require_as<bool>(p, "has_feature_map");
    caps.has_counter = require_as<bool>(p, "has_counter");
    caps.feature_channels = require_as<int>(p, "feature_channels");
    caps.shareable = require_as<bool>(p, "shareable");
    return caps;
}

json map_response(const ScalarMap& map)
{
    return {{"map", array_to_json(make_array(map.values(), {static_cast<std::size_t>(map.height()),
                                                             static_cast<std::size_t>(map.width())}))}};
}

ScalarMap map_from_response(const json& payload)
{
    const auto a = array_from_json(require(payload, "map"));
    if (a.shape.size() != 2 || a.shape[0] == 0 || a.shape[1] == 0) {
        throw BackendError("map must be a nonempty 2-d array");
    }
    return ScalarMap(static_cast<int>(a.shape[1]), static_cast<int>(a.shape[0]), array_as_f64(a));
}

json detections_response(const std::vector<Detection>& detections)
{
    std::vector<BBox> boxes;
    std::vector<double> conf;
    for (const auto& d : detections) {
        boxes.push_back(d.box);
        conf.push_back(d.confidence);
    }
    const auto ints = box_ints(boxes);
    return {{"boxes", array_to_json(make_array(std::span<const std::int32_t>(ints), {boxes.size(), 4}))},
            {"confidences", array_to_json(make_array(std::span<const double>(conf), {conf.size()}))}};
}

std::vector<Detection> detections_from_response(const json& payload)
{
    const auto boxes = array_from_json(require(payload, "boxes"));
    const auto conf = array_from_json(require(payload, "confidences"));
    if (boxes.shape.size() != 2 || boxes.shape[1] != 4 || conf.shape.size() != 1 || conf.shape[0] != boxes.shape[0]) {
        throw BackendError("detections need boxes [n, 4] and confidences [n]");
    }
    const auto ints = array_as_i32(boxes);
    const auto c = array_as_f64(conf);
    std::vector<Detection> out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        out.push_back({BBox{ints[4 * i], ints[4 * i + 1], ints[4 * i + 2], ints[4 * i + 3]}, c[i]});
    }
    return out;
}

json mask_response(const std::optional<Mask>& mask)
{
    if (!mask) {
        return {{"mask", nullptr}};
    }
    return {{"mask", array_to_json(make_array(mask->bits(), {static_cast<std::size_t>(mask->height()),
                                                             static_cast<std::size_t>(mask->width())}))}};
}

std::optional<Mask> mask_from_response(const json& payload)
{
    const json& m = require(payload, "mask");
    if (m.is_null()) {
        return std::nullopt;
    }
    const auto a = array_from_json(m);
    if (a.shape.size() != 2) {
        throw BackendError("mask must be a 2-d array");
    }
    auto bits = array_as_u8(a);
    for (auto& b : bits) {
        b = b != 0 ? 1 : 0;
    }
    return Mask(static_cast<int>(a.shape[1]), static_cast<int>(a.shape[0]), std::move(bits));
}

json features_response(const FeatureMap& f)
{
    return {{"features", array_to_json(make_array(f.data(), {static_cast<std::size_t>(f.height()),
                                                              static_cast<std::size_t>(f.width()),
                                                              static_cast<std::size_t>(f.channels())}))},
            {"base_grid", {f.base_width(), f.base_height()}}};
}

FeatureMap features_from_response(const json& payload)
{
    const auto a = array_from_json(require(payload, "features"));
    if (a.shape.size() != 3 || a.element_count() == 0) {
        throw BackendError("features must be a nonempty [height, width, channels] array");
    }
    const auto values = array_as_f32(a);
    FeatureMap f(static_cast<int>(a.shape[2]), static_cast<int>(a.shape[1]), static_cast<int>(a.shape[0]));
    std::copy(values.begin(), values.end(), f.data().begin());
    const auto grid = require_as<std::vector<int>>(payload, "base_grid");
    if (grid.size() != 2) {
        throw BackendError("base_grid needs two values");
    }
    f.set_base_grid(grid[0], grid[1]);
    return f;
}

json error_body(const std::string& request_id, int status, const std::string& message)
{
    return {{"request_id", request_id}, {"error", {{"status", status}, {"message", message}}}};
}

} // namespace zes
