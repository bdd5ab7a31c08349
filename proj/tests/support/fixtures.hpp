#pragma once

#include "zes/backend.hpp"
#include "zes/errors.hpp"
#include "zes/scene.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>
#include <optional>
#include <random>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

namespace zes::testing {

template <typename F>
ScalarMap make_map(int w, int h, F&& f)
{
    ScalarMap m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m(x, y) = f(x, y);
    return m;
}

inline ScalarMap random_map(std::mt19937_64& rng, int w, int h, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    return make_map(w, h, [&](int, int) { return u(rng); });
}

inline SceneObject circle(double cx, double cy, double r, int class_id = kTargetClass)
{
    return SceneObject{cx, cy, r, r, 0.0, class_id};
}

// Hand-placed scene with noise switched off unless asked for.
inline Scene manual_scene(int w, int h, std::vector<SceneObject> objects, double merge_rate = 0.0,
                          double sim_noise = 0.0, double feature_noise = 0.0, std::uint64_t seed = 7)
{
    Scene s;
    s.width = w;
    s.height = h;
    s.seed = seed;
    s.objects = std::move(objects);
    s.merge_rate = merge_rate;
    s.similarity_noise = sim_noise;
    s.density_kernel = 1.0;
    s.feature_noise = feature_noise;
    return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("zes-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// A loopback port nothing listens on: bound, read back, closed.
inline int closed_loopback_port()
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof addr;
    const bool ok = fd >= 0 && ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0 &&
                    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0;
    if (fd >= 0) ::close(fd);
    if (!ok) throw IoError("could not reserve a loopback port");
    return ntohs(addr.sin_port);
}

/// Forwards to another backend, with switches to fail or reshape calls.
class FaultyBackend final : public PerceptionBackend {
public:
    explicit FaultyBackend(const PerceptionBackend& inner) : inner_(inner) {}

    bool fail_similarity = false;
    bool fail_features = false;
    bool fail_density = false;
    bool fail_segment = false;
    bool segment_returns_nothing = false;
    bool drop_counter_capability = false;
    std::optional<std::vector<Detection>> detections;
    std::function<ScalarMap(const ImageRef&, std::span<const BBox>)> density_override;
    mutable int density_calls = 0;

    BackendCapabilities capabilities() const override
    {
        auto c = inner_.capabilities();
        if (drop_counter_capability) c.has_counter = false;
        return c;
    }
    ScalarMap text_similarity(const ImageRef& image, const ClassPrompt& prompt) const override
    {
        if (fail_similarity) throw BackendError("similarity offline");
        return inner_.text_similarity(image, prompt);
    }
    std::vector<Detection> detect(const ImageRef& image, const ClassPrompt& prompt, double threshold) const override
    {
        if (detections) return *detections;
        return inner_.detect(image, prompt, threshold);
    }
    std::optional<Mask> segment_point(const ImageRef& image, Point point) const override
    {
        if (fail_segment) throw BackendError("segmenter offline");
        if (segment_returns_nothing) return std::nullopt;
        return inner_.segment_point(image, point);
    }
    FeatureMap feature_map(const ImageRef& image) const override
    {
        if (fail_features) throw BackendError("featurizer offline");
        return inner_.feature_map(image);
    }
    ScalarMap count_density(const ImageRef& image, std::span<const BBox> exemplars) const override
    {
        ++density_calls;
        if (fail_density) throw BackendError("counter offline");
        if (density_override) return density_override(image, exemplars);
        return inner_.count_density(image, exemplars);
    }

private:
    const PerceptionBackend& inner_;
};

} // namespace zes::testing
