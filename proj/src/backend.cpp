#include "zes/backend.hpp"

namespace zes {

std::string BackendCapabilities::missing() const
{
    std::string out;
    auto note = [&](bool ok, const char* name) {
        if (!ok) {
            if (!out.empty()) {
                out += ", ";
            }
            out += name;
        }
    };
    note(has_text_similarity, "text_similarity");
    note(has_detection, "detection");
    note(has_point_segmentation, "point_segmentation");
    note(has_feature_map, "feature_map");
    note(has_counter, "counter");
    return out;
}

} // namespace zes
