#include "scap/error.hpp"

namespace scap {

const char* to_string(FormatErrc code) noexcept {
    switch (code) {
        case FormatErrc::io: return "io error";
        case FormatErrc::malformed_manifest: return "malformed manifest";
        case FormatErrc::offset_overlap: return "offset overlap";
        case FormatErrc::truncated_blob: return "truncated blob";
        case FormatErrc::bad_data: return "bad data";
        case FormatErrc::unsupported_version: return "unsupported version";
        case FormatErrc::schema_violation: return "schema violation";
    }
    return "unknown";
}

}  // namespace scap
