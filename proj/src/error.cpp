#include "isle/error.hpp"

namespace isle {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::not_found: return "not_found";
    case Errc::io: return "io";
    case Errc::parse: return "parse";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::dangling_reference: return "dangling_reference";
    case Errc::invalid_record: return "invalid_record";
    case Errc::consistency: return "consistency";
    case Errc::shape: return "shape";
    case Errc::degenerate_vector: return "degenerate_vector";
    case Errc::embedder_unavailable: return "embedder_unavailable";
    case Errc::model_mismatch: return "model_mismatch";
    case Errc::invalid_index: return "invalid_index";
    case Errc::invalid_rank: return "invalid_rank";
    case Errc::invalid_topic: return "invalid_topic";
    case Errc::invalid_dimension: return "invalid_dimension";
    case Errc::empty_matrix: return "empty_matrix";
    case Errc::empty_retrieval: return "empty_retrieval";
    case Errc::type_error: return "type_error";
    }
    return "unknown";
}

} // namespace isle
