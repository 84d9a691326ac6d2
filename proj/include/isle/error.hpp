#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isle {

enum class Errc {
    invalid_argument,
    not_found,
    io,
    parse,
    duplicate_id,
    dangling_reference,
    invalid_record,
    consistency,
    shape,
    degenerate_vector,
    embedder_unavailable,
    model_mismatch,
    invalid_index,
    invalid_rank,
    invalid_topic,
    invalid_dimension,
    empty_matrix,
    empty_retrieval,
    type_error,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace isle
