#pragma once

#include <string>
#include <string_view>

namespace isle::text {

/// Porter suffix-stripping stemmer, original 1980 rule set.
/// Input is expected to be lowercase ASCII; other bytes are left alone.
std::string porter_stem(std::string_view word);

} // namespace isle::text
