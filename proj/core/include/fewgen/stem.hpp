#pragma once

#include <string>

namespace fewgen {

// Porter (1980) stemmer over lowercase ASCII words; non-ASCII input is
// returned unchanged. Used by the exact+stem matcher stage.
std::string porter_stem(const std::string& word);

}  // namespace fewgen
