#pragma once

#include <string>
#include <vector>

namespace fewgen {

// Lowercase for ASCII plus the Latin-1 supplement (covers the accented
// characters in E2E/WebNLG surface values).
std::string lower(std::string_view s);

// Whitespace split with punctuation broken out into single-character tokens.
// "Blue Spice, near Café Rouge." -> {Blue, Spice, ",", near, Café, Rouge, "."}
std::vector<std::string> word_tokenize(std::string_view text);

// Space join with sentence punctuation re-attached to the previous token.
// Round-trip contract: word_tokenize(detokenize(t)) == t for any t produced
// by word_tokenize.
std::string detokenize(const std::vector<std::string>& tokens);

bool is_punct_token(std::string_view tok);

}  // namespace fewgen
