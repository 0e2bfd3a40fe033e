#pragma once

#include <filesystem>
#include <vector>

#include "fewgen/types.hpp"

namespace fewgen {

// Reads a WebNLG release XML file or the normalized JSON-lines layout
// {"triples": [[s,r,o],...], "text": "..."}. Each lexicalization becomes its
// own (MR, text) pair; entries without one yield a bare MR. Every entry must
// carry 1..7 triples.
std::vector<ParsedInstance> parse_webnlg(const std::filesystem::path& path);

// Writes instances in the normalized JSON-lines layout.
void write_webnlg_jsonl(const std::filesystem::path& path,
                        const std::vector<ParsedInstance>& rows);

}  // namespace fewgen
