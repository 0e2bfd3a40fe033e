#pragma once

#include <filesystem>
#include <vector>

#include "fewgen/types.hpp"

namespace fewgen {

// Normalizes an E2E slot name for markers and inventories:
// "familyFriendly" -> "family friendly", "customer rating" -> "customer rating".
std::string normalize_slot_name(std::string_view slot);

// Parses one E2E MR string of "slot[value]" items.
// Throws ParseError on malformed input; `where` names the row in messages.
std::vector<SlotValue> parse_e2e_mr(std::string_view mr, std::string_view where);

// Reads an E2E CSV with columns "mr" and (optionally) "ref". Every MR must
// carry 3..8 slot-value pairs with unique slot names.
std::vector<ParsedInstance> parse_e2e(const std::filesystem::path& path);

// Writes instances back out in the same CSV layout (used by the synthetic
// dataset generator).
void write_e2e_csv(const std::filesystem::path& path, const std::vector<ParsedInstance>& rows);

std::string e2e_mr_to_string(const MeaningRepresentation& mr);

}  // namespace fewgen
