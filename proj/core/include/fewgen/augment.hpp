#pragma once

#include <filesystem>
#include <functional>

#include "fewgen/corpus.hpp"
#include "fewgen/generator.hpp"
#include "fewgen/types.hpp"

namespace fewgen {

// One slot-value-replacement output. The text differs from the source only
// inside the replaced value spans; the MR differs only at the replaced slots.
struct AugmentedPair {
  MeaningRepresentation mr;
  TextSample text;
  std::int64_t source_pair_id = -1;
  struct Replacement {
    std::string slot;
    std::string old_value;
    std::string new_value;
  };
  std::vector<Replacement> replaced;
};

struct LmAugConfig {
  int top_k = 2;
  int min_words = 5;
  int max_iterations = 100;
  std::uint64_t seed = 0;
  bool global_chain = false;  // one chain across all seeds instead of one per seed
  int max_new_words = 30;
  std::function<void(const std::string&)> on_error;  // chain-abort diagnostics
};

// Slot-value replacement augmentation: detects values copied verbatim into
// the text (case-insensitive, whole-word, longest value first) and swaps in
// alternative values of the same slot, jointly over slots, deduplicated and
// capped. Binary-valued slots (yes/no style) never participate.
std::vector<AugmentedPair> info_augment(const LabeledPair& pair, const ValueInventory& inventory,
                                        int cap, std::uint64_t seed);

// Iterative conditional generation with pruning: each chain feeds the previous
// output back as conditioning; sentences shorter than min_words or made only
// of special tokens are pruned; generation stops when retained outputs cover
// every seed token type or a chain exhausts max_iterations.
std::vector<TextSample> lm_augment(const std::vector<TextSample>& seeds,
                                   GeneratorInterface& generator, const LmAugConfig& cfg);

// Out-of-domain baseline: n distinct lines sampled from a line-per-sentence
// file. Throws DataError on an empty file or n > line count.
std::vector<TextSample> random_augment(const std::vector<TextSample>& source,
                                       const std::filesystem::path& generic_text,
                                       std::size_t n, std::uint64_t seed);

// JSON-lines persistence:
// {"provenance", "mr" (nullable), "text", "source_pair_id" (nullable),
//  "replaced" (nullable)}
struct AugmentedFile {
  std::vector<AugmentedPair> pairs;
  std::vector<TextSample> texts;
};

void write_augmented_jsonl(const std::filesystem::path& path, const AugmentedFile& content);
AugmentedFile read_augmented_jsonl(const std::filesystem::path& path);

}  // namespace fewgen
