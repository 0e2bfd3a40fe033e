#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fewgen/types.hpp"
#include "fewgen/vocab.hpp"
#include "json.hpp"

namespace fewgen {

// Flattens an MR into the token sequence fed to the encoder:
//   E2E:    [slot1] v1 tokens [slot2] v2 tokens ...
//   WebNLG: [subject] s [relation] r [object] o, repeated per triple.
// Throws std::invalid_argument on an empty MR.
std::vector<std::string> linearize(const MeaningRepresentation& mr);
std::string linearize_str(const MeaningRepresentation& mr);

// Distinct observed values per slot (E2E) or per relation's object (WebNLG),
// collected over D_U and the labeled pairs.
class ValueInventory {
 public:
  void add(const std::string& slot, const std::string& value);
  void add_mr(const MeaningRepresentation& mr);
  const std::vector<std::string>& values(const std::string& slot) const;
  std::vector<std::string> slots() const;
  std::size_t total_values() const;

 private:
  std::map<std::string, std::vector<std::string>> values_by_slot_;
  std::map<std::string, std::set<std::string>> seen_;
};

ValueInventory build_value_inventory(const Corpus& corpus);

enum class SplitStrategy { uniform, stratified_by_combination };

// Deterministic k-shot split: k pairs keep their text, the rest contribute
// only their MR to d_unlabeled. Throws DataError unless 0 < k <= |pairs|.
Corpus few_shot_split(const std::vector<LabeledPair>& pairs, std::size_t k,
                      std::uint64_t seed,
                      SplitStrategy strategy = SplitStrategy::uniform);

struct SplitManifest {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::vector<std::int64_t> labeled_ids;
  std::vector<std::int64_t> unlabeled_ids;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);
};

SplitManifest make_manifest(const std::vector<LabeledPair>& pairs, const Corpus& split,
                            std::uint64_t seed);

// Builds the model vocabulary over all linearized MRs plus the labeled texts.
// Word tokens for E2E-format corpora; a unigram subword model (8k pieces)
// when the corpus holds WebNLG MRs. Throws DataError on an empty corpus.
Vocabulary build_vocab(const Corpus& corpus, int max_len_data, int max_len_text,
                       std::size_t subword_vocab_size = 8000);

// JSON round-trip for MRs and corpora (the normalized instance layout used
// by `ingest` and the augmentation files).
nlohmann::json mr_to_json(const MeaningRepresentation& mr);
MeaningRepresentation mr_from_json(const nlohmann::json& j);
nlohmann::json text_to_json(const TextSample& t);
TextSample text_from_json(const nlohmann::json& j);

void write_instances_jsonl(const std::filesystem::path& path,
                           const std::vector<ParsedInstance>& rows);
std::vector<ParsedInstance> read_instances_jsonl(const std::filesystem::path& path);

}  // namespace fewgen
