#pragma once

#include <filesystem>

#include "fewgen/generator.hpp"
#include "fewgen/types.hpp"

namespace fewgen {

// Deterministic E2E-style corpus from a fixed template grammar: a restaurant
// slot inventory, 3..8 slots per MR, and several surface templates. Every MR
// comes with its gold text.
struct SyntheticDataset {
  std::vector<ParsedInstance> train;
  std::vector<ParsedInstance> dev;
  std::vector<ParsedInstance> test;
};

// n = total instance count (split 80/10/10); n_slots = how many of the seven
// optional slot types may appear (2..7).
SyntheticDataset make_synthetic(std::size_t n, int n_slots, std::uint64_t seed);

// Writes train.csv/dev.csv/test.csv in the E2E layout plus generic.txt, a
// line-per-sentence out-of-domain file for the random-augmentation baseline.
void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

// Emits grammar sentences for randomly drawn MRs (conditioning ignored): the
// desk-scale stand-in for an in-domain LM when exercising the augmentation
// and mining pipeline end to end.
class GrammarGenerator : public GeneratorInterface {
 public:
  GrammarGenerator(int n_slots, std::uint64_t seed);

  std::string generate(const std::string& conditioning, const SamplingParams& params) override;
  bool supports_concurrent_calls() const override { return false; }

  // The MR the sentence produced by call #i realizes (for test assertions).
  MeaningRepresentation mr_of_call(std::size_t i) const;

 private:
  int n_slots_;
  std::uint64_t seed_;
  std::size_t calls_ = 0;
};

// Out-of-domain sentence pool used for generic.txt.
std::vector<std::string> generic_sentences();

}  // namespace fewgen
