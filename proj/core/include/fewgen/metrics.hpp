#pragma once

#include <string>
#include <vector>

#include "fewgen/types.hpp"
#include "json.hpp"

namespace fewgen {

using TokenSeq = std::vector<std::string>;

// Corpus-level scores plus the diversity counts of the decoded output.
struct EvalReport {
  double bleu4 = 0.0;    // [0, 100]
  double nist = 0.0;
  double meteor = 0.0;   // [0, 100]
  double rouge_l = 0.0;  // [0, 100]
  std::size_t n_instances = 0;
  std::string decode_mode = "greedy";
  long unique_noncopied_tokens = 0;
  long unique_combinations = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Lowercase, punctuation-splitting metric tokenization (the E2E evaluation
// convention).
TokenSeq metric_tokenize(const std::string& text);

// Corpus BLEU with 4-gram clipped precisions and brevity penalty, multi-bleu
// semantics: no smoothing, closest reference length (ties to the shorter).
// Scores are x100. Duplicate references within an instance are ignored.
double bleu4(const std::vector<TokenSeq>& hypotheses,
             const std::vector<std::vector<TokenSeq>>& references);

// NIST up to 5-grams with information weights from the reference corpus and
// the NIST brevity penalty.
double nist(const std::vector<TokenSeq>& hypotheses,
            const std::vector<std::vector<TokenSeq>>& references);

// METEOR-compatible score: exact + Porter-stem matcher stages, fragmentation
// penalty (alpha 0.9, beta 3, gamma 0.5), aggregated over best-reference
// alignments, x100. No paraphrase tables.
double meteor(const std::vector<TokenSeq>& hypotheses,
              const std::vector<std::vector<TokenSeq>>& references);

// ROUGE-L F (beta = 1.2), per instance max over references, mean x100.
double rouge_l(const std::vector<TokenSeq>& hypotheses,
               const std::vector<std::vector<TokenSeq>>& references);

struct DiversityDelta {
  long unique_noncopied_tokens = 0;
  long unique_combinations = 0;
};

// Counts for one system's decodings: token types not copied from any input
// value, and distinct realized slot-name combinations.
long count_noncopied_tokens(const std::vector<TextSample>& decoded,
                            const std::vector<MeaningRepresentation>& inputs);
long count_unique_combinations(const std::vector<TextSample>& decoded,
                               const std::vector<MeaningRepresentation>& inputs);

// Deltas of the two counts against a baseline system's decodings on the same
// inputs. Throws std::invalid_argument on misaligned sizes.
DiversityDelta diversity_stats(const std::vector<TextSample>& decoded,
                               const std::vector<MeaningRepresentation>& inputs,
                               const std::vector<TextSample>& baseline_decoded);

// Groups instances with identical MRs so every hypothesis is scored against
// the pooled reference set (E2E multi-reference convention).
void pool_references_by_mr(const std::vector<MeaningRepresentation>& mrs,
                           const std::vector<TokenSeq>& hyps,
                           const std::vector<TokenSeq>& refs,
                           std::vector<TokenSeq>* pooled_hyps,
                           std::vector<std::vector<TokenSeq>>* pooled_refs);

}  // namespace fewgen
