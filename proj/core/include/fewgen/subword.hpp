#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace fewgen {

// Unigram-LM subword model: EM-estimated piece probabilities with Viterbi
// segmentation. Word starts are marked with the "▁" prefix convention.
class SubwordModel {
 public:
  static constexpr const char* kWordBoundary = "\xE2\x96\x81";  // ▁

  struct TrainOptions {
    std::size_t vocab_size = 8000;
    std::size_t max_piece_len = 8;   // in codepoints
    int em_iterations = 3;
    std::size_t seed_factor = 10;    // seed candidates = vocab_size * factor
  };

  // `sentences` are whitespace-tokenized strings (tokens joined by spaces).
  static SubwordModel train(const std::vector<std::string>& sentences,
                            const TrainOptions& opts);

  // Viterbi-best segmentation of one token (no embedded whitespace). The
  // piece list covers the whole input; unseen codepoints become single-char
  // pieces with a floor score.
  std::vector<std::string> segment_token(const std::string& token) const;

  // Reassembles pieces into plain tokens, splitting on word boundaries.
  static std::vector<std::string> merge_pieces(const std::vector<std::string>& pieces);

  std::size_t size() const { return pieces_.size(); }
  const std::vector<std::string>& pieces() const { return pieces_; }

  nlohmann::json to_json() const;
  static SubwordModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> pieces_;
  std::vector<double> log_probs_;
  std::unordered_map<std::string, std::size_t> index_;

  void rebuild_index();
};

}  // namespace fewgen
