#pragma once

#include <filesystem>
#include <functional>

#include "fewgen/seq2seq.hpp"
#include "fewgen/types.hpp"

namespace fewgen {

// A mined (d*, t) pair retained because cos(d*, t) cleared the threshold.
struct PseudoPair {
  MeaningRepresentation mr;
  TextSample text;
  double similarity = 0.0;
  long mined_at_step = 0;
  std::size_t pool_index = 0;  // index of mr in the matching pool
};

// cos(a, b) = dot / (|a||b|). Throws std::invalid_argument on dimension
// mismatch or a zero vector.
double cosine(const Representation& a, const Representation& b);

// Encoder snapshot abstraction: maps a token sequence to its mean-pooled
// representation. Real callers bind Seq2Seq::encode on a frozen model; tests
// can inject mock encoders.
using RepresentationFn =
    std::function<Representation(const std::vector<int>& ids, Side side)>;

struct MineOptions {
  double epsilon = 0.7;
  long step = 0;
};

// For each text, finds the argmax-similarity data sample over the pool (ties
// break to the lowest pool index) and retains the pair iff similarity > eps.
std::vector<PseudoPair> mine_pairs(const std::vector<TextSample>& texts,
                                   const std::vector<MeaningRepresentation>& data_pool,
                                   const Vocabulary& vocab, const RepresentationFn& encode,
                                   const MineOptions& opts);

void append_pseudo_pairs_jsonl(const std::filesystem::path& path,
                               const std::vector<PseudoPair>& pairs);

}  // namespace fewgen
