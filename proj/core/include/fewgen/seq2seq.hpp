#pragma once

#include <optional>

#include "fewgen/model.hpp"

namespace fewgen {

enum class DecodeMode { greedy, beam };

// Mean-pooled encoder output used for representation matching.
struct Representation {
  Vec vector;
};

struct EncodeResult {
  std::vector<Vec> states;  // one top-layer state per input position
  Representation pooled;
  Side side = Side::data;
};

// Graph-side handle for a batch of encoded sequences.
struct EncodedBatch {
  std::vector<int> step_nodes;  // per timestep: (H x B) top-layer states
  Mat mask;                     // (T x B), 1 for real positions
  int pooled = -1;              // (H x B) masked mean over positions
  int batch = 0;
  int steps = 0;
};

struct LossBreakdown {
  int node = -1;       // scalar graph node (mean NLL)
  long n_tokens = 0;   // non-pad target tokens in the batch
};

// Forward builders and decoding over a ModelState. All forward math runs
// through the same graph ops in train and eval mode.
class Seq2Seq {
 public:
  // Incremental decoder state: one (h, c) node pair per layer.
  struct DecStep {
    std::vector<int> h;
    std::vector<int> c;
  };

  explicit Seq2Seq(ModelState& model) : model_(&model) {}

  EncodedBatch encode_batch(Graph& g, const std::vector<std::vector<int>>& seqs,
                            Side in_side, Rng* dropout_rng = nullptr) const;

  // Teacher-forced mean NLL of `targets` (eos appended internally) given the
  // encoded batch. Pad positions are excluded from the mean.
  LossBreakdown teacher_forced_loss(Graph& g, const EncodedBatch& enc,
                                    const std::vector<std::vector<int>>& targets,
                                    Side out_side, Rng* dropout_rng = nullptr) const;

  // Eval-mode single-sequence encoding: per-position states plus their mean.
  EncodeResult encode(const std::vector<int>& ids, Side in_side) const;

  // Greedy or beam decoding from an encoded input. Beam keeps a pool of every
  // finished hypothesis (greedy rollout included) and returns the best total
  // log-probability; beam_size 1 is exactly greedy.
  std::vector<int> decode(const EncodeResult& enc, Side out_side, DecodeMode mode,
                          int beam_size, std::optional<int> max_len = std::nullopt) const;

  std::vector<int> generate(const std::vector<int>& src, Side in_side, Side out_side,
                            DecodeMode mode, int beam_size) const;

  // Ancestral sampling from the decoder softmax (used when cycle directions
  // sample rather than argmax their intermediate sequences).
  std::vector<int> sample_decode(const EncodeResult& enc, Side out_side, Rng& rng,
                                 std::optional<int> max_len = std::nullopt) const;

  // Mean NLL over a batch, eval mode (no dropout); used for validation loss.
  double batch_nll(const std::vector<std::vector<int>>& src, Side in_side,
                   const std::vector<std::vector<int>>& tgt, Side out_side) const;

  // Total log-probability of an exact output sequence (eos appended), used by
  // decoding tests.
  double sequence_logprob(const EncodeResult& enc, Side out_side,
                          const std::vector<int>& output) const;

  const ModelState& model() const { return *model_; }

 private:
  ModelState* model_;
};

// Mean token-level negative log-likelihood over per-step logits, pad targets
// excluded. Standalone reference path for the fused graph op.
double nll_from_logits(const std::vector<Mat>& step_logits,
                       const std::vector<std::vector<int>>& targets, int pad_id);

}  // namespace fewgen
