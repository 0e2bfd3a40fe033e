#pragma once

#include <filesystem>
#include <optional>
#include <set>

#include "fewgen/corpus.hpp"
#include "fewgen/metrics.hpp"
#include "fewgen/noise.hpp"
#include "fewgen/optim.hpp"
#include "fewgen/rep_match.hpp"
#include "fewgen/seq2seq.hpp"

namespace fewgen {

// Training directions that can be toggled independently (the cycle ablation
// axes); noise_on gates input corruption inside the autoencoding terms.
enum class Direction { t2d2t, d2t2d, ae_t, ae_d, noise_on };

std::string_view direction_name(Direction d);
Direction direction_from_name(std::string_view name);

struct TrainConfig {
  double learning_rate = 2e-4;
  int batch_size = 48;
  double dropout = 0.3;
  long total_updates = 8000;
  std::set<Direction> toggles;
  bool rm_enabled = false;
  double rm_threshold = 0.7;
  long rm_refresh_every = 500;
  long rm_warmup = 500;
  long eval_every = 250;
  std::uint64_t seed = 1;
  bool stochastic_cycle_sampling = false;
  bool rm_pool_unlabeled_only = false;
  NoiseConfig noise;
  ModelConfig model;  // vocab_size/vocab_hash/dropout filled in by the trainer
  int eval_beam = 1;  // decode width for dev-set model selection

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EvalRecord {
  long step = 0;
  std::optional<double> loss_cycle;
  std::optional<double> loss_rm;
  std::optional<double> loss_sup;
  double dev_bleu = 0.0;
};

// Interleaved optimization of the cycle-consistency, representation-matching
// and supervised objectives, sequentially per outer iteration. Owns the model,
// optimizer state and pseudo-pair set; one instance per run directory.
class CycleTrainer {
 public:
  CycleTrainer(Corpus corpus, std::vector<LabeledPair> dev, Vocabulary vocab,
               TrainConfig cfg, std::filesystem::path run_dir);

  // One optimizer update per call. Sampling of the intermediate sequence is
  // detached, so the opposite side's decoder-exclusive parameters stay
  // bitwise unchanged.
  double step_d2t2d(const std::vector<MeaningRepresentation>& batch);
  double step_t2d2t(const std::vector<TextSample>& batch);
  double step_autoencode(const std::vector<MeaningRepresentation>& batch_d,
                         const std::vector<TextSample>& batch_t, const NoiseConfig& noise,
                         bool ae_d = true, bool ae_t = true);
  double step_supervised(const std::vector<LabeledPair>& batch);
  // Pseudo pairs train exactly like supervised pairs; an empty batch is a
  // no-op returning zero.
  double step_rm(const std::vector<PseudoPair>& batch);

  void refresh_pseudo_pairs();
  double evaluate_dev();

  // Runs the full loop: per iteration cycle -> RM -> supervised, with dev
  // evaluation and best-model checkpointing every eval_every updates.
  void train();

  ModelState& model() { return *model_; }
  const ModelState& model() const { return *model_; }
  const Vocabulary& vocab() const { return vocab_; }
  const TrainConfig& config() const { return cfg_; }
  long update_count() const { return update_idx_; }
  const std::vector<PseudoPair>& pseudo_pairs() const { return pseudo_pairs_; }
  const std::vector<EvalRecord>& history() const { return history_; }
  double best_dev_bleu() const { return best_bleu_; }
  long best_step() const { return best_step_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }

  // Test hook: replaces the detached sampling of t'/d' inside cycle steps.
  using SamplerOverride =
      std::function<std::vector<int>(const std::vector<int>& src_ids, Side target_side)>;
  void set_sampler_override(SamplerOverride fn) { sampler_override_ = std::move(fn); }

  // Full-state checkpoint: model, optimizer moments, RNG streams, samplers,
  // pseudo pairs and counters. Resuming from it reproduces the exact
  // trajectory the uninterrupted run would have taken.
  void save_state(const std::filesystem::path& path) const;
  void load_state(const std::filesystem::path& path);

 private:
  struct Sampler {
    std::vector<std::size_t> perm;
    std::size_t pos = 0;
    Rng rng;
    std::vector<std::size_t> next(std::size_t n, std::size_t pool_size);
  };

  std::vector<int> sample_translation(const std::vector<int>& src, Side in_side, Side out_side);
  int build_cycle_loss(Graph& g, const std::vector<std::vector<int>>& src_ids, Side src_side,
                       Side mid_side);
  int build_ae_loss(Graph& g, const std::vector<std::vector<int>>& ids, Side side,
                    const NoiseConfig& noise);
  int build_pair_loss(Graph& g, const std::vector<std::vector<int>>& d_ids,
                      const std::vector<std::vector<int>>& t_ids);
  double apply_update(Graph& g, int loss_node, const char* phase);
  void maybe_eval();
  void write_metrics_record(const EvalRecord& rec);
  std::vector<std::vector<int>> gather(const std::vector<std::vector<int>>& pool,
                                       const std::vector<std::size_t>& idx) const;

  Corpus corpus_;
  std::vector<LabeledPair> dev_;
  Vocabulary vocab_;
  TrainConfig cfg_;
  std::filesystem::path run_dir_;

  std::unique_ptr<ModelState> model_;
  std::unique_ptr<Seq2Seq> s2s_;
  AdamOptimizer adam_;

  // Encoded pools.
  std::vector<std::vector<int>> data_pool_ids_;   // D = D_U + labeled data side
  std::vector<MeaningRepresentation> data_pool_mrs_;
  std::vector<std::vector<int>> text_pool_ids_;   // T = T_L + T'
  std::vector<std::vector<int>> sup_d_ids_;
  std::vector<std::vector<int>> sup_t_ids_;
  std::vector<std::vector<int>> rm_d_ids_;
  std::vector<std::vector<int>> rm_t_ids_;

  Sampler cycle_d_sampler_, cycle_t_sampler_, ae_d_sampler_, ae_t_sampler_, sup_sampler_,
      rm_sampler_;
  Rng noise_rng_, dropout_rng_, sample_rng_;

  std::vector<PseudoPair> pseudo_pairs_;
  long update_idx_ = 0;
  long last_mine_step_ = -1;
  double best_bleu_ = -1.0;
  long best_step_ = -1;
  std::vector<EvalRecord> history_;

  struct Accum {
    double sum = 0.0;
    long n = 0;
    void add(double v) {
      sum += v;
      ++n;
    }
    std::optional<double> take() {
      if (n == 0) return std::nullopt;
      double mean = sum / static_cast<double>(n);
      sum = 0.0;
      n = 0;
      return mean;
    }
  };
  Accum acc_cycle_, acc_rm_, acc_sup_;

  SamplerOverride sampler_override_;
};

// Convenience wrapper for the spec-level entry point: builds the trainer,
// runs the loop, and returns it as the final trainer state.
std::unique_ptr<CycleTrainer> train(Corpus corpus, std::vector<LabeledPair> dev,
                                    Vocabulary vocab, TrainConfig cfg,
                                    const std::filesystem::path& run_dir);

}  // namespace fewgen
