#pragma once

#include <map>

#include "fewgen/augment.hpp"
#include "fewgen/metrics.hpp"
#include "fewgen/trainer.hpp"

namespace fewgen {

// One reproducible experiment: dataset, annotation budget, augmentation
// switches, training configuration and the seed list.
struct ExperimentSpec {
  std::string dataset = "synthetic";  // synthetic | e2e | webnlg
  std::string train_path, dev_path, test_path;

  std::size_t synth_n = 400;
  int synth_slots = 7;
  std::uint64_t synth_seed = 13;

  double annotation_fraction = 0.0;  // (0,1]; alternative to explicit k
  std::size_t k = 0;
  std::uint64_t split_seed = 7;
  SplitStrategy split_strategy = SplitStrategy::uniform;

  std::vector<std::uint64_t> seeds{1};
  TrainConfig train;

  struct Augmentation {
    bool info = false;
    bool lm = false;
    bool random = false;
    bool reference_upper_bound = false;
  } augmentation;
  int info_cap = 10;
  LmAugConfig lm_cfg;
  std::string generator_mode = "builtin";  // builtin | external | grammar
  CausalLstmLm::Options builtin_lm;
  std::size_t random_n = 30;
  std::string generic_text_path;

  std::string output_dir = "runs";
  int test_beam = 1;  // 1 = greedy test decoding

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& j);
  std::string hash() const;
};

struct RunRecord {
  std::string spec_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> reports;  // aligned with seeds
  std::vector<std::uint64_t> failed_seeds;
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;  // sample standard deviation

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// Computes mean and sample standard deviation per metric from the per-seed
// reports (recomputable from the persisted record).
void aggregate_run_record(RunRecord* record);

// Executes Algorithm-1 end to end: split, augment per switches, train per
// seed, decode the test set with the best dev checkpoint, score, aggregate.
// A diverging seed is recorded as failed; the others continue.
RunRecord run_experiment(const ExperimentSpec& spec);

}  // namespace fewgen
