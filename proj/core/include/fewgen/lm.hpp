#pragma once

#include <filesystem>
#include <memory>

#include "fewgen/generator.hpp"
#include "fewgen/graph.hpp"
#include "fewgen/types.hpp"
#include "fewgen/vocab.hpp"

namespace fewgen {

// Word-level causal LSTM language model trained from scratch on in-domain
// text. Small by design: it is the self-contained stand-in for a pretrained
// generator when no external LM is configured.
class CausalLstmLm : public GeneratorInterface {
 public:
  struct Options {
    int embed_dim = 32;
    int hidden_dim = 64;
    int layers = 1;
    int updates = 400;
    int batch_size = 16;
    double learning_rate = 3e-3;
    double dropout = 0.1;
    std::uint64_t seed = 1;
  };

  static std::unique_ptr<CausalLstmLm> train(const std::vector<TextSample>& texts,
                                             const Options& opts);

  std::string generate(const std::string& conditioning, const SamplingParams& params) override;

  // Sentence-average NLL over held text, for smoke checks.
  double mean_nll(const std::vector<TextSample>& texts) const;

  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<CausalLstmLm> load(const std::filesystem::path& dir);

 private:
  CausalLstmLm() = default;

  Options opts_;
  Vocabulary vocab_;
  std::vector<std::unique_ptr<Parameter>> params_;
  Parameter* embed_ = nullptr;
  struct Layer {
    Parameter* W;
    Parameter* U;
    Parameter* b;
  };
  std::vector<Layer> layers_;
  Parameter* out_W_ = nullptr;
  Parameter* out_b_ = nullptr;

  void build(std::uint64_t init_seed);
  int step_logits(Graph& g, std::vector<int>* h, std::vector<int>* c, int x_node) const;
  friend struct LmAccess;
};

// How finetune_generator obtains its generator.
struct GeneratorTrainConfig {
  enum class Mode { stub, builtin, external };
  Mode mode = Mode::builtin;
  GeneratorInterface* stub = nullptr;        // pass-through for tests
  std::string external_command;              // defaults to $FEWGEN_BASE_LM
  CausalLstmLm::Options builtin;
  std::filesystem::path artifacts_dir;       // builtin checkpoints land here if set
};

// Produces the generator used by LM augmentation. Builtin mode trains the
// causal LM on `texts` and persists artifacts; external mode wraps the
// configured command; stub mode returns the provided stub untouched.
std::unique_ptr<GeneratorInterface> finetune_generator(const std::vector<TextSample>& texts,
                                                       const GeneratorTrainConfig& cfg);

}  // namespace fewgen
