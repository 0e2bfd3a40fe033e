#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "fewgen/graph.hpp"
#include "fewgen/vocab.hpp"
#include "json.hpp"

namespace fewgen {

enum class SharingMode { none, enc, dec, both };

std::string_view sharing_name(SharingMode m);
SharingMode sharing_from_name(std::string_view s);

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 600;
  int hidden_dim = 1024;
  int enc_layers = 3;
  int dec_layers = 3;
  SharingMode sharing = SharingMode::enc;
  double dropout = 0.3;
  bool tie_embeddings = false;  // requires embed_dim == hidden_dim
  int max_decode_len = 100;
  std::uint64_t vocab_hash = 0;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Shared encoder plus the two decoders. Parameters are owned once; with
// sharing enabled both sides alias the same storage, so a gradient through
// either side reaches the shared tensors.
class ModelState {
 public:
  struct LstmLayer {
    Parameter* W = nullptr;  // (4H x in)   gate order [i; f; o; g]
    Parameter* U = nullptr;  // (4H x H)
    Parameter* b = nullptr;  // (4H x 1)
  };
  struct Encoder {
    Parameter* embed = nullptr;  // (E x V)
    std::vector<LstmLayer> layers;
  };
  struct Decoder {
    Parameter* embed = nullptr;  // (E x V)
    Parameter* start = nullptr;  // (E x 1) side-specific first input token
    std::vector<LstmLayer> layers;
    Parameter* attn_W = nullptr;  // (H x H) bilinear attention
    Parameter* comb_W = nullptr;  // (H x 2H)
    Parameter* comb_b = nullptr;  // (H x 1)
    Parameter* out_W = nullptr;   // (V x H), absent when tied
    Parameter* out_b = nullptr;   // (V x 1)
  };

  ModelState(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  const Encoder& encoder(Side side) const;
  const Decoder& decoder(Side side) const;

  // Distinct parameters in a stable order.
  std::vector<Parameter*> parameters() const;
  std::size_t parameter_count() const;  // total scalar count over distinct tensors

  // Parameters reachable only through the given side's decoder (the partition
  // the opposite cycle direction must leave untouched).
  std::vector<Parameter*> decoder_exclusive(Side side) const;
  std::vector<Parameter*> encoder_params(Side side) const;

  void zero_grads();

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<ModelState> load(const std::filesystem::path& path,
                                          std::uint64_t expect_vocab_hash = 0);

  // Raw parameter block serialization, reused by the full trainer-state
  // checkpoint. Order matches parameters().
  void write_params(std::ostream& out) const;
  void read_params(std::istream& in);

 private:
  ModelConfig cfg_;
  std::vector<std::unique_ptr<Parameter>> owned_;
  Encoder enc_data_, enc_text_;
  Decoder dec_data_, dec_text_;

  Parameter* make(const std::string& name, int rows, int cols, Rng& rng, double scale);
  Encoder build_encoder(const std::string& prefix, Rng& rng);
  Decoder build_decoder(const std::string& prefix, Rng& rng);
};

}  // namespace fewgen
