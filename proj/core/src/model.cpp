#include "fewgen/model.hpp"

#include <cstring>
#include <fstream>
#include <set>

namespace fewgen {

std::string_view sharing_name(SharingMode m) {
  switch (m) {
    case SharingMode::none: return "none";
    case SharingMode::enc: return "enc";
    case SharingMode::dec: return "dec";
    case SharingMode::both: return "both";
  }
  return "enc";
}

SharingMode sharing_from_name(std::string_view s) {
  if (s == "none") return SharingMode::none;
  if (s == "enc") return SharingMode::enc;
  if (s == "dec") return SharingMode::dec;
  if (s == "both") return SharingMode::both;
  throw ConfigError("unknown sharing mode: " + std::string(s));
}

nlohmann::json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size},
          {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"enc_layers", enc_layers},
          {"dec_layers", dec_layers},
          {"sharing", std::string(sharing_name(sharing))},
          {"dropout", dropout},
          {"tie_embeddings", tie_embeddings},
          {"max_decode_len", max_decode_len},
          {"vocab_hash", vocab_hash}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.enc_layers = j.value("enc_layers", c.enc_layers);
  c.dec_layers = j.value("dec_layers", c.dec_layers);
  c.sharing = sharing_from_name(j.value("sharing", "enc"));
  c.dropout = j.value("dropout", c.dropout);
  c.tie_embeddings = j.value("tie_embeddings", c.tie_embeddings);
  c.max_decode_len = j.value("max_decode_len", c.max_decode_len);
  c.vocab_hash = j.value("vocab_hash", c.vocab_hash);
  return c;
}

Parameter* ModelState::make(const std::string& name, int rows, int cols, Rng& rng,
                            double scale) {
  auto p = std::make_unique<Parameter>(name, rows, cols);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Eigen::Index j = 0; j < p->value.cols(); ++j)
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) p->value(i, j) = dist(rng);
  Parameter* raw = p.get();
  owned_.push_back(std::move(p));
  return raw;
}

ModelState::Encoder ModelState::build_encoder(const std::string& prefix, Rng& rng) {
  Encoder enc;
  const int E = cfg_.embed_dim, H = cfg_.hidden_dim;
  enc.embed = make(prefix + ".embed", E, cfg_.vocab_size, rng, 0.1);
  for (int l = 0; l < cfg_.enc_layers; ++l) {
    int in = l == 0 ? E : H;
    LstmLayer layer;
    layer.W = make(prefix + ".l" + std::to_string(l) + ".W", 4 * H, in, rng, 0.1);
    layer.U = make(prefix + ".l" + std::to_string(l) + ".U", 4 * H, H, rng, 0.1);
    layer.b = make(prefix + ".l" + std::to_string(l) + ".b", 4 * H, 1, rng, 0.0);
    layer.b->value.middleRows(H, H).setOnes();  // forget gate bias
    enc.layers.push_back(layer);
  }
  return enc;
}

ModelState::Decoder ModelState::build_decoder(const std::string& prefix, Rng& rng) {
  Decoder dec;
  const int E = cfg_.embed_dim, H = cfg_.hidden_dim, V = cfg_.vocab_size;
  dec.embed = make(prefix + ".embed", E, V, rng, 0.1);
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    int in = l == 0 ? E : H;
    LstmLayer layer;
    layer.W = make(prefix + ".l" + std::to_string(l) + ".W", 4 * H, in, rng, 0.1);
    layer.U = make(prefix + ".l" + std::to_string(l) + ".U", 4 * H, H, rng, 0.1);
    layer.b = make(prefix + ".l" + std::to_string(l) + ".b", 4 * H, 1, rng, 0.0);
    layer.b->value.middleRows(H, H).setOnes();
    dec.layers.push_back(layer);
  }
  dec.attn_W = make(prefix + ".attn_W", H, H, rng, 0.1);
  dec.comb_W = make(prefix + ".comb_W", H, 2 * H, rng, 0.1);
  dec.comb_b = make(prefix + ".comb_b", H, 1, rng, 0.0);
  if (!cfg_.tie_embeddings) dec.out_W = make(prefix + ".out_W", V, H, rng, 0.1);
  dec.out_b = make(prefix + ".out_b", V, 1, rng, 0.0);
  return dec;
}

ModelState::ModelState(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  if (cfg_.vocab_size <= 0) throw ConfigError("ModelState: vocab_size must be positive");
  if (cfg_.tie_embeddings && cfg_.embed_dim != cfg_.hidden_dim)
    throw ConfigError("tie_embeddings requires embed_dim == hidden_dim");
  Rng rng(init_seed);

  bool share_enc = cfg_.sharing == SharingMode::enc || cfg_.sharing == SharingMode::both;
  bool share_dec = cfg_.sharing == SharingMode::dec || cfg_.sharing == SharingMode::both;

  if (share_enc) {
    enc_data_ = build_encoder("enc", rng);
    enc_text_ = enc_data_;
  } else {
    enc_data_ = build_encoder("enc_data", rng);
    enc_text_ = build_encoder("enc_text", rng);
  }
  if (share_dec) {
    Decoder shared = build_decoder("dec", rng);
    dec_text_ = shared;
    dec_data_ = shared;
    // Only the start-of-sequence embedding distinguishes the sides.
    dec_text_.start = make("dec.start_text", cfg_.embed_dim, 1, rng, 0.1);
    dec_data_.start = make("dec.start_data", cfg_.embed_dim, 1, rng, 0.1);
  } else {
    dec_text_ = build_decoder("dec_text", rng);
    dec_text_.start = make("dec_text.start", cfg_.embed_dim, 1, rng, 0.1);
    dec_data_ = build_decoder("dec_data", rng);
    dec_data_.start = make("dec_data.start", cfg_.embed_dim, 1, rng, 0.1);
  }
}

const ModelState::Encoder& ModelState::encoder(Side side) const {
  return side == Side::data ? enc_data_ : enc_text_;
}

const ModelState::Decoder& ModelState::decoder(Side side) const {
  return side == Side::data ? dec_data_ : dec_text_;
}

std::vector<Parameter*> ModelState::parameters() const {
  std::vector<Parameter*> out;
  out.reserve(owned_.size());
  for (const auto& p : owned_) out.push_back(p.get());
  return out;
}

std::size_t ModelState::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : owned_) n += p->size();
  return n;
}

std::vector<Parameter*> ModelState::decoder_exclusive(Side side) const {
  const Decoder& own = decoder(side);
  const Decoder& other = decoder(side == Side::data ? Side::text : Side::data);
  std::set<const Parameter*> shared;
  auto collect = [&shared](const Decoder& d) {
    shared.insert(d.embed);
    for (const auto& l : d.layers) {
      shared.insert(l.W);
      shared.insert(l.U);
      shared.insert(l.b);
    }
    shared.insert(d.attn_W);
    shared.insert(d.comb_W);
    shared.insert(d.comb_b);
    if (d.out_W) shared.insert(d.out_W);
    shared.insert(d.out_b);
    shared.insert(d.start);
  };
  collect(other);
  std::vector<Parameter*> out;
  auto push_if_exclusive = [&](Parameter* p) {
    if (p && !shared.count(p)) out.push_back(p);
  };
  push_if_exclusive(own.embed);
  for (const auto& l : own.layers) {
    push_if_exclusive(l.W);
    push_if_exclusive(l.U);
    push_if_exclusive(l.b);
  }
  push_if_exclusive(own.attn_W);
  push_if_exclusive(own.comb_W);
  push_if_exclusive(own.comb_b);
  push_if_exclusive(own.out_W);
  push_if_exclusive(own.out_b);
  push_if_exclusive(own.start);
  return out;
}

std::vector<Parameter*> ModelState::encoder_params(Side side) const {
  const Encoder& e = encoder(side);
  std::vector<Parameter*> out{e.embed};
  for (const auto& l : e.layers) {
    out.push_back(l.W);
    out.push_back(l.U);
    out.push_back(l.b);
  }
  return out;
}

void ModelState::zero_grads() {
  for (const auto& p : owned_) p->zero_grad();
}

namespace {

constexpr char kMagic[4] = {'F', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void ModelState::write_params(std::ostream& out) const {
  for (const auto& p : owned_) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->size() * sizeof(double)));
  }
}

void ModelState::read_params(std::istream& in) {
  for (const auto& p : owned_) {
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(p->size() * sizeof(double)));
  }
  if (!in) throw DataError("checkpoint: truncated parameter block");
}

void ModelState::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  nlohmann::json header;
  header["config"] = cfg_.to_json();
  header["params"] = nlohmann::json::array();
  for (const auto& p : owned_)
    header["params"].push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  std::string hs = header.dump();
  write_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  write_params(out);
}

std::unique_ptr<ModelState> ModelState::load(const std::filesystem::path& path,
                                             std::uint64_t expect_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a model checkpoint: " + path.string());
  std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  std::uint32_t hlen = read_u32(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  nlohmann::json header = nlohmann::json::parse(hs);
  ModelConfig cfg = ModelConfig::from_json(header.at("config"));
  if (expect_vocab_hash != 0 && cfg.vocab_hash != 0 && cfg.vocab_hash != expect_vocab_hash)
    throw DataError("checkpoint vocabulary hash mismatch (model was trained on a different vocabulary)");
  auto model = std::make_unique<ModelState>(cfg, 0);
  // Shape validation against the header before the raw read.
  const auto& plist = header.at("params");
  auto params = model->parameters();
  if (plist.size() != params.size())
    throw DataError("checkpoint parameter list mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (plist[i].at("name").get<std::string>() != params[i]->name ||
        plist[i].at("rows").get<Eigen::Index>() != params[i]->value.rows() ||
        plist[i].at("cols").get<Eigen::Index>() != params[i]->value.cols())
      throw DataError("checkpoint parameter mismatch at " + params[i]->name);
  }
  model->read_params(in);
  return model;
}

}  // namespace fewgen
