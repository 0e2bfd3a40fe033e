#include "fewgen/lm.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "fewgen/optim.hpp"
#include "fewgen/tokenize.hpp"

namespace fewgen {

void CausalLstmLm::build(std::uint64_t init_seed) {
  Rng rng(init_seed);
  auto make = [&](const std::string& name, int rows, int cols, double scale) {
    auto p = std::make_unique<Parameter>(name, rows, cols);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (Eigen::Index j = 0; j < p->value.cols(); ++j)
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) p->value(i, j) = dist(rng);
    Parameter* raw = p.get();
    params_.push_back(std::move(p));
    return raw;
  };
  int V = static_cast<int>(vocab_.size());
  int E = opts_.embed_dim, H = opts_.hidden_dim;
  embed_ = make("lm.embed", E, V, 0.1);
  layers_.clear();
  for (int l = 0; l < opts_.layers; ++l) {
    Layer layer;
    layer.W = make("lm.l" + std::to_string(l) + ".W", 4 * H, l == 0 ? E : H, 0.1);
    layer.U = make("lm.l" + std::to_string(l) + ".U", 4 * H, H, 0.1);
    layer.b = make("lm.l" + std::to_string(l) + ".b", 4 * H, 1, 0.0);
    layer.b->value.middleRows(H, H).setOnes();
    layers_.push_back(layer);
  }
  out_W_ = make("lm.out_W", V, H, 0.1);
  out_b_ = make("lm.out_b", V, 1, 0.0);
}

int CausalLstmLm::step_logits(Graph& g, std::vector<int>* h, std::vector<int>* c,
                              int x_node) const {
  int H = opts_.hidden_dim;
  int x = x_node;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    int gates = g.add_colvec(
        g.add(g.matmul(g.param(layers_[l].W), x), g.matmul(g.param(layers_[l].U), (*h)[l])),
        g.param(layers_[l].b));
    int gi = g.sigmoid(g.rows(gates, 0, H));
    int gf = g.sigmoid(g.rows(gates, H, H));
    int go = g.sigmoid(g.rows(gates, 2 * H, H));
    int gu = g.tanh(g.rows(gates, 3 * H, H));
    (*c)[l] = g.add(g.cmult(gf, (*c)[l]), g.cmult(gi, gu));
    (*h)[l] = g.cmult(go, g.tanh((*c)[l]));
    x = (*h)[l];
  }
  return g.add_colvec(g.matmul(g.param(out_W_), x), g.param(out_b_));
}

std::unique_ptr<CausalLstmLm> CausalLstmLm::train(const std::vector<TextSample>& texts,
                                                  const Options& opts) {
  if (texts.empty()) throw std::invalid_argument("lm train: empty text set");
  auto lm = std::unique_ptr<CausalLstmLm>(new CausalLstmLm());
  lm->opts_ = opts;
  for (const auto& t : texts)
    for (const auto& tok : t.tokens) lm->vocab_.add_token(lower(tok));
  lm->build(derive_seed(opts.seed, "lm_init"));

  std::vector<std::vector<int>> seqs;
  for (const auto& t : texts) {
    auto ids = lm->vocab_.encode(t.tokens, Side::text);
    if (!ids.empty()) seqs.push_back(std::move(ids));
  }
  if (seqs.empty()) throw std::invalid_argument("lm train: all texts empty after encoding");

  std::vector<Parameter*> params;
  for (auto& p : lm->params_) params.push_back(p.get());
  AdamOptimizer adam;
  Rng batch_rng(derive_seed(opts.seed, "lm_batch"));
  Rng drop_rng(derive_seed(opts.seed, "lm_dropout"));
  std::vector<std::size_t> perm(seqs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t pos = perm.size();

  int H = opts.hidden_dim;
  for (int update = 0; update < opts.updates; ++update) {
    std::vector<const std::vector<int>*> batch;
    for (int b = 0; b < opts.batch_size; ++b) {
      if (pos == perm.size()) {
        std::shuffle(perm.begin(), perm.end(), batch_rng);
        pos = 0;
      }
      batch.push_back(&seqs[perm[pos++]]);
    }
    int B = static_cast<int>(batch.size());
    int T = 0;
    for (auto* s : batch) T = std::max(T, static_cast<int>(s->size()) + 1);

    Graph g(true);
    std::vector<int> h, c;
    for (int l = 0; l < opts.layers; ++l) {
      h.push_back(g.input(Mat::Zero(H, B)));
      c.push_back(g.input(Mat::Zero(H, B)));
    }
    long n_tokens = 0;
    int total = -1;
    for (int t = 0; t < T; ++t) {
      std::vector<int> prev(B, Vocabulary::kBos);
      for (int j = 0; j < B; ++j)
        if (t > 0 && t - 1 < static_cast<int>(batch[j]->size())) prev[j] = (*batch[j])[t - 1];
      int x = g.dropout(g.lookup(lm->embed_, prev), opts.dropout, drop_rng);
      int logits = lm->step_logits(g, &h, &c, x);
      std::vector<int> tgt(B, -1);
      Vec w = Vec::Zero(B);
      for (int j = 0; j < B; ++j) {
        int len = static_cast<int>(batch[j]->size());
        if (t < len) tgt[j] = (*batch[j])[t];
        else if (t == len) tgt[j] = Vocabulary::kEos;
        else continue;
        w(j) = 1.0;
        ++n_tokens;
      }
      int ce = g.cross_entropy_cols(logits, std::move(tgt), std::move(w));
      total = total < 0 ? ce : g.add(total, ce);
    }
    int loss = g.scalar_scale(total, 1.0 / static_cast<double>(std::max<long>(1, n_tokens)));
    g.backward(loss);
    adam.step(params, linear_decay_lr(opts.learning_rate, update, opts.updates));
  }
  return lm;
}

std::string CausalLstmLm::generate(const std::string& conditioning,
                                   const SamplingParams& params) {
  Graph g(false);
  int H = opts_.hidden_dim;
  std::vector<int> h, c;
  for (int l = 0; l < opts_.layers; ++l) {
    h.push_back(g.input(Mat::Zero(H, 1)));
    c.push_back(g.input(Mat::Zero(H, 1)));
  }
  std::vector<int> context{Vocabulary::kBos};
  for (const auto& tok : word_tokenize(conditioning)) {
    int id = vocab_.id(lower(tok));
    context.push_back(id);
  }
  int logits = -1;
  for (int id : context) logits = step_logits(g, &h, &c, g.lookup(embed_, {id}));

  Rng rng(params.seed);
  std::vector<std::string> words;
  for (int step = 0; step < params.max_new_words; ++step) {
    Vec col = g.value(logits).col(0);
    // Specials other than eos never surface.
    col(Vocabulary::kPad) = col(Vocabulary::kBos) = col(Vocabulary::kUnk) =
        -std::numeric_limits<double>::infinity();
    int k = std::max(1, std::min<int>(params.top_k, static_cast<int>(col.size())));
    std::vector<int> order(col.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) { return col(a) != col(b) ? col(a) > col(b) : a < b; });
    Vec probs(k);
    double m = col(order[0]);
    for (int i = 0; i < k; ++i) probs(i) = std::exp(col(order[i]) - m);
    std::discrete_distribution<int> pick(probs.data(), probs.data() + k);
    int chosen = order[pick(rng)];
    if (chosen == Vocabulary::kEos) break;
    words.push_back(vocab_.token(chosen));
    logits = step_logits(g, &h, &c, g.lookup(embed_, {chosen}));
  }
  return detokenize(words);
}

double CausalLstmLm::mean_nll(const std::vector<TextSample>& texts) const {
  if (texts.empty()) return 0.0;
  double total = 0.0;
  long n_tokens = 0;
  int H = opts_.hidden_dim;
  for (const auto& text : texts) {
    auto ids = vocab_.encode(text.tokens, Side::text);
    if (ids.empty()) continue;
    Graph g(false);
    std::vector<int> h, c;
    for (int l = 0; l < opts_.layers; ++l) {
      h.push_back(g.input(Mat::Zero(H, 1)));
      c.push_back(g.input(Mat::Zero(H, 1)));
    }
    int prev = Vocabulary::kBos;
    for (std::size_t t = 0; t <= ids.size(); ++t) {
      int logits = step_logits(g, &h, &c, g.lookup(embed_, {prev}));
      int target = t < ids.size() ? ids[t] : Vocabulary::kEos;
      Vec col = g.value(logits).col(0);
      double mx = col.maxCoeff();
      double lse = mx + std::log((col.array() - mx).exp().sum());
      total += lse - col(target);
      ++n_tokens;
      prev = target;
    }
  }
  return n_tokens == 0 ? 0.0 : total / static_cast<double>(n_tokens);
}

void CausalLstmLm::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["options"] = {{"embed_dim", opts_.embed_dim}, {"hidden_dim", opts_.hidden_dim},
                     {"layers", opts_.layers},       {"updates", opts_.updates},
                     {"batch_size", opts_.batch_size}, {"learning_rate", opts_.learning_rate},
                     {"dropout", opts_.dropout},     {"seed", opts_.seed}};
  meta["vocab"] = vocab_.to_json();
  write_file(dir / "lm_meta.json", meta.dump(2));
  std::ofstream out(dir / "lm_params.bin", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "lm_params.bin").string());
  for (const auto& p : params_)
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->size() * sizeof(double)));
}

std::unique_ptr<CausalLstmLm> CausalLstmLm::load(const std::filesystem::path& dir) {
  nlohmann::json meta = nlohmann::json::parse(read_file(dir / "lm_meta.json"));
  auto lm = std::unique_ptr<CausalLstmLm>(new CausalLstmLm());
  const auto& o = meta.at("options");
  lm->opts_.embed_dim = o.at("embed_dim").get<int>();
  lm->opts_.hidden_dim = o.at("hidden_dim").get<int>();
  lm->opts_.layers = o.at("layers").get<int>();
  lm->opts_.updates = o.at("updates").get<int>();
  lm->opts_.batch_size = o.at("batch_size").get<int>();
  lm->opts_.learning_rate = o.at("learning_rate").get<double>();
  lm->opts_.dropout = o.at("dropout").get<double>();
  lm->opts_.seed = o.at("seed").get<std::uint64_t>();
  lm->vocab_ = Vocabulary::from_json(meta.at("vocab"));
  lm->build(0);
  std::ifstream in(dir / "lm_params.bin", std::ios::binary);
  if (!in) throw DataError("cannot open " + (dir / "lm_params.bin").string());
  for (auto& p : lm->params_)
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(p->size() * sizeof(double)));
  if (!in) throw DataError("lm checkpoint truncated");
  return lm;
}

namespace {

// Non-owning adapter so stub pass-through keeps the caller's object.
class BorrowedGenerator : public GeneratorInterface {
 public:
  explicit BorrowedGenerator(GeneratorInterface* inner) : inner_(inner) {}
  std::string generate(const std::string& conditioning, const SamplingParams& params) override {
    return inner_->generate(conditioning, params);
  }
  bool supports_concurrent_calls() const override { return inner_->supports_concurrent_calls(); }

 private:
  GeneratorInterface* inner_;
};

}  // namespace

std::unique_ptr<GeneratorInterface> finetune_generator(const std::vector<TextSample>& texts,
                                                       const GeneratorTrainConfig& cfg) {
  if (texts.empty()) throw std::invalid_argument("finetune_generator: empty text set");
  switch (cfg.mode) {
    case GeneratorTrainConfig::Mode::stub:
      if (cfg.stub == nullptr) throw ConfigError("stub generator mode without a stub");
      return std::make_unique<BorrowedGenerator>(cfg.stub);
    case GeneratorTrainConfig::Mode::external:
      return std::make_unique<ExternalProcessGenerator>(cfg.external_command);
    case GeneratorTrainConfig::Mode::builtin: {
      auto lm = CausalLstmLm::train(texts, cfg.builtin);
      if (!cfg.artifacts_dir.empty()) lm->save(cfg.artifacts_dir);
      return lm;
    }
  }
  throw ConfigError("unknown generator mode");
}

}  // namespace fewgen
