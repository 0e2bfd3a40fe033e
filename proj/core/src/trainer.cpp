#include "fewgen/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fewgen {

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::t2d2t: return "t2d2t";
    case Direction::d2t2d: return "d2t2d";
    case Direction::ae_t: return "ae_t";
    case Direction::ae_d: return "ae_d";
    case Direction::noise_on: return "noise_on";
  }
  return "t2d2t";
}

Direction direction_from_name(std::string_view name) {
  if (name == "t2d2t") return Direction::t2d2t;
  if (name == "d2t2d") return Direction::d2t2d;
  if (name == "ae_t") return Direction::ae_t;
  if (name == "ae_d") return Direction::ae_d;
  if (name == "noise_on") return Direction::noise_on;
  throw ConfigError("unknown direction toggle: " + std::string(name));
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (total_updates < 0) throw ConfigError("total_updates must be >= 0");
  if (rm_threshold < -1.0 || rm_threshold > 1.0)
    throw ConfigError("rm_threshold must be in [-1,1]");
  if (rm_refresh_every < 1) throw ConfigError("rm_refresh_every must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (eval_beam < 1) throw ConfigError("eval_beam must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json toggle_list = nlohmann::json::array();
  for (auto d : toggles) toggle_list.push_back(std::string(direction_name(d)));
  return {{"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"dropout", dropout},
          {"total_updates", total_updates},
          {"toggles", toggle_list},
          {"rm_enabled", rm_enabled},
          {"rm_threshold", rm_threshold},
          {"rm_refresh_every", rm_refresh_every},
          {"rm_warmup", rm_warmup},
          {"eval_every", eval_every},
          {"seed", seed},
          {"stochastic_cycle_sampling", stochastic_cycle_sampling},
          {"rm_pool_unlabeled_only", rm_pool_unlabeled_only},
          {"noise", {{"drop_to_pad_prob", noise.drop_to_pad_prob},
                     {"shuffle_window", noise.shuffle_window}}},
          {"model", model.to_json()},
          {"eval_beam", eval_beam}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.dropout = j.value("dropout", c.dropout);
  c.total_updates = j.value("total_updates", c.total_updates);
  if (j.contains("toggles"))
    for (const auto& t : j["toggles"]) c.toggles.insert(direction_from_name(t.get<std::string>()));
  c.rm_enabled = j.value("rm_enabled", c.rm_enabled);
  c.rm_threshold = j.value("rm_threshold", c.rm_threshold);
  c.rm_refresh_every = j.value("rm_refresh_every", c.rm_refresh_every);
  c.rm_warmup = j.value("rm_warmup", c.rm_warmup);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.seed = j.value("seed", c.seed);
  c.stochastic_cycle_sampling = j.value("stochastic_cycle_sampling", c.stochastic_cycle_sampling);
  c.rm_pool_unlabeled_only = j.value("rm_pool_unlabeled_only", c.rm_pool_unlabeled_only);
  if (j.contains("noise")) {
    c.noise.drop_to_pad_prob = j["noise"].value("drop_to_pad_prob", c.noise.drop_to_pad_prob);
    c.noise.shuffle_window = j["noise"].value("shuffle_window", c.noise.shuffle_window);
  }
  if (j.contains("model")) c.model = ModelConfig::from_json(j["model"]);
  c.eval_beam = j.value("eval_beam", c.eval_beam);
  return c;
}

std::vector<std::size_t> CycleTrainer::Sampler::next(std::size_t n, std::size_t pool_size) {
  std::vector<std::size_t> out;
  if (pool_size == 0) return out;
  if (perm.size() != pool_size) {
    perm.resize(pool_size);
    std::iota(perm.begin(), perm.end(), 0);
    pos = perm.size();  // force reshuffle
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (pos >= perm.size()) {
      std::shuffle(perm.begin(), perm.end(), rng);
      pos = 0;
    }
    out.push_back(perm[pos++]);
  }
  return out;
}

CycleTrainer::CycleTrainer(Corpus corpus, std::vector<LabeledPair> dev, Vocabulary vocab,
                           TrainConfig cfg, std::filesystem::path run_dir)
    : corpus_(std::move(corpus)),
      dev_(std::move(dev)),
      vocab_(std::move(vocab)),
      cfg_(std::move(cfg)),
      run_dir_(std::move(run_dir)) {
  cfg_.validate();
  if (corpus_.labeled.empty()) throw DataError("training requires k > 0 labeled pairs");

  cfg_.model.vocab_size = static_cast<int>(vocab_.size());
  cfg_.model.vocab_hash = vocab_.hash();
  cfg_.model.dropout = cfg_.dropout;
  cfg_.model.max_decode_len =
      std::max(vocab_.max_len(Side::data), vocab_.max_len(Side::text));
  model_ = std::make_unique<ModelState>(cfg_.model, derive_seed(cfg_.seed, "init"));
  s2s_ = std::make_unique<Seq2Seq>(*model_);

  for (const auto& mr : corpus_.d_unlabeled) {
    data_pool_ids_.push_back(vocab_.encode(linearize(mr), Side::data));
    data_pool_mrs_.push_back(mr);
  }
  for (const auto& pair : corpus_.labeled) {
    auto d_ids = vocab_.encode(linearize(pair.mr), Side::data);
    auto t_ids = vocab_.encode(pair.text.tokens, Side::text);
    if (d_ids.empty() || t_ids.empty()) continue;
    data_pool_ids_.push_back(d_ids);
    data_pool_mrs_.push_back(pair.mr);
    sup_d_ids_.push_back(std::move(d_ids));
    sup_t_ids_.push_back(std::move(t_ids));
    text_pool_ids_.push_back(sup_t_ids_.back());
  }
  for (const auto& t : corpus_.t_augmented) {
    auto ids = vocab_.encode(t.tokens, Side::text);
    if (!ids.empty()) text_pool_ids_.push_back(std::move(ids));
  }
  if (sup_d_ids_.empty()) throw DataError("no labeled pair survived encoding");

  cycle_d_sampler_.rng.seed(derive_seed(cfg_.seed, "cycle_d"));
  cycle_t_sampler_.rng.seed(derive_seed(cfg_.seed, "cycle_t"));
  ae_d_sampler_.rng.seed(derive_seed(cfg_.seed, "ae_d"));
  ae_t_sampler_.rng.seed(derive_seed(cfg_.seed, "ae_t"));
  sup_sampler_.rng.seed(derive_seed(cfg_.seed, "sup"));
  rm_sampler_.rng.seed(derive_seed(cfg_.seed, "rm"));
  noise_rng_.seed(derive_seed(cfg_.seed, "noise"));
  dropout_rng_.seed(derive_seed(cfg_.seed, "dropout"));
  sample_rng_.seed(derive_seed(cfg_.seed, "sampling"));

  if (!run_dir_.empty()) {
    std::filesystem::create_directories(run_dir_);
    nlohmann::json effective = cfg_.to_json();
    write_file(run_dir_ / "config.json", effective.dump(2));
    write_file(run_dir_ / "vocab.json", vocab_.to_json().dump());
  }
}

std::vector<std::vector<int>> CycleTrainer::gather(const std::vector<std::vector<int>>& pool,
                                                   const std::vector<std::size_t>& idx) const {
  std::vector<std::vector<int>> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

std::vector<int> CycleTrainer::sample_translation(const std::vector<int>& src, Side in_side,
                                                  Side out_side) {
  if (sampler_override_) return sampler_override_(src, out_side);
  EncodeResult enc = s2s_->encode(src, in_side);
  int max_len = vocab_.max_len(out_side);
  if (cfg_.stochastic_cycle_sampling)
    return s2s_->sample_decode(enc, out_side, sample_rng_, max_len);
  return s2s_->decode(enc, out_side, DecodeMode::greedy, 1, max_len);
}

int CycleTrainer::build_cycle_loss(Graph& g, const std::vector<std::vector<int>>& src_ids,
                                   Side src_side, Side mid_side) {
  // Detached sampling of the intermediate sequence: the sampling-side
  // parameters only act through the produced tokens, never through gradients.
  std::vector<std::vector<int>> mid;
  mid.reserve(src_ids.size());
  for (const auto& src : src_ids) {
    auto m = sample_translation(src, src_side, mid_side);
    if (m.empty()) m.push_back(Vocabulary::kUnk);  // degenerate sample still reconstructs
    mid.push_back(std::move(m));
  }
  EncodedBatch enc = s2s_->encode_batch(g, mid, mid_side, &dropout_rng_);
  return s2s_->teacher_forced_loss(g, enc, src_ids, src_side, &dropout_rng_).node;
}

int CycleTrainer::build_ae_loss(Graph& g, const std::vector<std::vector<int>>& ids, Side side,
                                const NoiseConfig& noise) {
  std::vector<std::vector<int>> corrupted;
  corrupted.reserve(ids.size());
  std::uniform_int_distribution<std::uint64_t> seed_dist;
  for (const auto& seq : ids)
    corrupted.push_back(apply_noise(seq, noise, seed_dist(noise_rng_), Vocabulary::kPad,
                                    Vocabulary::kUnk));
  EncodedBatch enc = s2s_->encode_batch(g, corrupted, side, &dropout_rng_);
  return s2s_->teacher_forced_loss(g, enc, ids, side, &dropout_rng_).node;
}

int CycleTrainer::build_pair_loss(Graph& g, const std::vector<std::vector<int>>& d_ids,
                                  const std::vector<std::vector<int>>& t_ids) {
  EncodedBatch enc_d = s2s_->encode_batch(g, d_ids, Side::data, &dropout_rng_);
  int loss_t_given_d = s2s_->teacher_forced_loss(g, enc_d, t_ids, Side::text, &dropout_rng_).node;
  EncodedBatch enc_t = s2s_->encode_batch(g, t_ids, Side::text, &dropout_rng_);
  int loss_d_given_t = s2s_->teacher_forced_loss(g, enc_t, d_ids, Side::data, &dropout_rng_).node;
  return g.add(loss_t_given_d, loss_d_given_t);
}

double CycleTrainer::apply_update(Graph& g, int loss_node, const char* phase) {
  double loss = g.scalar_value(loss_node);
  if (!std::isfinite(loss))
    throw DivergenceError(std::string("non-finite ") + phase + " loss at update " +
                          std::to_string(update_idx_));
  g.backward(loss_node);
  double lr = linear_decay_lr(cfg_.learning_rate, update_idx_, cfg_.total_updates);
  adam_.step(model_->parameters(), lr);
  ++update_idx_;
  return loss;
}

double CycleTrainer::step_d2t2d(const std::vector<MeaningRepresentation>& batch) {
  if (batch.empty()) throw std::invalid_argument("step_d2t2d: empty batch");
  std::vector<std::vector<int>> ids;
  for (const auto& mr : batch) ids.push_back(vocab_.encode(linearize(mr), Side::data));
  Graph g(true);
  return apply_update(g, build_cycle_loss(g, ids, Side::data, Side::text), "d2t2d");
}

double CycleTrainer::step_t2d2t(const std::vector<TextSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("step_t2d2t: empty batch");
  std::vector<std::vector<int>> ids;
  for (const auto& t : batch) ids.push_back(vocab_.encode(t.tokens, Side::text));
  Graph g(true);
  return apply_update(g, build_cycle_loss(g, ids, Side::text, Side::data), "t2d2t");
}

double CycleTrainer::step_autoencode(const std::vector<MeaningRepresentation>& batch_d,
                                     const std::vector<TextSample>& batch_t,
                                     const NoiseConfig& noise, bool ae_d, bool ae_t) {
  if ((ae_d && batch_d.empty()) || (ae_t && batch_t.empty()))
    throw std::invalid_argument("step_autoencode: empty batch");
  if (!ae_d && !ae_t) throw std::invalid_argument("step_autoencode: both sides disabled");
  Graph g(true);
  int loss = -1;
  if (ae_d) {
    std::vector<std::vector<int>> ids;
    for (const auto& mr : batch_d) ids.push_back(vocab_.encode(linearize(mr), Side::data));
    loss = build_ae_loss(g, ids, Side::data, noise);
  }
  if (ae_t) {
    std::vector<std::vector<int>> ids;
    for (const auto& t : batch_t) ids.push_back(vocab_.encode(t.tokens, Side::text));
    int lt = build_ae_loss(g, ids, Side::text, noise);
    loss = loss < 0 ? lt : g.add(loss, lt);
  }
  return apply_update(g, loss, "autoencode");
}

double CycleTrainer::step_supervised(const std::vector<LabeledPair>& batch) {
  if (batch.empty()) throw std::invalid_argument("step_supervised: empty batch");
  std::vector<std::vector<int>> d_ids, t_ids;
  for (const auto& pair : batch) {
    d_ids.push_back(vocab_.encode(linearize(pair.mr), Side::data));
    t_ids.push_back(vocab_.encode(pair.text.tokens, Side::text));
  }
  Graph g(true);
  return apply_update(g, build_pair_loss(g, d_ids, t_ids), "supervised");
}

double CycleTrainer::step_rm(const std::vector<PseudoPair>& batch) {
  if (batch.empty()) return 0.0;
  std::vector<std::vector<int>> d_ids, t_ids;
  for (const auto& pair : batch) {
    if (pair.similarity < cfg_.rm_threshold)
      throw std::invalid_argument("step_rm: pseudo pair below threshold");
    d_ids.push_back(vocab_.encode(linearize(pair.mr), Side::data));
    t_ids.push_back(vocab_.encode(pair.text.tokens, Side::text));
  }
  Graph g(true);
  return apply_update(g, build_pair_loss(g, d_ids, t_ids), "rm");
}

void CycleTrainer::refresh_pseudo_pairs() {
  if (corpus_.t_augmented.empty() || data_pool_mrs_.empty()) return;
  const std::vector<MeaningRepresentation>* pool = &data_pool_mrs_;
  std::vector<MeaningRepresentation> unlabeled_only;
  if (cfg_.rm_pool_unlabeled_only) {
    unlabeled_only = corpus_.d_unlabeled;
    if (unlabeled_only.empty()) return;
    pool = &unlabeled_only;
  }
  MineOptions opts;
  opts.epsilon = cfg_.rm_threshold;
  opts.step = update_idx_;
  RepresentationFn encode_fn = [this](const std::vector<int>& ids, Side side) {
    return s2s_->encode(ids, side).pooled;
  };
  pseudo_pairs_ = mine_pairs(corpus_.t_augmented, *pool, vocab_, encode_fn, opts);
  last_mine_step_ = update_idx_;

  rm_d_ids_.clear();
  rm_t_ids_.clear();
  for (const auto& pair : pseudo_pairs_) {
    rm_d_ids_.push_back(vocab_.encode(linearize(pair.mr), Side::data));
    rm_t_ids_.push_back(vocab_.encode(pair.text.tokens, Side::text));
  }
  rm_sampler_.perm.clear();  // pool changed; reshuffle lazily

  if (!run_dir_.empty()) append_pseudo_pairs_jsonl(run_dir_ / "pseudo_pairs.jsonl", pseudo_pairs_);
}

double CycleTrainer::evaluate_dev() {
  if (dev_.empty()) return 0.0;
  std::vector<MeaningRepresentation> mrs;
  std::vector<TokenSeq> hyps, refs;
  for (const auto& pair : dev_) {
    mrs.push_back(pair.mr);
    refs.push_back(metric_tokenize(pair.text.raw));
    hyps.push_back({});
  }
  // Decode each distinct MR once; duplicates share the decoding.
  std::map<std::string, TokenSeq> decoded;
  for (std::size_t i = 0; i < dev_.size(); ++i) {
    std::string key = mrs[i].key();
    auto it = decoded.find(key);
    if (it == decoded.end()) {
      auto src = vocab_.encode(linearize(mrs[i]), Side::data);
      auto out_ids = s2s_->generate(src, Side::data, Side::text,
                                    cfg_.eval_beam > 1 ? DecodeMode::beam : DecodeMode::greedy,
                                    cfg_.eval_beam);
      TokenSeq toks;
      for (const auto& tok : vocab_.surface_tokens(out_ids)) toks.push_back(lower(tok));
      it = decoded.emplace(key, std::move(toks)).first;
    }
    hyps[i] = it->second;
  }
  std::vector<TokenSeq> pooled_hyps;
  std::vector<std::vector<TokenSeq>> pooled_refs;
  pool_references_by_mr(mrs, hyps, refs, &pooled_hyps, &pooled_refs);
  return bleu4(pooled_hyps, pooled_refs);
}

void CycleTrainer::write_metrics_record(const EvalRecord& rec) {
  history_.push_back(rec);
  if (run_dir_.empty()) return;
  nlohmann::json j;
  j["step"] = rec.step;
  j["loss_cycle"] = rec.loss_cycle ? nlohmann::json(*rec.loss_cycle) : nlohmann::json(nullptr);
  j["loss_rm"] = rec.loss_rm ? nlohmann::json(*rec.loss_rm) : nlohmann::json(nullptr);
  j["loss_sup"] = rec.loss_sup ? nlohmann::json(*rec.loss_sup) : nlohmann::json(nullptr);
  j["dev_bleu"] = rec.dev_bleu;
  std::ofstream out(run_dir_ / "metrics.jsonl", std::ios::app);
  out << j.dump() << "\n";
}

void CycleTrainer::maybe_eval() {
  EvalRecord rec;
  rec.step = update_idx_;
  rec.loss_cycle = acc_cycle_.take();
  rec.loss_rm = acc_rm_.take();
  rec.loss_sup = acc_sup_.take();
  rec.dev_bleu = evaluate_dev();
  write_metrics_record(rec);
  if (rec.dev_bleu > best_bleu_) {
    best_bleu_ = rec.dev_bleu;
    best_step_ = update_idx_;
    if (!run_dir_.empty())
      model_->save(run_dir_ / "checkpoints" / ("step_" + std::to_string(update_idx_) + ".ckpt"));
  }
}

void CycleTrainer::train() {
  bool cycle_on = cfg_.toggles.count(Direction::d2t2d) || cfg_.toggles.count(Direction::t2d2t) ||
                  cfg_.toggles.count(Direction::ae_d) || cfg_.toggles.count(Direction::ae_t);
  bool noise_on = cfg_.toggles.count(Direction::noise_on) > 0;
  NoiseConfig identity_noise{0.0, 1};
  const NoiseConfig& ae_noise = noise_on ? cfg_.noise : identity_noise;
  std::size_t bs = static_cast<std::size_t>(cfg_.batch_size);
  long next_eval = cfg_.eval_every;

  while (update_idx_ < cfg_.total_updates) {
    // Phase order per outer iteration: cycle consistency, representation
    // matching, supervised.
    if (cycle_on && update_idx_ < cfg_.total_updates) {
      Graph g(true);
      int loss = -1;
      auto add = [&](int node) { loss = loss < 0 ? node : g.add(loss, node); };
      if (cfg_.toggles.count(Direction::d2t2d)) {
        auto idx = cycle_d_sampler_.next(bs, data_pool_ids_.size());
        if (!idx.empty()) add(build_cycle_loss(g, gather(data_pool_ids_, idx), Side::data, Side::text));
      }
      if (cfg_.toggles.count(Direction::t2d2t)) {
        auto idx = cycle_t_sampler_.next(bs, text_pool_ids_.size());
        if (!idx.empty()) add(build_cycle_loss(g, gather(text_pool_ids_, idx), Side::text, Side::data));
      }
      if (cfg_.toggles.count(Direction::ae_d)) {
        auto idx = ae_d_sampler_.next(bs, data_pool_ids_.size());
        if (!idx.empty()) add(build_ae_loss(g, gather(data_pool_ids_, idx), Side::data, ae_noise));
      }
      if (cfg_.toggles.count(Direction::ae_t)) {
        auto idx = ae_t_sampler_.next(bs, text_pool_ids_.size());
        if (!idx.empty()) add(build_ae_loss(g, gather(text_pool_ids_, idx), Side::text, ae_noise));
      }
      if (loss >= 0) acc_cycle_.add(apply_update(g, loss, "cycle"));
    }

    if (cfg_.rm_enabled && update_idx_ < cfg_.total_updates) {
      if (update_idx_ >= cfg_.rm_warmup &&
          (last_mine_step_ < 0 || update_idx_ - last_mine_step_ >= cfg_.rm_refresh_every)) {
        refresh_pseudo_pairs();
      }
      if (!rm_d_ids_.empty()) {
        auto idx = rm_sampler_.next(std::min(bs, rm_d_ids_.size()), rm_d_ids_.size());
        Graph g(true);
        int loss = build_pair_loss(g, gather(rm_d_ids_, idx), gather(rm_t_ids_, idx));
        acc_rm_.add(apply_update(g, loss, "rm"));
      }
    }

    if (update_idx_ < cfg_.total_updates) {
      auto idx = sup_sampler_.next(std::min(bs, sup_d_ids_.size()), sup_d_ids_.size());
      Graph g(true);
      int loss = build_pair_loss(g, gather(sup_d_ids_, idx), gather(sup_t_ids_, idx));
      acc_sup_.add(apply_update(g, loss, "supervised"));
    }

    if (update_idx_ >= next_eval) {
      maybe_eval();
      next_eval = (update_idx_ / cfg_.eval_every + 1) * cfg_.eval_every;
    }
  }
  if (cfg_.total_updates > 0 && (history_.empty() || history_.back().step != update_idx_))
    maybe_eval();
  if (!run_dir_.empty()) {
    nlohmann::json summary = {{"final_step", update_idx_},
                              {"best_step", best_step_},
                              {"best_dev_bleu", best_bleu_}};
    write_file(run_dir_ / "summary.json", summary.dump(2));
    model_->save(run_dir_ / "checkpoints" / "final.ckpt");
  }
}

namespace {

constexpr char kStateMagic[4] = {'F', 'G', 'T', 'S'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

void rng_from_string(Rng& rng, const std::string& s) {
  std::istringstream ss(s);
  ss >> rng;
}

}  // namespace

void CycleTrainer::save_state(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trainer state: " + path.string());
  out.write(kStateMagic, 4);
  write_u32(out, 1);

  nlohmann::json j;
  j["update_idx"] = update_idx_;
  j["last_mine_step"] = last_mine_step_;
  j["best_bleu"] = best_bleu_;
  j["best_step"] = best_step_;
  j["acc"] = {{"cycle_sum", acc_cycle_.sum}, {"cycle_n", acc_cycle_.n},
              {"rm_sum", acc_rm_.sum},       {"rm_n", acc_rm_.n},
              {"sup_sum", acc_sup_.sum},     {"sup_n", acc_sup_.n}};
  auto sampler_json = [](const Sampler& s) {
    return nlohmann::json{{"perm", s.perm}, {"pos", s.pos}, {"rng", rng_to_string(s.rng)}};
  };
  j["samplers"] = {{"cycle_d", sampler_json(cycle_d_sampler_)},
                   {"cycle_t", sampler_json(cycle_t_sampler_)},
                   {"ae_d", sampler_json(ae_d_sampler_)},
                   {"ae_t", sampler_json(ae_t_sampler_)},
                   {"sup", sampler_json(sup_sampler_)},
                   {"rm", sampler_json(rm_sampler_)}};
  j["rngs"] = {{"noise", rng_to_string(noise_rng_)},
               {"dropout", rng_to_string(dropout_rng_)},
               {"sampling", rng_to_string(sample_rng_)}};
  j["pseudo_pairs"] = nlohmann::json::array();
  for (const auto& p : pseudo_pairs_) {
    j["pseudo_pairs"].push_back({{"mr", mr_to_json(p.mr)},
                                 {"text", p.text.raw},
                                 {"provenance", std::string(provenance_name(p.text.provenance()))},
                                 {"similarity", p.similarity},
                                 {"mined_at_step", p.mined_at_step},
                                 {"pool_index", p.pool_index}});
  }
  j["history"] = nlohmann::json::array();
  for (const auto& h : history_) {
    j["history"].push_back(
        {{"step", h.step},
         {"loss_cycle", h.loss_cycle ? nlohmann::json(*h.loss_cycle) : nlohmann::json(nullptr)},
         {"loss_rm", h.loss_rm ? nlohmann::json(*h.loss_rm) : nlohmann::json(nullptr)},
         {"loss_sup", h.loss_sup ? nlohmann::json(*h.loss_sup) : nlohmann::json(nullptr)},
         {"dev_bleu", h.dev_bleu}});
  }
  std::string js = j.dump();
  write_u32(out, static_cast<std::uint32_t>(js.size()));
  out.write(js.data(), static_cast<std::streamsize>(js.size()));

  model_->write_params(out);
  AdamOptimizer::write_state(out, model_->parameters());
}

void CycleTrainer::load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trainer state: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kStateMagic, 4) != 0)
    throw DataError("not a trainer state file: " + path.string());
  if (read_u32(in) != 1) throw DataError("unsupported trainer state version");
  std::uint32_t len = read_u32(in);
  std::string js(len, '\0');
  in.read(js.data(), len);
  nlohmann::json j = nlohmann::json::parse(js);

  update_idx_ = j.at("update_idx").get<long>();
  last_mine_step_ = j.at("last_mine_step").get<long>();
  best_bleu_ = j.at("best_bleu").get<double>();
  best_step_ = j.at("best_step").get<long>();
  acc_cycle_.sum = j["acc"]["cycle_sum"].get<double>();
  acc_cycle_.n = j["acc"]["cycle_n"].get<long>();
  acc_rm_.sum = j["acc"]["rm_sum"].get<double>();
  acc_rm_.n = j["acc"]["rm_n"].get<long>();
  acc_sup_.sum = j["acc"]["sup_sum"].get<double>();
  acc_sup_.n = j["acc"]["sup_n"].get<long>();
  auto load_sampler = [&](Sampler& s, const nlohmann::json& sj) {
    s.perm = sj.at("perm").get<std::vector<std::size_t>>();
    s.pos = sj.at("pos").get<std::size_t>();
    rng_from_string(s.rng, sj.at("rng").get<std::string>());
  };
  load_sampler(cycle_d_sampler_, j["samplers"]["cycle_d"]);
  load_sampler(cycle_t_sampler_, j["samplers"]["cycle_t"]);
  load_sampler(ae_d_sampler_, j["samplers"]["ae_d"]);
  load_sampler(ae_t_sampler_, j["samplers"]["ae_t"]);
  load_sampler(sup_sampler_, j["samplers"]["sup"]);
  load_sampler(rm_sampler_, j["samplers"]["rm"]);
  rng_from_string(noise_rng_, j["rngs"]["noise"].get<std::string>());
  rng_from_string(dropout_rng_, j["rngs"]["dropout"].get<std::string>());
  rng_from_string(sample_rng_, j["rngs"]["sampling"].get<std::string>());

  pseudo_pairs_.clear();
  rm_d_ids_.clear();
  rm_t_ids_.clear();
  for (const auto& pj : j.at("pseudo_pairs")) {
    PseudoPair p;
    p.mr = mr_from_json(pj.at("mr"));
    p.text = TextSample(pj.at("text").get<std::string>(),
                        provenance_from_name(pj.at("provenance").get<std::string>()));
    p.similarity = pj.at("similarity").get<double>();
    p.mined_at_step = pj.at("mined_at_step").get<long>();
    p.pool_index = pj.at("pool_index").get<std::size_t>();
    pseudo_pairs_.push_back(std::move(p));
  }
  for (const auto& pair : pseudo_pairs_) {
    rm_d_ids_.push_back(vocab_.encode(linearize(pair.mr), Side::data));
    rm_t_ids_.push_back(vocab_.encode(pair.text.tokens, Side::text));
  }
  history_.clear();
  for (const auto& hj : j.at("history")) {
    EvalRecord rec;
    rec.step = hj.at("step").get<long>();
    if (!hj.at("loss_cycle").is_null()) rec.loss_cycle = hj["loss_cycle"].get<double>();
    if (!hj.at("loss_rm").is_null()) rec.loss_rm = hj["loss_rm"].get<double>();
    if (!hj.at("loss_sup").is_null()) rec.loss_sup = hj["loss_sup"].get<double>();
    rec.dev_bleu = hj.at("dev_bleu").get<double>();
    history_.push_back(rec);
  }

  model_->read_params(in);
  AdamOptimizer::read_state(in, model_->parameters());
}

std::unique_ptr<CycleTrainer> train(Corpus corpus, std::vector<LabeledPair> dev,
                                    Vocabulary vocab, TrainConfig cfg,
                                    const std::filesystem::path& run_dir) {
  auto trainer = std::make_unique<CycleTrainer>(std::move(corpus), std::move(dev),
                                                std::move(vocab), std::move(cfg), run_dir);
  trainer->train();
  return trainer;
}

}  // namespace fewgen
