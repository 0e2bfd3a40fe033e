#include "fewgen/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fewgen {

namespace {

constexpr double kMaskBias = -1e9;

// One LSTM cell step; gate rows ordered [i; f; o; g].
std::pair<int, int> lstm_cell(Graph& g, const ModelState::LstmLayer& layer, int x,
                              int h_prev, int c_prev) {
  int H = static_cast<int>(layer.U->value.cols());
  int gates = g.add_colvec(g.add(g.matmul(g.param(layer.W), x), g.matmul(g.param(layer.U), h_prev)),
                           g.param(layer.b));
  int gi = g.sigmoid(g.rows(gates, 0, H));
  int gf = g.sigmoid(g.rows(gates, H, H));
  int go = g.sigmoid(g.rows(gates, 2 * H, H));
  int gu = g.tanh(g.rows(gates, 3 * H, H));
  int c = g.add(g.cmult(gf, c_prev), g.cmult(gi, gu));
  int h = g.cmult(go, g.tanh(c));
  return {h, c};
}

Vec logsoftmax_col(const Mat& logits) {
  double m = logits.col(0).maxCoeff();
  double lse = m + std::log((logits.col(0).array() - m).exp().sum());
  return logits.col(0).array() - lse;
}

}  // namespace

EncodedBatch Seq2Seq::encode_batch(Graph& g, const std::vector<std::vector<int>>& seqs,
                                   Side in_side, Rng* dropout_rng) const {
  if (seqs.empty()) throw std::invalid_argument("encode_batch: empty batch");
  for (const auto& s : seqs)
    if (s.empty()) throw std::invalid_argument("encode_batch: empty input sequence");

  const auto& cfg = model_->config();
  const auto& enc = model_->encoder(in_side);
  const int B = static_cast<int>(seqs.size());
  int T = 0;
  for (const auto& s : seqs) T = std::max(T, static_cast<int>(s.size()));

  EncodedBatch out;
  out.batch = B;
  out.steps = T;
  out.mask = Mat::Zero(T, B);
  for (int j = 0; j < B; ++j)
    for (int t = 0; t < static_cast<int>(seqs[j].size()); ++t) out.mask(t, j) = 1.0;

  double p = g.training() ? cfg.dropout : 0.0;
  int H = cfg.hidden_dim;
  std::vector<int> h(enc.layers.size()), c(enc.layers.size());
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    h[l] = g.input(Mat::Zero(H, B));
    c[l] = g.input(Mat::Zero(H, B));
  }

  for (int t = 0; t < T; ++t) {
    std::vector<int> ids(B, Vocabulary::kPad);
    for (int j = 0; j < B; ++j)
      if (t < static_cast<int>(seqs[j].size())) ids[j] = seqs[j][t];
    int x = g.lookup(enc.embed, ids);
    if (dropout_rng) x = g.dropout(x, p, *dropout_rng);
    for (std::size_t l = 0; l < enc.layers.size(); ++l) {
      auto [nh, nc] = lstm_cell(g, enc.layers[l], x, h[l], c[l]);
      h[l] = nh;
      c[l] = nc;
      x = nh;
      if (dropout_rng && l + 1 < enc.layers.size()) x = g.dropout(x, p, *dropout_rng);
    }
    out.step_nodes.push_back(h.back());
  }

  // Masked mean over positions.
  int sum = -1;
  for (int t = 0; t < T; ++t) {
    int weighted = g.colscale(out.step_nodes[t], g.input(out.mask.row(t)));
    sum = sum < 0 ? weighted : g.add(sum, weighted);
  }
  Mat inv_len(1, B);
  for (int j = 0; j < B; ++j) inv_len(0, j) = 1.0 / out.mask.col(j).sum();
  out.pooled = g.colscale(sum, g.input(inv_len));
  return out;
}

// Bilinear attention over encoder steps; returns the context node (H x B).
static int attend(Graph& g, const ModelState::Decoder& dec, const EncodedBatch& enc,
                  int dec_h, int attn_bias) {
  int q = g.matmul(g.param(dec.attn_W), dec_h);
  int scores = -1;
  for (int s = 0; s < enc.steps; ++s) {
    int sc = g.coldot(enc.step_nodes[s], q);
    scores = scores < 0 ? sc : g.vconcat(scores, sc);
  }
  if (attn_bias >= 0) scores = g.add(scores, attn_bias);
  int alpha = g.softmax_cols(scores);
  int ctx = -1;
  for (int s = 0; s < enc.steps; ++s) {
    int w = g.colscale(enc.step_nodes[s], g.rows(alpha, s, 1));
    ctx = ctx < 0 ? w : g.add(ctx, w);
  }
  return ctx;
}

// One decoder step: stacked LSTM, attention on the top layer, combined
// projection, output logits (V x B).
static int decoder_step(Graph& g, const ModelState& model, const ModelState::Decoder& dec,
                        const EncodedBatch& enc, int attn_bias, Seq2Seq::DecStep* st,
                        int x, double p, Rng* dropout_rng) {
  if (dropout_rng) x = g.dropout(x, p, *dropout_rng);
  for (std::size_t l = 0; l < dec.layers.size(); ++l) {
    auto [nh, nc] = lstm_cell(g, dec.layers[l], x, st->h[l], st->c[l]);
    st->h[l] = nh;
    st->c[l] = nc;
    x = nh;
    if (dropout_rng && l + 1 < dec.layers.size()) x = g.dropout(x, p, *dropout_rng);
  }
  int ctx = attend(g, dec, enc, st->h.back(), attn_bias);
  int comb = g.tanh(g.add_colvec(g.matmul(g.param(dec.comb_W), g.vconcat(st->h.back(), ctx)),
                                 g.param(dec.comb_b)));
  if (dropout_rng) comb = g.dropout(comb, p, *dropout_rng);
  int logits;
  if (model.config().tie_embeddings) {
    logits = g.add_colvec(g.matmul_trans_a(g.param(dec.embed), comb), g.param(dec.out_b));
  } else {
    logits = g.add_colvec(g.matmul(g.param(dec.out_W), comb), g.param(dec.out_b));
  }
  return logits;
}

static int make_attn_bias(Graph& g, const EncodedBatch& enc) {
  Mat bias = Mat::Zero(enc.steps, enc.batch);
  bool any = false;
  for (int t = 0; t < enc.steps; ++t)
    for (int j = 0; j < enc.batch; ++j)
      if (enc.mask(t, j) == 0.0) {
        bias(t, j) = kMaskBias;
        any = true;
      }
  return any ? g.input(bias) : -1;
}

LossBreakdown Seq2Seq::teacher_forced_loss(Graph& g, const EncodedBatch& enc,
                                           const std::vector<std::vector<int>>& targets,
                                           Side out_side, Rng* dropout_rng) const {
  if (static_cast<int>(targets.size()) != enc.batch)
    throw std::invalid_argument("teacher_forced_loss: batch size mismatch");
  const auto& cfg = model_->config();
  const auto& dec = model_->decoder(out_side);
  const int B = enc.batch;
  int T = 0;
  for (const auto& t : targets) T = std::max(T, static_cast<int>(t.size()) + 1);  // + eos

  double p = g.training() ? cfg.dropout : 0.0;
  int H = cfg.hidden_dim;
  DecStep st;
  for (std::size_t l = 0; l < dec.layers.size(); ++l) {
    st.h.push_back(g.input(Mat::Zero(H, B)));
    st.c.push_back(g.input(Mat::Zero(H, B)));
  }
  int attn_bias = make_attn_bias(g, enc);
  int start = g.matmul(g.param(dec.start), g.input(Mat::Ones(1, B)));

  long n_tokens = 0;
  int total = -1;
  for (int t = 0; t < T; ++t) {
    int x;
    if (t == 0) {
      x = start;
    } else {
      std::vector<int> prev(B, Vocabulary::kPad);
      for (int j = 0; j < B; ++j)
        if (t - 1 < static_cast<int>(targets[j].size())) prev[j] = targets[j][t - 1];
      x = g.lookup(dec.embed, prev);
    }
    int logits = decoder_step(g, *model_, dec, enc, attn_bias, &st, x, p, dropout_rng);
    std::vector<int> tgt(B, -1);
    Vec w = Vec::Zero(B);
    for (int j = 0; j < B; ++j) {
      int len = static_cast<int>(targets[j].size());
      if (t < len) {
        tgt[j] = targets[j][t];
      } else if (t == len) {
        tgt[j] = Vocabulary::kEos;
      } else {
        continue;
      }
      w(j) = 1.0;
      ++n_tokens;
    }
    int ce = g.cross_entropy_cols(logits, std::move(tgt), std::move(w));
    total = total < 0 ? ce : g.add(total, ce);
  }
  LossBreakdown out;
  out.node = g.scalar_scale(total, 1.0 / static_cast<double>(std::max<long>(1, n_tokens)));
  out.n_tokens = n_tokens;
  return out;
}

EncodeResult Seq2Seq::encode(const std::vector<int>& ids, Side in_side) const {
  if (ids.empty()) throw std::invalid_argument("encode: empty input");
  Graph g(false);
  EncodedBatch enc = encode_batch(g, {ids}, in_side, nullptr);
  EncodeResult out;
  out.side = in_side;
  for (int t = 0; t < enc.steps; ++t) out.states.push_back(g.value(enc.step_nodes[t]).col(0));
  out.pooled.vector = g.value(enc.pooled).col(0);
  return out;
}

namespace {

struct Hyp {
  Seq2Seq::DecStep st;
  double score = 0.0;
  std::vector<int> tokens;
  int last = -1;  // -1 = use start vector
};

struct Finished {
  double score;
  std::vector<int> tokens;
};

bool better(const Finished& a, const Finished& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

std::vector<int> Seq2Seq::decode(const EncodeResult& enc_result, Side out_side,
                                 DecodeMode mode, int beam_size,
                                 std::optional<int> max_len_opt) const {
  if (beam_size < 1) throw std::invalid_argument("decode: beam_size must be >= 1");
  const auto& cfg = model_->config();
  const auto& dec = model_->decoder(out_side);
  int max_len = max_len_opt.value_or(cfg.max_decode_len);
  int H = cfg.hidden_dim;

  Graph g(false);
  EncodedBatch enc;
  enc.batch = 1;
  enc.steps = static_cast<int>(enc_result.states.size());
  enc.mask = Mat::Ones(enc.steps, 1);
  for (const auto& s : enc_result.states) enc.step_nodes.push_back(g.input(s));

  auto step_logits = [&](Hyp& hyp) {
    int x = hyp.last < 0 ? g.param(dec.start) : g.lookup(dec.embed, {hyp.last});
    return decoder_step(g, *model_, dec, enc, -1, &hyp.st, x, 0.0, nullptr);
  };

  auto run_greedy = [&]() {
    Hyp hyp;
    for (int l = 0; l < static_cast<int>(dec.layers.size()); ++l) {
      hyp.st.h.push_back(g.input(Mat::Zero(H, 1)));
      hyp.st.c.push_back(g.input(Mat::Zero(H, 1)));
    }
    for (int t = 0; t < max_len; ++t) {
      Vec lp = logsoftmax_col(g.value(step_logits(hyp)));
      int best = 0;
      lp.maxCoeff(&best);
      hyp.score += lp(best);
      if (best == Vocabulary::kEos) return Finished{hyp.score, hyp.tokens};
      hyp.tokens.push_back(best);
      hyp.last = best;
    }
    // Out of length: close the hypothesis with an explicit eos emission so
    // scores stay comparable across finished hypotheses.
    Vec lp = logsoftmax_col(g.value(step_logits(hyp)));
    return Finished{hyp.score + lp(Vocabulary::kEos), hyp.tokens};
  };

  Finished greedy = run_greedy();
  if (mode == DecodeMode::greedy || beam_size == 1) return greedy.tokens;

  std::vector<Finished> pool{greedy};
  std::vector<Hyp> live(1);
  for (int l = 0; l < static_cast<int>(dec.layers.size()); ++l) {
    live[0].st.h.push_back(g.input(Mat::Zero(H, 1)));
    live[0].st.c.push_back(g.input(Mat::Zero(H, 1)));
  }

  for (int t = 0; t < max_len && !live.empty(); ++t) {
    struct Cand {
      double score;
      int token;
      std::size_t from;
      Seq2Seq::DecStep st;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      Vec lp = logsoftmax_col(g.value(step_logits(live[i])));
      std::vector<int> order(lp.size());
      std::iota(order.begin(), order.end(), 0);
      int take = std::min<int>(beam_size + 1, static_cast<int>(lp.size()));
      std::partial_sort(order.begin(), order.begin() + take, order.end(),
                        [&](int a, int b) { return lp(a) != lp(b) ? lp(a) > lp(b) : a < b; });
      for (int k = 0; k < take; ++k)
        cands.push_back({live[i].score + lp(order[k]), order[k], i, live[i].st});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.token < b.token;
    });
    std::vector<Hyp> next;
    for (const auto& cand : cands) {
      if (cand.token == Vocabulary::kEos) {
        pool.push_back({cand.score, live[cand.from].tokens});
        continue;
      }
      if (static_cast<int>(next.size()) >= beam_size) continue;
      Hyp h;
      h.st = cand.st;
      h.score = cand.score;
      h.tokens = live[cand.from].tokens;
      h.tokens.push_back(cand.token);
      h.last = cand.token;
      next.push_back(std::move(h));
    }
    live = std::move(next);
  }
  for (auto& hyp : live) {
    Vec lp = logsoftmax_col(g.value(step_logits(hyp)));
    pool.push_back({hyp.score + lp(Vocabulary::kEos), hyp.tokens});
  }
  auto best = std::min_element(pool.begin(), pool.end(),
                               [](const Finished& a, const Finished& b) { return better(a, b); });
  return best->tokens;
}

std::vector<int> Seq2Seq::generate(const std::vector<int>& src, Side in_side, Side out_side,
                                   DecodeMode mode, int beam_size) const {
  return decode(encode(src, in_side), out_side, mode, beam_size);
}

std::vector<int> Seq2Seq::sample_decode(const EncodeResult& enc_result, Side out_side,
                                        Rng& rng, std::optional<int> max_len_opt) const {
  const auto& cfg = model_->config();
  const auto& dec = model_->decoder(out_side);
  int max_len = max_len_opt.value_or(cfg.max_decode_len);
  int H = cfg.hidden_dim;

  Graph g(false);
  EncodedBatch enc;
  enc.batch = 1;
  enc.steps = static_cast<int>(enc_result.states.size());
  enc.mask = Mat::Ones(enc.steps, 1);
  for (const auto& s : enc_result.states) enc.step_nodes.push_back(g.input(s));

  DecStep st;
  for (int l = 0; l < static_cast<int>(dec.layers.size()); ++l) {
    st.h.push_back(g.input(Mat::Zero(H, 1)));
    st.c.push_back(g.input(Mat::Zero(H, 1)));
  }
  std::vector<int> tokens;
  int last = -1;
  for (int t = 0; t < max_len; ++t) {
    int x = last < 0 ? g.param(dec.start) : g.lookup(dec.embed, {last});
    int logits = decoder_step(g, *model_, dec, enc, -1, &st, x, 0.0, nullptr);
    Vec lp = logsoftmax_col(g.value(logits));
    Vec probs = lp.array().exp();
    std::discrete_distribution<int> pick(probs.data(), probs.data() + probs.size());
    int chosen = pick(rng);
    if (chosen == Vocabulary::kEos) break;
    tokens.push_back(chosen);
    last = chosen;
  }
  return tokens;
}

double Seq2Seq::batch_nll(const std::vector<std::vector<int>>& src, Side in_side,
                          const std::vector<std::vector<int>>& tgt, Side out_side) const {
  Graph g(false);
  EncodedBatch enc = encode_batch(g, src, in_side, nullptr);
  LossBreakdown loss = teacher_forced_loss(g, enc, tgt, out_side, nullptr);
  return g.scalar_value(loss.node);
}

double Seq2Seq::sequence_logprob(const EncodeResult& enc_result, Side out_side,
                                 const std::vector<int>& output) const {
  const auto& dec = model_->decoder(out_side);
  int H = model_->config().hidden_dim;
  Graph g(false);
  EncodedBatch enc;
  enc.batch = 1;
  enc.steps = static_cast<int>(enc_result.states.size());
  enc.mask = Mat::Ones(enc.steps, 1);
  for (const auto& s : enc_result.states) enc.step_nodes.push_back(g.input(s));

  DecStep st;
  for (int l = 0; l < static_cast<int>(dec.layers.size()); ++l) {
    st.h.push_back(g.input(Mat::Zero(H, 1)));
    st.c.push_back(g.input(Mat::Zero(H, 1)));
  }
  double total = 0.0;
  for (std::size_t t = 0; t <= output.size(); ++t) {
    int x = t == 0 ? g.param(dec.start) : g.lookup(dec.embed, {output[t - 1]});
    int logits = decoder_step(g, *model_, dec, enc, -1, &st, x, 0.0, nullptr);
    Vec lp = logsoftmax_col(g.value(logits));
    int target = t < output.size() ? output[t] : Vocabulary::kEos;
    total += lp(target);
  }
  return total;
}

double nll_from_logits(const std::vector<Mat>& step_logits,
                       const std::vector<std::vector<int>>& targets, int pad_id) {
  if (step_logits.empty()) throw std::invalid_argument("nll_from_logits: no logits");
  long n = 0;
  double total = 0.0;
  for (std::size_t t = 0; t < step_logits.size(); ++t) {
    const Mat& logits = step_logits[t];
    if (logits.cols() != static_cast<Eigen::Index>(targets.size()))
      throw std::invalid_argument("nll_from_logits: batch size mismatch");
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (t >= targets[j].size()) continue;
      int target = targets[j][t];
      if (target == pad_id) continue;
      if (target < 0 || target >= logits.rows())
        throw std::invalid_argument("nll_from_logits: target out of range");
      double m = logits.col(j).maxCoeff();
      double lse = m + std::log((logits.col(j).array() - m).exp().sum());
      total += lse - logits(target, j);
      ++n;
    }
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace fewgen
