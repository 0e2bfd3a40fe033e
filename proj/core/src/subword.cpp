#include "fewgen/subword.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "fewgen/util.hpp"

namespace fewgen {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kUnkCharPenalty = -20.0;

struct WordCount {
  std::vector<std::string> chars;  // codepoints, first prefixed with ▁
  double count = 0;
};

std::vector<WordCount> collect_words(const std::vector<std::string>& sentences) {
  std::unordered_map<std::string, double> counts;
  for (const auto& sent : sentences) {
    for (const auto& tok : split_ws(sent))
      counts[std::string(SubwordModel::kWordBoundary) + tok] += 1.0;
  }
  std::vector<WordCount> words;
  words.reserve(counts.size());
  for (const auto& [w, c] : counts) {
    WordCount wc;
    wc.chars = utf8_chars(w);
    // Re-glue the boundary mark onto the first real character so pieces
    // always start words with ▁x rather than a lone ▁.
    if (wc.chars.size() >= 2) {
      wc.chars[1] = wc.chars[0] + wc.chars[1];
      wc.chars.erase(wc.chars.begin());
    }
    wc.count = c;
    words.push_back(std::move(wc));
  }
  std::sort(words.begin(), words.end(),
            [](const WordCount& a, const WordCount& b) { return a.chars < b.chars; });
  return words;
}

std::string cat(const std::vector<std::string>& chars, std::size_t b, std::size_t len) {
  std::string s;
  for (std::size_t i = b; i < b + len; ++i) s += chars[i];
  return s;
}

// Lattice scores over one word for the current piece set. Returns expected
// piece counts (E step) or Viterbi counts, plus the word log-likelihood.
struct Lattice {
  // edges[i] = pieces starting at char i as (piece index, length)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges;
};

Lattice build_lattice(const std::vector<std::string>& chars,
                      const std::unordered_map<std::string, std::size_t>& index,
                      std::size_t max_len) {
  Lattice lat;
  lat.edges.resize(chars.size());
  for (std::size_t i = 0; i < chars.size(); ++i) {
    for (std::size_t len = 1; len <= max_len && i + len <= chars.size(); ++len) {
      auto it = index.find(cat(chars, i, len));
      if (it != index.end()) lat.edges[i].push_back({it->second, len});
    }
  }
  return lat;
}

double forward_backward(const Lattice& lat, const std::vector<double>& logp,
                        std::size_t n, double word_count,
                        std::vector<double>& expected) {
  std::vector<double> alpha(n + 1, kNegInf), beta(n + 1, kNegInf);
  alpha[0] = 0.0;
  auto logadd = [](double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == kNegInf) continue;
    for (auto [pi, len] : lat.edges[i])
      alpha[i + len] = logadd(alpha[i + len], alpha[i] + logp[pi]);
  }
  if (alpha[n] == kNegInf) return kNegInf;
  beta[n] = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    for (auto [pi, len] : lat.edges[i])
      beta[i] = logadd(beta[i], logp[pi] + beta[i + len]);
  }
  double z = alpha[n];
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == kNegInf) continue;
    for (auto [pi, len] : lat.edges[i]) {
      double post = alpha[i] + logp[pi] + beta[i + len] - z;
      if (post > -30.0) expected[pi] += word_count * std::exp(post);
    }
  }
  return z;
}

}  // namespace

void SubwordModel::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < pieces_.size(); ++i) index_[pieces_[i]] = i;
}

SubwordModel SubwordModel::train(const std::vector<std::string>& sentences,
                                 const TrainOptions& opts) {
  auto words = collect_words(sentences);
  if (words.empty()) throw DataError("subword training needs non-empty text");

  // Seed candidates: frequent substrings plus all single characters.
  std::unordered_map<std::string, double> substr_score;
  std::unordered_map<std::string, double> char_count;
  for (const auto& w : words) {
    std::size_t n = w.chars.size();
    for (std::size_t i = 0; i < n; ++i) {
      char_count[w.chars[i]] += w.count;
      for (std::size_t len = 2; len <= opts.max_piece_len && i + len <= n; ++len)
        substr_score[cat(w.chars, i, len)] += w.count * static_cast<double>(len);
    }
  }
  std::vector<std::pair<std::string, double>> cands(substr_score.begin(), substr_score.end());
  std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::size_t seed_target = std::max<std::size_t>(opts.vocab_size * opts.seed_factor, 64);
  if (cands.size() > seed_target) cands.resize(seed_target);

  SubwordModel model;
  for (const auto& [c, cnt] : char_count) {
    model.pieces_.push_back(c);
    model.log_probs_.push_back(std::log(cnt));
  }
  for (const auto& [s, score] : cands) {
    model.pieces_.push_back(s);
    model.log_probs_.push_back(std::log(score));
  }
  std::size_t n_chars = char_count.size();

  auto normalize = [&]() {
    double m = kNegInf;
    for (double lp : model.log_probs_) m = std::max(m, lp);
    double sum = 0;
    for (double lp : model.log_probs_) sum += std::exp(lp - m);
    double logz = m + std::log(sum);
    for (double& lp : model.log_probs_) lp -= logz;
  };
  normalize();
  model.rebuild_index();

  auto em_pass = [&]() {
    std::vector<double> expected(model.pieces_.size(), 0.0);
    for (const auto& w : words) {
      Lattice lat = build_lattice(w.chars, model.index_, opts.max_piece_len);
      forward_backward(lat, model.log_probs_, w.chars.size(), w.count, expected);
    }
    double total = 0;
    for (double e : expected) total += e;
    for (std::size_t i = 0; i < model.pieces_.size(); ++i) {
      // Single characters are never starved out: they guarantee coverage.
      double floor = i < n_chars ? 1e-6 : 0.0;
      model.log_probs_[i] = std::log(std::max(expected[i] / std::max(total, 1e-12), floor) + 1e-300);
    }
    normalize();
    return expected;
  };

  for (int it = 0; it < opts.em_iterations; ++it) em_pass();

  // Prune to the target size: repeatedly drop the weakest multi-char pieces,
  // then re-estimate.
  while (model.pieces_.size() > std::max(opts.vocab_size, n_chars)) {
    std::vector<std::size_t> order;
    for (std::size_t i = n_chars; i < model.pieces_.size(); ++i) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return model.log_probs_[a] < model.log_probs_[b];
    });
    std::size_t excess = model.pieces_.size() - std::max(opts.vocab_size, n_chars);
    std::size_t drop = std::max<std::size_t>(1, std::min(excess, order.size() / 5 + 1));
    drop = std::min(drop, excess);
    std::vector<bool> dead(model.pieces_.size(), false);
    for (std::size_t k = 0; k < drop && k < order.size(); ++k) dead[order[k]] = true;
    std::vector<std::string> keep_p;
    std::vector<double> keep_lp;
    for (std::size_t i = 0; i < model.pieces_.size(); ++i) {
      if (!dead[i]) {
        keep_p.push_back(model.pieces_[i]);
        keep_lp.push_back(model.log_probs_[i]);
      }
    }
    model.pieces_ = std::move(keep_p);
    model.log_probs_ = std::move(keep_lp);
    model.rebuild_index();
    em_pass();
  }
  return model;
}

std::vector<std::string> SubwordModel::segment_token(const std::string& token) const {
  std::string marked = std::string(kWordBoundary) + token;
  auto chars = utf8_chars(marked);
  if (chars.size() >= 2) {
    chars[1] = chars[0] + chars[1];
    chars.erase(chars.begin());
  }
  std::size_t n = chars.size();
  std::size_t max_len = 1;
  for (const auto& p : pieces_) max_len = std::max(max_len, utf8_chars(p).size());

  std::vector<double> best(n + 1, kNegInf);
  std::vector<std::pair<std::size_t, bool>> back(n + 1, {0, false});  // (prev pos, known piece)
  std::vector<std::string> chosen(n + 1);
  best[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (best[i] == kNegInf) continue;
    bool any = false;
    for (std::size_t len = 1; len <= max_len && i + len <= n; ++len) {
      std::string piece = cat(chars, i, len);
      auto it = index_.find(piece);
      if (it == index_.end()) continue;
      any = true;
      double score = best[i] + log_probs_[it->second];
      if (score > best[i + len]) {
        best[i + len] = score;
        back[i + len] = {i, true};
        chosen[i + len] = piece;
      }
    }
    if (!any || best[i + 1] == kNegInf) {
      double score = best[i] + kUnkCharPenalty;
      if (score > best[i + 1]) {
        best[i + 1] = score;
        back[i + 1] = {i, false};
        chosen[i + 1] = chars[i];
      }
    }
  }
  std::vector<std::string> pieces;
  for (std::size_t pos = n; pos > 0; pos = back[pos].first) pieces.push_back(chosen[pos]);
  std::reverse(pieces.begin(), pieces.end());
  return pieces;
}

std::vector<std::string> SubwordModel::merge_pieces(const std::vector<std::string>& pieces) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const auto& p : pieces) {
    if (starts_with(p, kWordBoundary)) {
      if (!cur.empty()) tokens.push_back(std::exchange(cur, {}));
      cur = p.substr(std::string(kWordBoundary).size());
    } else {
      cur += p;
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

nlohmann::json SubwordModel::to_json() const {
  nlohmann::json j;
  j["pieces"] = pieces_;
  j["log_probs"] = log_probs_;
  return j;
}

SubwordModel SubwordModel::from_json(const nlohmann::json& j) {
  SubwordModel m;
  m.pieces_ = j.at("pieces").get<std::vector<std::string>>();
  m.log_probs_ = j.at("log_probs").get<std::vector<double>>();
  m.rebuild_index();
  return m;
}

}  // namespace fewgen
