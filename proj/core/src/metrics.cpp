#include "fewgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fewgen/stem.hpp"
#include "fewgen/tokenize.hpp"
#include "fewgen/util.hpp"

namespace fewgen {

namespace {

void check_aligned(std::size_t h, std::size_t r, const char* what) {
  if (h != r)
    throw std::invalid_argument(std::string(what) + ": hypothesis/reference count mismatch");
}

std::vector<std::vector<TokenSeq>> dedupe_refs(const std::vector<std::vector<TokenSeq>>& refs,
                                               const char* what) {
  std::vector<std::vector<TokenSeq>> out;
  out.reserve(refs.size());
  for (const auto& group : refs) {
    if (group.empty())
      throw std::invalid_argument(std::string(what) + ": instance without references");
    std::vector<TokenSeq> uniq;
    for (const auto& r : group) {
      if (std::find(uniq.begin(), uniq.end(), r) == uniq.end()) uniq.push_back(r);
    }
    out.push_back(std::move(uniq));
  }
  return out;
}

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const TokenSeq& tokens, int n) {
  std::map<Ngram, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    counts[Ngram(tokens.begin() + i, tokens.begin() + i + n)] += 1;
  return counts;
}

}  // namespace

TokenSeq metric_tokenize(const std::string& text) {
  TokenSeq out;
  for (auto& tok : word_tokenize(text)) out.push_back(lower(tok));
  return out;
}

double bleu4(const std::vector<TokenSeq>& hypotheses,
             const std::vector<std::vector<TokenSeq>>& references) {
  check_aligned(hypotheses.size(), references.size(), "bleu4");
  auto refs = dedupe_refs(references, "bleu4");

  double matched[4] = {0, 0, 0, 0};
  double total[4] = {0, 0, 0, 0};
  long hyp_len = 0, ref_len = 0;

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const TokenSeq& hyp = hypotheses[i];
    hyp_len += static_cast<long>(hyp.size());

    long closest_diff = std::numeric_limits<long>::max();
    long closest_len = std::numeric_limits<long>::max();
    for (const auto& ref : refs[i]) {
      long len = static_cast<long>(ref.size());
      long diff = std::labs(len - static_cast<long>(hyp.size()));
      if (diff < closest_diff) {
        closest_diff = diff;
        closest_len = len;
      } else if (diff == closest_diff) {
        closest_len = std::min(closest_len, len);
      }
    }
    ref_len += closest_len;

    for (int n = 1; n <= 4; ++n) {
      auto hyp_ngrams = ngram_counts(hyp, n);
      std::map<Ngram, int> max_ref;
      for (const auto& ref : refs[i]) {
        for (const auto& [ng, c] : ngram_counts(ref, n))
          max_ref[ng] = std::max(max_ref[ng], c);
      }
      for (const auto& [ng, c] : hyp_ngrams) {
        total[n - 1] += c;
        auto it = max_ref.find(ng);
        if (it != max_ref.end()) matched[n - 1] += std::min(c, it->second);
      }
    }
  }

  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  double bp = 1.0;
  if (hyp_len <= 0) return 0.0;
  if (hyp_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

double nist(const std::vector<TokenSeq>& hypotheses,
            const std::vector<std::vector<TokenSeq>>& references) {
  check_aligned(hypotheses.size(), references.size(), "nist");
  auto refs = dedupe_refs(references, "nist");
  constexpr int kMaxN = 5;

  // Information weights from the whole reference corpus.
  std::map<Ngram, double> ref_count;
  double total_ref_words = 0;
  for (const auto& group : refs) {
    for (const auto& ref : group) {
      total_ref_words += static_cast<double>(ref.size());
      for (int n = 1; n <= kMaxN; ++n)
        for (const auto& [ng, c] : ngram_counts(ref, n)) ref_count[ng] += c;
    }
  }
  auto info = [&](const Ngram& ng) {
    auto it = ref_count.find(ng);
    if (it == ref_count.end()) return 0.0;
    double denom = it->second;
    double numer;
    if (ng.size() == 1) {
      numer = total_ref_words;
    } else {
      Ngram parent(ng.begin(), ng.end() - 1);
      auto pit = ref_count.find(parent);
      numer = pit == ref_count.end() ? 0.0 : pit->second;
    }
    if (numer <= 0 || denom <= 0) return 0.0;
    double v = std::log2(numer / denom);
    return v > 0 ? v : 0.0;
  };

  double info_sum[kMaxN] = {0};
  double total_hyp[kMaxN] = {0};
  double hyp_len = 0, avg_ref_len = 0;

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const TokenSeq& hyp = hypotheses[i];
    hyp_len += static_cast<double>(hyp.size());
    double seg_ref = 0;
    for (const auto& ref : refs[i]) seg_ref += static_cast<double>(ref.size());
    avg_ref_len += seg_ref / static_cast<double>(refs[i].size());

    for (int n = 1; n <= kMaxN; ++n) {
      std::map<Ngram, int> max_ref;
      for (const auto& ref : refs[i])
        for (const auto& [ng, c] : ngram_counts(ref, n))
          max_ref[ng] = std::max(max_ref[ng], c);
      for (const auto& [ng, c] : ngram_counts(hyp, n)) {
        total_hyp[n - 1] += c;
        auto it = max_ref.find(ng);
        if (it != max_ref.end())
          info_sum[n - 1] += info(ng) * std::min(c, it->second);
      }
    }
  }

  double score = 0.0;
  for (int n = 0; n < kMaxN; ++n) {
    if (total_hyp[n] > 0) score += info_sum[n] / total_hyp[n];
  }
  double bp = 1.0;
  if (hyp_len <= 0) return 0.0;
  double ratio = hyp_len / avg_ref_len;
  if (ratio < 1.0) {
    double beta = std::log(2.0) / (std::log(1.5) * std::log(1.5));
    double lr = std::log(ratio);
    bp = std::exp(-beta * lr * lr);
  }
  return score * bp;
}

namespace {

struct MeteorStats {
  double matches = 0;
  double hyp_len = 0;
  double ref_len = 0;
  double chunks = 0;
};

double meteor_score_from(const MeteorStats& s) {
  if (s.matches == 0 || s.hyp_len == 0 || s.ref_len == 0) return 0.0;
  double p = s.matches / s.hyp_len;
  double r = s.matches / s.ref_len;
  double f = (p * r) / (0.9 * p + 0.1 * r);
  double frag = s.chunks / s.matches;
  double penalty = 0.5 * frag * frag * frag;
  return f * (1.0 - penalty);
}

// Two-stage alignment (exact, then stem) pairing occurrences left to right.
MeteorStats meteor_align(const TokenSeq& hyp, const TokenSeq& ref) {
  MeteorStats s;
  s.hyp_len = static_cast<double>(hyp.size());
  s.ref_len = static_cast<double>(ref.size());
  std::vector<int> hyp_to_ref(hyp.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);

  auto run_stage = [&](auto key) {
    std::map<std::string, std::vector<std::size_t>> ref_where;
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!ref_used[j]) ref_where[key(ref[j])].push_back(j);
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (hyp_to_ref[i] >= 0) continue;
      auto it = ref_where.find(key(hyp[i]));
      if (it == ref_where.end()) continue;
      auto& slots = it->second;
      while (!slots.empty() && ref_used[slots.front()]) slots.erase(slots.begin());
      if (slots.empty()) continue;
      hyp_to_ref[i] = static_cast<int>(slots.front());
      ref_used[slots.front()] = true;
      slots.erase(slots.begin());
    }
  };
  run_stage([](const std::string& w) { return w; });
  run_stage([](const std::string& w) { return porter_stem(w); });

  int prev_h = -2, prev_r = -2;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (hyp_to_ref[i] < 0) continue;
    s.matches += 1;
    if (static_cast<int>(i) != prev_h + 1 || hyp_to_ref[i] != prev_r + 1) s.chunks += 1;
    prev_h = static_cast<int>(i);
    prev_r = hyp_to_ref[i];
  }
  return s;
}

}  // namespace

double meteor(const std::vector<TokenSeq>& hypotheses,
              const std::vector<std::vector<TokenSeq>>& references) {
  check_aligned(hypotheses.size(), references.size(), "meteor");
  auto refs = dedupe_refs(references, "meteor");
  MeteorStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    MeteorStats best;
    double best_score = -1.0;
    for (const auto& ref : refs[i]) {
      MeteorStats s = meteor_align(hypotheses[i], ref);
      double sc = meteor_score_from(s);
      if (sc > best_score) {
        best_score = sc;
        best = s;
      }
    }
    total.matches += best.matches;
    total.hyp_len += best.hyp_len;
    total.ref_len += best.ref_len;
    total.chunks += best.chunks;
  }
  return 100.0 * meteor_score_from(total);
}

namespace {

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_l(const std::vector<TokenSeq>& hypotheses,
               const std::vector<std::vector<TokenSeq>>& references) {
  check_aligned(hypotheses.size(), references.size(), "rouge_l");
  auto refs = dedupe_refs(references, "rouge_l");
  constexpr double kBeta = 1.2;
  double sum = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    double best = 0.0;
    for (const auto& ref : refs[i]) {
      if (hypotheses[i].empty() || ref.empty()) continue;
      double lcs = static_cast<double>(lcs_length(hypotheses[i], ref));
      double prec = lcs / static_cast<double>(hypotheses[i].size());
      double rec = lcs / static_cast<double>(ref.size());
      if (prec + rec > 0) {
        double f = ((1 + kBeta * kBeta) * prec * rec) / (rec + kBeta * kBeta * prec);
        best = std::max(best, f);
      }
    }
    sum += best;
  }
  return hypotheses.empty() ? 0.0 : 100.0 * sum / static_cast<double>(hypotheses.size());
}

namespace {

std::set<std::string> value_token_set(const std::vector<MeaningRepresentation>& inputs) {
  std::set<std::string> out;
  for (const auto& mr : inputs) {
    auto add_value = [&out](const std::string& v) {
      for (const auto& tok : metric_tokenize(v)) out.insert(tok);
    };
    if (mr.source_format == SourceFormat::E2E) {
      for (const auto& sv : mr.slots) add_value(sv.value);
    } else {
      for (const auto& t : mr.triples) {
        add_value(t.subject);
        add_value(t.object);
      }
    }
  }
  return out;
}

}  // namespace

long count_noncopied_tokens(const std::vector<TextSample>& decoded,
                            const std::vector<MeaningRepresentation>& inputs) {
  auto copied = value_token_set(inputs);
  std::set<std::string> types;
  for (const auto& t : decoded)
    for (const auto& tok : t.tokens) types.insert(lower(tok));
  long n = 0;
  for (const auto& tok : types)
    if (!copied.count(tok)) ++n;
  return n;
}

long count_unique_combinations(const std::vector<TextSample>& decoded,
                               const std::vector<MeaningRepresentation>& inputs) {
  if (decoded.size() != inputs.size())
    throw std::invalid_argument("count_unique_combinations: misaligned inputs");
  std::set<std::string> combos;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    std::string text = lower(decoded[i].raw);
    std::vector<std::string> realized;
    auto realized_in_text = [&text](const std::string& value) {
      return text.find(lower(value)) != std::string::npos;
    };
    if (inputs[i].source_format == SourceFormat::E2E) {
      for (const auto& sv : inputs[i].slots)
        if (realized_in_text(sv.value)) realized.push_back(sv.slot);
    } else {
      for (const auto& t : inputs[i].triples)
        if (realized_in_text(t.object)) realized.push_back(t.relation);
    }
    std::sort(realized.begin(), realized.end());
    combos.insert(join(realized, "|"));
  }
  return static_cast<long>(combos.size());
}

DiversityDelta diversity_stats(const std::vector<TextSample>& decoded,
                               const std::vector<MeaningRepresentation>& inputs,
                               const std::vector<TextSample>& baseline_decoded) {
  if (decoded.size() != inputs.size() || baseline_decoded.size() != inputs.size())
    throw std::invalid_argument("diversity_stats: misaligned inputs");
  DiversityDelta d;
  d.unique_noncopied_tokens =
      count_noncopied_tokens(decoded, inputs) - count_noncopied_tokens(baseline_decoded, inputs);
  d.unique_combinations = count_unique_combinations(decoded, inputs) -
                          count_unique_combinations(baseline_decoded, inputs);
  return d;
}

void pool_references_by_mr(const std::vector<MeaningRepresentation>& mrs,
                           const std::vector<TokenSeq>& hyps,
                           const std::vector<TokenSeq>& refs,
                           std::vector<TokenSeq>* pooled_hyps,
                           std::vector<std::vector<TokenSeq>>* pooled_refs) {
  if (mrs.size() != hyps.size() || mrs.size() != refs.size())
    throw std::invalid_argument("pool_references_by_mr: misaligned inputs");
  std::map<std::string, std::vector<TokenSeq>> refs_by_key;
  for (std::size_t i = 0; i < mrs.size(); ++i) refs_by_key[mrs[i].key()].push_back(refs[i]);
  pooled_hyps->clear();
  pooled_refs->clear();
  std::set<std::string> emitted;
  for (std::size_t i = 0; i < mrs.size(); ++i) {
    std::string key = mrs[i].key();
    if (!emitted.insert(key).second) continue;
    pooled_hyps->push_back(hyps[i]);
    pooled_refs->push_back(refs_by_key[key]);
  }
}

nlohmann::json EvalReport::to_json() const {
  return {{"bleu4", bleu4},
          {"nist", nist},
          {"meteor", meteor},
          {"rouge_l", rouge_l},
          {"n_instances", n_instances},
          {"decode_mode", decode_mode},
          {"unique_noncopied_tokens", unique_noncopied_tokens},
          {"unique_combinations", unique_combinations}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.bleu4 = j.at("bleu4").get<double>();
  r.nist = j.at("nist").get<double>();
  r.meteor = j.at("meteor").get<double>();
  r.rouge_l = j.at("rouge_l").get<double>();
  r.n_instances = j.at("n_instances").get<std::size_t>();
  r.decode_mode = j.value("decode_mode", "greedy");
  r.unique_noncopied_tokens = j.value("unique_noncopied_tokens", 0L);
  r.unique_combinations = j.value("unique_combinations", 0L);
  return r;
}

}  // namespace fewgen
