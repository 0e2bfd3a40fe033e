#include "fewgen/rep_match.hpp"

#include <cmath>
#include <fstream>

#include "fewgen/corpus.hpp"

namespace fewgen {

double cosine(const Representation& a, const Representation& b) {
  if (a.vector.size() != b.vector.size())
    throw std::invalid_argument("cosine: dimension mismatch");
  double na = a.vector.norm();
  double nb = b.vector.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
  return a.vector.dot(b.vector) / (na * nb);
}

std::vector<PseudoPair> mine_pairs(const std::vector<TextSample>& texts,
                                   const std::vector<MeaningRepresentation>& data_pool,
                                   const Vocabulary& vocab, const RepresentationFn& encode,
                                   const MineOptions& opts) {
  if (texts.empty() || data_pool.empty())
    throw std::invalid_argument("mine_pairs: empty text or data pool");

  std::vector<Representation> pool_reps;
  pool_reps.reserve(data_pool.size());
  for (const auto& mr : data_pool)
    pool_reps.push_back(encode(vocab.encode(linearize(mr), Side::data), Side::data));

  std::vector<PseudoPair> out;
  for (const auto& text : texts) {
    auto ids = vocab.encode(text.tokens, Side::text);
    if (ids.empty()) continue;
    Representation rep = encode(ids, Side::text);
    double best = -2.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < pool_reps.size(); ++i) {
      double sim = cosine(pool_reps[i], rep);
      if (sim > best) {
        best = sim;
        best_idx = i;
      }
    }
    if (best > opts.epsilon) {
      PseudoPair pair;
      pair.mr = data_pool[best_idx];
      pair.text = text;
      pair.similarity = best;
      pair.mined_at_step = opts.step;
      pair.pool_index = best_idx;
      out.push_back(std::move(pair));
    }
  }
  return out;
}

void append_pseudo_pairs_jsonl(const std::filesystem::path& path,
                               const std::vector<PseudoPair>& pairs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (const auto& p : pairs) {
    nlohmann::json j;
    j["step"] = p.mined_at_step;
    j["similarity"] = p.similarity;
    j["mr"] = mr_to_json(p.mr);
    j["text"] = p.text.raw;
    j["text_provenance"] = std::string(provenance_name(p.text.provenance()));
    out << j.dump() << "\n";
  }
}

}  // namespace fewgen
