#include "fewgen/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "fewgen/util.hpp"

namespace fewgen {

std::vector<std::string> linearize(const MeaningRepresentation& mr) {
  if (mr.empty()) throw std::invalid_argument("cannot linearize an empty MR");
  std::vector<std::string> out;
  auto push_value = [&out](const std::string& v) {
    for (auto& tok : word_tokenize(v)) out.push_back(std::move(tok));
  };
  if (mr.source_format == SourceFormat::E2E) {
    for (const auto& sv : mr.slots) {
      out.push_back("[" + sv.slot + "]");
      push_value(sv.value);
    }
  } else {
    for (const auto& t : mr.triples) {
      out.push_back("[subject]");
      push_value(t.subject);
      out.push_back("[relation]");
      push_value(t.relation);
      out.push_back("[object]");
      push_value(t.object);
    }
  }
  return out;
}

std::string linearize_str(const MeaningRepresentation& mr) {
  return join(linearize(mr), " ");
}

void ValueInventory::add(const std::string& slot, const std::string& value) {
  if (seen_[slot].insert(value).second) values_by_slot_[slot].push_back(value);
}

void ValueInventory::add_mr(const MeaningRepresentation& mr) {
  if (mr.source_format == SourceFormat::E2E) {
    for (const auto& sv : mr.slots) add(sv.slot, sv.value);
  } else {
    for (const auto& t : mr.triples) add(t.relation, t.object);
  }
}

const std::vector<std::string>& ValueInventory::values(const std::string& slot) const {
  static const std::vector<std::string> empty;
  auto it = values_by_slot_.find(slot);
  return it == values_by_slot_.end() ? empty : it->second;
}

std::vector<std::string> ValueInventory::slots() const {
  std::vector<std::string> out;
  for (const auto& [slot, _] : values_by_slot_) out.push_back(slot);
  return out;
}

std::size_t ValueInventory::total_values() const {
  std::size_t n = 0;
  for (const auto& [_, vals] : values_by_slot_) n += vals.size();
  return n;
}

ValueInventory build_value_inventory(const Corpus& corpus) {
  ValueInventory inv;
  for (const auto& mr : corpus.d_unlabeled) inv.add_mr(mr);
  for (const auto& pair : corpus.labeled) inv.add_mr(pair.mr);
  return inv;
}

namespace {

std::string combination_key(const MeaningRepresentation& mr) {
  std::vector<std::string> names;
  if (mr.source_format == SourceFormat::E2E) {
    for (const auto& sv : mr.slots) names.push_back(sv.slot);
  } else {
    for (const auto& t : mr.triples) names.push_back(t.relation);
  }
  std::sort(names.begin(), names.end());
  return join(names, "|");
}

std::vector<std::size_t> pick_labeled(const std::vector<LabeledPair>& pairs, std::size_t k,
                                      std::uint64_t seed, SplitStrategy strategy) {
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  if (strategy == SplitStrategy::uniform) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    return idx;
  }
  // Stratified: round-robin over slot-combination groups, groups in
  // deterministic key order, members shuffled within each group.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    groups[combination_key(pairs[i].mr)].push_back(i);
  for (auto& [_, members] : groups) std::shuffle(members.begin(), members.end(), rng);
  std::vector<std::size_t> chosen;
  std::size_t round = 0;
  while (chosen.size() < k) {
    bool any = false;
    for (auto& [_, members] : groups) {
      if (round < members.size()) {
        chosen.push_back(members[round]);
        any = true;
        if (chosen.size() == k) break;
      }
    }
    if (!any) break;
    ++round;
  }
  return chosen;
}

}  // namespace

Corpus few_shot_split(const std::vector<LabeledPair>& pairs, std::size_t k,
                      std::uint64_t seed, SplitStrategy strategy) {
  if (k == 0) throw DataError("few_shot_split requires k > 0");
  if (k > pairs.size())
    throw DataError("few_shot_split: k=" + std::to_string(k) + " exceeds corpus size " +
                    std::to_string(pairs.size()));
  auto chosen = pick_labeled(pairs, k, seed, strategy);
  std::vector<bool> is_labeled(pairs.size(), false);
  for (auto i : chosen) is_labeled[i] = true;

  Corpus corpus;
  for (auto i : chosen) corpus.labeled.push_back(pairs[i]);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!is_labeled[i]) corpus.d_unlabeled.push_back(pairs[i].mr);
  }
  return corpus;
}

nlohmann::json SplitManifest::to_json() const {
  return {{"seed", seed}, {"k", k}, {"labeled_ids", labeled_ids}, {"unlabeled_ids", unlabeled_ids}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.k = j.at("k").get<std::size_t>();
  m.labeled_ids = j.at("labeled_ids").get<std::vector<std::int64_t>>();
  m.unlabeled_ids = j.at("unlabeled_ids").get<std::vector<std::int64_t>>();
  return m;
}

SplitManifest make_manifest(const std::vector<LabeledPair>& pairs, const Corpus& split,
                            std::uint64_t seed) {
  SplitManifest m;
  m.seed = seed;
  m.k = split.labeled.size();
  std::set<std::int64_t> labeled_ids;
  for (const auto& p : split.labeled) {
    m.labeled_ids.push_back(p.id);
    labeled_ids.insert(p.id);
  }
  for (const auto& p : pairs) {
    if (!labeled_ids.count(p.id)) m.unlabeled_ids.push_back(p.id);
  }
  return m;
}

Vocabulary build_vocab(const Corpus& corpus, int max_len_data, int max_len_text,
                       std::size_t subword_vocab_size) {
  if (corpus.labeled.empty() && corpus.d_unlabeled.empty())
    throw DataError("build_vocab: empty corpus");

  bool webnlg = (!corpus.labeled.empty() &&
                 corpus.labeled.front().mr.source_format == SourceFormat::WebNLG) ||
                (!corpus.d_unlabeled.empty() &&
                 corpus.d_unlabeled.front().source_format == SourceFormat::WebNLG);

  Vocabulary vocab;
  vocab.set_max_lens(max_len_data, max_len_text);

  std::vector<std::vector<std::string>> data_seqs;
  for (const auto& mr : corpus.d_unlabeled) data_seqs.push_back(linearize(mr));
  for (const auto& pair : corpus.labeled) data_seqs.push_back(linearize(pair.mr));

  for (const auto& seq : data_seqs) {
    for (const auto& tok : seq) {
      if (tok.size() >= 2 && tok.front() == '[' && tok.back() == ']') vocab.add_marker(tok);
    }
  }

  if (!webnlg) {
    for (const auto& seq : data_seqs) {
      for (const auto& tok : seq) {
        if (!(tok.size() >= 2 && tok.front() == '[' && tok.back() == ']'))
          vocab.add_token(lower(tok));
      }
    }
    for (const auto& pair : corpus.labeled) {
      for (const auto& tok : pair.text.tokens) vocab.add_token(lower(tok));
    }
    for (const auto& t : corpus.t_augmented) {
      for (const auto& tok : t.tokens) vocab.add_token(lower(tok));
    }
    return vocab;
  }

  // WebNLG: unigram subword pieces trained on linearized data + labeled text,
  // markers excluded (they stay atomic).
  std::vector<std::string> sentences;
  for (const auto& seq : data_seqs) {
    std::vector<std::string> plain;
    for (const auto& tok : seq) {
      if (!(tok.size() >= 2 && tok.front() == '[' && tok.back() == ']'))
        plain.push_back(lower(tok));
    }
    if (!plain.empty()) sentences.push_back(join(plain, " "));
  }
  for (const auto& pair : corpus.labeled) {
    std::vector<std::string> toks;
    for (const auto& tok : pair.text.tokens) toks.push_back(lower(tok));
    if (!toks.empty()) sentences.push_back(join(toks, " "));
  }
  SubwordModel::TrainOptions opts;
  opts.vocab_size = subword_vocab_size;
  vocab.set_subword(SubwordModel::train(sentences, opts));
  return vocab;
}

nlohmann::json mr_to_json(const MeaningRepresentation& mr) {
  nlohmann::json j;
  if (mr.source_format == SourceFormat::E2E) {
    j["format"] = "e2e";
    j["units"] = nlohmann::json::array();
    for (const auto& sv : mr.slots) j["units"].push_back({sv.slot, sv.value});
  } else {
    j["format"] = "webnlg";
    j["units"] = nlohmann::json::array();
    for (const auto& t : mr.triples) j["units"].push_back({t.subject, t.relation, t.object});
  }
  return j;
}

MeaningRepresentation mr_from_json(const nlohmann::json& j) {
  MeaningRepresentation mr;
  std::string fmt = j.at("format").get<std::string>();
  if (fmt == "e2e") {
    mr.source_format = SourceFormat::E2E;
    for (const auto& u : j.at("units"))
      mr.slots.push_back({u.at(0).get<std::string>(), u.at(1).get<std::string>()});
  } else if (fmt == "webnlg") {
    mr.source_format = SourceFormat::WebNLG;
    for (const auto& u : j.at("units"))
      mr.triples.push_back(
          {u.at(0).get<std::string>(), u.at(1).get<std::string>(), u.at(2).get<std::string>()});
  } else {
    throw DataError("unknown MR format: " + fmt);
  }
  return mr;
}

nlohmann::json text_to_json(const TextSample& t) {
  return {{"raw", t.raw}, {"provenance", std::string(provenance_name(t.provenance()))}};
}

TextSample text_from_json(const nlohmann::json& j) {
  return TextSample(j.at("raw").get<std::string>(),
                    provenance_from_name(j.at("provenance").get<std::string>()));
}

void write_instances_jsonl(const std::filesystem::path& path,
                           const std::vector<ParsedInstance>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (const auto& row : rows) {
    nlohmann::json j;
    j["mr"] = mr_to_json(row.mr);
    j["text"] = row.text ? nlohmann::json(row.text->raw) : nlohmann::json(nullptr);
    out << j.dump() << "\n";
  }
}

std::vector<ParsedInstance> read_instances_jsonl(const std::filesystem::path& path) {
  std::vector<ParsedInstance> out;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + " line " + std::to_string(i + 1) + ": " + e.what());
    }
    ParsedInstance inst;
    inst.mr = mr_from_json(j.at("mr"));
    if (j.contains("text") && j["text"].is_string())
      inst.text = TextSample(j["text"].get<std::string>(), Provenance::annotated);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace fewgen
