#include "fewgen/augment.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include "fewgen/tokenize.hpp"
#include "fewgen/util.hpp"
#include "fewgen/vocab.hpp"

namespace fewgen {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

// Case-insensitive whole-word occurrences of `value` in `text`. lower() is
// length-preserving for the Latin-1 range, so byte offsets line up.
std::vector<std::pair<std::size_t, std::size_t>> find_spans(const std::string& text,
                                                            const std::string& value) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::string lt = lower(text), lv = lower(value);
  if (lv.empty() || lt.size() != text.size()) return spans;
  std::size_t pos = 0;
  while ((pos = lt.find(lv, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(static_cast<unsigned char>(lt[pos - 1]));
    std::size_t end = pos + lv.size();
    bool right_ok = end >= lt.size() || !is_word_char(static_cast<unsigned char>(lt[end]));
    if (left_ok && right_ok) spans.push_back({pos, end});
    pos += 1;
  }
  return spans;
}

bool is_binary_slot(const std::vector<std::string>& inventory_values) {
  static const std::set<std::string> binary{"yes", "no", "true", "false"};
  if (inventory_values.empty()) return false;
  for (const auto& v : inventory_values)
    if (!binary.count(lower(v))) return false;
  return true;
}

struct ReplaceableSlot {
  std::size_t unit_index;                                 // by slot position in the MR
  std::string slot;
  std::string value;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::vector<std::string> alternatives;
};

std::string apply_spans(const std::string& text,
                        std::vector<std::tuple<std::size_t, std::size_t, std::string>> edits) {
  std::sort(edits.begin(), edits.end(),
            [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
  std::string out = text;
  for (const auto& [begin, end, repl] : edits) out.replace(begin, end - begin, repl);
  return out;
}

}  // namespace

std::vector<AugmentedPair> info_augment(const LabeledPair& pair, const ValueInventory& inventory,
                                        int cap, std::uint64_t seed) {
  if (cap < 0) throw std::invalid_argument("info_augment: cap must be >= 0");
  if (cap == 0) return {};
  if (pair.mr.source_format != SourceFormat::E2E && pair.mr.source_format != SourceFormat::WebNLG)
    return {};

  // Collect candidate slots: value copied into the text, alternatives exist.
  std::vector<ReplaceableSlot> slots;
  auto consider = [&](std::size_t unit_index, const std::string& slot, const std::string& value) {
    const auto& inv = inventory.values(slot);
    if (is_binary_slot(inv)) return;
    std::vector<std::string> alts;
    for (const auto& v : inv)
      if (lower(v) != lower(value)) alts.push_back(v);
    if (alts.empty()) return;
    auto spans = find_spans(pair.text.raw, value);
    if (spans.empty()) return;
    slots.push_back({unit_index, slot, value, std::move(spans), std::move(alts)});
  };
  if (pair.mr.source_format == SourceFormat::E2E) {
    for (std::size_t i = 0; i < pair.mr.slots.size(); ++i)
      consider(i, pair.mr.slots[i].slot, pair.mr.slots[i].value);
  } else {
    for (std::size_t i = 0; i < pair.mr.triples.size(); ++i)
      consider(i, pair.mr.triples[i].relation, pair.mr.triples[i].object);
  }
  if (slots.empty()) return {};

  // Longest value first claims overlapping spans.
  std::sort(slots.begin(), slots.end(), [](const ReplaceableSlot& a, const ReplaceableSlot& b) {
    if (a.value.size() != b.value.size()) return a.value.size() > b.value.size();
    return a.unit_index < b.unit_index;
  });
  std::vector<std::pair<std::size_t, std::size_t>> claimed;
  auto overlaps = [&claimed](std::size_t b, std::size_t e) {
    for (const auto& [cb, ce] : claimed)
      if (b < ce && cb < e) return true;
    return false;
  };
  for (auto& rs : slots) {
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (const auto& [b, e] : rs.spans) {
      if (!overlaps(b, e)) {
        kept.push_back({b, e});
        claimed.push_back({b, e});
      }
    }
    rs.spans = std::move(kept);
  }
  slots.erase(std::remove_if(slots.begin(), slots.end(),
                             [](const ReplaceableSlot& rs) { return rs.spans.empty(); }),
              slots.end());
  if (slots.empty()) return {};
  std::sort(slots.begin(), slots.end(), [](const ReplaceableSlot& a, const ReplaceableSlot& b) {
    return a.unit_index < b.unit_index;
  });

  // Joint combination space: per slot, keep (choice -1) or one alternative.
  double space = 1.0;
  for (const auto& rs : slots) space *= 1.0 + static_cast<double>(rs.alternatives.size());
  space -= 1.0;  // all-keep excluded
  Rng rng(seed);

  std::vector<std::vector<int>> combos;  // per slot: -1 keep, else alt index
  constexpr double kEnumerationBound = 50000.0;
  if (space <= kEnumerationBound) {
    std::vector<int> cur(slots.size(), -1);
    while (true) {
      std::size_t i = 0;
      while (i < slots.size()) {
        if (cur[i] + 1 < static_cast<int>(slots[i].alternatives.size())) {
          ++cur[i];
          break;
        }
        cur[i] = -1;
        ++i;
      }
      if (i == slots.size()) break;
      combos.push_back(cur);
    }
    std::shuffle(combos.begin(), combos.end(), rng);
  } else {
    std::set<std::vector<int>> seen;
    std::size_t want = static_cast<std::size_t>(cap) * 4;
    std::size_t attempts = want * 16;
    while (seen.size() < want && attempts-- > 0) {
      std::vector<int> cur(slots.size());
      bool any = false;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        std::uniform_int_distribution<int> pick(-1,
                                                static_cast<int>(slots[i].alternatives.size()) - 1);
        cur[i] = pick(rng);
        any |= cur[i] >= 0;
      }
      if (any) seen.insert(std::move(cur));
    }
    combos.assign(seen.begin(), seen.end());
    std::shuffle(combos.begin(), combos.end(), rng);
  }

  std::vector<AugmentedPair> out;
  std::set<std::string> seen_texts{pair.text.raw};
  for (const auto& combo : combos) {
    if (static_cast<int>(out.size()) >= cap) break;
    std::vector<std::tuple<std::size_t, std::size_t, std::string>> edits;
    AugmentedPair ap;
    ap.mr = pair.mr;
    ap.source_pair_id = pair.id;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (combo[i] < 0) continue;
      const auto& rs = slots[i];
      const std::string& new_value = rs.alternatives[combo[i]];
      for (const auto& [b, e] : rs.spans) edits.emplace_back(b, e, new_value);
      if (ap.mr.source_format == SourceFormat::E2E)
        ap.mr.slots[rs.unit_index].value = new_value;
      else
        ap.mr.triples[rs.unit_index].object = new_value;
      ap.replaced.push_back({rs.slot, rs.value, new_value});
    }
    if (edits.empty()) continue;
    std::string new_text = apply_spans(pair.text.raw, std::move(edits));
    if (!seen_texts.insert(new_text).second) continue;
    ap.text = TextSample(new_text, Provenance::info_aug);
    out.push_back(std::move(ap));
  }
  return out;
}

namespace {

bool is_special_word(const std::string& w) {
  return w == Vocabulary::kPadTok || w == Vocabulary::kBosTok || w == Vocabulary::kEosTok ||
         w == Vocabulary::kUnkTok;
}

std::set<std::string> coverage_types(const std::string& raw) {
  std::set<std::string> out;
  for (const auto& w : split_ws(raw)) {
    if (is_special_word(w)) continue;
    std::string lw = lower(w);
    for (const auto& tok : word_tokenize(lw)) {
      if (!is_punct_token(tok) && !is_special_word(tok)) out.insert(tok);
    }
  }
  return out;
}

bool passes_pruning(const std::string& sentence, int min_words) {
  auto words = split_ws(sentence);
  if (static_cast<int>(words.size()) < min_words) return false;
  for (const auto& w : words) {
    if (!is_special_word(w)) return true;
  }
  return false;
}

}  // namespace

std::vector<TextSample> lm_augment(const std::vector<TextSample>& seeds,
                                   GeneratorInterface& generator, const LmAugConfig& cfg) {
  if (seeds.empty()) throw std::invalid_argument("lm_augment: empty seed set");
  if (cfg.min_words < 1 || cfg.max_iterations < 1 || cfg.top_k < 1)
    throw std::invalid_argument("lm_augment: invalid config");

  std::set<std::string> wanted;
  for (const auto& s : seeds) {
    auto types = coverage_types(s.raw);
    wanted.insert(types.begin(), types.end());
  }
  std::set<std::string> covered;
  auto fully_covered = [&]() {
    for (const auto& t : wanted)
      if (!covered.count(t)) return false;
    return true;
  };

  std::vector<TextSample> retained;
  std::size_t n_chains = cfg.global_chain ? 1 : seeds.size();
  for (std::size_t chain = 0; chain < n_chains && !fully_covered(); ++chain) {
    std::string conditioning = seeds[chain].raw;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
      SamplingParams params;
      params.top_k = cfg.top_k;
      params.max_new_words = cfg.max_new_words;
      params.seed = derive_seed(cfg.seed, "chain" + std::to_string(chain) + "|" +
                                              std::to_string(iter));
      std::string out;
      try {
        out = generator.generate(conditioning, params);
      } catch (const std::exception& e) {
        std::string msg = "lm_augment: chain " + std::to_string(chain) +
                          " aborted at iteration " + std::to_string(iter) + ": " + e.what();
        if (cfg.on_error) cfg.on_error(msg);
        else std::cerr << msg << "\n";
        break;
      }
      if (passes_pruning(out, cfg.min_words)) {
        retained.emplace_back(out, Provenance::lm_aug);
        auto types = coverage_types(out);
        covered.insert(types.begin(), types.end());
        if (fully_covered()) return retained;
      }
      if (!out.empty()) conditioning = out;
    }
  }
  return retained;
}

std::vector<TextSample> random_augment(const std::vector<TextSample>& /*source*/,
                                       const std::filesystem::path& generic_text,
                                       std::size_t n, std::uint64_t seed) {
  auto lines = read_lines(generic_text);
  std::vector<std::string> sentences;
  for (auto& line : lines) {
    std::string t = trim(line);
    if (!t.empty()) sentences.push_back(std::move(t));
  }
  if (sentences.empty()) throw DataError("random_augment: empty file " + generic_text.string());
  if (n > sentences.size())
    throw DataError("random_augment: n=" + std::to_string(n) + " exceeds file line count " +
                    std::to_string(sentences.size()));
  std::vector<std::size_t> idx(sentences.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<TextSample> out;
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(sentences[idx[i]], Provenance::random_aug);
  return out;
}

void write_augmented_jsonl(const std::filesystem::path& path, const AugmentedFile& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (const auto& ap : content.pairs) {
    nlohmann::json j;
    j["provenance"] = std::string(provenance_name(ap.text.provenance()));
    j["mr"] = mr_to_json(ap.mr);
    j["text"] = ap.text.raw;
    j["source_pair_id"] = ap.source_pair_id;
    j["replaced"] = nlohmann::json::array();
    for (const auto& r : ap.replaced) j["replaced"].push_back({r.slot, r.old_value, r.new_value});
    out << j.dump() << "\n";
  }
  for (const auto& t : content.texts) {
    nlohmann::json j;
    j["provenance"] = std::string(provenance_name(t.provenance()));
    j["mr"] = nullptr;
    j["text"] = t.raw;
    j["source_pair_id"] = nullptr;
    j["replaced"] = nullptr;
    out << j.dump() << "\n";
  }
}

AugmentedFile read_augmented_jsonl(const std::filesystem::path& path) {
  AugmentedFile out;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(lines[i]);
    Provenance prov = provenance_from_name(j.at("provenance").get<std::string>());
    if (j.contains("mr") && !j["mr"].is_null()) {
      AugmentedPair ap;
      ap.mr = mr_from_json(j["mr"]);
      ap.text = TextSample(j.at("text").get<std::string>(), prov);
      if (j.contains("source_pair_id") && !j["source_pair_id"].is_null())
        ap.source_pair_id = j["source_pair_id"].get<std::int64_t>();
      if (j.contains("replaced") && j["replaced"].is_array()) {
        for (const auto& r : j["replaced"])
          ap.replaced.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>(),
                                 r.at(2).get<std::string>()});
      }
      out.pairs.push_back(std::move(ap));
    } else {
      out.texts.emplace_back(j.at("text").get<std::string>(), prov);
    }
  }
  return out;
}

}  // namespace fewgen
