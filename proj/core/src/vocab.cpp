#include "fewgen/vocab.hpp"

#include "fewgen/tokenize.hpp"
#include "fewgen/util.hpp"

namespace fewgen {

Vocabulary::Vocabulary() {
  for (const char* tok : {kPadTok, kBosTok, kEosTok, kUnkTok}) add_token(tok);
}

int Vocabulary::add_token(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(token);
  marker_.push_back(false);
  token_to_id_[token] = id;
  return id;
}

int Vocabulary::add_marker(const std::string& marker) {
  int id = add_token(marker);
  marker_[id] = true;
  return id;
}

void Vocabulary::set_subword(SubwordModel model) {
  subword_ = std::move(model);
  for (const auto& piece : subword_->pieces()) add_token(piece);
}

void Vocabulary::set_max_lens(int max_data, int max_text) {
  max_len_data_ = max_data;
  max_len_text_ = max_text;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  return id_to_token_.at(static_cast<std::size_t>(id));
}

bool Vocabulary::is_marker(int id) const {
  return id >= 0 && id < static_cast<int>(marker_.size()) && marker_[id];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens, Side side) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto exact = token_to_id_.find(tok);
    if (exact != token_to_id_.end()) {
      ids.push_back(exact->second);
      continue;
    }
    std::string low = lower(tok);
    auto it = token_to_id_.find(low);
    if (it != token_to_id_.end()) {
      ids.push_back(it->second);
    } else if (subword_) {
      for (const auto& piece : subword_->segment_token(low)) ids.push_back(id(piece));
    } else {
      ids.push_back(kUnk);
    }
  }
  std::size_t cap = static_cast<std::size_t>(max_len(side));
  if (ids.size() > cap) {
    ids.resize(cap);
    while (!ids.empty() && is_marker(ids.back())) ids.pop_back();
  }
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token(id));
  return out;
}

std::vector<std::string> Vocabulary::surface_tokens(const std::vector<int>& ids) const {
  std::vector<std::string> kept;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    kept.push_back(token(id));
  }
  if (!subword_) return kept;
  // Piece streams may interleave markers (atomic) with subword pieces.
  std::vector<std::string> out;
  std::vector<std::string> pieces;
  auto flush = [&]() {
    if (pieces.empty()) return;
    for (auto& w : SubwordModel::merge_pieces(pieces)) out.push_back(std::move(w));
    pieces.clear();
  };
  for (auto& tok : kept) {
    int tid = id(tok);
    if (is_marker(tid) || is_special(tid)) {
      flush();
      out.push_back(tok);
    } else {
      pieces.push_back(tok);
    }
  }
  flush();
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& tok : id_to_token_) {
    h = fnv1a(tok, h);
    h = fnv1a("\x1f", h);
  }
  h = fnv1a(subword_ ? "subword" : "word", h);
  return h;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j;
  j["tokens"] = id_to_token_;
  std::vector<int> marker_ids;
  for (std::size_t i = 0; i < marker_.size(); ++i)
    if (marker_[i]) marker_ids.push_back(static_cast<int>(i));
  j["markers"] = marker_ids;
  j["max_len_data"] = max_len_data_;
  j["max_len_text"] = max_len_text_;
  if (subword_) j["subword"] = subword_->to_json();
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  auto tokens = j.at("tokens").get<std::vector<std::string>>();
  for (std::size_t i = 4; i < tokens.size(); ++i) v.add_token(tokens[i]);
  for (int id : j.at("markers").get<std::vector<int>>()) v.marker_[id] = true;
  v.max_len_data_ = j.at("max_len_data").get<int>();
  v.max_len_text_ = j.at("max_len_text").get<int>();
  if (j.contains("subword")) v.subword_ = SubwordModel::from_json(j["subword"]);
  return v;
}

}  // namespace fewgen
