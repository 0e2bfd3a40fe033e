#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fewgen/subword.hpp"
#include "json.hpp"

namespace fewgen {

enum class Side { data, text };

// Token/id bijection with pinned special ids, slot-marker tokens, per-side
// length caps and an optional subword backend. Ids are contiguous 0..|V|-1.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr const char* kPadTok = "<pad>";
  static constexpr const char* kBosTok = "<bos>";
  static constexpr const char* kEosTok = "<eos>";
  static constexpr const char* kUnkTok = "<unk>";

  Vocabulary();

  // Registers a token (already normalized) if absent; returns its id.
  int add_token(const std::string& token);
  int add_marker(const std::string& marker);  // "[slot name]"

  void set_subword(SubwordModel model);
  void set_max_lens(int max_data, int max_text);
  int max_len(Side side) const { return side == Side::data ? max_len_data_ : max_len_text_; }

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  std::size_t size() const { return id_to_token_.size(); }
  bool is_special(int id) const { return id >= kPad && id <= kUnk; }
  bool is_marker(int id) const;
  bool has_subword() const { return subword_.has_value(); }

  // Maps tokens to ids, lowercasing non-marker tokens, segmenting unknown
  // tokens when a subword model is installed, and truncating to the side cap.
  // A slot-marker left dangling by truncation is dropped with the rest.
  std::vector<int> encode(const std::vector<std::string>& tokens, Side side) const;

  // Inverse surface lookup; returns the literal token for every id so that
  // encode(decode(ids), side) == ids whenever ids contains no <unk>.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  // Merges subword pieces back into words; strips pad/bos/eos.
  std::vector<std::string> surface_tokens(const std::vector<int>& ids) const;

  std::uint64_t hash() const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<bool> marker_;
  std::optional<SubwordModel> subword_;
  int max_len_data_ = 100;
  int max_len_text_ = 100;
};

}  // namespace fewgen
