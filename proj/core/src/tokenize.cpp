#include "fewgen/tokenize.hpp"

#include "fewgen/util.hpp"

namespace fewgen {

namespace {

bool is_punct_cp(char32_t cp) {
  if (cp > 0x7F) return false;
  char c = static_cast<char>(cp);
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// Punctuation that attaches to the preceding token when detokenizing.
bool attaches_left(std::string_view tok) {
  return tok == "." || tok == "," || tok == "!" || tok == "?" || tok == ";" ||
         tok == ":" || tok == "%" || tok == ")" || tok == "]" || tok == "'";
}

bool attaches_right(std::string_view tok) { return tok == "(" || tok == "["; }

}  // namespace

std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    char32_t cp = utf8_next(s, i);
    if (cp < 0x80) {
      cp = static_cast<char32_t>(std::tolower(static_cast<int>(cp)));
    } else if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
      cp += 0x20;  // Latin-1 À..Þ -> à..þ
    }
    utf8_append(out, cp);
  }
  return out;
}

std::vector<std::string> word_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    char32_t cp = utf8_next(text, i);
    if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r') {
      if (!cur.empty()) tokens.push_back(std::exchange(cur, {}));
      continue;
    }
    if (is_punct_cp(cp)) {
      if (!cur.empty()) tokens.push_back(std::exchange(cur, {}));
      tokens.emplace_back(text.substr(start, i - start));
      continue;
    }
    cur.append(text.substr(start, i - start));
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool suppress_space = false;
  for (const auto& tok : tokens) {
    if (!out.empty() && !suppress_space && !attaches_left(tok)) out.push_back(' ');
    out.append(tok);
    suppress_space = attaches_right(tok);
  }
  return out;
}

bool is_punct_token(std::string_view tok) {
  if (tok.empty()) return false;
  std::size_t i = 0;
  while (i < tok.size()) {
    if (!is_punct_cp(utf8_next(tok, i))) return false;
  }
  return true;
}

}  // namespace fewgen
