#include "fewgen/stem.hpp"

#include <algorithm>

namespace fewgen {

namespace {

bool is_ascii_lower_word(const std::string& w) {
  return std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool is_cons(const std::string& w, std::size_t i) {
  char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
  if (c == 'y') return i == 0 ? true : !is_cons(w, i - 1);
  return true;
}

// Number of VC sequences in w[0..end).
int measure(const std::string& w, std::size_t end) {
  int m = 0;
  std::size_t i = 0;
  while (i < end && is_cons(w, i)) ++i;
  while (i < end) {
    while (i < end && !is_cons(w, i)) ++i;
    if (i >= end) break;
    ++m;
    while (i < end && is_cons(w, i)) ++i;
  }
  return m;
}

bool has_vowel(const std::string& w, std::size_t end) {
  for (std::size_t i = 0; i < end; ++i)
    if (!is_cons(w, i)) return true;
  return false;
}

bool double_cons(const std::string& w) {
  std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1);
}

// consonant-vowel-consonant ending, final consonant not w/x/y
bool cvc(const std::string& w) {
  std::size_t n = w.size();
  if (n < 3) return false;
  if (!is_cons(w, n - 3) || is_cons(w, n - 2) || !is_cons(w, n - 1)) return false;
  char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Replaces suffix when the stem measure condition holds.
bool replace_if(std::string& w, std::string_view suf, std::string_view rep, int min_m) {
  if (!ends(w, suf)) return false;
  std::size_t stem_len = w.size() - suf.size();
  if (measure(w, stem_len) <= min_m) return true;  // matched but condition failed
  w.resize(stem_len);
  w.append(rep);
  return true;
}

}  // namespace

std::string porter_stem(const std::string& word) {
  if (word.size() <= 2 || !is_ascii_lower_word(word)) return word;
  std::string w = word;

  // Step 1a
  if (ends(w, "sses")) w.resize(w.size() - 2);
  else if (ends(w, "ies")) w.resize(w.size() - 2);
  else if (!ends(w, "ss") && ends(w, "s")) w.resize(w.size() - 1);

  // Step 1b
  bool step1b_fix = false;
  if (ends(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.resize(w.size() - 1);
  } else if (ends(w, "ed") && has_vowel(w, w.size() - 2)) {
    w.resize(w.size() - 2);
    step1b_fix = true;
  } else if (ends(w, "ing") && has_vowel(w, w.size() - 3)) {
    w.resize(w.size() - 3);
    step1b_fix = true;
  }
  if (step1b_fix) {
    if (ends(w, "at") || ends(w, "bl") || ends(w, "iz")) {
      w.push_back('e');
    } else if (double_cons(w) && !ends(w, "l") && !ends(w, "s") && !ends(w, "z")) {
      w.resize(w.size() - 1);
    } else if (measure(w, w.size()) == 1 && cvc(w)) {
      w.push_back('e');
    }
  }

  // Step 1c
  if (ends(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';

  // Step 2
  static const std::pair<const char*, const char*> step2[] = {
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"}};
  for (const auto& [suf, rep] : step2) {
    if (replace_if(w, suf, rep, 0)) break;
  }

  // Step 3
  static const std::pair<const char*, const char*> step3[] = {
      {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
      {"ical", "ic"},  {"ful", ""},   {"ness", ""}};
  for (const auto& [suf, rep] : step3) {
    if (replace_if(w, suf, rep, 0)) break;
  }

  // Step 4
  static const char* step4[] = {"al",   "ance", "ence", "er",  "ic",  "able", "ible",
                                "ant",  "ement", "ment", "ent", "ou",  "ism",  "ate",
                                "iti",  "ous",  "ive",  "ize"};
  for (const char* suf : step4) {
    if (ends(w, suf)) {
      std::size_t stem_len = w.size() - std::string_view(suf).size();
      if (measure(w, stem_len) > 1) w.resize(stem_len);
      goto step4_done;
    }
  }
  if (ends(w, "ion")) {
    std::size_t stem_len = w.size() - 3;
    if (stem_len > 0 && (w[stem_len - 1] == 's' || w[stem_len - 1] == 't') &&
        measure(w, stem_len) > 1)
      w.resize(stem_len);
  }
step4_done:

  // Step 5a
  if (ends(w, "e")) {
    int m = measure(w, w.size() - 1);
    std::string without = w.substr(0, w.size() - 1);
    if (m > 1 || (m == 1 && !cvc(without))) w.resize(w.size() - 1);
  }
  // Step 5b
  if (measure(w, w.size()) > 1 && double_cons(w) && ends(w, "l")) w.resize(w.size() - 1);

  return w;
}

}  // namespace fewgen
