#include "fewgen/webnlg.hpp"

#include <fstream>

#include "fewgen/util.hpp"
#include "json.hpp"

namespace fewgen {

namespace {

std::string xml_unescape(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      auto end = s.find(';', i);
      if (end != std::string_view::npos && end - i <= 6) {
        std::string_view ent = s.substr(i + 1, end - i - 1);
        i = end + 1;
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else { out += '&'; out += ent; out += ';'; }
        continue;
      }
    }
    out += s[i++];
  }
  return out;
}

// Collects the text content of every <tag ...>...</tag> inside `scope`.
std::vector<std::string> collect_elements(std::string_view scope, std::string_view tag) {
  std::vector<std::string> out;
  std::string open = "<" + std::string(tag);
  std::string close = "</" + std::string(tag) + ">";
  std::size_t pos = 0;
  while (true) {
    std::size_t b = scope.find(open, pos);
    if (b == std::string_view::npos) break;
    std::size_t content_start = scope.find('>', b);
    if (content_start == std::string_view::npos) break;
    // Reject partial tag-name matches like <lexicalization.
    char after = scope[b + open.size()];
    if (after != '>' && after != ' ' && after != '\t' && after != '\n' && after != '/') {
      pos = b + open.size();
      continue;
    }
    std::size_t e = scope.find(close, content_start);
    if (e == std::string_view::npos) break;
    out.push_back(xml_unescape(trim(scope.substr(content_start + 1, e - content_start - 1))));
    pos = e + close.size();
  }
  return out;
}

std::string underscores_to_spaces(std::string s) {
  for (char& c : s) {
    if (c == '_') c = ' ';
  }
  return s;
}

Triple parse_triple(std::string_view raw, const std::string& where) {
  // "Subject | relation | Object"
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t bar = raw.find('|', pos);
    if (bar == std::string_view::npos) {
      parts.push_back(trim(raw.substr(pos)));
      break;
    }
    parts.push_back(trim(raw.substr(pos, bar - pos)));
    pos = bar + 1;
  }
  if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty())
    throw ParseError(where + ": triple needs 'subject | relation | object', got '" +
                     std::string(raw) + "'");
  return Triple{underscores_to_spaces(parts[0]), parts[1], underscores_to_spaces(parts[2])};
}

void check_triple_count(std::size_t n, const std::string& where) {
  if (n < 1 || n > 7)
    throw ParseError(where + ": WebNLG entry must have 1..7 triples, got " + std::to_string(n));
}

std::vector<ParsedInstance> parse_xml(const std::string& content, const std::filesystem::path& path) {
  std::vector<ParsedInstance> out;
  std::size_t pos = 0;
  int entry_no = 0;
  while (true) {
    std::size_t b = content.find("<entry", pos);
    if (b == std::string::npos) break;
    std::size_t e = content.find("</entry>", b);
    if (e == std::string::npos)
      throw ParseError(path.string() + ": unterminated <entry>");
    std::string_view scope(content.data() + b, e - b);
    ++entry_no;
    std::string where = path.filename().string() + " entry " + std::to_string(entry_no);

    // The benchmark ships original and modified triple sets; modified is the
    // one systems are evaluated on.
    std::vector<std::string> raw_triples;
    std::size_t mod = scope.find("<modifiedtripleset>");
    if (mod != std::string_view::npos) {
      std::size_t mod_end = scope.find("</modifiedtripleset>", mod);
      raw_triples = collect_elements(scope.substr(mod, mod_end - mod), "mtriple");
    } else {
      raw_triples = collect_elements(scope, "otriple");
    }
    if (raw_triples.empty()) throw ParseError(where + ": no triples");
    check_triple_count(raw_triples.size(), where);

    MeaningRepresentation mr;
    mr.source_format = SourceFormat::WebNLG;
    for (const auto& raw : raw_triples) mr.triples.push_back(parse_triple(raw, where));

    auto lexs = collect_elements(scope, "lex");
    if (lexs.empty()) {
      out.push_back({mr, std::nullopt});
    } else {
      for (const auto& lex : lexs)
        out.push_back({mr, TextSample(lex, Provenance::annotated)});
    }
    pos = e + 8;
  }
  if (out.empty()) throw ParseError(path.string() + ": no <entry> elements");
  return out;
}

std::vector<ParsedInstance> parse_jsonl(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  std::vector<ParsedInstance> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::string where = path.filename().string() + " line " + std::to_string(i + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.contains("triples") || !j["triples"].is_array())
      throw ParseError(where + ": missing 'triples' array");
    MeaningRepresentation mr;
    mr.source_format = SourceFormat::WebNLG;
    for (const auto& t : j["triples"]) {
      if (!t.is_array() || t.size() != 3)
        throw ParseError(where + ": each triple must be [subject, relation, object]");
      std::string s = trim(t[0].get<std::string>());
      std::string r = trim(t[1].get<std::string>());
      std::string o = trim(t[2].get<std::string>());
      if (s.empty() || r.empty() || o.empty())
        throw ParseError(where + ": triple with missing subject/relation/object");
      mr.triples.push_back({underscores_to_spaces(s), r, underscores_to_spaces(o)});
    }
    check_triple_count(mr.triples.size(), where);
    ParsedInstance inst{std::move(mr), std::nullopt};
    if (j.contains("text") && j["text"].is_string()) {
      std::string text = trim(j["text"].get<std::string>());
      if (!text.empty()) inst.text = TextSample(text, Provenance::annotated);
    }
    out.push_back(std::move(inst));
  }
  if (out.empty()) throw ParseError(path.string() + ": no instances");
  return out;
}

}  // namespace

std::vector<ParsedInstance> parse_webnlg(const std::filesystem::path& path) {
  std::string content = read_file(path);
  bool looks_xml = path.extension() == ".xml" ||
                   content.find("<benchmark") != std::string::npos ||
                   content.find("<entry") != std::string::npos;
  if (looks_xml) return parse_xml(content, path);
  return parse_jsonl(path);
}

void write_webnlg_jsonl(const std::filesystem::path& path,
                        const std::vector<ParsedInstance>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (const auto& row : rows) {
    nlohmann::json j;
    j["triples"] = nlohmann::json::array();
    for (const auto& t : row.mr.triples)
      j["triples"].push_back({t.subject, t.relation, t.object});
    if (row.text) j["text"] = row.text->raw;
    else j["text"] = nullptr;
    out << j.dump() << "\n";
  }
}

}  // namespace fewgen
