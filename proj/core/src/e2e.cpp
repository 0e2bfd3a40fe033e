#include "fewgen/e2e.hpp"

#include <fstream>
#include <set>

#include "fewgen/util.hpp"

namespace fewgen {

namespace {

// RFC4180-ish CSV: quoted fields, "" escapes, no embedded newlines.
std::vector<std::string> split_csv_row(const std::string& line, std::size_t row_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::exchange(cur, {}));
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("row " + std::to_string(row_no) + ": unterminated quote");
  fields.push_back(cur);
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string normalize_slot_name(std::string_view slot) {
  std::string out;
  char prev = '\0';
  for (char c : slot) {
    if (std::isupper(static_cast<unsigned char>(c))) {
      if (prev != '\0' && prev != ' ' &&
          !std::isupper(static_cast<unsigned char>(prev)))
        out.push_back(' ');
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      out.push_back(c);
    }
    prev = c;
  }
  return trim(out);
}

std::vector<SlotValue> parse_e2e_mr(std::string_view mr, std::string_view where) {
  std::vector<SlotValue> slots;
  std::size_t i = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(std::string(where) + ": " + what);
  };
  while (i < mr.size()) {
    while (i < mr.size() && (mr[i] == ' ' || mr[i] == ',')) ++i;
    if (i >= mr.size()) break;
    std::size_t open = mr.find('[', i);
    if (open == std::string_view::npos) fail("expected 'slot[value]' item near '" + std::string(mr.substr(i)) + "'");
    std::size_t close = mr.find(']', open + 1);
    if (close == std::string_view::npos) fail("missing ']' in MR");
    std::string slot = normalize_slot_name(trim(mr.substr(i, open - i)));
    std::string value = trim(mr.substr(open + 1, close - open - 1));
    if (slot.empty()) fail("empty slot name");
    if (value.empty()) fail("empty value for slot '" + slot + "'");
    slots.push_back({std::move(slot), std::move(value)});
    i = close + 1;
  }
  if (slots.empty()) fail("empty MR");
  std::set<std::string> seen;
  for (const auto& sv : slots)
    if (!seen.insert(sv.slot).second) fail("duplicate slot '" + sv.slot + "'");
  return slots;
}

std::vector<ParsedInstance> parse_e2e(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty file");

  auto header = split_csv_row(lines[0], 1);
  int mr_col = -1, ref_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string name = lower(trim(header[c]));
    if (name == "mr") mr_col = static_cast<int>(c);
    if (name == "ref") ref_col = static_cast<int>(c);
  }
  if (mr_col < 0) throw ParseError(path.string() + ": no 'mr' column in header");

  std::vector<ParsedInstance> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (trim(lines[r]).empty()) continue;
    auto fields = split_csv_row(lines[r], r + 1);
    std::string where = path.filename().string() + " row " + std::to_string(r + 1);
    if (mr_col >= static_cast<int>(fields.size()) || trim(fields[mr_col]).empty())
      throw ParseError(where + ": empty MR");
    ParsedInstance inst;
    inst.mr.source_format = SourceFormat::E2E;
    inst.mr.slots = parse_e2e_mr(fields[mr_col], where);
    if (inst.mr.slots.size() < 3 || inst.mr.slots.size() > 8)
      throw ParseError(where + ": E2E MR must have 3..8 slots, got " +
                       std::to_string(inst.mr.slots.size()));
    if (ref_col >= 0 && ref_col < static_cast<int>(fields.size())) {
      std::string ref = trim(fields[ref_col]);
      if (!ref.empty()) inst.text = TextSample(ref, Provenance::annotated);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::string e2e_mr_to_string(const MeaningRepresentation& mr) {
  std::string s;
  for (std::size_t i = 0; i < mr.slots.size(); ++i) {
    if (i) s += ", ";
    s += mr.slots[i].slot + "[" + mr.slots[i].value + "]";
  }
  return s;
}

void write_e2e_csv(const std::filesystem::path& path, const std::vector<ParsedInstance>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "mr,ref\n";
  for (const auto& row : rows) {
    out << csv_escape(e2e_mr_to_string(row.mr)) << ","
        << csv_escape(row.text ? row.text->raw : "") << "\n";
  }
}

}  // namespace fewgen
