#include "fewgen/types.hpp"

#include "fewgen/util.hpp"

namespace fewgen {

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::annotated: return "annotated";
    case Provenance::info_aug: return "info_aug";
    case Provenance::lm_aug: return "lm_aug";
    case Provenance::random_aug: return "random_aug";
  }
  return "annotated";
}

Provenance provenance_from_name(std::string_view name) {
  if (name == "annotated") return Provenance::annotated;
  if (name == "info_aug") return Provenance::info_aug;
  if (name == "lm_aug") return Provenance::lm_aug;
  if (name == "random_aug") return Provenance::random_aug;
  throw DataError("unknown provenance: " + std::string(name));
}

std::string MeaningRepresentation::key() const {
  std::string k;
  if (source_format == SourceFormat::E2E) {
    for (const auto& sv : slots) {
      k += sv.slot;
      k += '\x1f';
      k += sv.value;
      k += '\x1e';
    }
  } else {
    for (const auto& t : triples) {
      k += t.subject;
      k += '\x1f';
      k += t.relation;
      k += '\x1f';
      k += t.object;
      k += '\x1e';
    }
  }
  return k;
}

}  // namespace fewgen
