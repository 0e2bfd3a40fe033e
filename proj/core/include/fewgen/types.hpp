#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fewgen/tokenize.hpp"

namespace fewgen {

enum class SourceFormat { E2E, WebNLG };

enum class Provenance { annotated, info_aug, lm_aug, random_aug };

std::string_view provenance_name(Provenance p);
Provenance provenance_from_name(std::string_view name);

struct SlotValue {
  std::string slot;   // normalized: lowercased, camelCase split ("eat type")
  std::string value;  // surface form as read from the source
};

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
};

// One structured input d: ordered slot-value pairs (E2E) or RDF triples
// (WebNLG). Unit order is preserved from the source file.
struct MeaningRepresentation {
  SourceFormat source_format = SourceFormat::E2E;
  std::vector<SlotValue> slots;   // E2E
  std::vector<Triple> triples;    // WebNLG

  std::size_t unit_count() const {
    return source_format == SourceFormat::E2E ? slots.size() : triples.size();
  }
  bool empty() const { return unit_count() == 0; }

  // Canonical string form, used for equality, dedup and pool bookkeeping.
  std::string key() const;

  bool operator==(const MeaningRepresentation& o) const { return key() == o.key(); }
};

// One natural-language sample t. Provenance is fixed at construction and
// governs which training objectives may consume the sample.
class TextSample {
 public:
  TextSample() = default;
  TextSample(std::string raw_text, Provenance prov)
      : tokens(word_tokenize(raw_text)), raw(std::move(raw_text)), provenance_(prov) {}

  std::vector<std::string> tokens;
  std::string raw;

  Provenance provenance() const { return provenance_; }

 private:
  Provenance provenance_ = Provenance::annotated;
};

struct LabeledPair {
  MeaningRepresentation mr;
  TextSample text;
  std::int64_t id = -1;  // index in the source parse, kept for manifests
};

// One parsed dataset row: an MR with an optional reference text.
struct ParsedInstance {
  MeaningRepresentation mr;
  std::optional<TextSample> text;
};

// The data universe of one experiment: unlabeled D_U, labeled (D_L, T_L)
// (later extended with augmented pairs), and unpaired augmented text T'.
struct Corpus {
  std::vector<MeaningRepresentation> d_unlabeled;
  std::vector<LabeledPair> labeled;
  std::vector<TextSample> t_augmented;
};

}  // namespace fewgen
