#include "fewgen/synthetic.hpp"

#include <algorithm>
#include <set>

#include "fewgen/e2e.hpp"
#include "fewgen/util.hpp"

namespace fewgen {

namespace {

const std::vector<std::string> kNames = {
    "Blue Spice",   "The Punter", "The Wrestlers",   "The Phoenix", "The Golden Curry",
    "Cocum",        "Strada",     "Bibimbap House",  "The Mill",    "Zizzi"};
const std::vector<std::string> kEatTypes = {"restaurant", "pub", "coffee shop"};
const std::vector<std::string> kFoods = {"Chinese", "English", "French",
                                         "Italian", "Japanese", "Indian"};
const std::vector<std::string> kPrices = {"cheap", "moderate", "high"};
const std::vector<std::string> kRatings = {"1 out of 5", "3 out of 5", "5 out of 5"};
const std::vector<std::string> kAreas = {"city centre", "riverside"};
const std::vector<std::string> kNear = {"Café Rouge",      "Café Sicilia", "Crowne Plaza Hotel",
                                        "The Bakers",      "The Rice Boat", "Raja Indian Cuisine"};

struct OptionalSlot {
  const char* slot;  // normalized name
  const std::vector<std::string>* values;
};

const OptionalSlot kOptional[] = {
    {"eat type", &kEatTypes},       {"food", &kFoods},   {"price range", &kPrices},
    {"customer rating", &kRatings}, {"area", &kAreas},   {"family friendly", nullptr},
    {"near", &kNear}};

std::string pick(const std::vector<std::string>& values, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, values.size() - 1);
  return values[d(rng)];
}

MeaningRepresentation sample_mr(Rng& rng, int n_slots) {
  n_slots = std::clamp(n_slots, 2, 7);
  MeaningRepresentation mr;
  mr.source_format = SourceFormat::E2E;
  mr.slots.push_back({"name", pick(kNames, rng)});

  std::uniform_int_distribution<int> count_dist(2, n_slots);
  int want = count_dist(rng);
  std::vector<int> order(n_slots);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<int> chosen(order.begin(), order.begin() + want);

  for (int i = 0; i < n_slots; ++i) {
    if (!chosen.count(i)) continue;
    const auto& opt = kOptional[i];
    if (opt.values == nullptr) {
      mr.slots.push_back({opt.slot, std::uniform_int_distribution<int>(0, 1)(rng) ? "yes" : "no"});
    } else {
      mr.slots.push_back({opt.slot, pick(*opt.values, rng)});
    }
  }
  return mr;
}

std::string value_of(const MeaningRepresentation& mr, const std::string& slot) {
  for (const auto& sv : mr.slots)
    if (sv.slot == slot) return sv.value;
  return {};
}

std::string realize(const MeaningRepresentation& mr, Rng& rng) {
  std::string name = value_of(mr, "name");
  std::string eat = value_of(mr, "eat type");
  std::string food = value_of(mr, "food");
  std::string price = value_of(mr, "price range");
  std::string rating = value_of(mr, "customer rating");
  std::string area = value_of(mr, "area");
  std::string family = value_of(mr, "family friendly");
  std::string near = value_of(mr, "near");

  int variant = std::uniform_int_distribution<int>(0, 1)(rng);
  std::string head = eat.empty() ? "place" : eat;
  std::string base = food.empty() ? (name + " is a " + head) : (name + " is a " + food + " " + head);

  std::vector<std::string> parts;
  if (variant == 0) {
    std::string first = base;
    if (!area.empty()) first += " in the " + area;
    if (!near.empty()) first += " near " + near;
    parts.push_back(first + " .");
    if (!price.empty()) parts.push_back("prices are " + price + " .");
    if (!rating.empty()) parts.push_back("it has a " + rating + " customer rating .");
    if (!family.empty())
      parts.push_back(family == "yes" ? "it is family friendly ." : "it is not family friendly .");
  } else {
    std::string first;
    if (!area.empty() && !near.empty())
      first = "located in the " + area + " near " + near + " , " + base;
    else if (!area.empty())
      first = "located in the " + area + " , " + base;
    else if (!near.empty())
      first = "located near " + near + " , " + base;
    else
      first = base;
    parts.push_back(first + " .");
    std::string second;
    if (!price.empty()) second = "it offers " + price + " prices";
    if (!rating.empty())
      second += (second.empty() ? "it has" : " and has") + std::string(" a ") + rating +
                " customer rating";
    if (!second.empty()) parts.push_back(second + " .");
    if (!family.empty())
      parts.push_back(family == "yes" ? "families are welcome ." : "it is not family friendly .");
  }
  return join(parts, " ");
}

}  // namespace

SyntheticDataset make_synthetic(std::size_t n, int n_slots, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_synthetic: n must be >= 1");
  Rng rng(derive_seed(seed, "synthetic"));
  std::vector<ParsedInstance> all;
  std::set<std::string> seen;
  std::size_t attempts = 0, max_attempts = n * 200 + 1000;
  while (all.size() < n && attempts++ < max_attempts) {
    MeaningRepresentation mr = sample_mr(rng, n_slots);
    if (!seen.insert(mr.key()).second) continue;
    ParsedInstance inst;
    inst.text = TextSample(realize(mr, rng), Provenance::annotated);
    inst.mr = std::move(mr);
    all.push_back(std::move(inst));
  }
  if (all.size() < n)
    throw DataError("make_synthetic: slot space too small for " + std::to_string(n) +
                    " distinct MRs at n_slots=" + std::to_string(n_slots));

  SyntheticDataset data;
  std::size_t n_dev = std::max<std::size_t>(1, n / 10);
  std::size_t n_test = std::max<std::size_t>(1, n / 10);
  if (n_dev + n_test >= n) {
    n_dev = n >= 3 ? 1 : 0;
    n_test = n >= 2 ? 1 : 0;
  }
  std::size_t n_train = n - n_dev - n_test;
  data.train.assign(all.begin(), all.begin() + n_train);
  data.dev.assign(all.begin() + n_train, all.begin() + n_train + n_dev);
  data.test.assign(all.begin() + n_train + n_dev, all.end());
  return data;
}

void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_e2e_csv(dir / "train.csv", data.train);
  write_e2e_csv(dir / "dev.csv", data.dev);
  write_e2e_csv(dir / "test.csv", data.test);
  write_file(dir / "generic.txt", join(generic_sentences(), "\n") + "\n");
}

GrammarGenerator::GrammarGenerator(int n_slots, std::uint64_t seed)
    : n_slots_(n_slots), seed_(seed) {}

MeaningRepresentation GrammarGenerator::mr_of_call(std::size_t i) const {
  Rng rng(derive_seed(seed_, "gen" + std::to_string(i)));
  return sample_mr(rng, n_slots_);
}

std::string GrammarGenerator::generate(const std::string& /*conditioning*/,
                                       const SamplingParams&) {
  std::size_t call = calls_++;
  Rng rng(derive_seed(seed_, "gen" + std::to_string(call)));
  MeaningRepresentation mr = sample_mr(rng, n_slots_);
  return realize(mr, rng);
}

std::vector<std::string> generic_sentences() {
  return {
      "the committee approved the annual budget after a short debate .",
      "heavy rain is expected across the northern region on sunday .",
      "the museum reopened its modern art wing to the public .",
      "engineers tested the new bridge for structural integrity .",
      "the orchestra performed a full symphony to a packed hall .",
      "local farmers reported a strong harvest despite the dry summer .",
      "the library extended its opening hours during the exam season .",
      "researchers published their findings in a peer reviewed journal .",
      "the council plans to resurface the main road next spring .",
      "volunteers cleaned the beach and collected twelve bags of litter .",
      "the airline announced new routes to three european cities .",
      "students organised a fundraiser for the local animal shelter .",
      "the factory switched half of its production to renewable energy .",
      "a rare comet will be visible from the southern hemisphere tonight .",
      "the university opened a new laboratory for marine biology .",
      "city officials unveiled plans for a second tram line .",
      "the novel topped the bestseller list for six consecutive weeks .",
      "archaeologists uncovered a roman mosaic beneath the old market square .",
      "the hospital recruited twenty new nurses over the winter .",
      "a software update fixed the longstanding battery drain issue .",
      "the choir rehearses every thursday evening in the church hall .",
      "wind turbines now supply a third of the island's electricity .",
      "the ferry service was suspended because of the approaching storm .",
      "economists expect inflation to ease over the coming quarter .",
      "the gallery acquired three paintings from a private collection .",
      "cyclists completed the charity ride in just under five hours .",
      "the bakery on the corner won a national pastry award .",
      "parliament debated the proposed changes to the housing act .",
      "the observatory recorded the brightest aurora in a decade .",
      "a new footpath now links the two villages along the river ."};
}

}  // namespace fewgen
