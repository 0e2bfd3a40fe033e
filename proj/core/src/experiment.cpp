#include "fewgen/experiment.hpp"

#include <cmath>
#include <iostream>
#include <set>

#include "fewgen/e2e.hpp"
#include "fewgen/lm.hpp"
#include "fewgen/synthetic.hpp"
#include "fewgen/webnlg.hpp"

namespace fewgen {

void ExperimentSpec::validate() const {
  if (dataset != "synthetic" && dataset != "e2e" && dataset != "webnlg")
    throw ConfigError("dataset must be synthetic|e2e|webnlg");
  if (dataset != "synthetic" && train_path.empty())
    throw ConfigError("train_path required for dataset " + dataset);
  bool frac = annotation_fraction > 0.0;
  if (frac && (annotation_fraction > 1.0))
    throw ConfigError("annotation_fraction must be in (0,1]");
  if (!frac && k == 0) throw ConfigError("either annotation_fraction or k must be set");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (generator_mode != "builtin" && generator_mode != "external" && generator_mode != "grammar")
    throw ConfigError("generator_mode must be builtin|external|grammar");
  train.validate();
}

nlohmann::json ExperimentSpec::to_json() const {
  return {{"dataset", dataset},
          {"train_path", train_path},
          {"dev_path", dev_path},
          {"test_path", test_path},
          {"synth_n", synth_n},
          {"synth_slots", synth_slots},
          {"synth_seed", synth_seed},
          {"annotation_fraction", annotation_fraction},
          {"k", k},
          {"split_seed", split_seed},
          {"split_strategy",
           split_strategy == SplitStrategy::uniform ? "uniform" : "stratified"},
          {"seeds", seeds},
          {"train", train.to_json()},
          {"augmentation",
           {{"info", augmentation.info},
            {"lm", augmentation.lm},
            {"random", augmentation.random},
            {"reference_upper_bound", augmentation.reference_upper_bound}}},
          {"info_cap", info_cap},
          {"lm",
           {{"top_k", lm_cfg.top_k},
            {"min_words", lm_cfg.min_words},
            {"max_iterations", lm_cfg.max_iterations},
            {"global_chain", lm_cfg.global_chain},
            {"max_new_words", lm_cfg.max_new_words}}},
          {"generator_mode", generator_mode},
          {"builtin_lm",
           {{"embed_dim", builtin_lm.embed_dim},
            {"hidden_dim", builtin_lm.hidden_dim},
            {"layers", builtin_lm.layers},
            {"updates", builtin_lm.updates},
            {"batch_size", builtin_lm.batch_size},
            {"learning_rate", builtin_lm.learning_rate},
            {"dropout", builtin_lm.dropout}}},
          {"random_n", random_n},
          {"generic_text_path", generic_text_path},
          {"output_dir", output_dir},
          {"test_beam", test_beam}};
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  s.dataset = j.value("dataset", s.dataset);
  s.train_path = j.value("train_path", s.train_path);
  s.dev_path = j.value("dev_path", s.dev_path);
  s.test_path = j.value("test_path", s.test_path);
  s.synth_n = j.value("synth_n", s.synth_n);
  s.synth_slots = j.value("synth_slots", s.synth_slots);
  s.synth_seed = j.value("synth_seed", s.synth_seed);
  s.annotation_fraction = j.value("annotation_fraction", s.annotation_fraction);
  s.k = j.value("k", s.k);
  s.split_seed = j.value("split_seed", s.split_seed);
  if (j.value("split_strategy", "uniform") == std::string("stratified"))
    s.split_strategy = SplitStrategy::stratified_by_combination;
  if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("train")) s.train = TrainConfig::from_json(j["train"]);
  if (j.contains("augmentation")) {
    const auto& a = j["augmentation"];
    s.augmentation.info = a.value("info", false);
    s.augmentation.lm = a.value("lm", false);
    s.augmentation.random = a.value("random", false);
    s.augmentation.reference_upper_bound = a.value("reference_upper_bound", false);
  }
  s.info_cap = j.value("info_cap", s.info_cap);
  if (j.contains("lm")) {
    const auto& l = j["lm"];
    s.lm_cfg.top_k = l.value("top_k", s.lm_cfg.top_k);
    s.lm_cfg.min_words = l.value("min_words", s.lm_cfg.min_words);
    s.lm_cfg.max_iterations = l.value("max_iterations", s.lm_cfg.max_iterations);
    s.lm_cfg.global_chain = l.value("global_chain", s.lm_cfg.global_chain);
    s.lm_cfg.max_new_words = l.value("max_new_words", s.lm_cfg.max_new_words);
  }
  s.generator_mode = j.value("generator_mode", s.generator_mode);
  if (j.contains("builtin_lm")) {
    const auto& b = j["builtin_lm"];
    s.builtin_lm.embed_dim = b.value("embed_dim", s.builtin_lm.embed_dim);
    s.builtin_lm.hidden_dim = b.value("hidden_dim", s.builtin_lm.hidden_dim);
    s.builtin_lm.layers = b.value("layers", s.builtin_lm.layers);
    s.builtin_lm.updates = b.value("updates", s.builtin_lm.updates);
    s.builtin_lm.batch_size = b.value("batch_size", s.builtin_lm.batch_size);
    s.builtin_lm.learning_rate = b.value("learning_rate", s.builtin_lm.learning_rate);
    s.builtin_lm.dropout = b.value("dropout", s.builtin_lm.dropout);
  }
  s.random_n = j.value("random_n", s.random_n);
  s.generic_text_path = j.value("generic_text_path", s.generic_text_path);
  s.output_dir = j.value("output_dir", s.output_dir);
  s.test_beam = j.value("test_beam", s.test_beam);
  return s;
}

std::string ExperimentSpec::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["spec_hash"] = spec_hash;
  j["seeds"] = seeds;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(r.to_json());
  j["failed_seeds"] = failed_seeds;
  j["mean"] = mean;
  j["stddev"] = stddev;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.spec_hash = j.at("spec_hash").get<std::string>();
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  for (const auto& rj : j.at("reports")) r.reports.push_back(EvalReport::from_json(rj));
  r.failed_seeds = j.value("failed_seeds", std::vector<std::uint64_t>{});
  r.mean = j.value("mean", std::map<std::string, double>{});
  r.stddev = j.value("stddev", std::map<std::string, double>{});
  return r;
}

void aggregate_run_record(RunRecord* record) {
  record->mean.clear();
  record->stddev.clear();
  if (record->reports.empty()) return;
  auto metric = [](const EvalReport& r, const std::string& name) {
    if (name == "bleu4") return r.bleu4;
    if (name == "nist") return r.nist;
    if (name == "meteor") return r.meteor;
    return r.rouge_l;
  };
  for (const std::string name : {"bleu4", "nist", "meteor", "rouge_l"}) {
    double sum = 0;
    for (const auto& r : record->reports) sum += metric(r, name);
    double m = sum / static_cast<double>(record->reports.size());
    record->mean[name] = m;
    if (record->reports.size() > 1) {
      double ss = 0;
      for (const auto& r : record->reports) {
        double d = metric(r, name) - m;
        ss += d * d;
      }
      record->stddev[name] = std::sqrt(ss / static_cast<double>(record->reports.size() - 1));
    } else {
      record->stddev[name] = 0.0;
    }
  }
}

namespace {

struct LoadedData {
  std::vector<LabeledPair> train_pairs;
  std::vector<LabeledPair> dev_pairs;
  std::vector<ParsedInstance> test;
  std::string generic_text_path;
};

std::vector<LabeledPair> to_pairs(const std::vector<ParsedInstance>& rows) {
  std::vector<LabeledPair> pairs;
  std::int64_t id = 0;
  for (const auto& row : rows) {
    if (row.text) pairs.push_back({row.mr, *row.text, id});
    ++id;
  }
  return pairs;
}

LoadedData load_data(const ExperimentSpec& spec, const std::filesystem::path& run_root) {
  LoadedData data;
  if (spec.dataset == "synthetic") {
    SyntheticDataset synth = make_synthetic(spec.synth_n, spec.synth_slots, spec.synth_seed);
    write_synthetic(synth, run_root / "data");
    data.train_pairs = to_pairs(synth.train);
    data.dev_pairs = to_pairs(synth.dev);
    data.test = synth.test;
    data.generic_text_path = (run_root / "data" / "generic.txt").string();
  } else {
    auto parse = spec.dataset == "e2e" ? parse_e2e : parse_webnlg;
    data.train_pairs = to_pairs(parse(spec.train_path));
    if (!spec.dev_path.empty()) data.dev_pairs = to_pairs(parse(spec.dev_path));
    if (!spec.test_path.empty()) data.test = parse(spec.test_path);
    data.generic_text_path = spec.generic_text_path;
  }
  if (spec.generic_text_path.size()) data.generic_text_path = spec.generic_text_path;
  return data;
}

EvalReport score_test(CycleTrainer& trainer, const std::vector<ParsedInstance>& test,
                      const ExperimentSpec& spec, const std::filesystem::path& seed_dir) {
  // Best dev checkpoint when one exists, else the final model.
  std::unique_ptr<ModelState> best;
  if (trainer.best_step() >= 0) {
    auto path = trainer.run_dir() / "checkpoints" /
                ("step_" + std::to_string(trainer.best_step()) + ".ckpt");
    if (std::filesystem::exists(path)) best = ModelState::load(path, trainer.vocab().hash());
  }
  ModelState& model = best ? *best : trainer.model();
  Seq2Seq s2s(model);
  const Vocabulary& vocab = trainer.vocab();

  std::vector<MeaningRepresentation> mrs;
  std::vector<TokenSeq> hyps, refs;
  std::vector<TextSample> decoded;
  std::map<std::string, TokenSeq> cache;
  std::string hyp_dump;
  for (const auto& inst : test) {
    if (!inst.text) continue;
    mrs.push_back(inst.mr);
    refs.push_back(metric_tokenize(inst.text->raw));
    std::string key = inst.mr.key();
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto src = vocab.encode(linearize(inst.mr), Side::data);
      auto ids = s2s.generate(src, Side::data, Side::text,
                              spec.test_beam > 1 ? DecodeMode::beam : DecodeMode::greedy,
                              spec.test_beam);
      TokenSeq toks;
      for (const auto& tok : vocab.surface_tokens(ids)) toks.push_back(lower(tok));
      it = cache.emplace(key, std::move(toks)).first;
    }
    hyps.push_back(it->second);
    decoded.emplace_back(join(it->second, " "), Provenance::annotated);
    hyp_dump += join(it->second, " ") + "\n";
  }
  write_file(seed_dir / "test_hyps.txt", hyp_dump);

  EvalReport report;
  if (!hyps.empty()) {
    std::vector<TokenSeq> pooled_hyps;
    std::vector<std::vector<TokenSeq>> pooled_refs;
    pool_references_by_mr(mrs, hyps, refs, &pooled_hyps, &pooled_refs);
    report.bleu4 = bleu4(pooled_hyps, pooled_refs);
    report.nist = nist(pooled_hyps, pooled_refs);
    report.meteor = meteor(pooled_hyps, pooled_refs);
    report.rouge_l = rouge_l(pooled_hyps, pooled_refs);
    report.n_instances = pooled_hyps.size();
    report.unique_noncopied_tokens = count_noncopied_tokens(decoded, mrs);
    report.unique_combinations = count_unique_combinations(decoded, mrs);
  }
  report.decode_mode = spec.test_beam > 1 ? "beam" : "greedy";
  return report;
}

}  // namespace

RunRecord run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::filesystem::path run_root = std::filesystem::path(spec.output_dir) / spec.hash();
  std::filesystem::create_directories(run_root);
  write_file(run_root / "spec.json", spec.to_json().dump(2));

  LoadedData data = load_data(spec, run_root);
  if (data.train_pairs.empty()) throw DataError("no labeled training pairs found");

  std::size_t k = spec.k;
  if (k == 0)
    k = std::max<std::size_t>(
        1, static_cast<std::size_t>(spec.annotation_fraction *
                                    static_cast<double>(data.train_pairs.size())));

  RunRecord record;
  record.spec_hash = spec.hash();

  for (std::uint64_t seed : spec.seeds) {
    std::filesystem::path seed_dir = run_root / ("seed_" + std::to_string(seed));
    try {
      Corpus corpus =
          few_shot_split(data.train_pairs, k, spec.split_seed, spec.split_strategy);
      SplitManifest manifest = make_manifest(data.train_pairs, corpus, spec.split_seed);
      write_file(seed_dir / "split.json", manifest.to_json().dump(2));

      ValueInventory inventory = build_value_inventory(corpus);

      // Algorithm lines 2-5: information augmentation extends the labeled
      // set; LM/random augmentation fills the unpaired text pool.
      if (spec.augmentation.info) {
        std::vector<LabeledPair> extended = corpus.labeled;
        AugmentedFile aug_file;
        std::int64_t next_id = static_cast<std::int64_t>(data.train_pairs.size());
        for (std::size_t i = 0; i < corpus.labeled.size(); ++i) {
          auto aug = info_augment(corpus.labeled[i], inventory, spec.info_cap,
                                  derive_seed(seed, "info" + std::to_string(i)));
          for (auto& ap : aug) {
            extended.push_back({ap.mr, ap.text, next_id++});
            aug_file.pairs.push_back(std::move(ap));
          }
        }
        write_augmented_jsonl(seed_dir / "info_aug.jsonl", aug_file);
        corpus.labeled = std::move(extended);
      }

      std::vector<TextSample> lm_seeds;
      for (const auto& pair : corpus.labeled) lm_seeds.push_back(pair.text);

      if (spec.augmentation.lm) {
        std::unique_ptr<GeneratorInterface> generator;
        if (spec.generator_mode == "grammar") {
          generator = std::make_unique<GrammarGenerator>(spec.synth_slots,
                                                         derive_seed(seed, "grammar_gen"));
        } else {
          GeneratorTrainConfig gen_cfg;
          gen_cfg.mode = spec.generator_mode == "external"
                             ? GeneratorTrainConfig::Mode::external
                             : GeneratorTrainConfig::Mode::builtin;
          gen_cfg.builtin = spec.builtin_lm;
          gen_cfg.builtin.seed = derive_seed(seed, "lm_finetune");
          gen_cfg.artifacts_dir = seed_dir / "generator";
          generator = finetune_generator(lm_seeds, gen_cfg);
        }
        LmAugConfig lm_cfg = spec.lm_cfg;
        lm_cfg.seed = derive_seed(seed, "lm_aug");
        auto lm_texts = lm_augment(lm_seeds, *generator, lm_cfg);
        corpus.t_augmented.insert(corpus.t_augmented.end(), lm_texts.begin(), lm_texts.end());
      }

      if (spec.augmentation.random) {
        if (data.generic_text_path.empty())
          throw ConfigError("random augmentation requires generic_text_path");
        auto random_texts = random_augment(lm_seeds, data.generic_text_path, spec.random_n,
                                           derive_seed(seed, "random_aug"));
        corpus.t_augmented.insert(corpus.t_augmented.end(), random_texts.begin(),
                                  random_texts.end());
      }

      if (spec.augmentation.reference_upper_bound) {
        // Gold texts of the non-selected pairs: only legal as an upper bound.
        std::cerr << "[experiment] reference_upper_bound uses held-out gold text and "
                     "violates the few-shot premise; for upper-bound runs only\n";
        std::set<std::int64_t> labeled_ids;
        for (const auto& p : corpus.labeled) labeled_ids.insert(p.id);
        for (const auto& p : data.train_pairs) {
          if (!labeled_ids.count(p.id))
            corpus.t_augmented.emplace_back(p.text.raw, Provenance::annotated);
        }
      }

      if (!corpus.t_augmented.empty()) {
        AugmentedFile unpaired;
        unpaired.texts = corpus.t_augmented;
        write_augmented_jsonl(seed_dir / "t_augmented.jsonl", unpaired);
      }

      int seq_cap = spec.dataset == "webnlg" ? 200 : 100;
      Vocabulary vocab = build_vocab(corpus, seq_cap, seq_cap);

      TrainConfig train_cfg = spec.train;
      train_cfg.seed = seed;
      CycleTrainer trainer(corpus, data.dev_pairs, std::move(vocab), train_cfg,
                           seed_dir / "train");
      trainer.train();

      EvalReport report = score_test(trainer, data.test, spec, seed_dir);
      write_file(seed_dir / "report.json", report.to_json().dump(2));
      record.seeds.push_back(seed);
      record.reports.push_back(report);
    } catch (const DivergenceError& e) {
      std::cerr << "[experiment] seed " << seed << " diverged: " << e.what() << "\n";
      record.failed_seeds.push_back(seed);
    }
  }

  aggregate_run_record(&record);
  write_file(run_root / "run_record.json", record.to_json().dump(2));
  return record;
}

}  // namespace fewgen
