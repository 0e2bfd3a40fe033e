// fewgen: few-shot data-to-text toolkit.
//
// Subcommands: ingest, split, augment, train, generate, evaluate, match,
// experiment, synth. Exit codes: 0 success, 2 config error, 3 data error,
// 4 training divergence.

#include <iostream>

#include "CLI11.hpp"
#include "fewgen/augment.hpp"
#include "fewgen/e2e.hpp"
#include "fewgen/experiment.hpp"
#include "fewgen/lm.hpp"
#include "fewgen/metrics.hpp"
#include "fewgen/synthetic.hpp"
#include "fewgen/webnlg.hpp"

namespace fg = fewgen;

namespace {

std::vector<fg::ParsedInstance> load_any(const std::string& dataset, const std::string& path) {
  if (dataset == "e2e") return fg::parse_e2e(path);
  if (dataset == "webnlg") return fg::parse_webnlg(path);
  // Normalized instance JSONL written by `ingest`.
  return fg::read_instances_jsonl(path);
}

std::vector<fg::LabeledPair> pairs_of(const std::vector<fg::ParsedInstance>& rows) {
  std::vector<fg::LabeledPair> pairs;
  std::int64_t id = 0;
  for (const auto& row : rows) {
    if (row.text) pairs.push_back({row.mr, *row.text, id});
    ++id;
  }
  return pairs;
}

// Reference file reader for `evaluate`: one reference per line, aligned with
// the hypothesis file; with --multi-ref, blank-line-separated groups.
std::vector<std::vector<fg::TokenSeq>> read_refs(const std::string& path, bool multi) {
  auto lines = fg::read_lines(path);
  std::vector<std::vector<fg::TokenSeq>> refs;
  if (!multi) {
    for (const auto& line : lines) refs.push_back({fg::metric_tokenize(line)});
    return refs;
  }
  std::vector<fg::TokenSeq> group;
  for (const auto& line : lines) {
    if (fg::trim(line).empty()) {
      if (!group.empty()) refs.push_back(std::exchange(group, {}));
    } else {
      group.push_back(fg::metric_tokenize(line));
    }
  }
  if (!group.empty()) refs.push_back(group);
  return refs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot data-to-text generation toolkit"};
  app.require_subcommand(1);

  // ingest: normalize a dataset file into instance JSONL
  auto* ingest = app.add_subcommand("ingest", "normalize a dataset file to instance JSONL");
  std::string in_dataset, in_path, in_out;
  ingest->add_option("--dataset", in_dataset, "e2e|webnlg")->required();
  ingest->add_option("--input", in_path)->required();
  ingest->add_option("--out", in_out)->required();

  // split: deterministic few-shot split with manifest
  auto* split = app.add_subcommand("split", "create a deterministic few-shot split");
  std::string sp_dataset = "jsonl", sp_input, sp_outdir;
  std::size_t sp_k = 0;
  double sp_fraction = 0.0;
  std::uint64_t sp_seed = 7;
  bool sp_stratified = false;
  split->add_option("--dataset", sp_dataset, "e2e|webnlg|jsonl");
  split->add_option("--input", sp_input)->required();
  split->add_option("--k", sp_k);
  split->add_option("--fraction", sp_fraction);
  split->add_option("--seed", sp_seed);
  split->add_flag("--stratified", sp_stratified, "stratify by slot combination");
  split->add_option("--out", sp_outdir)->required();

  // augment info|lm|random
  auto* augment = app.add_subcommand("augment", "produce augmented pairs or unpaired text");
  std::string ag_mode, ag_dataset = "jsonl", ag_input, ag_out, ag_generic, ag_generator = "builtin";
  int ag_cap = 10, ag_topk = 2, ag_minwords = 5, ag_maxiter = 100;
  std::size_t ag_n = 30;
  std::uint64_t ag_seed = 1;
  augment->add_option("mode", ag_mode, "info|lm|random")->required();
  augment->add_option("--dataset", ag_dataset, "e2e|webnlg|jsonl");
  augment->add_option("--input", ag_input, "labeled pairs (all rows with text)")->required();
  augment->add_option("--out", ag_out)->required();
  augment->add_option("--cap", ag_cap, "max augmentations per source pair");
  augment->add_option("--top-k", ag_topk);
  augment->add_option("--min-words", ag_minwords);
  augment->add_option("--max-iter", ag_maxiter);
  augment->add_option("--seed", ag_seed);
  augment->add_option("--generic-text", ag_generic, "line-per-sentence out-of-domain file");
  augment->add_option("--n", ag_n, "sample count for random mode");
  augment->add_option("--generator", ag_generator, "builtin|external (lm mode)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark corpus");
  std::size_t sy_n = 400;
  int sy_slots = 7;
  std::uint64_t sy_seed = 13;
  std::string sy_out;
  synth->add_option("--n", sy_n);
  synth->add_option("--n-slots", sy_slots);
  synth->add_option("--seed", sy_seed);
  synth->add_option("--out", sy_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train one model from a config file");
  std::string tr_config, tr_share, tr_out = "run";
  std::vector<std::string> tr_ablate;
  train_cmd->add_option("--config", tr_config, "JSON file with data paths and train settings")
      ->required();
  train_cmd->add_option("--ablate", tr_ablate,
                        "direction toggles (t2d2t d2t2d ae_t ae_d noise_on)");
  train_cmd->add_option("--share", tr_share, "none|enc|dec|both");
  train_cmd->add_option("--out", tr_out, "run directory");

  // generate
  auto* gen = app.add_subcommand("generate", "decode data inputs with a checkpoint");
  std::string ge_ckpt, ge_vocab, ge_dataset = "jsonl", ge_input, ge_out, ge_mode = "greedy";
  int ge_beam = 3;
  gen->add_option("--checkpoint", ge_ckpt)->required();
  gen->add_option("--vocab", ge_vocab, "vocab.json from the run directory")->required();
  gen->add_option("--dataset", ge_dataset, "e2e|webnlg|jsonl");
  gen->add_option("--input", ge_input)->required();
  gen->add_option("--mode", ge_mode, "greedy|beam (explicit choice required)");
  gen->add_option("--beam-size", ge_beam);
  gen->add_option("--out", ge_out)->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score hypotheses against references");
  std::string ev_hyp, ev_ref, ev_out, ev_decode_mode = "greedy";
  bool ev_multi = false;
  eval->add_option("--hyp", ev_hyp)->required();
  eval->add_option("--ref", ev_ref)->required();
  eval->add_flag("--multi-ref", ev_multi, "blank-line-separated reference groups");
  eval->add_option("--out", ev_out, "report.json path")->required();
  eval->add_option("--decode-mode", ev_decode_mode, "recorded in the report");

  // match
  auto* match = app.add_subcommand("match", "mine pseudo pairs by representation matching");
  std::string ma_ckpt, ma_vocab, ma_texts, ma_pool, ma_pool_dataset = "jsonl", ma_out;
  double ma_eps = 0.7;
  match->add_option("--checkpoint", ma_ckpt)->required();
  match->add_option("--vocab", ma_vocab)->required();
  match->add_option("--texts", ma_texts, "augmented JSONL or plain text file")->required();
  match->add_option("--pool", ma_pool, "data pool file")->required();
  match->add_option("--pool-dataset", ma_pool_dataset, "e2e|webnlg|jsonl");
  match->add_option("--epsilon", ma_eps)->required();
  match->add_option("--out", ma_out)->required();

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a full multi-seed experiment spec");
  std::string ex_spec, ex_out_override;
  exp->add_option("--spec", ex_spec, "experiment spec JSON")->required();
  exp->add_option("--out", ex_out_override, "override output_dir");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      auto rows = load_any(in_dataset, in_path);
      fg::write_instances_jsonl(in_out, rows);
      std::cout << "wrote " << rows.size() << " instances to " << in_out << "\n";
    } else if (*split) {
      auto pairs = pairs_of(load_any(sp_dataset, sp_input));
      std::size_t k = sp_k;
      if (k == 0 && sp_fraction > 0.0)
        k = std::max<std::size_t>(
            1, static_cast<std::size_t>(sp_fraction * static_cast<double>(pairs.size())));
      auto corpus = fg::few_shot_split(pairs, k, sp_seed,
                                       sp_stratified
                                           ? fg::SplitStrategy::stratified_by_combination
                                           : fg::SplitStrategy::uniform);
      auto manifest = fg::make_manifest(pairs, corpus, sp_seed);
      std::filesystem::create_directories(sp_outdir);
      fg::write_file(std::filesystem::path(sp_outdir) / "split.json",
                     manifest.to_json().dump(2));
      std::vector<fg::ParsedInstance> labeled, unlabeled;
      for (const auto& p : corpus.labeled) labeled.push_back({p.mr, p.text});
      for (const auto& mr : corpus.d_unlabeled) unlabeled.push_back({mr, std::nullopt});
      fg::write_instances_jsonl(std::filesystem::path(sp_outdir) / "labeled.jsonl", labeled);
      fg::write_instances_jsonl(std::filesystem::path(sp_outdir) / "unlabeled.jsonl", unlabeled);
      std::cout << "labeled " << corpus.labeled.size() << ", unlabeled "
                << corpus.d_unlabeled.size() << "\n";
    } else if (*augment) {
      auto rows = load_any(ag_dataset, ag_input);
      auto pairs = pairs_of(rows);
      if (ag_mode == "info") {
        fg::Corpus corpus;
        corpus.labeled = pairs;
        for (const auto& row : rows)
          if (!row.text) corpus.d_unlabeled.push_back(row.mr);
        auto inventory = fg::build_value_inventory(corpus);
        fg::AugmentedFile out_file;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          auto aug = fg::info_augment(pairs[i], inventory, ag_cap,
                                      fg::derive_seed(ag_seed, "info" + std::to_string(i)));
          for (auto& ap : aug) out_file.pairs.push_back(std::move(ap));
        }
        fg::write_augmented_jsonl(ag_out, out_file);
        std::cout << "wrote " << out_file.pairs.size() << " augmented pairs\n";
      } else if (ag_mode == "lm") {
        std::vector<fg::TextSample> seeds;
        for (const auto& p : pairs) seeds.push_back(p.text);
        fg::GeneratorTrainConfig gen_cfg;
        gen_cfg.mode = ag_generator == "external" ? fg::GeneratorTrainConfig::Mode::external
                                                  : fg::GeneratorTrainConfig::Mode::builtin;
        gen_cfg.builtin.seed = ag_seed;
        auto generator = fg::finetune_generator(seeds, gen_cfg);
        fg::LmAugConfig cfg;
        cfg.top_k = ag_topk;
        cfg.min_words = ag_minwords;
        cfg.max_iterations = ag_maxiter;
        cfg.seed = ag_seed;
        auto texts = fg::lm_augment(seeds, *generator, cfg);
        fg::AugmentedFile out_file;
        out_file.texts = std::move(texts);
        fg::write_augmented_jsonl(ag_out, out_file);
        std::cout << "retained " << out_file.texts.size() << " generated sentences\n";
      } else if (ag_mode == "random") {
        if (ag_generic.empty()) throw fg::ConfigError("random mode requires --generic-text");
        std::vector<fg::TextSample> source;
        for (const auto& p : pairs) source.push_back(p.text);
        fg::AugmentedFile out_file;
        out_file.texts = fg::random_augment(source, ag_generic, ag_n, ag_seed);
        fg::write_augmented_jsonl(ag_out, out_file);
        std::cout << "sampled " << out_file.texts.size() << " generic sentences\n";
      } else {
        throw fg::ConfigError("augment mode must be info|lm|random");
      }
    } else if (*synth) {
      auto data = fg::make_synthetic(sy_n, sy_slots, sy_seed);
      fg::write_synthetic(data, sy_out);
      std::cout << "train " << data.train.size() << ", dev " << data.dev.size() << ", test "
                << data.test.size() << " -> " << sy_out << "\n";
    } else if (*train_cmd) {
      nlohmann::json cfg_json = nlohmann::json::parse(fg::read_file(tr_config));
      fg::TrainConfig cfg = fg::TrainConfig::from_json(cfg_json.value("train", cfg_json));
      if (!tr_ablate.empty()) {
        cfg.toggles.clear();
        for (const auto& name : tr_ablate) cfg.toggles.insert(fg::direction_from_name(name));
      }
      if (!tr_share.empty()) cfg.model.sharing = fg::sharing_from_name(tr_share);
      std::string dataset = cfg_json.value("dataset", "jsonl");
      auto train_pairs = pairs_of(load_any(dataset, cfg_json.at("train_path").get<std::string>()));
      std::vector<fg::LabeledPair> dev;
      if (cfg_json.contains("dev_path"))
        dev = pairs_of(load_any(dataset, cfg_json["dev_path"].get<std::string>()));
      std::size_t k = cfg_json.value("k", train_pairs.size());
      auto corpus = fg::few_shot_split(train_pairs, k, cfg_json.value("split_seed", 7ull));
      if (cfg_json.contains("augmented_path")) {
        auto aug = fg::read_augmented_jsonl(cfg_json["augmented_path"].get<std::string>());
        std::int64_t next_id = static_cast<std::int64_t>(train_pairs.size());
        for (auto& ap : aug.pairs) corpus.labeled.push_back({ap.mr, ap.text, next_id++});
        for (auto& t : aug.texts) corpus.t_augmented.push_back(std::move(t));
      }
      int cap = cfg_json.value("max_seq_len", dataset == "webnlg" ? 200 : 100);
      auto vocab = fg::build_vocab(corpus, cap, cap);
      auto trainer = fg::train(std::move(corpus), std::move(dev), std::move(vocab), cfg, tr_out);
      std::cout << "final step " << trainer->update_count() << ", best dev BLEU "
                << trainer->best_dev_bleu() << " at step " << trainer->best_step() << "\n";
    } else if (*gen) {
      if (ge_mode != "greedy" && ge_mode != "beam")
        throw fg::ConfigError("--mode must be greedy or beam");
      auto vocab = fg::Vocabulary::from_json(nlohmann::json::parse(fg::read_file(ge_vocab)));
      auto model = fg::ModelState::load(ge_ckpt, vocab.hash());
      fg::Seq2Seq s2s(*model);
      auto rows = load_any(ge_dataset, ge_input);
      std::string out_text;
      for (const auto& row : rows) {
        auto src = vocab.encode(fg::linearize(row.mr), fg::Side::data);
        auto ids = s2s.generate(src, fg::Side::data, fg::Side::text,
                                ge_mode == "beam" ? fg::DecodeMode::beam : fg::DecodeMode::greedy,
                                ge_beam);
        out_text += fg::join(vocab.surface_tokens(ids), " ") + "\n";
      }
      fg::write_file(ge_out, out_text);
      std::cout << "decoded " << rows.size() << " inputs -> " << ge_out << "\n";
    } else if (*eval) {
      auto hyp_lines = fg::read_lines(ev_hyp);
      std::vector<fg::TokenSeq> hyps;
      for (const auto& line : hyp_lines) hyps.push_back(fg::metric_tokenize(line));
      auto refs = read_refs(ev_ref, ev_multi);
      fg::EvalReport report;
      report.bleu4 = fg::bleu4(hyps, refs);
      report.nist = fg::nist(hyps, refs);
      report.meteor = fg::meteor(hyps, refs);
      report.rouge_l = fg::rouge_l(hyps, refs);
      report.n_instances = hyps.size();
      report.decode_mode = ev_decode_mode;
      fg::write_file(ev_out, report.to_json().dump(2));
      std::cout << "BLEU-4 " << report.bleu4 << "  NIST " << report.nist << "  METEOR "
                << report.meteor << "  ROUGE-L " << report.rouge_l << "\n";
    } else if (*match) {
      auto vocab = fg::Vocabulary::from_json(nlohmann::json::parse(fg::read_file(ma_vocab)));
      auto model = fg::ModelState::load(ma_ckpt, vocab.hash());
      fg::Seq2Seq s2s(*model);
      std::vector<fg::TextSample> texts;
      if (ma_texts.size() > 6 && ma_texts.substr(ma_texts.size() - 6) == ".jsonl") {
        auto aug = fg::read_augmented_jsonl(ma_texts);
        texts = std::move(aug.texts);
      } else {
        for (const auto& line : fg::read_lines(ma_texts))
          if (!fg::trim(line).empty()) texts.emplace_back(line, fg::Provenance::lm_aug);
      }
      std::vector<fg::MeaningRepresentation> pool;
      for (const auto& row : load_any(ma_pool_dataset, ma_pool)) pool.push_back(row.mr);
      fg::MineOptions opts;
      opts.epsilon = ma_eps;
      auto mined = fg::mine_pairs(texts, pool, vocab,
                                  [&s2s](const std::vector<int>& ids, fg::Side side) {
                                    return s2s.encode(ids, side).pooled;
                                  },
                                  opts);
      std::filesystem::remove(ma_out);
      fg::append_pseudo_pairs_jsonl(ma_out, mined);
      std::cout << "retained " << mined.size() << " of " << texts.size() << " texts\n";
    } else if (*exp) {
      fg::ExperimentSpec spec =
          fg::ExperimentSpec::from_json(nlohmann::json::parse(fg::read_file(ex_spec)));
      if (!ex_out_override.empty()) spec.output_dir = ex_out_override;
      auto record = fg::run_experiment(spec);
      std::cout << "spec " << record.spec_hash << ": " << record.reports.size()
                << " seeds succeeded, " << record.failed_seeds.size() << " failed\n";
      for (const auto& [name, value] : record.mean)
        std::cout << "  " << name << " mean " << value << " (sd " << record.stddev.at(name)
                  << ")\n";
    }
  } catch (const fg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fg::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fg::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
