// season: salience-guided abstractive summarization at desk scale.
//
// Subcommands: label, search-thresholds, train, generate, evaluate, stats,
// ablate. Exit codes: 0 success, 1 internal error, 2 input error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "season/checkpoint.hpp"
#include "season/config_file.hpp"
#include "season/decode.hpp"
#include "season/inference.hpp"
#include "season/report.hpp"
#include "season/salience.hpp"
#include "season/train.hpp"

namespace {

using namespace season;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // section.key=value
  std::string out_dir = "runs/out";
  int64_t seed = -1;  // <0: keep config value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "config file (ini)");
  cmd->add_option("--set", args.overrides,
                  "override a config key, e.g. --set model.d_model=64");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed for every stochastic component");
}

config::RunConfig make_run_config(const CommonArgs& args) {
  config::ConfigFile file;
  if (!args.config_path.empty()) {
    file = config::ConfigFile::parse_file(args.config_path);
  }
  for (const std::string& kv : args.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw InputError("--set expects section.key=value, got: " + kv);
    }
    file.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  config::RunConfig rc = config::RunConfig::from_config(file);
  if (args.seed >= 0) {
    rc.seed = static_cast<uint64_t>(args.seed);
    rc.train.seed = rc.seed;
  }
  return rc;
}

corpus::Vocabulary vocab_from_labeled(
    const std::vector<salience::LabeledDocument>& labeled, int max_size) {
  std::vector<corpus::RawDocument> raw;
  raw.reserve(labeled.size());
  for (const auto& d : labeled) raw.push_back(d.doc);
  return corpus::Vocabulary::build(raw, max_size);
}

void print_degree_fractions(const salience::SalienceStats& stats) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "sentences: " << stats.total_sentences << "; degree fractions:";
  for (size_t l = 0; l < stats.degree_fractions.size(); ++l) {
    os << " d" << (l + 1) << "=" << stats.degree_fractions[l];
  }
  std::cout << os.str() << "\n";
}

// ---- label ----------------------------------------------------------------

int cmd_label(const CommonArgs& common, const std::string& corpus_path,
              const std::string& percentiles_csv,
              const std::string& thresholds_path) {
  config::RunConfig rc = make_run_config(common);
  if (!percentiles_csv.empty()) {
    rc.percentiles = config::parse_fraction_list(percentiles_csv);
  }
  const auto docs = corpus::load_corpus(corpus_path);
  if (docs.empty()) throw ParseError(0, "corpus is empty: " + corpus_path);

  std::vector<salience::LabeledDocument> labeled;
  salience::ThresholdSpec spec;
  if (!thresholds_path.empty()) {
    spec = salience::load_threshold_spec(thresholds_path);
    labeled = salience::label_corpus_with_cutoffs(docs, spec);
  } else {
    std::tie(labeled, spec) = salience::label_corpus(docs, rc.percentiles);
  }

  std::filesystem::create_directories(common.out_dir);
  salience::save_labeled_corpus(labeled, common.out_dir + "/labeled.jsonl");
  salience::save_threshold_spec(spec, common.out_dir + "/thresholds.json");
  rc.write_effective(common.out_dir);
  print_degree_fractions(salience::salience_stats(labeled, spec));
  std::cout << "wrote " << common.out_dir
            << "/labeled.jsonl and thresholds.json\n";
  return 0;
}

// ---- search-thresholds ------------------------------------------------------

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i * 0.05);
  return grid;
}

// Expensive eval mode mirroring the reference procedure: label with the
// candidate fractions, train a small model briefly, return validation
// ROUGE-L F1 with predicted soft guidance.
std::function<double(const std::vector<double>&)> make_train_eval(
    const std::vector<corpus::RawDocument>& docs,
    const config::RunConfig& rc) {
  return [docs, rc](const std::vector<double>& fractions) {
    const auto [labeled, spec] = salience::label_corpus(docs, fractions);
    const size_t n_val = std::max<size_t>(1, labeled.size() / 10);
    std::vector<salience::LabeledDocument> train_docs(
        labeled.begin(), labeled.end() - n_val);
    std::vector<corpus::RawDocument> val_docs;
    for (size_t i = labeled.size() - n_val; i < labeled.size(); ++i) {
      val_docs.push_back(labeled[i].doc);
    }
    model::ModelConfig mcfg = rc.model;
    mcfg.n_degrees = static_cast<int>(fractions.size()) + 1;
    corpus::Vocabulary vocab = vocab_from_labeled(train_docs, 8000);
    mcfg.vocab_size = vocab.size();
    model::Parameters params = model::Parameters::init(mcfg, rc.train.seed);
    const auto examples = train::make_train_examples(train_docs, vocab,
                                                     rc.max_src, rc.max_tgt);
    const auto val =
        train::make_val_examples(val_docs, vocab, rc.max_src, rc.max_tgt);
    train::TrainConfig tcfg = rc.train;
    tcfg.val_every = std::max(1, tcfg.epochs);  // validate once at the end
    const train::TrainResult result =
        train::train(params, mcfg, tcfg, examples, val, {});
    return result.best_val;
  };
}

int cmd_search_thresholds(const CommonArgs& common,
                          const std::string& corpus_path,
                          const std::string& grid_csv, int max_degrees,
                          const std::string& eval_mode) {
  config::RunConfig rc = make_run_config(common);
  const auto docs = corpus::load_corpus(corpus_path);
  if (docs.empty()) throw ParseError(0, "corpus is empty: " + corpus_path);
  const std::vector<double> grid = grid_csv.empty()
                                       ? default_grid()
                                       : config::parse_fraction_list(grid_csv);

  std::function<double(const std::vector<double>&)> eval_fn;
  if (eval_mode == "proxy") {
    eval_fn = salience::make_oracle_guidance_eval(docs);
  } else if (eval_mode == "train") {
    eval_fn = make_train_eval(docs, rc);
  } else {
    throw InputError("--eval-mode must be proxy or train");
  }

  const salience::GreedySearchResult result =
      salience::greedy_threshold_search(eval_fn, grid, max_degrees);

  std::filesystem::create_directories(common.out_dir);
  nlohmann::json table = nlohmann::json::array();
  std::cout << "L  percentiles            eval\n";
  const salience::GreedySearchLevel* best = nullptr;
  std::vector<double> all_scores;
  for (const auto& d : docs) {
    const auto s = salience::score_document(d);
    all_scores.insert(all_scores.end(), s.begin(), s.end());
  }
  for (const auto& level : result.levels) {
    std::ostringstream ps;
    for (size_t i = 0; i < level.spec.percentiles.size(); ++i) {
      if (i) ps << ",";
      ps << level.spec.percentiles[i];
    }
    std::cout << level.spec.n_degrees << "  " << ps.str() << "  "
              << level.eval_value << "\n";
    table.push_back({{"n_degrees", level.spec.n_degrees},
                     {"percentiles", level.spec.percentiles},
                     {"eval", level.eval_value}});
    if (best == nullptr || level.eval_value > best->eval_value) best = &level;
  }
  {
    std::ofstream out(common.out_dir + "/threshold_search.json");
    out << table.dump(2) << "\n";
  }
  salience::ThresholdSpec chosen = best->spec;
  chosen.cutoffs =
      salience::percentile_cutoffs(all_scores, chosen.percentiles);
  salience::save_threshold_spec(chosen, common.out_dir + "/thresholds.json");
  rc.write_effective(common.out_dir);
  std::cout << "best: L=" << chosen.n_degrees << " -> " << common.out_dir
            << "/thresholds.json\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const CommonArgs& common, const std::string& corpus_path,
              const std::string& val_path, const std::string& vocab_path,
              const std::string& resume_path, int vocab_max) {
  config::RunConfig rc = make_run_config(common);
  const auto labeled = salience::load_labeled_corpus(corpus_path);
  if (labeled.empty()) throw ParseError(0, "corpus is empty: " + corpus_path);

  corpus::Vocabulary vocab = vocab_path.empty()
                                 ? vocab_from_labeled(labeled, vocab_max)
                                 : corpus::Vocabulary::load(vocab_path);
  model::ModelConfig mcfg = rc.model;
  mcfg.vocab_size = vocab.size();

  model::Parameters params = model::Parameters::init(mcfg, rc.train.seed);
  train::TrainOptions opts;
  opts.out_dir = common.out_dir;
  if (!resume_path.empty()) {
    const model::Checkpoint ckpt = model::load_checkpoint(resume_path);
    if (ckpt.train_state_json.empty()) {
      throw InputError("checkpoint has no training state: " + resume_path);
    }
    mcfg = ckpt.config;
    params = ckpt.params;
    opts.resume_state_json = ckpt.train_state_json;
  }

  const auto examples =
      train::make_train_examples(labeled, vocab, rc.max_src, rc.max_tgt);
  std::vector<train::ValExample> val;
  if (!val_path.empty()) {
    val = train::make_val_examples(corpus::load_corpus(val_path), vocab,
                                   rc.max_src, rc.max_tgt);
  }

  std::filesystem::create_directories(common.out_dir);
  vocab.save(common.out_dir + "/vocab.txt");
  rc.write_effective(common.out_dir);

  const train::TrainResult result =
      train::train(params, mcfg, rc.train, examples, val, opts);
  std::cout << "trained " << result.steps << " steps over "
            << result.log.size() << " epochs\n";
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "final loss_lm=" << last.loss_lm
              << " loss_cls=" << last.loss_cls
              << " cls_accuracy=" << last.cls_accuracy << "\n";
  }
  if (result.best_epoch > 0) {
    std::cout << "best epoch " << result.best_epoch << " ("
              << (val.empty() ? "loss_lm" : "val rouge-L") << " "
              << result.best_val << ")\n";
  }
  std::cout << "checkpoints: " << result.last_checkpoint_path;
  if (!result.best_checkpoint_path.empty()) {
    std::cout << ", " << result.best_checkpoint_path;
  }
  std::cout << "\n";
  return 0;
}

// ---- generate ----------------------------------------------------------------

int cmd_generate(const CommonArgs& common, const std::string& checkpoint_path,
                 const std::string& vocab_path, const std::string& corpus_path,
                 const std::string& thresholds_path,
                 const std::string& estimation, const std::string& out_file) {
  config::RunConfig rc = make_run_config(common);
  if (!estimation.empty()) {
    rc.decode.estimation = config::parse_estimation(estimation);
  }
  const model::Checkpoint ckpt = model::load_checkpoint(checkpoint_path);
  const corpus::Vocabulary vocab = corpus::Vocabulary::load(vocab_path);
  if (vocab.size() != ckpt.config.vocab_size) {
    throw InputError("vocabulary size " + std::to_string(vocab.size()) +
                     " does not match checkpoint vocab_size " +
                     std::to_string(ckpt.config.vocab_size));
  }
  const auto docs = corpus::load_corpus(corpus_path);
  salience::ThresholdSpec spec;
  const salience::ThresholdSpec* spec_ptr = nullptr;
  if (!thresholds_path.empty()) {
    spec = salience::load_threshold_spec(thresholds_path);
    spec_ptr = &spec;
  }

  const model::Inference inf(ckpt.params, ckpt.config);
  const auto generated = decode::generate(inf, vocab, docs, spec_ptr,
                                          rc.decode, rc.max_src, rc.max_tgt);
  const std::string out_path =
      out_file.empty() ? common.out_dir + "/generated.jsonl" : out_file;
  const std::filesystem::path parent =
      std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  decode::save_generated(generated, out_path);
  rc.write_effective(common.out_dir);
  int relaxed = 0;
  for (const auto& g : generated) relaxed += g.blocking_relaxed ? 1 : 0;
  std::cout << "generated " << generated.size() << " summaries -> " << out_path
            << "\n";
  if (relaxed > 0) {
    std::cout << "n-gram blocking relaxed for " << relaxed << " documents\n";
  }
  return 0;
}

// ---- evaluate -----------------------------------------------------------------

int cmd_evaluate(const std::string& generated_path,
                 const std::string& reference_path,
                 const std::string& report_path) {
  const auto generated = decode::load_generated(generated_path);
  const auto references = corpus::load_corpus(reference_path);
  const report::EvalReport rep = report::evaluate(generated, references);
  std::cout << report::format_report(rep);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw InputError("cannot write report: " + report_path);
    out << report::report_to_json(rep) << "\n";
    std::cout << "report -> " << report_path << "\n";
  }
  return 0;
}

// ---- stats ---------------------------------------------------------------------

int cmd_stats(const CommonArgs& common, const std::string& corpus_path,
              const std::string& thresholds_path) {
  const config::RunConfig rc = make_run_config(common);
  const auto labeled = salience::load_labeled_corpus(corpus_path);
  if (labeled.empty()) throw ParseError(0, "corpus is empty: " + corpus_path);
  salience::ThresholdSpec spec;
  if (!thresholds_path.empty()) {
    spec = salience::load_threshold_spec(thresholds_path);
  } else {
    int max_degree = 2;
    for (const auto& d : labeled) {
      for (int deg : d.degrees) max_degree = std::max(max_degree, deg);
    }
    spec.n_degrees = max_degree;
  }
  const salience::SalienceStats stats =
      salience::salience_stats(labeled, spec);
  print_degree_fractions(stats);

  nlohmann::json j{{"total_sentences", stats.total_sentences},
                   {"degree_counts", stats.degree_counts},
                   {"degree_fractions", stats.degree_fractions},
                   {"degree1_by_position", stats.degree1_by_position},
                   {"cutoffs", spec.cutoffs},
                   {"percentiles", spec.percentiles}};
  nlohmann::json hists = nlohmann::json::array();
  for (size_t i = 0; i < labeled.size(); ++i) {
    hists.push_back({{"id", labeled[i].doc.id},
                     {"histogram", stats.per_doc_histograms[i]}});
  }
  j["per_document"] = std::move(hists);
  std::filesystem::create_directories(common.out_dir);
  const std::string path = common.out_dir + "/salience_stats.json";
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  rc.write_effective(common.out_dir);
  std::cout << "stats -> " << path << "\n";
  return 0;
}

// ---- ablate --------------------------------------------------------------------

struct AblateVariant {
  std::string name;
  train::TrainConfig tcfg;
  decode::DecodeConfig dcfg;
  int train_group;  // variants sharing a group share one trained model
};

struct VariantScores {
  std::vector<double> r1, r2, rl;
};

int cmd_ablate(const CommonArgs& common, const std::string& corpus_path,
               const std::string& test_path, const std::string& suite,
               const std::string& seeds_csv,
               const std::string& thresholds_path) {
  config::RunConfig rc = make_run_config(common);
  const auto labeled = salience::load_labeled_corpus(corpus_path);
  const auto test_docs = corpus::load_corpus(test_path);
  if (labeled.empty() || test_docs.empty()) {
    throw InputError("ablate: empty corpus or test set");
  }
  std::vector<uint64_t> seeds;
  for (double s :
       config::parse_fraction_list(seeds_csv.empty() ? "1,2,3,4,5"
                                                     : seeds_csv)) {
    seeds.push_back(static_cast<uint64_t>(s));
  }

  salience::ThresholdSpec spec;
  const salience::ThresholdSpec* spec_ptr = nullptr;
  if (!thresholds_path.empty()) {
    spec = salience::load_threshold_spec(thresholds_path);
    spec_ptr = &spec;
  }

  const train::TrainConfig base_t = rc.train;
  const decode::DecodeConfig base_d = rc.decode;
  auto soft = base_d;
  soft.estimation = decode::DecodeConfig::Estimation::kSoft;
  std::vector<AblateVariant> variants;
  if (suite == "mtl_only") {
    auto zero_d = base_d;
    zero_d.estimation = decode::DecodeConfig::Estimation::kZero;
    auto mtl = base_t;
    mtl.zero_guidance = true;
    auto plain = base_t;
    plain.zero_guidance = true;
    plain.alpha = 0.0;
    variants = {{"mtl_only", mtl, zero_d, 0},
                {"no_mtl(alpha=0)", plain, zero_d, 1}};
  } else if (suite == "no_saca") {
    auto zero_d = base_d;
    zero_d.estimation = decode::DecodeConfig::Estimation::kZero;
    auto no_saca = base_t;
    no_saca.zero_guidance = true;
    variants = {{"full(saca,soft)", base_t, soft, 0},
                {"no_saca(mtl only)", no_saca, zero_d, 1}};
  } else if (suite == "gold_guidance") {
    if (spec_ptr == nullptr) {
      throw InputError("gold_guidance suite needs --thresholds");
    }
    auto gold = base_d;
    gold.estimation = decode::DecodeConfig::Estimation::kGold;
    variants = {{"predicted(soft)", base_t, soft, 0},
                {"gold_guidance", base_t, gold, 0}};
  } else if (suite == "hard_vs_soft") {
    auto hard = base_d;
    hard.estimation = decode::DecodeConfig::Estimation::kHard;
    variants = {{"soft", base_t, soft, 0}, {"hard", base_t, hard, 0}};
  } else if (suite == "tau_sweep") {
    for (double tau : {0.25, 0.5, 1.0}) {
      auto d = soft;
      d.tau = tau;
      variants.push_back(
          {"tau=" + std::to_string(tau).substr(0, 4), base_t, d, 0});
    }
  } else if (suite == "alpha_sweep") {
    int group = 0;
    for (double alpha : {0.5, 1.5, 2.5}) {
      auto t = base_t;
      t.alpha = alpha;
      variants.push_back(
          {"alpha=" + std::to_string(alpha).substr(0, 3), t, soft, group++});
    }
  } else if (suite == "smoothing") {
    auto uniform = base_t;
    uniform.smoothing = train::TrainConfig::Smoothing::kUniform;
    auto none = base_t;
    none.beta = 0.0;
    variants = {{"adjacent", base_t, soft, 0},
                {"uniform_others", uniform, soft, 1},
                {"no_smoothing", none, soft, 2}};
  } else {
    throw InputError(
        "unknown suite: " + suite +
        " (mtl_only|no_saca|gold_guidance|hard_vs_soft|tau_sweep|alpha_sweep|"
        "smoothing)");
  }

  corpus::Vocabulary vocab = vocab_from_labeled(labeled, 8000);
  model::ModelConfig mcfg = rc.model;
  mcfg.vocab_size = vocab.size();
  const auto examples =
      train::make_train_examples(labeled, vocab, rc.max_src, rc.max_tgt);

  std::map<std::string, VariantScores> scores;
  for (uint64_t seed : seeds) {
    // Train once per distinct train_group, then decode all of its variants.
    std::map<int, model::Parameters> trained;
    for (const AblateVariant& v : variants) {
      if (trained.count(v.train_group)) continue;
      train::TrainConfig tcfg = v.tcfg;
      tcfg.seed = seed;
      model::Parameters params = model::Parameters::init(mcfg, seed);
      log_info("ablate: training group " + std::to_string(v.train_group) +
               " seed " + std::to_string(seed));
      train::train(params, mcfg, tcfg, examples, {}, {});
      trained.emplace(v.train_group, std::move(params));
    }
    for (const AblateVariant& v : variants) {
      const model::Inference inf(trained.at(v.train_group), mcfg);
      const auto generated = decode::generate(inf, vocab, test_docs, spec_ptr,
                                              v.dcfg, rc.max_src, rc.max_tgt);
      std::vector<decode::GeneratedSummary> summaries;
      for (const auto& g : generated) summaries.push_back({g.id, g.summary});
      const report::EvalReport rep = report::evaluate(summaries, test_docs);
      scores[v.name].r1.push_back(rep.rouge1);
      scores[v.name].r2.push_back(rep.rouge2);
      scores[v.name].rl.push_back(rep.rougeL);
    }
  }

  auto mean_std = [](const std::vector<double>& xs) {
    const double mean =
        std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / double(xs.size() - 1) : 0.0;
    return std::pair<double, double>{mean, std::sqrt(var)};
  };

  std::cout << "suite " << suite << " over " << seeds.size() << " seeds\n";
  std::cout << "variant                     R1 mean+-std     R2 mean+-std     "
               "RL mean+-std\n";
  nlohmann::json j = nlohmann::json::array();
  for (const AblateVariant& v : variants) {
    const VariantScores& s = scores[v.name];
    const auto [m1, d1] = mean_std(s.r1);
    const auto [m2, d2] = mean_std(s.r2);
    const auto [ml, dl] = mean_std(s.rl);
    std::ostringstream row;
    row.setf(std::ios::fixed);
    row.precision(4);
    row << v.name;
    for (size_t pad = v.name.size(); pad < 26; ++pad) row << ' ';
    row << "  " << m1 << "+-" << d1 << "  " << m2 << "+-" << d2 << "  " << ml
        << "+-" << dl;
    std::cout << row.str() << "\n";
    j.push_back({{"variant", v.name},
                 {"rouge1_mean", m1},
                 {"rouge1_std", d1},
                 {"rouge2_mean", m2},
                 {"rouge2_std", d2},
                 {"rougeL_mean", ml},
                 {"rougeL_std", dl},
                 {"seeds", seeds}});
  }
  std::filesystem::create_directories(common.out_dir);
  std::ofstream out(common.out_dir + "/ablation_" + suite + ".json");
  out << j.dump(2) << "\n";
  rc.write_effective(common.out_dir);
  std::cout << "table -> " << common.out_dir << "/ablation_" << suite
            << ".json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"salience-guided abstractive summarization (desk scale)"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string corpus_path, val_path, vocab_path, resume_path, checkpoint_path;
  std::string thresholds_path, percentiles_csv, grid_csv, eval_mode = "proxy";
  std::string estimation, out_file, generated_path, reference_path;
  std::string report_path, suite, seeds_csv;
  int max_degrees = 4;
  int vocab_max = 8000;

  auto* label =
      app.add_subcommand("label", "label a corpus with salience degrees");
  add_common(label, common);
  label->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  label->add_option("--percentiles", percentiles_csv,
                    "cumulative-from-top fractions, e.g. 0.15,0.50");
  label->add_option("--thresholds", thresholds_path,
                    "apply an existing threshold spec instead");

  auto* search = app.add_subcommand("search-thresholds",
                                    "greedy search for degree thresholds");
  add_common(search, common);
  search->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  search->add_option("--grid", grid_csv,
                     "candidate fractions (default 0.05..0.95)");
  search->add_option("--max-degrees", max_degrees, "largest L to search");
  search->add_option("--eval-mode", eval_mode, "proxy|train");

  auto* train_cmd = app.add_subcommand("train", "multi-task training");
  add_common(train_cmd, common);
  train_cmd->add_option("--corpus", corpus_path, "labeled corpus JSONL")
      ->required();
  train_cmd->add_option("--val", val_path, "validation corpus JSONL");
  train_cmd->add_option("--vocab", vocab_path, "existing vocabulary file");
  train_cmd->add_option("--vocab-max", vocab_max, "vocabulary size cap");
  train_cmd->add_option("--resume", resume_path, "last checkpoint to resume");

  auto* gen = app.add_subcommand("generate", "summarize a corpus");
  add_common(gen, common);
  gen->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();
  gen->add_option("--vocab", vocab_path, "vocabulary file")->required();
  gen->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  gen->add_option("--thresholds", thresholds_path,
                  "threshold spec (needed for gold estimation)");
  gen->add_option("--estimation", estimation, "soft|hard|gold|zero");
  gen->add_option("--out-file", out_file, "output JSONL path");

  auto* eval = app.add_subcommand("evaluate", "score generated summaries");
  add_common(eval, common);
  eval->add_option("--generated", generated_path, "generated JSONL")
      ->required();
  eval->add_option("--reference", reference_path, "reference corpus JSONL")
      ->required();
  eval->add_option("--report", report_path, "write the report JSON here");

  auto* stats = app.add_subcommand("stats",
                                   "salience statistics of a labeled corpus");
  add_common(stats, common);
  stats->add_option("--corpus", corpus_path, "labeled corpus JSONL")
      ->required();
  stats->add_option("--thresholds", thresholds_path, "threshold spec JSON");

  auto* ablate = app.add_subcommand("ablate", "paired configuration runs");
  add_common(ablate, common);
  ablate->add_option("--corpus", corpus_path, "labeled train corpus JSONL")
      ->required();
  ablate->add_option("--test", reference_path, "held-out corpus JSONL")
      ->required();
  ablate
      ->add_option("--suite", suite,
                   "mtl_only|no_saca|gold_guidance|hard_vs_soft|tau_sweep|"
                   "alpha_sweep|smoothing")
      ->required();
  ablate->add_option("--seeds", seeds_csv,
                     "comma-separated seeds (default 1..5)");
  ablate->add_option("--thresholds", thresholds_path, "threshold spec JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (label->parsed()) {
      return cmd_label(common, corpus_path, percentiles_csv, thresholds_path);
    }
    if (search->parsed()) {
      return cmd_search_thresholds(common, corpus_path, grid_csv, max_degrees,
                                   eval_mode);
    }
    if (train_cmd->parsed()) {
      return cmd_train(common, corpus_path, val_path, vocab_path, resume_path,
                       vocab_max);
    }
    if (gen->parsed()) {
      return cmd_generate(common, checkpoint_path, vocab_path, corpus_path,
                          thresholds_path, estimation, out_file);
    }
    if (eval->parsed()) {
      return cmd_evaluate(generated_path, reference_path, report_path);
    }
    if (stats->parsed()) {
      return cmd_stats(common, corpus_path, thresholds_path);
    }
    if (ablate->parsed()) {
      return cmd_ablate(common, corpus_path, reference_path, suite, seeds_csv,
                        thresholds_path);
    }
  } catch (const InputError& e) {
    log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 1;
  }
  return 0;
}
