#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "season/config_file.hpp"
#include "season/report.hpp"
#include "support/synthetic.hpp"

using namespace season;

namespace {

std::vector<decode::GeneratedSummary> copy_references(
    const std::vector<corpus::RawDocument>& docs) {
  std::vector<decode::GeneratedSummary> out;
  for (const auto& d : docs) out.push_back({d.id, d.summary});
  return out;
}

}  // namespace

TEST_CASE("evaluating references against themselves yields perfect ROUGE") {
  testing::SyntheticOptions opt;
  opt.n_docs = 9;
  opt.seed = 2;
  const auto docs = testing::make_synthetic_corpus(opt);
  const report::EvalReport rep =
      report::evaluate(copy_references(docs), docs);
  CHECK(rep.n_docs == 9);
  CHECK(rep.rouge1 == doctest::Approx(1.0));
  CHECK(rep.rouge2 == doctest::Approx(1.0));
  CHECK(rep.rougeL == doctest::Approx(1.0));
  CHECK(rep.avg_summary_length ==
        doctest::Approx(rep.avg_reference_length));
  // 9 documents split 3/3/3 by density rank.
  REQUIRE(rep.density_subsets.size() == 3);
  for (const auto& s : rep.density_subsets) CHECK(s.n_docs == 3);
  CHECK(rep.density_subsets[0].max_density <=
        rep.density_subsets[2].min_density + 1e-12);
}

TEST_CASE("evaluate is invariant to document order") {
  testing::SyntheticOptions opt;
  opt.n_docs = 12;
  opt.seed = 3;
  const auto docs = testing::make_synthetic_corpus(opt);
  auto gen = copy_references(docs);
  gen[0].summary = "market river signal";  // perturb one output
  const report::EvalReport a = report::evaluate(gen, docs);

  auto shuffled_gen = gen;
  auto shuffled_docs = docs;
  std::mt19937_64 rng(4);
  std::shuffle(shuffled_gen.begin(), shuffled_gen.end(), rng);
  std::shuffle(shuffled_docs.begin(), shuffled_docs.end(), rng);
  const report::EvalReport b = report::evaluate(shuffled_gen, shuffled_docs);
  CHECK(a.rouge1 == doctest::Approx(b.rouge1).epsilon(1e-12));
  CHECK(a.rouge2 == doctest::Approx(b.rouge2).epsilon(1e-12));
  CHECK(a.rougeL == doctest::Approx(b.rougeL).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    CHECK(a.density_subsets[i].rougeL ==
          doctest::Approx(b.density_subsets[i].rougeL).epsilon(1e-12));
  }
}

TEST_CASE("evaluate rejects mismatched id sets") {
  testing::SyntheticOptions opt;
  opt.n_docs = 4;
  opt.seed = 5;
  const auto docs = testing::make_synthetic_corpus(opt);
  auto gen = copy_references(docs);
  gen.pop_back();
  CHECK_THROWS_AS(report::evaluate(gen, docs), IdMismatch);
  gen.push_back({"unknown", "text"});
  CHECK_THROWS_AS(report::evaluate(gen, docs), IdMismatch);
}

TEST_CASE("config file parsing, overrides and serialization") {
  const std::string text = R"(
# comment
[model]
d_model = 64
n_heads = 4

[train]
lr = 0.001
zero_guidance = true
)";
  config::ConfigFile f = config::ConfigFile::parse_string(text);
  CHECK(f.get_int("model", "d_model", 0) == 64);
  CHECK(f.get_double("train", "lr", 0.0) == doctest::Approx(0.001));
  CHECK(f.get_bool("train", "zero_guidance", false));
  CHECK(f.get("missing", "key", "fallback") == "fallback");

  f.set("model.d_model", "32");
  f.set("decode.beam_size", "7");
  config::RunConfig rc = config::RunConfig::from_config(f);
  CHECK(rc.model.d_model == 32);
  CHECK(rc.model.n_heads == 4);
  CHECK(rc.decode.beam_size == 7);
  CHECK(rc.train.zero_guidance);
  CHECK(rc.percentiles == std::vector<double>{0.15, 0.50});

  // Round trip through serialize/parse preserves the effective settings.
  const config::ConfigFile out = rc.to_config();
  const config::RunConfig rc2 =
      config::RunConfig::from_config(config::ConfigFile::parse_string(
          out.serialize()));
  CHECK(rc2.model.d_model == rc.model.d_model);
  CHECK(rc2.decode.beam_size == rc.decode.beam_size);
  CHECK(rc2.train.lr == doctest::Approx(rc.train.lr));

  CHECK_THROWS_AS(config::ConfigFile::parse_string("key = 1\n"), ParseError);
  CHECK_THROWS_AS(config::ConfigFile::parse_string("[s]\nnoequals\n"),
                  ParseError);
  CHECK_THROWS_AS(config::parse_estimation("nope"), InputError);
  CHECK(config::parse_fraction_list("0.15, 0.5") ==
        std::vector<double>{0.15, 0.5});
}
