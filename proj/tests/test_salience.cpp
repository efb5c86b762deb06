#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "season/salience.hpp"
#include "support/synthetic.hpp"
#include "support/tempfile.hpp"

using namespace season;
using namespace season::salience;

TEST_CASE("score_sentences is per-sentence ROUGE-L F1") {
  const std::vector<metrics::TokenSeq> sentences = {
      {"the", "cat", "sat"}, {"dogs", "bark", "loud"}};
  const metrics::TokenSeq reference = {"the", "cat", "sat"};
  const auto scores = score_sentences(sentences, reference);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0] == doctest::Approx(1.0));
  CHECK(scores[1] == doctest::Approx(0.0));

  // All-identical sentences score identically.
  const std::vector<metrics::TokenSeq> same = {
      {"a", "b"}, {"a", "b"}, {"a", "b"}};
  const metrics::TokenSeq other = {"a", "c"};
  const auto eq = score_sentences(same, other);
  CHECK(eq[0] == doctest::Approx(eq[1]));
  CHECK(eq[1] == doctest::Approx(eq[2]));

  CHECK_THROWS_AS(score_sentences(sentences, {}), EmptyReference);
}

TEST_CASE("percentile cutoffs use nearest rank from the top") {
  std::vector<double> scores;
  for (int i = 10; i >= 1; --i) scores.push_back(i / 10.0);
  const auto cut = percentile_cutoffs(scores, std::vector<double>{0.5});
  CHECK(cut[0] == doctest::Approx(0.6));  // rank ceil(0.5*10) = 5 descending

  const auto single = percentile_cutoffs(std::vector<double>{0.42},
                                         std::vector<double>{0.15});
  CHECK(single[0] == doctest::Approx(0.42));

  const std::vector<double> equal(20, 0.3);
  const auto both = percentile_cutoffs(equal, std::vector<double>{0.15, 0.5});
  CHECK(both[0] == doctest::Approx(0.3));
  CHECK(both[1] == doctest::Approx(0.3));

  CHECK_THROWS_AS(
      percentile_cutoffs(std::vector<double>{}, std::vector<double>{0.5}),
      InputError);
  CHECK_THROWS_AS(
      percentile_cutoffs(scores, std::vector<double>{0.5, 0.15}), InputError);
}

TEST_CASE("assign_degrees: boundary joins the more salient class") {
  const std::vector<double> cutoffs = {0.6, 0.3};
  CHECK(assign_degree(0.9, cutoffs) == 1);
  CHECK(assign_degree(0.6, cutoffs) == 1);
  CHECK(assign_degree(0.5, cutoffs) == 2);
  CHECK(assign_degree(0.3, cutoffs) == 2);
  CHECK(assign_degree(0.1, cutoffs) == 3);
  CHECK(assign_degrees(std::vector<double>{0.9, 0.5, 0.1}, cutoffs) ==
        std::vector<int>{1, 2, 3});
}

TEST_CASE("degree assignment is monotone in the score") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cutoffs = {dist(rng), dist(rng)};
    std::sort(cutoffs.rbegin(), cutoffs.rend());
    const double a = dist(rng), b = dist(rng);
    const int da = assign_degree(std::max(a, b), cutoffs);
    const int db = assign_degree(std::min(a, b), cutoffs);
    CHECK(da <= db);
  }
}

TEST_CASE("labeling is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const std::vector<double> percentiles = {0.15, 0.5};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(40);
    for (double& s : scores) s = dist(rng);
    const auto cut = percentile_cutoffs(scores, percentiles);
    const auto degrees = assign_degrees(scores, cut);

    std::vector<double> warped(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
      warped[i] = std::pow(scores[i], 3) + 2.0 * scores[i];  // increasing
    }
    const auto warped_cut = percentile_cutoffs(warped, percentiles);
    CHECK(assign_degrees(warped, warped_cut) == degrees);
  }
}

TEST_CASE("adjacent label smoothing") {
  CHECK(smooth_labels(2, 3, 0.2).distribution ==
        std::vector<double>{0.1, 0.8, 0.1});
  CHECK(smooth_labels(1, 3, 0.2).distribution ==
        std::vector<double>{0.8, 0.2, 0.0});
  CHECK(smooth_labels(3, 3, 0.2).distribution ==
        std::vector<double>{0.0, 0.2, 0.8});
  CHECK(smooth_labels(2, 3, 0.0).distribution ==
        std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(smooth_labels(4, 3, 0.2), InputError);
  CHECK_THROWS_AS(smooth_labels(1, 3, 1.0), InputError);
}

TEST_CASE("smoothing normalization and argmax across the parameter grid") {
  for (int l = 2; l <= 5; ++l) {
    for (int gold = 1; gold <= l; ++gold) {
      for (double beta : {0.0, 0.1, 0.2, 0.4}) {
        for (bool uniform : {false, true}) {
          const SmoothedTarget t = uniform
                                       ? smooth_labels_uniform(gold, l, beta)
                                       : smooth_labels(gold, l, beta);
          double sum = 0.0;
          int argmax = 0;
          for (int i = 0; i < l; ++i) {
            CHECK(t.distribution[i] >= 0.0);
            sum += t.distribution[i];
            if (t.distribution[i] > t.distribution[argmax]) argmax = i;
          }
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
          if (beta < 0.5) CHECK(argmax == gold - 1);
        }
      }
    }
  }
}

TEST_CASE("greedy threshold search: argmax for L=2, conditional for L=3") {
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);

  // Peak forced at 0.5.
  const auto near_half = [](const std::vector<double>& fr) {
    return -std::fabs(fr[0] - 0.5);
  };
  const auto r2 = greedy_threshold_search(near_half, grid, 2);
  REQUIRE(r2.levels.size() == 1);
  CHECK(r2.levels[0].spec.percentiles == std::vector<double>{0.5});

  // Pair objective peaked at {0.2, 0.6}: greedy first picks 0.6, then 0.2.
  const auto pair_eval = [](const std::vector<double>& fr) {
    if (fr.size() == 1) return -std::fabs(fr[0] - 0.6);
    return -std::fabs(fr[0] - 0.2) - std::fabs(fr[1] - 0.6);
  };
  const auto r3 = greedy_threshold_search(pair_eval, grid, 3);
  REQUIRE(r3.levels.size() == 2);
  CHECK(r3.levels[0].spec.percentiles == std::vector<double>{0.6});
  CHECK(r3.levels[1].spec.percentiles == std::vector<double>{0.2, 0.6});

  // Exhaustive oracle over the grid agrees level by level.
  double best = -1e300;
  double best_p = 0;
  for (double p : grid) {
    const double v = pair_eval({p});
    if (v > best) {
      best = v;
      best_p = p;
    }
  }
  CHECK(best_p == doctest::Approx(r3.levels[0].spec.percentiles[0]));

  CHECK_THROWS_AS(
      greedy_threshold_search(near_half, std::vector<double>{0.5}, 3),
      InsufficientGrid);
}

TEST_CASE("greedy search ties break toward the smaller fraction") {
  const std::vector<double> grid = {0.2, 0.4, 0.6};
  const auto flat = [](const std::vector<double>&) { return 1.0; };
  const auto r = greedy_threshold_search(flat, grid, 2);
  CHECK(r.levels[0].spec.percentiles == std::vector<double>{0.2});
}

TEST_CASE("label_corpus fractions and idempotence") {
  testing::SyntheticOptions opt;
  opt.n_docs = 60;
  opt.seed = 21;
  const auto docs = testing::make_synthetic_corpus(opt);
  const std::vector<double> percentiles = {0.15, 0.5};
  const auto [labeled, spec] = label_corpus(docs, percentiles);
  REQUIRE(labeled.size() == docs.size());
  CHECK(spec.n_degrees == 3);
  CHECK(spec.cutoffs.size() == 2);
  CHECK(spec.cutoffs[0] >= spec.cutoffs[1]);

  const SalienceStats stats = salience_stats(labeled, spec);
  // Degree-1 mass should be close to 15% up to ties at the cutoff.
  int64_t ties0 = 0, ties1 = 0;
  for (const LabeledDocument& d : labeled) {
    for (double s : d.salience_scores) {
      if (s == spec.cutoffs[0]) ++ties0;
      if (s == spec.cutoffs[1]) ++ties1;
    }
  }
  const double m = static_cast<double>(stats.total_sentences);
  CHECK(stats.degree_fractions[0] >= 0.15 - (double(ties0) + 1.0) / m);
  CHECK(stats.degree_fractions[0] <= 0.15 + (double(ties0) + 1.0) / m);
  const double deg3 = stats.degree_fractions[2];
  CHECK(deg3 >= 0.50 - (double(ties1) + 1.0) / m);
  CHECK(deg3 <= 0.50 + (double(ties1) + 1.0) / m);

  // Relabeling already-labeled documents is idempotent.
  std::vector<corpus::RawDocument> again;
  for (const auto& ld : labeled) again.push_back(ld.doc);
  const auto [relabeled, spec2] = label_corpus(again, percentiles);
  CHECK(spec2.cutoffs == spec.cutoffs);
  for (size_t i = 0; i < labeled.size(); ++i) {
    CHECK(relabeled[i].degrees == labeled[i].degrees);
    CHECK(relabeled[i].salience_scores == labeled[i].salience_scores);
  }
}

TEST_CASE("positional stats concentrate on constructed lead sentences") {
  testing::SyntheticOptions opt;
  opt.n_docs = 40;
  opt.separable = true;  // sentence 1 always carries the summary
  opt.min_sentences = 6;
  opt.max_sentences = 6;  // degree-1 share is exactly 1/6 > 0.15
  opt.seed = 22;
  const auto docs = testing::make_synthetic_corpus(opt);
  const auto [labeled, spec] = label_corpus(docs, std::vector<double>{0.15});
  const SalienceStats stats = salience_stats(labeled, spec);
  REQUIRE(!stats.degree1_by_position.empty());
  CHECK(stats.degree1_by_position[0] == doctest::Approx(1.0));
  for (size_t j = 1; j < stats.degree1_by_position.size(); ++j) {
    CHECK(stats.degree1_by_position[j] == 0.0);
  }
  // Single-document corpus: the per-document histogram is the global one.
  const auto [one, spec1] =
      label_corpus({docs.front()}, std::vector<double>{0.3});
  const SalienceStats single = salience_stats(one, spec1);
  REQUIRE(single.per_doc_histograms.size() == 1);
  for (int l = 0; l < spec1.n_degrees; ++l) {
    CHECK(single.per_doc_histograms[0][l] == single.degree_counts[l]);
  }
}

TEST_CASE("labeled corpus and threshold spec files round trip") {
  testing::SyntheticOptions opt;
  opt.n_docs = 8;
  opt.seed = 23;
  const auto docs = testing::make_synthetic_corpus(opt);
  const auto [labeled, spec] = label_corpus(docs, std::vector<double>{0.15, 0.5});

  const std::string base = testing::temp_path("");
  const std::string corpus_path = base + ".labeled.jsonl";
  const std::string spec_path = base + ".thresholds.json";
  save_labeled_corpus(labeled, corpus_path);
  save_threshold_spec(spec, spec_path);

  const auto loaded = load_labeled_corpus(corpus_path);
  REQUIRE(loaded.size() == labeled.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].doc.id == labeled[i].doc.id);
    CHECK(loaded[i].degrees == labeled[i].degrees);
    CHECK(loaded[i].salience_scores == labeled[i].salience_scores);
  }
  const ThresholdSpec spec_loaded = load_threshold_spec(spec_path);
  CHECK(spec_loaded.percentiles == spec.percentiles);
  CHECK(spec_loaded.cutoffs == spec.cutoffs);
  CHECK(spec_loaded.n_degrees == spec.n_degrees);
  std::remove(corpus_path.c_str());
  std::remove(spec_path.c_str());
}
