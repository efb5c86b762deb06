#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "season/metrics.hpp"
#include "support/oracles.hpp"

using namespace season;
using metrics::TokenSeq;

namespace {

TokenSeq seq(std::initializer_list<const char*> toks) {
  TokenSeq out;
  for (const char* t : toks) out.emplace_back(t);
  return out;
}

TokenSeq from_ints(std::span<const int> ids) {
  TokenSeq out;
  for (int v : ids) out.push_back(std::string(1, char('a' + v)));
  return out;
}

}  // namespace

TEST_CASE("lcs_length basics") {
  CHECK(metrics::lcs_length(seq({"x"}), seq({"x"})) == 1);
  CHECK(metrics::lcs_length(seq({"a", "b", "c"}), {}) == 0);
  // Frozen from the enumeration oracle below.
  CHECK(metrics::lcs_length(seq({"a", "b", "c", "d"}),
                            seq({"a", "c", "d", "e"})) == 3);
  const std::vector<int> a = {0, 1, 2, 3}, b = {0, 2, 3, 4};
  CHECK(testing::lcs_enumeration(a, b) == 3);
}

TEST_CASE("lcs_length equals exhaustive enumeration on random short pairs") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(0, 7);
  std::uniform_int_distribution<int> sym(0, 2);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<int> a(len(rng)), b(len(rng));
    for (int& v : a) v = sym(rng);
    for (int& v : b) v = sym(rng);
    CHECK(metrics::lcs_length(from_ints(a), from_ints(b)) ==
          testing::lcs_enumeration(a, b));
  }
}

TEST_CASE("monotone LCS: appending the same token adds exactly one") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(0, 6);
  std::uniform_int_distribution<int> sym(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(len(rng)), b(len(rng));
    for (int& v : a) v = sym(rng);
    for (int& v : b) v = sym(rng);
    const int base = metrics::lcs_length(from_ints(a), from_ints(b));
    const int tok = sym(rng);
    a.push_back(tok);
    b.push_back(tok);
    CHECK(metrics::lcs_length(from_ints(a), from_ints(b)) == base + 1);
  }
}

TEST_CASE("rouge_n basics") {
  const TokenSeq four = seq({"a", "b", "c", "d"});
  const metrics::PRF same = metrics::rouge_n(four, four, 1);
  CHECK(same.precision == doctest::Approx(1.0));
  CHECK(same.recall == doctest::Approx(1.0));
  CHECK(same.f1 == doctest::Approx(1.0));

  const metrics::PRF disjoint =
      metrics::rouge_n(seq({"a", "b"}), seq({"c", "d"}), 1);
  CHECK(disjoint.precision == 0.0);
  CHECK(disjoint.recall == 0.0);
  CHECK(disjoint.f1 == 0.0);

  // Clipped counts: cand [a,a,b] vs ref [a,b,b] overlaps twice.
  const metrics::PRF clipped =
      metrics::rouge_n(seq({"a", "a", "b"}), seq({"a", "b", "b"}), 1);
  CHECK(clipped.precision == doctest::Approx(2.0 / 3.0));
  CHECK(clipped.recall == doctest::Approx(2.0 / 3.0));
  CHECK(clipped.f1 == doctest::Approx(2.0 / 3.0));

  // Too short for bigrams: all zero.
  const metrics::PRF none = metrics::rouge_n(seq({"a"}), seq({"a", "b"}), 2);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("rouge_n equals first-fit matching oracle on random pairs") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(0, 8);
  std::uniform_int_distribution<int> sym(0, 2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> a(len(rng)), b(len(rng));
    for (int& v : a) v = sym(rng);
    for (int& v : b) v = sym(rng);
    for (int n = 1; n <= 2; ++n) {
      const int64_t overlap = testing::ngram_overlap_matching(a, b, n);
      const int64_t cg = static_cast<int64_t>(a.size()) - n + 1;
      const int64_t rg = static_cast<int64_t>(b.size()) - n + 1;
      const metrics::PRF got = metrics::rouge_n(from_ints(a), from_ints(b), n);
      if (cg <= 0 || rg <= 0) {
        CHECK(got.f1 == 0.0);
      } else {
        CHECK(got.precision == doctest::Approx(double(overlap) / double(cg)));
        CHECK(got.recall == doctest::Approx(double(overlap) / double(rg)));
      }
    }
  }
}

TEST_CASE("rouge_l basics and F1 symmetry") {
  const TokenSeq cand = seq({"a", "b", "c", "d"});
  const TokenSeq ref = seq({"a", "c", "d", "e"});
  const metrics::PRF prf = metrics::rouge_l(cand, ref);
  CHECK(prf.precision == doctest::Approx(0.75));
  CHECK(prf.recall == doctest::Approx(0.75));
  CHECK(prf.f1 == doctest::Approx(0.75));

  CHECK(metrics::rouge_l(cand, cand).f1 == doctest::Approx(1.0));
  CHECK(metrics::rouge_l({}, ref).f1 == 0.0);

  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> len(0, 8);
  std::uniform_int_distribution<int> sym(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(len(rng)), b(len(rng));
    for (int& v : a) v = sym(rng);
    for (int& v : b) v = sym(rng);
    const metrics::PRF ab = metrics::rouge_l(from_ints(a), from_ints(b));
    const metrics::PRF ba = metrics::rouge_l(from_ints(b), from_ints(a));
    CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-12));
    CHECK(ab.precision == doctest::Approx(ba.recall).epsilon(1e-12));
  }
}

TEST_CASE("fragment_stats greedy matching") {
  // Verbatim substring: one fragment covering the summary.
  const TokenSeq article = seq({"u", "v", "w", "x", "y", "z"});
  const TokenSeq sub = seq({"v", "w", "x", "y", "z"});
  const metrics::AbstractivenessScore verbatim =
      metrics::fragment_stats(article, sub);
  CHECK(verbatim.coverage == doctest::Approx(1.0));
  CHECK(verbatim.density == doctest::Approx(5.0));

  // Disjoint vocabulary: nothing shared.
  const metrics::AbstractivenessScore none =
      metrics::fragment_stats(article, seq({"q", "r"}));
  CHECK(none.coverage == 0.0);
  CHECK(none.density == 0.0);

  // Hand-applied greedy rule: fragments [a,b] and [c,d].
  const metrics::AbstractivenessScore mixed = metrics::fragment_stats(
      seq({"a", "b", "c", "d"}), seq({"a", "b", "x", "c", "d"}));
  CHECK(mixed.coverage == doctest::Approx(4.0 / 5.0));
  CHECK(mixed.density == doctest::Approx(8.0 / 5.0));

  CHECK_THROWS_AS(metrics::fragment_stats(article, {}), EmptySummary);
}

TEST_CASE("density is at least coverage when coverage is positive") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> alen(1, 12), slen(1, 8);
  std::uniform_int_distribution<int> sym(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> a(alen(rng)), s(slen(rng));
    for (int& v : a) v = sym(rng);
    for (int& v : s) v = sym(rng);
    const auto score = metrics::fragment_stats(from_ints(a), from_ints(s));
    CHECK(score.coverage <= 1.0 + 1e-12);
    if (score.coverage > 0.0) {
      CHECK(score.density >= score.coverage - 1e-12);
    }
  }
}
