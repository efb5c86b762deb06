#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "season/common.hpp"
#include "season/corpus.hpp"
#include "season/metrics.hpp"

namespace season::salience {

// Per-sentence salience for one document. Degree 1 is the most salient;
// degrees run 1..n_degrees.
struct SalienceAllocation {
  std::vector<double> scores;  // ROUGE-L F1 of each sentence vs the reference
  std::vector<int> degrees;
  int n_degrees = 0;
};

// Percentile fractions are cumulative from the top and strictly increasing,
// e.g. {0.15, 0.50} = boundaries of the top 15% and the top 50%. cutoffs are
// the realized score values on a corpus, non-increasing.
struct ThresholdSpec {
  std::vector<double> percentiles;
  std::vector<double> cutoffs;
  int n_degrees = 0;
};

struct SmoothedTarget {
  std::vector<double> distribution;  // length L, sums to 1
};

struct LabeledDocument {
  corpus::RawDocument doc;
  std::vector<double> salience_scores;
  std::vector<int> degrees;
};

// ROUGE-L F1 of every sentence against the reference token sequence.
std::vector<double> score_sentences(
    const std::vector<metrics::TokenSeq>& sentences,
    std::span<const metrics::Token> reference);

// Convenience: split + tokenize the article, tokenize the summary.
std::vector<double> score_document(const corpus::RawDocument& doc);

// Nearest-rank from the top: the cutoff for fraction p is the score at rank
// ceil(p*M) (1-based) in descending order over all M scores.
std::vector<double> percentile_cutoffs(std::span<const double> all_scores,
                                       std::span<const double> percentiles);

// degree(s) = 1 + number of cutoffs strictly greater than s; a score equal
// to a cutoff joins the more salient class.
std::vector<int> assign_degrees(std::span<const double> scores,
                                std::span<const double> cutoffs);

int assign_degree(double score, std::span<const double> cutoffs);

// gold keeps 1-beta; beta is split evenly over the in-range neighbors
// gold-1/gold+1 (an edge degree's single neighbor takes all of beta).
SmoothedTarget smooth_labels(int gold, int n_degrees, double beta);

// Variant used by the smoothing ablation: beta spread evenly over all
// non-gold degrees.
SmoothedTarget smooth_labels_uniform(int gold, int n_degrees, double beta);

struct GreedySearchLevel {
  ThresholdSpec spec;
  double eval_value = 0.0;
};

struct GreedySearchResult {
  // Entry k holds the best spec found for L = k + 2 degrees.
  std::vector<GreedySearchLevel> levels;
};

// Greedy threshold search: picks the best single fraction for L=2, then for
// each additional degree keeps the chosen fractions fixed and adds the grid
// fraction maximizing eval_fn (ties to the smaller fraction). eval_fn
// receives ascending cumulative-from-top fractions.
GreedySearchResult greedy_threshold_search(
    const std::function<double(const std::vector<double>&)>& eval_fn,
    std::span<const double> grid, int max_degrees);

// Cheap deterministic eval for threshold search: label each document with
// the candidate fractions (corpus-wide cutoffs), concatenate its degree-1
// sentences as a pseudo summary, and average ROUGE-L F1 vs the reference.
std::function<double(const std::vector<double>&)> make_oracle_guidance_eval(
    const std::vector<corpus::RawDocument>& docs);

// Labels every document: corpus-wide cutoffs at the given percentiles, then
// per-sentence degrees.
std::pair<std::vector<LabeledDocument>, ThresholdSpec> label_corpus(
    const std::vector<corpus::RawDocument>& docs,
    std::span<const double> percentiles);

// Labels with pre-computed cutoffs (e.g. from a saved ThresholdSpec).
std::vector<LabeledDocument> label_corpus_with_cutoffs(
    const std::vector<corpus::RawDocument>& docs, const ThresholdSpec& spec);

struct SalienceStats {
  std::vector<int64_t> degree_counts;
  std::vector<double> degree_fractions;
  std::vector<std::vector<int>> per_doc_histograms;
  // fraction of degree-1 sentences at each 1-based sentence position
  std::vector<double> degree1_by_position;
  ThresholdSpec thresholds;
  int64_t total_sentences = 0;
};

SalienceStats salience_stats(const std::vector<LabeledDocument>& docs,
                             const ThresholdSpec& spec);

// Labeled-corpus JSONL: the corpus line plus salience_scores and degrees.
std::vector<LabeledDocument> load_labeled_corpus(const std::string& path);
void save_labeled_corpus(const std::vector<LabeledDocument>& docs,
                         const std::string& path);

void save_threshold_spec(const ThresholdSpec& spec, const std::string& path);
ThresholdSpec load_threshold_spec(const std::string& path);

}  // namespace season::salience
