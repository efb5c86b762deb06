#include "season/salience.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace season::salience {

std::vector<double> score_sentences(
    const std::vector<metrics::TokenSeq>& sentences,
    std::span<const metrics::Token> reference) {
  if (reference.empty()) {
    throw EmptyReference("score_sentences: empty reference");
  }
  if (sentences.empty()) {
    throw EmptyDocument("score_sentences: no sentences");
  }
  std::vector<double> scores(sentences.size());
  for (size_t j = 0; j < sentences.size(); ++j) {
    scores[j] = metrics::rouge_l(sentences[j], reference).f1;
  }
  return scores;
}

std::vector<double> score_document(const corpus::RawDocument& doc) {
  const corpus::SentenceSplit split = corpus::split_sentences(doc.article);
  std::vector<metrics::TokenSeq> sentences;
  sentences.reserve(split.sentences.size());
  for (const std::string& s : split.sentences) {
    sentences.push_back(corpus::tokenize(s));
  }
  const metrics::TokenSeq reference = corpus::tokenize(doc.summary);
  if (reference.empty()) {
    throw MissingReference("document has no reference summary: " + doc.id);
  }
  return score_sentences(sentences, reference);
}

std::vector<double> percentile_cutoffs(std::span<const double> all_scores,
                                       std::span<const double> percentiles) {
  if (all_scores.empty()) {
    throw InputError("percentile_cutoffs: no scores");
  }
  for (size_t i = 0; i < percentiles.size(); ++i) {
    if (!(percentiles[i] > 0.0 && percentiles[i] < 1.0)) {
      throw InputError("percentile_cutoffs: fractions must lie in (0,1)");
    }
    if (i > 0 && percentiles[i] <= percentiles[i - 1]) {
      throw InputError("percentile_cutoffs: fractions must increase");
    }
  }
  std::vector<double> sorted(all_scores.begin(), all_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const auto m = static_cast<double>(sorted.size());
  std::vector<double> cutoffs(percentiles.size());
  for (size_t i = 0; i < percentiles.size(); ++i) {
    auto rank = static_cast<int64_t>(std::ceil(percentiles[i] * m));
    rank = std::clamp<int64_t>(rank, 1, sorted.size());
    cutoffs[i] = sorted[rank - 1];
  }
  return cutoffs;
}

int assign_degree(double score, std::span<const double> cutoffs) {
  int degree = 1;
  for (double c : cutoffs) {
    if (c > score) ++degree;
  }
  return degree;
}

std::vector<int> assign_degrees(std::span<const double> scores,
                                std::span<const double> cutoffs) {
  for (size_t i = 1; i < cutoffs.size(); ++i) {
    if (cutoffs[i] > cutoffs[i - 1]) {
      throw InputError("assign_degrees: cutoffs must be non-increasing");
    }
  }
  std::vector<int> degrees(scores.size());
  for (size_t j = 0; j < scores.size(); ++j) {
    degrees[j] = assign_degree(scores[j], cutoffs);
  }
  return degrees;
}

SmoothedTarget smooth_labels(int gold, int n_degrees, double beta) {
  if (gold < 1 || gold > n_degrees) {
    throw InputError("smooth_labels: gold degree out of range");
  }
  if (beta < 0.0 || beta >= 1.0) {
    throw InputError("smooth_labels: beta must lie in [0,1)");
  }
  SmoothedTarget t;
  t.distribution.assign(n_degrees, 0.0);
  std::vector<int> neighbors;
  if (gold - 2 >= 0) neighbors.push_back(gold - 2);
  if (gold < n_degrees) neighbors.push_back(gold);
  if (neighbors.empty()) {
    t.distribution[gold - 1] = 1.0;
    return t;
  }
  t.distribution[gold - 1] = 1.0 - beta;
  const double share = beta / static_cast<double>(neighbors.size());
  for (int idx : neighbors) t.distribution[idx] += share;
  return t;
}

SmoothedTarget smooth_labels_uniform(int gold, int n_degrees, double beta) {
  if (gold < 1 || gold > n_degrees) {
    throw InputError("smooth_labels_uniform: gold degree out of range");
  }
  if (beta < 0.0 || beta >= 1.0) {
    throw InputError("smooth_labels_uniform: beta must lie in [0,1)");
  }
  SmoothedTarget t;
  t.distribution.assign(n_degrees, 0.0);
  if (n_degrees == 1) {
    t.distribution[0] = 1.0;
    return t;
  }
  const double share = beta / static_cast<double>(n_degrees - 1);
  for (int l = 0; l < n_degrees; ++l) t.distribution[l] = share;
  t.distribution[gold - 1] = 1.0 - beta;
  return t;
}

GreedySearchResult greedy_threshold_search(
    const std::function<double(const std::vector<double>&)>& eval_fn,
    std::span<const double> grid, int max_degrees) {
  if (max_degrees < 2) {
    throw InputError("greedy_threshold_search: max_degrees must be >= 2");
  }
  std::vector<double> pool(grid.begin(), grid.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  for (double p : pool) {
    if (!(p > 0.0 && p < 1.0)) {
      throw InputError("greedy_threshold_search: grid fractions must lie in (0,1)");
    }
  }
  if (static_cast<int>(pool.size()) < max_degrees - 1) {
    throw InsufficientGrid(
        "greedy_threshold_search: grid has " + std::to_string(pool.size()) +
        " fractions, need " + std::to_string(max_degrees - 1));
  }

  GreedySearchResult result;
  std::vector<double> chosen;
  for (int degrees = 2; degrees <= max_degrees; ++degrees) {
    double best_eval = -std::numeric_limits<double>::infinity();
    double best_fraction = 0.0;
    bool found = false;
    for (double p : pool) {
      if (std::find(chosen.begin(), chosen.end(), p) != chosen.end()) continue;
      std::vector<double> candidate = chosen;
      candidate.push_back(p);
      std::sort(candidate.begin(), candidate.end());
      const double value = eval_fn(candidate);
      // Ties break toward the smaller fraction; the pool is ascending, so
      // strict improvement is required to replace.
      if (!found || value > best_eval) {
        best_eval = value;
        best_fraction = p;
        found = true;
      }
    }
    chosen.push_back(best_fraction);
    GreedySearchLevel level;
    level.spec.percentiles = chosen;
    std::sort(level.spec.percentiles.begin(), level.spec.percentiles.end());
    level.spec.n_degrees = degrees;
    level.eval_value = best_eval;
    result.levels.push_back(std::move(level));
  }
  return result;
}

std::function<double(const std::vector<double>&)> make_oracle_guidance_eval(
    const std::vector<corpus::RawDocument>& docs) {
  // Pre-tokenize once; candidates are evaluated many times.
  struct Doc {
    std::vector<metrics::TokenSeq> sentences;
    metrics::TokenSeq reference;
    std::vector<double> scores;
  };
  auto prepared = std::make_shared<std::vector<Doc>>();
  auto all_scores = std::make_shared<std::vector<double>>();
  for (const corpus::RawDocument& d : docs) {
    Doc pd;
    const corpus::SentenceSplit split = corpus::split_sentences(d.article);
    for (const std::string& s : split.sentences) {
      pd.sentences.push_back(corpus::tokenize(s));
    }
    pd.reference = corpus::tokenize(d.summary);
    if (pd.reference.empty()) {
      throw MissingReference("document has no reference summary: " + d.id);
    }
    pd.scores = score_sentences(pd.sentences, pd.reference);
    all_scores->insert(all_scores->end(), pd.scores.begin(), pd.scores.end());
    prepared->push_back(std::move(pd));
  }
  return [prepared, all_scores](const std::vector<double>& fractions) {
    const std::vector<double> cutoffs =
        percentile_cutoffs(*all_scores, fractions);
    double total = 0.0;
    for (const auto& pd : *prepared) {
      metrics::TokenSeq pseudo;
      for (size_t j = 0; j < pd.sentences.size(); ++j) {
        if (assign_degree(pd.scores[j], cutoffs) == 1) {
          pseudo.insert(pseudo.end(), pd.sentences[j].begin(),
                        pd.sentences[j].end());
        }
      }
      total += metrics::rouge_l(pseudo, pd.reference).f1;
    }
    return total / static_cast<double>(prepared->size());
  };
}

std::pair<std::vector<LabeledDocument>, ThresholdSpec> label_corpus(
    const std::vector<corpus::RawDocument>& docs,
    std::span<const double> percentiles) {
  if (docs.empty()) throw InputError("label_corpus: empty corpus");
  std::vector<std::vector<double>> per_doc;
  std::vector<double> all_scores;
  per_doc.reserve(docs.size());
  for (const corpus::RawDocument& d : docs) {
    per_doc.push_back(score_document(d));
    all_scores.insert(all_scores.end(), per_doc.back().begin(),
                      per_doc.back().end());
  }
  ThresholdSpec spec;
  spec.percentiles.assign(percentiles.begin(), percentiles.end());
  spec.cutoffs = percentile_cutoffs(all_scores, percentiles);
  spec.n_degrees = static_cast<int>(percentiles.size()) + 1;

  std::vector<LabeledDocument> labeled;
  labeled.reserve(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    LabeledDocument ld;
    ld.doc = docs[i];
    ld.salience_scores = std::move(per_doc[i]);
    ld.degrees = assign_degrees(ld.salience_scores, spec.cutoffs);
    labeled.push_back(std::move(ld));
  }
  return {std::move(labeled), std::move(spec)};
}

std::vector<LabeledDocument> label_corpus_with_cutoffs(
    const std::vector<corpus::RawDocument>& docs, const ThresholdSpec& spec) {
  std::vector<LabeledDocument> labeled;
  labeled.reserve(docs.size());
  for (const corpus::RawDocument& d : docs) {
    LabeledDocument ld;
    ld.doc = d;
    ld.salience_scores = score_document(d);
    ld.degrees = assign_degrees(ld.salience_scores, spec.cutoffs);
    labeled.push_back(std::move(ld));
  }
  return labeled;
}

SalienceStats salience_stats(const std::vector<LabeledDocument>& docs,
                             const ThresholdSpec& spec) {
  SalienceStats stats;
  stats.thresholds = spec;
  stats.degree_counts.assign(spec.n_degrees, 0);
  size_t max_pos = 0;
  for (const LabeledDocument& d : docs) {
    max_pos = std::max(max_pos, d.degrees.size());
  }
  std::vector<int64_t> degree1(max_pos, 0);
  std::vector<int64_t> at_pos(max_pos, 0);
  for (const LabeledDocument& d : docs) {
    std::vector<int> hist(spec.n_degrees, 0);
    for (size_t j = 0; j < d.degrees.size(); ++j) {
      const int deg = d.degrees[j];
      if (deg < 1 || deg > spec.n_degrees) {
        throw InputError("salience_stats: degree out of range in " + d.doc.id);
      }
      ++hist[deg - 1];
      ++stats.degree_counts[deg - 1];
      ++stats.total_sentences;
      ++at_pos[j];
      if (deg == 1) ++degree1[j];
    }
    stats.per_doc_histograms.push_back(std::move(hist));
  }
  stats.degree_fractions.resize(spec.n_degrees);
  for (int l = 0; l < spec.n_degrees; ++l) {
    stats.degree_fractions[l] =
        stats.total_sentences == 0
            ? 0.0
            : static_cast<double>(stats.degree_counts[l]) /
                  static_cast<double>(stats.total_sentences);
  }
  stats.degree1_by_position.resize(max_pos);
  for (size_t j = 0; j < max_pos; ++j) {
    stats.degree1_by_position[j] =
        at_pos[j] == 0 ? 0.0
                       : static_cast<double>(degree1[j]) /
                             static_cast<double>(at_pos[j]);
  }
  return stats;
}

std::vector<LabeledDocument> load_labeled_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open labeled corpus: " + path);
  std::vector<LabeledDocument> docs;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.contains("id") || !j.contains("article") || !j.contains("summary")) {
      throw ParseError(line_no, "expected id/article/summary fields");
    }
    LabeledDocument d;
    d.doc.id = j["id"].get<std::string>();
    d.doc.article = j["article"].get<std::string>();
    d.doc.summary = j["summary"].get<std::string>();
    if (!seen.insert(d.doc.id).second) {
      throw DuplicateId("duplicate document id: " + d.doc.id);
    }
    if (j.contains("salience_scores")) {
      d.salience_scores = j["salience_scores"].get<std::vector<double>>();
    }
    if (j.contains("degrees")) {
      d.degrees = j["degrees"].get<std::vector<int>>();
    }
    if (d.salience_scores.size() != d.degrees.size()) {
      throw ParseError(line_no, "salience_scores and degrees length mismatch");
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

void save_labeled_corpus(const std::vector<LabeledDocument>& docs,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for write: " + path);
  for (const LabeledDocument& d : docs) {
    nlohmann::json j{{"id", d.doc.id},
                     {"article", d.doc.article},
                     {"summary", d.doc.summary},
                     {"salience_scores", d.salience_scores},
                     {"degrees", d.degrees}};
    out << j.dump() << "\n";
  }
}

void save_threshold_spec(const ThresholdSpec& spec, const std::string& path) {
  nlohmann::json j{{"percentiles", spec.percentiles},
                   {"cutoffs", spec.cutoffs},
                   {"n_degrees", spec.n_degrees}};
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for write: " + path);
  out << j.dump(2) << "\n";
}

ThresholdSpec load_threshold_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open threshold spec: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("invalid threshold spec: ") + e.what());
  }
  ThresholdSpec spec;
  spec.percentiles = j.at("percentiles").get<std::vector<double>>();
  spec.cutoffs = j.at("cutoffs").get<std::vector<double>>();
  spec.n_degrees = j.at("n_degrees").get<int>();
  return spec;
}

}  // namespace season::salience
