#pragma once

#include <string>
#include <vector>

#include "season/corpus.hpp"
#include "season/decode.hpp"
#include "season/metrics.hpp"

namespace season::report {

struct SubsetScores {
  std::string name;  // abstractive | mixed | extractive
  int n_docs = 0;
  double rouge1 = 0.0, rouge2 = 0.0, rougeL = 0.0;
  double min_density = 0.0, max_density = 0.0;
};

struct EvalReport {
  int n_docs = 0;
  double rouge1 = 0.0, rouge2 = 0.0, rougeL = 0.0;  // mean F1 over documents
  double avg_summary_length = 0.0;  // mean generated token count
  double avg_reference_length = 0.0;
  std::vector<SubsetScores> density_subsets;
};

// Corpus ROUGE plus a three-way equal-size split by extractive fragment
// density of the reference summaries. Generated and reference sets must
// cover the same ids (IdMismatch otherwise); document order is irrelevant.
EvalReport evaluate(const std::vector<decode::GeneratedSummary>& generated,
                    const std::vector<corpus::RawDocument>& references);

std::string report_to_json(const EvalReport& report);
std::string format_report(const EvalReport& report);

}  // namespace season::report
