#include "season/report.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace season::report {

EvalReport evaluate(const std::vector<decode::GeneratedSummary>& generated,
                    const std::vector<corpus::RawDocument>& references) {
  std::unordered_map<std::string, const corpus::RawDocument*> by_id;
  for (const corpus::RawDocument& d : references) by_id[d.id] = &d;
  if (by_id.size() != references.size()) {
    throw DuplicateId("evaluate: duplicate reference ids");
  }
  if (generated.size() != references.size()) {
    throw IdMismatch("evaluate: " + std::to_string(generated.size()) +
                     " generated vs " + std::to_string(references.size()) +
                     " reference documents");
  }

  struct DocScore {
    std::string id;
    double r1, r2, rl;
    double density;
    double gen_len, ref_len;
  };
  std::vector<DocScore> docs;
  docs.reserve(generated.size());
  for (const decode::GeneratedSummary& g : generated) {
    auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      throw IdMismatch("evaluate: generated id not in references: " + g.id);
    }
    const corpus::RawDocument& ref = *it->second;
    const metrics::TokenSeq cand = corpus::tokenize(g.summary);
    const metrics::TokenSeq gold = corpus::tokenize(ref.summary);
    if (gold.empty()) {
      throw MissingReference("evaluate: empty reference summary: " + ref.id);
    }
    const metrics::TokenSeq article = corpus::tokenize(ref.article);
    DocScore ds;
    ds.id = g.id;
    ds.r1 = metrics::rouge_n(cand, gold, 1).f1;
    ds.r2 = metrics::rouge_n(cand, gold, 2).f1;
    ds.rl = metrics::rouge_l(cand, gold).f1;
    ds.density = metrics::fragment_stats(article, gold).density;
    ds.gen_len = static_cast<double>(cand.size());
    ds.ref_len = static_cast<double>(gold.size());
    docs.push_back(std::move(ds));
  }

  EvalReport rep;
  rep.n_docs = static_cast<int>(docs.size());
  for (const DocScore& d : docs) {
    rep.rouge1 += d.r1;
    rep.rouge2 += d.r2;
    rep.rougeL += d.rl;
    rep.avg_summary_length += d.gen_len;
    rep.avg_reference_length += d.ref_len;
  }
  const double inv = docs.empty() ? 0.0 : 1.0 / double(docs.size());
  rep.rouge1 *= inv;
  rep.rouge2 *= inv;
  rep.rougeL *= inv;
  rep.avg_summary_length *= inv;
  rep.avg_reference_length *= inv;

  // Equal-size abstractiveness split by reference density (ascending; ties
  // by id for determinism).
  std::vector<int> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (docs[a].density != docs[b].density) {
      return docs[a].density < docs[b].density;
    }
    return docs[a].id < docs[b].id;
  });
  const char* names[3] = {"abstractive", "mixed", "extractive"};
  const size_t n = order.size();
  for (int bucket = 0; bucket < 3; ++bucket) {
    const size_t begin = n * bucket / 3;
    const size_t end = n * (bucket + 1) / 3;
    SubsetScores ss;
    ss.name = names[bucket];
    ss.n_docs = static_cast<int>(end - begin);
    if (begin < end) {
      ss.min_density = docs[order[begin]].density;
      ss.max_density = docs[order[end - 1]].density;
      for (size_t i = begin; i < end; ++i) {
        ss.rouge1 += docs[order[i]].r1;
        ss.rouge2 += docs[order[i]].r2;
        ss.rougeL += docs[order[i]].rl;
      }
      ss.rouge1 /= double(ss.n_docs);
      ss.rouge2 /= double(ss.n_docs);
      ss.rougeL /= double(ss.n_docs);
    }
    rep.density_subsets.push_back(std::move(ss));
  }
  return rep;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::json subsets = nlohmann::json::array();
  for (const SubsetScores& s : r.density_subsets) {
    subsets.push_back({{"name", s.name},
                       {"n_docs", s.n_docs},
                       {"rouge1", s.rouge1},
                       {"rouge2", s.rouge2},
                       {"rougeL", s.rougeL},
                       {"min_density", s.min_density},
                       {"max_density", s.max_density}});
  }
  nlohmann::json j{{"n_docs", r.n_docs},
                   {"rouge1", r.rouge1},
                   {"rouge2", r.rouge2},
                   {"rougeL", r.rougeL},
                   {"avg_summary_length", r.avg_summary_length},
                   {"avg_reference_length", r.avg_reference_length},
                   {"density_subsets", std::move(subsets)}};
  return j.dump(2);
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "documents: " << r.n_docs << "\n";
  os << "rouge-1 F1: " << r.rouge1 << "  rouge-2 F1: " << r.rouge2
     << "  rouge-L F1: " << r.rougeL << "\n";
  os << "avg summary length: " << r.avg_summary_length
     << " (reference: " << r.avg_reference_length << ")\n";
  os << "by abstractiveness (fragment density of references):\n";
  for (const SubsetScores& s : r.density_subsets) {
    os << "  " << s.name << " (n=" << s.n_docs << ", density " << s.min_density
       << ".." << s.max_density << "): R1 " << s.rouge1 << "  R2 " << s.rouge2
       << "  RL " << s.rougeL << "\n";
  }
  return os.str();
}

}  // namespace season::report
