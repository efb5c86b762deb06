#include "season/metrics.hpp"

namespace season::metrics {

namespace detail {

PRF prf_from_counts(double overlap, double cand_total, double ref_total) {
  PRF out;
  if (cand_total <= 0.0 || ref_total <= 0.0) return out;
  out.precision = overlap / cand_total;
  out.recall = overlap / ref_total;
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

void insertion_sort_u64(uint64_t* v, int64_t n) {
  for (int64_t i = 1; i < n; ++i) {
    const uint64_t x = v[i];
    int64_t k = i - 1;
    while (k >= 0 && v[k] > x) {
      v[k + 1] = v[k];
      --k;
    }
    v[k + 1] = x;
  }
}

template <typename T>
PRF rouge_n_generic(std::span<const T> candidate, std::span<const T> reference,
                    int n) {
  if (n < 1) throw Error("rouge_n: n must be >= 1");
  const int64_t cand_grams = static_cast<int64_t>(candidate.size()) - n + 1;
  const int64_t ref_grams = static_cast<int64_t>(reference.size()) - n + 1;
  if (cand_grams <= 0 || ref_grams <= 0) return PRF{};
  NgramProfile<T> cp(candidate, n);
  NgramProfile<T> rp(reference, n);
  if (cp.packed() != rp.packed()) {
    // One side exceeded the packing bound: rebuild both in offset form.
    cp = NgramProfile<T>(candidate, n, /*allow_packed=*/false);
    rp = NgramProfile<T>(reference, n, /*allow_packed=*/false);
  }
  const int64_t overlap = clipped_overlap(cp, rp);
  return prf_from_counts(static_cast<double>(overlap),
                         static_cast<double>(cand_grams),
                         static_cast<double>(ref_grams));
}

template <typename T>
PRF rouge_l_generic(std::span<const T> candidate,
                    std::span<const T> reference) {
  if (candidate.empty() || reference.empty()) return PRF{};
  const int lcs = lcs_length_generic(candidate, reference);
  return prf_from_counts(static_cast<double>(lcs),
                         static_cast<double>(candidate.size()),
                         static_cast<double>(reference.size()));
}

}  // namespace detail

int lcs_length(std::span<const Token> a, std::span<const Token> b) {
  return detail::lcs_length_generic(a, b);
}

int lcs_length(std::span<const int> a, std::span<const int> b) {
  return detail::lcs_length_generic(a, b);
}

PRF rouge_n(std::span<const Token> candidate, std::span<const Token> reference,
            int n) {
  return detail::rouge_n_generic(candidate, reference, n);
}

PRF rouge_n(std::span<const int> candidate, std::span<const int> reference,
            int n) {
  return detail::rouge_n_generic(candidate, reference, n);
}

PRF rouge_l(std::span<const Token> candidate,
            std::span<const Token> reference) {
  return detail::rouge_l_generic(candidate, reference);
}

PRF rouge_l(std::span<const int> candidate, std::span<const int> reference) {
  return detail::rouge_l_generic(candidate, reference);
}

AbstractivenessScore fragment_stats(std::span<const Token> article,
                                    std::span<const Token> summary) {
  if (summary.empty()) throw EmptySummary("fragment_stats: empty summary");
  const size_t m = article.size(), s = summary.size();
  double total = 0.0, total_sq = 0.0;
  size_t i = 0;
  while (i < s) {
    size_t best = 0;
    for (size_t j = 0; j < m; ++j) {
      if (article[j] != summary[i]) continue;
      size_t len = 0;
      while (i + len < s && j + len < m &&
             article[j + len] == summary[i + len]) {
        ++len;
      }
      if (len > best) best = len;  // earliest occurrence wins ties
    }
    if (best > 0) {
      total += static_cast<double>(best);
      total_sq += static_cast<double>(best) * static_cast<double>(best);
      i += best;
    } else {
      ++i;
    }
  }
  AbstractivenessScore out;
  out.coverage = total / static_cast<double>(s);
  out.density = total_sq / static_cast<double>(s);
  return out;
}

}  // namespace season::metrics
