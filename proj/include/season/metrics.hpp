#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "season/common.hpp"

namespace season::metrics {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct AbstractivenessScore {
  double coverage = 0.0;  // fraction of summary tokens inside shared fragments
  double density = 0.0;   // mean squared fragment length per summary token
};

using Token = std::string;
using TokenSeq = std::vector<Token>;

namespace detail {

PRF prf_from_counts(double overlap, double cand_total, double ref_total);

// Classic O(|a|*|b|) two-row dynamic program. Rows live on the stack for
// short inputs; sentence-vs-summary calls land there.
template <typename T>
int lcs_length_generic(std::span<const T> a, std::span<const T> b) {
  if (a.size() > b.size()) return lcs_length_generic(b, a);
  const size_t la = a.size(), lb = b.size();
  if (la == 0) return 0;
  constexpr size_t kStack = 64;
  int stack_prev[kStack + 1], stack_cur[kStack + 1];
  std::vector<int> heap;
  int *prev, *cur;
  if (la <= kStack) {
    prev = stack_prev;
    cur = stack_cur;
  } else {
    heap.assign(2 * (la + 1), 0);
    prev = heap.data();
    cur = heap.data() + la + 1;
  }
  std::fill(prev, prev + la + 1, 0);
  for (size_t j = 1; j <= lb; ++j) {
    cur[0] = 0;
    const T& bj = b[j - 1];
    int diag = 0;  // prev[i-1]
    int left = 0;  // cur[i-1]; both carried in registers
    for (size_t i = 1; i <= la; ++i) {
      const int up = prev[i];
      const int skip = up > left ? up : left;
      // Branch-free select: token matches on real text are unpredictable,
      // and a mispredicted branch here dominates the whole DP.
      const int m = -static_cast<int>(a[i - 1] == bj);
      left = (m & (diag + 1)) | (~m & skip);
      cur[i] = left;
      diag = up;
    }
    std::swap(prev, cur);
  }
  return prev[la];
}

void insertion_sort_u64(uint64_t* v, int64_t n);

}  // namespace detail

// Sorted n-gram multiset of one sequence, reusable across many overlap
// calls (corpus scoring profiles each summary once). Small integer tokens
// pack whole grams into single words; everything else keeps sorted gram
// start offsets over an owned token copy.
template <typename T>
class NgramProfile {
 public:
  NgramProfile() = default;
  explicit NgramProfile(std::span<const T> seq, int n,
                        bool allow_packed = true)
      : n_(n) {
    if (n < 1) throw Error("ngram profile: n must be >= 1");
    gram_count_ = static_cast<int64_t>(seq.size()) - n + 1;
    if (gram_count_ <= 0) {
      gram_count_ = 0;
      return;
    }
    if constexpr (std::is_integral_v<T>) {
      if (allow_packed && n <= 3) {
        bool packable = true;
        for (const T& t : seq) {
          if (t < T{} || static_cast<uint64_t>(t) >= (1ull << 21)) {
            packable = false;
            break;
          }
        }
        if (packable) {
          packed_.resize(gram_count_);
          for (int64_t i = 0; i < gram_count_; ++i) {
            uint64_t g = 0;
            for (int k = 0; k < n; ++k) {
              g = (g << 21) | static_cast<uint64_t>(seq[i + k]);
            }
            packed_[i] = g;
          }
          if (gram_count_ <= 32) {
            detail::insertion_sort_u64(packed_.data(), gram_count_);
          } else {
            std::sort(packed_.begin(), packed_.end());
          }
          return;
        }
      }
    }
    tokens_.assign(seq.begin(), seq.end());
    offsets_.resize(gram_count_);
    for (int64_t i = 0; i < gram_count_; ++i) {
      offsets_[i] = static_cast<int32_t>(i);
    }
    std::sort(offsets_.begin(), offsets_.end(), [&](int32_t x, int32_t y) {
      for (int k = 0; k < n_; ++k) {
        if (tokens_[x + k] < tokens_[y + k]) return true;
        if (tokens_[y + k] < tokens_[x + k]) return false;
      }
      return false;
    });
  }

  int n() const { return n_; }
  int64_t gram_count() const { return gram_count_; }
  bool packed() const { return !packed_.empty(); }
  std::span<const uint64_t> packed_grams() const { return packed_; }

  // Lexicographic compare of this profile's k-th sorted gram against
  // another profile's m-th (offset form).
  int compare_grams(int64_t k, const NgramProfile& other, int64_t m) const {
    for (int i = 0; i < n_; ++i) {
      const T& x = tokens_[offsets_[k] + i];
      const T& y = other.tokens_[other.offsets_[m] + i];
      if (x < y) return -1;
      if (y < x) return 1;
    }
    return 0;
  }

 private:
  int n_ = 1;
  int64_t gram_count_ = 0;
  std::vector<uint64_t> packed_;
  std::vector<T> tokens_;
  std::vector<int32_t> offsets_;
};

// Size of the multiset intersection of two profiles (clipped counts: each
// gram contributes min(count in a, count in b)).
template <typename T>
int64_t clipped_overlap(const NgramProfile<T>& a, const NgramProfile<T>& b) {
  if (a.n() != b.n()) throw Error("clipped_overlap: profiles differ in n");
  if (a.gram_count() == 0 || b.gram_count() == 0) return 0;
  if (a.packed() && b.packed()) {
    const std::span<const uint64_t> ga = a.packed_grams();
    const std::span<const uint64_t> gb = b.packed_grams();
    int64_t overlap = 0;
    size_t x = 0, y = 0;
    while (x < ga.size() && y < gb.size()) {
      if (ga[x] < gb[y]) {
        ++x;
      } else if (gb[y] < ga[x]) {
        ++y;
      } else {
        const uint64_t v = ga[x];
        int64_t na = 0, nb = 0;
        while (x < ga.size() && ga[x] == v) {
          ++x;
          ++na;
        }
        while (y < gb.size() && gb[y] == v) {
          ++y;
          ++nb;
        }
        overlap += std::min(na, nb);
      }
    }
    return overlap;
  }
  if (a.packed() != b.packed()) {
    // Mixed representations only arise for integral tokens straddling the
    // packing bound; resolving through the offset form keeps one code path.
    throw Error("clipped_overlap: profiles use different representations");
  }
  int64_t overlap = 0, x = 0, y = 0;
  while (x < a.gram_count() && y < b.gram_count()) {
    const int c = a.compare_grams(x, b, y);
    if (c < 0) {
      ++x;
    } else if (c > 0) {
      ++y;
    } else {
      int64_t na = 1, nb = 1;
      while (x + na < a.gram_count() && a.compare_grams(x + na, a, x) == 0) {
        ++na;
      }
      while (y + nb < b.gram_count() && b.compare_grams(y + nb, b, y) == 0) {
        ++nb;
      }
      overlap += std::min(na, nb);
      x += na;
      y += nb;
    }
  }
  return overlap;
}

// Longest common subsequence length. The overloads share one dynamic
// program; the id form serves token-id sequences and exhaustive checks.
int lcs_length(std::span<const Token> a, std::span<const Token> b);
int lcs_length(std::span<const int> a, std::span<const int> b);

// Clipped n-gram overlap. Either side without n-grams yields all zeros.
PRF rouge_n(std::span<const Token> candidate, std::span<const Token> reference,
            int n);
PRF rouge_n(std::span<const int> candidate, std::span<const int> reference,
            int n);

// Sentence-level ROUGE-L: precision = LCS/|candidate|, recall =
// LCS/|reference|.
PRF rouge_l(std::span<const Token> candidate,
            std::span<const Token> reference);
PRF rouge_l(std::span<const int> candidate, std::span<const int> reference);

// Greedy maximal shared fragments, scanning the summary left to right and
// taking the longest article match at each position (earliest occurrence on
// ties). coverage = sum |f| / |summary|, density = sum |f|^2 / |summary|.
AbstractivenessScore fragment_stats(std::span<const Token> article,
                                    std::span<const Token> summary);

}  // namespace season::metrics
