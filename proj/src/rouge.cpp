#include "wgsum/rouge.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

namespace wgsum {
namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts count_ngrams(std::span<const std::string> tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

RougeScore score_from(double overlap, double hyp_total, double ref_total) {
  RougeScore s;
  if (hyp_total > 0) s.precision = overlap / hyp_total;
  if (ref_total > 0) s.recall = overlap / ref_total;
  if (s.precision + s.recall > 0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

}  // namespace

RougeScore rouge_n(std::span<const std::string> reference, std::span<const std::string> hypothesis,
                   int n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be at least 1");
  const NgramCounts ref = count_ngrams(reference, n);
  const NgramCounts hyp = count_ngrams(hypothesis, n);
  int overlap = 0;
  for (const auto& [gram, count] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  const auto total = [n](std::span<const std::string> t) {
    return static_cast<double>(std::max<int>(0, static_cast<int>(t.size()) - n + 1));
  };
  return score_from(overlap, total(hypothesis), total(reference));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  const double lcs = static_cast<double>(lcs_length(reference, hypothesis));
  return score_from(lcs, static_cast<double>(hypothesis.size()),
                    static_cast<double>(reference.size()));
}

RougeSet rouge_all(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  return {rouge_n(reference, hypothesis, 1), rouge_n(reference, hypothesis, 2),
          rouge_l(reference, hypothesis)};
}

}  // namespace wgsum
