#ifndef WGSUM_ROUGE_HPP_
#define WGSUM_ROUGE_HPP_

#include <span>
#include <string>

namespace wgsum {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Clipped n-gram overlap. Either side shorter than n gives all zeros.
RougeScore rouge_n(std::span<const std::string> reference, std::span<const std::string> hypothesis,
                   int n);

/// Longest-common-subsequence overlap.
RougeScore rouge_l(std::span<const std::string> reference, std::span<const std::string> hypothesis);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeSet {
  RougeScore r1;
  RougeScore r2;
  RougeScore rl;
};

RougeSet rouge_all(std::span<const std::string> reference, std::span<const std::string> hypothesis);

}  // namespace wgsum

#endif  // WGSUM_ROUGE_HPP_
