#ifndef WGSUM_SYNTHETIC_HPP_
#define WGSUM_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "wgsum/corpus.hpp"

namespace wgsum {

/// Annotated chest-radiograph-style reports from a small template grammar.
/// Each findings sentence carries entity spans and dependency arcs, and the
/// impression is a deterministic function of the findings: abnormal,
/// uncertain and device sentences are restated in order of appearance,
/// normal and negated sentences are dropped.
std::vector<Report> synthetic_corpus(std::size_t count, std::uint64_t seed,
                                     const std::string& id_prefix = "syn");

/// The running example: an endotracheal tube, a moderate left pleural
/// effusion that is mentioned twice, and a normal heart.
Report figure_example();

}  // namespace wgsum

#endif  // WGSUM_SYNTHETIC_HPP_
