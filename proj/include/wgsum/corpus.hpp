#ifndef WGSUM_CORPUS_HPP_
#define WGSUM_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace wgsum {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EntityType { Anatomy, Observation, AnatomyModifier, ObservationModifier, Uncertainty };

std::string_view to_string(EntityType type);
std::optional<EntityType> parse_entity_type(std::string_view name);

struct EntitySpan {
  int start = 0;
  int end = 0;  // exclusive
  EntityType type = EntityType::Observation;
  std::optional<int> target;  // index of the modified entity
};

struct DependencyArc {
  int head = -1;  // -1 is the root sentinel
  int dep = 0;
  std::string label;
};

struct Report {
  std::string id;
  std::vector<std::string> findings;
  std::vector<std::string> impression;
  std::vector<EntitySpan> entities;
  std::vector<DependencyArc> deps;
};

/// Lowercases, splits on whitespace and splits punctuation into standalone
/// tokens. A '.' or ',' between two digits stays inside the number.
std::vector<std::string> tokenize(std::string_view text);

/// Checks span and arc indices against the findings length.
void validate_report(const Report& report);

Report report_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const Report& report);

/// Reads one report per line. Blank lines are skipped.
std::vector<Report> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, std::span<const Report> reports);

struct FilterRules {
  std::size_t min_findings_tokens = 10;
  std::size_t min_impression_tokens = 2;
};

/// Drops incomplete reports (an empty section) and reports whose findings or
/// impression are shorter than the rule minimums.
std::vector<Report> filter_corpus(std::span<const Report> reports, const FilterRules& rules = {});

/// Truncates both sections, dropping annotations that fall past the cut.
Report truncate_report(const Report& report, std::size_t max_findings, std::size_t max_impression);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocabulary();

  /// Tokens of both sections with count >= min_count, ordered by descending
  /// frequency then lexicographically.
  static Vocabulary build(std::span<const Report> reports, int min_count = 1);
  static Vocabulary from_tokens(std::span<const std::string> tokens);

  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  /// Learned tokens only, in id order.
  std::vector<std::string> learned_tokens() const;

  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Per-report ids over the extended vocabulary: base ids, then one slot per
/// distinct out-of-vocabulary source token in order of first appearance.
struct CopyEncoding {
  std::vector<int> source_ids;
  /// Impression ids followed by EOS.
  std::vector<int> target_ids;
  std::vector<std::string> oov_tokens;
  int extended_size = 0;
};

/// With `copy` off, no extended slots are created and every OOV maps to UNK.
CopyEncoding encode_with_copy(const Report& report, const Vocabulary& vocab, bool copy = true);

/// Base-vocabulary ids for the findings (OOVs become UNK), used for embeddings.
std::vector<int> embedding_ids(std::span<const int> extended_ids, const Vocabulary& vocab);

std::string id_to_token(int id, const CopyEncoding& encoding, const Vocabulary& vocab);
std::vector<std::string> decode_ids(std::span<const int> ids, const CopyEncoding& encoding,
                                    const Vocabulary& vocab);

}  // namespace wgsum

#endif  // WGSUM_CORPUS_HPP_
