#include "wgsum/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace wgsum {
namespace {

constexpr std::string_view kReservedTokens[] = {"<pad>", "<unk>", "<s>", "</s>"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_punct(char c) {
  return static_cast<unsigned char>(c) < 128 && std::ispunct(static_cast<unsigned char>(c));
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(c));
  }
  return out;
}

}  // namespace

std::string_view to_string(EntityType type) {
  switch (type) {
    case EntityType::Anatomy: return "anatomy";
    case EntityType::Observation: return "observation";
    case EntityType::AnatomyModifier: return "anatomy_modifier";
    case EntityType::ObservationModifier: return "observation_modifier";
    case EntityType::Uncertainty: return "uncertainty";
  }
  return "observation";
}

std::optional<EntityType> parse_entity_type(std::string_view name) {
  for (EntityType t : {EntityType::Anatomy, EntityType::Observation, EntityType::AnatomyModifier,
                       EntityType::ObservationModifier, EntityType::Uncertainty}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(lowercase(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_punct(c)) {
      const bool numeric_sep = (c == '.' || c == ',') && !current.empty() &&
                               is_digit(current.back()) && i + 1 < text.size() &&
                               is_digit(text[i + 1]);
      if (numeric_sep) {
        current.push_back(c);
      } else {
        flush();
        tokens.emplace_back(1, c);
      }
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

void validate_report(const Report& r) {
  const int n = static_cast<int>(r.findings.size());
  const int n_entities = static_cast<int>(r.entities.size());
  for (std::size_t i = 0; i < r.entities.size(); ++i) {
    const EntitySpan& e = r.entities[i];
    if (e.start < 0 || e.start >= e.end || e.end > n) {
      throw DataError("report " + r.id + ": entity " + std::to_string(i) + " span [" +
                      std::to_string(e.start) + ", " + std::to_string(e.end) +
                      ") invalid for " + std::to_string(n) + " findings tokens");
    }
    if (e.target && (*e.target < 0 || *e.target >= n_entities ||
                     *e.target == static_cast<int>(i))) {
      throw DataError("report " + r.id + ": entity " + std::to_string(i) +
                      " has invalid target " + std::to_string(*e.target));
    }
  }
  for (const DependencyArc& a : r.deps) {
    if (a.dep < 0 || a.dep >= n || a.head < -1 || a.head >= n) {
      throw DataError("report " + r.id + ": dependency arc " + std::to_string(a.head) + "->" +
                      std::to_string(a.dep) + " out of range");
    }
    if (a.head == a.dep) {
      throw DataError("report " + r.id + ": self dependency arc at " + std::to_string(a.dep));
    }
  }
}

Report report_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("corpus record is not a JSON object");
  Report r;
  try {
    r.id = j.at("id").get<std::string>();
    if (j.contains("findings") && !j["findings"].is_null()) {
      r.findings = tokenize(j["findings"].get<std::string>());
    }
    if (j.contains("impression") && !j["impression"].is_null()) {
      r.impression = tokenize(j["impression"].get<std::string>());
    }
    if (j.contains("entities")) {
      for (const auto& e : j["entities"]) {
        EntitySpan span;
        span.start = e.at("start").get<int>();
        span.end = e.at("end").get<int>();
        const auto type_name = e.at("type").get<std::string>();
        auto type = parse_entity_type(type_name);
        if (!type) throw DataError("report " + r.id + ": unknown entity type '" + type_name + "'");
        span.type = *type;
        if (e.contains("target") && !e["target"].is_null()) span.target = e["target"].get<int>();
        r.entities.push_back(span);
      }
    }
    if (j.contains("deps")) {
      for (const auto& d : j["deps"]) {
        DependencyArc arc;
        arc.head = d.at("head").get<int>();
        arc.dep = d.at("dep").get<int>();
        arc.label = d.value("label", std::string{});
        r.deps.push_back(std::move(arc));
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("malformed corpus record " + (r.id.empty() ? std::string("?") : r.id) +
                    ": " + ex.what());
  }
  validate_report(r);
  return r;
}

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

nlohmann::json report_to_json(const Report& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["findings"] = join(r.findings);
  j["impression"] = join(r.impression);
  j["entities"] = nlohmann::json::array();
  for (const EntitySpan& e : r.entities) {
    nlohmann::json je{{"start", e.start}, {"end", e.end}, {"type", std::string(to_string(e.type))}};
    if (e.target) je["target"] = *e.target;
    j["entities"].push_back(je);
  }
  j["deps"] = nlohmann::json::array();
  for (const DependencyArc& a : r.deps) {
    j["deps"].push_back({{"head", a.head}, {"dep", a.dep}, {"label", a.label}});
  }
  return j;
}

std::vector<Report> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  std::vector<Report> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    out.push_back(report_from_json(j));
  }
  return out;
}

void save_corpus(const std::filesystem::path& path, std::span<const Report> reports) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path.string());
  for (const Report& r : reports) out << report_to_json(r).dump() << '\n';
}

std::vector<Report> filter_corpus(std::span<const Report> reports, const FilterRules& rules) {
  std::vector<Report> kept;
  for (const Report& r : reports) {
    if (r.findings.empty() || r.impression.empty()) continue;
    if (r.findings.size() < rules.min_findings_tokens) continue;
    if (r.impression.size() < rules.min_impression_tokens) continue;
    kept.push_back(r);
  }
  return kept;
}

Report truncate_report(const Report& report, std::size_t max_findings, std::size_t max_impression) {
  Report r = report;
  if (r.impression.size() > max_impression) r.impression.resize(max_impression);
  if (r.findings.size() <= max_findings) return r;

  const int n = static_cast<int>(max_findings);
  r.findings.resize(max_findings);
  std::vector<int> remap(report.entities.size(), -1);
  std::vector<EntitySpan> kept;
  for (std::size_t i = 0; i < report.entities.size(); ++i) {
    if (report.entities[i].end <= n) {
      remap[i] = static_cast<int>(kept.size());
      kept.push_back(report.entities[i]);
    }
  }
  for (EntitySpan& e : kept) {
    if (e.target) {
      const int t = remap[static_cast<std::size_t>(*e.target)];
      e.target = t >= 0 ? std::optional<int>(t) : std::nullopt;
    }
  }
  r.entities = std::move(kept);
  std::erase_if(r.deps, [n](const DependencyArc& a) { return a.dep >= n || a.head >= n; });
  return r;
}

Vocabulary::Vocabulary() {
  for (std::string_view t : kReservedTokens) add(std::string(t));
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(std::span<const Report> reports, int min_count) {
  if (reports.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, int> counts;
  for (const Report& r : reports) {
    for (const auto& t : r.findings) ++counts[t];
    for (const auto& t : r.impression) ++counts[t];
  }
  std::vector<std::pair<std::string, int>> entries;
  for (auto& [tok, c] : counts) {
    if (c >= min_count) entries.emplace_back(tok, c);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [tok, c] : entries) v.add(tok);
  return v;
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it != index_.end() && it->second >= kReserved;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocabulary id " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::learned_tokens() const {
  return {tokens_.begin() + kReserved, tokens_.end()};
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = kReserved; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out.push_back('\n');
  }
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  Vocabulary v;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    if (nl > pos) v.add(std::string(text.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  return v;
}

CopyEncoding encode_with_copy(const Report& report, const Vocabulary& vocab, bool copy) {
  CopyEncoding enc;
  enc.extended_size = vocab.size();
  std::unordered_map<std::string, int> oov_ids;
  for (const auto& tok : report.findings) {
    if (vocab.contains(tok) || !copy) {
      enc.source_ids.push_back(vocab.id(tok));
      continue;
    }
    auto [it, inserted] = oov_ids.emplace(tok, enc.extended_size);
    if (inserted) {
      enc.oov_tokens.push_back(tok);
      ++enc.extended_size;
    }
    enc.source_ids.push_back(it->second);
  }
  for (const auto& tok : report.impression) {
    if (vocab.contains(tok)) {
      enc.target_ids.push_back(vocab.id(tok));
    } else if (auto it = oov_ids.find(tok); it != oov_ids.end()) {
      enc.target_ids.push_back(it->second);
    } else {
      enc.target_ids.push_back(Vocabulary::kUnk);
    }
  }
  enc.target_ids.push_back(Vocabulary::kEos);
  return enc;
}

std::vector<int> embedding_ids(std::span<const int> extended_ids, const Vocabulary& vocab) {
  std::vector<int> out;
  out.reserve(extended_ids.size());
  for (int id : extended_ids) out.push_back(id < vocab.size() ? id : Vocabulary::kUnk);
  return out;
}

std::string id_to_token(int id, const CopyEncoding& encoding, const Vocabulary& vocab) {
  if (id < vocab.size()) return vocab.token(id);
  const auto k = static_cast<std::size_t>(id - vocab.size());
  if (k >= encoding.oov_tokens.size()) {
    throw std::out_of_range("extended id " + std::to_string(id) + " beyond " +
                            std::to_string(encoding.extended_size));
  }
  return encoding.oov_tokens[k];
}

std::vector<std::string> decode_ids(std::span<const int> ids, const CopyEncoding& encoding,
                                    const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(id_to_token(id, encoding, vocab));
  return out;
}

}  // namespace wgsum
