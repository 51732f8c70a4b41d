#include "wgsum/synthetic.hpp"

#include <array>
#include <random>

namespace wgsum {
namespace {

struct Builder {
  Report report;

  int token(const std::string& t) {
    report.findings.push_back(t);
    return static_cast<int>(report.findings.size()) - 1;
  }
  int entity(int start, int end, EntityType type, std::optional<int> target = std::nullopt) {
    report.entities.push_back({start, end, type, target});
    return static_cast<int>(report.entities.size()) - 1;
  }
  void arc(int head, int dep, const std::string& label) {
    report.deps.push_back({head, dep, label});
  }
};

template <std::size_t N>
const std::string& choose(const std::array<std::string, N>& options, std::mt19937_64& rng) {
  return options[static_cast<std::size_t>(rng() % N)];
}

const std::array<std::string, 4> kSeverity{"small", "moderate", "large", "mild"};
const std::array<std::string, 2> kSide{"left", "right"};
const std::array<std::string, 3> kPositive{"effusion", "pneumothorax", "consolidation"};
const std::array<std::string, 2> kUncertainty{"possible", "likely"};
const std::array<std::string, 2> kRegion{"base", "apex"};
const std::array<std::string, 3> kUncertainFinding{"atelectasis", "opacity", "infiltrate"};
const std::array<std::string, 3> kDevicePrefix{"endotracheal", "nasogastric", "chest"};
const std::array<std::string, 3> kNormalOrgan{"heart", "mediastinum", "aorta"};
const std::array<std::string, 3> kNegated{"pneumothorax", "edema", "effusion"};

// "there is a moderate left pleural effusion ."
void positive(Builder& b, std::vector<std::string>& impression, std::mt19937_64& rng) {
  const std::string& severity = choose(kSeverity, rng);
  const std::string& side = choose(kSide, rng);
  const std::string& finding = choose(kPositive, rng);
  const std::string organ = finding == "consolidation" ? "lung" : "pleural";
  const bool explicit_target = rng() % 2 == 0;
  const int there = b.token("there");
  const int is = b.token("is");
  const int a = b.token("a");
  const int sev = b.token(severity);
  const int sd = b.token(side);
  const int org = b.token(organ);
  const int obs = b.token(finding);
  const int dot = b.token(".");
  const int e_sev = b.entity(sev, sev + 1, EntityType::ObservationModifier);
  const int e_side = b.entity(sd, sd + 1, EntityType::AnatomyModifier);
  const int e_org = b.entity(org, org + 1, EntityType::Anatomy);
  const int e_obs = b.entity(obs, obs + 1, EntityType::Observation);
  if (explicit_target) {
    b.report.entities[static_cast<std::size_t>(e_sev)].target = e_obs;
    b.report.entities[static_cast<std::size_t>(e_side)].target = e_org;
  }
  b.arc(is, there, "expl");
  b.arc(-1, is, "root");
  b.arc(obs, a, "det");
  b.arc(obs, sev, "amod");
  b.arc(obs, sd, "amod");
  b.arc(obs, org, "compound");
  b.arc(is, obs, "nsubj");
  b.arc(is, dot, "punct");
  impression.insert(impression.end(), {severity, side, finding, "."});
}

// "possible right base atelectasis ."
void uncertain(Builder& b, std::vector<std::string>& impression, std::mt19937_64& rng) {
  const std::string& hedge = choose(kUncertainty, rng);
  const std::string& side = choose(kSide, rng);
  const std::string& region = choose(kRegion, rng);
  const std::string& finding = choose(kUncertainFinding, rng);
  const int unc = b.token(hedge);
  const int sd = b.token(side);
  const int reg = b.token(region);
  const int obs = b.token(finding);
  const int dot = b.token(".");
  b.entity(unc, unc + 1, EntityType::Uncertainty);
  const int e_side = b.entity(sd, sd + 1, EntityType::AnatomyModifier);
  const int e_reg = b.entity(reg, reg + 1, EntityType::Anatomy);
  b.entity(obs, obs + 1, EntityType::Observation);
  b.report.entities[static_cast<std::size_t>(e_side)].target = e_reg;
  b.arc(obs, unc, "amod");
  b.arc(reg, sd, "amod");
  b.arc(obs, reg, "compound");
  b.arc(-1, obs, "root");
  b.arc(obs, dot, "punct");
  impression.insert(impression.end(), {hedge, side, region, finding, "."});
}

// "endotracheal tube is in standard position ."
void device(Builder& b, std::vector<std::string>& impression, std::mt19937_64& rng) {
  const std::string& prefix = choose(kDevicePrefix, rng);
  const int d1 = b.token(prefix);
  const int d2 = b.token("tube");
  const int is = b.token("is");
  const int in = b.token("in");
  const int standard = b.token("standard");
  const int position = b.token("position");
  const int dot = b.token(".");
  b.entity(d1, d2 + 1, EntityType::Observation);
  b.arc(d2, d1, "compound");
  b.arc(position, d2, "nsubj");
  b.arc(position, is, "cop");
  b.arc(position, in, "case");
  b.arc(position, standard, "amod");
  b.arc(-1, position, "root");
  b.arc(position, dot, "punct");
  impression.insert(impression.end(), {prefix, "tube", "in", "place", "."});
}

// "the heart is normal ."
void normal(Builder& b, std::mt19937_64& rng) {
  const std::string& organ = choose(kNormalOrgan, rng);
  const int the = b.token("the");
  const int org = b.token(organ);
  const int is = b.token("is");
  const int norm = b.token("normal");
  const int dot = b.token(".");
  b.entity(org, org + 1, EntityType::Anatomy);
  b.entity(norm, norm + 1, EntityType::Observation);
  b.arc(org, the, "det");
  b.arc(norm, org, "nsubj");
  b.arc(norm, is, "cop");
  b.arc(-1, norm, "root");
  b.arc(norm, dot, "punct");
}

// "no pneumothorax is seen ."
void negated(Builder& b, std::mt19937_64& rng) {
  const std::string& finding = choose(kNegated, rng);
  const int no = b.token("no");
  const int obs = b.token(finding);
  const int is = b.token("is");
  const int seen = b.token("seen");
  const int dot = b.token(".");
  b.entity(obs, obs + 1, EntityType::Observation);
  b.arc(obs, no, "det");
  b.arc(seen, obs, "nsubj:pass");
  b.arc(seen, is, "aux:pass");
  b.arc(-1, seen, "root");
  b.arc(seen, dot, "punct");
}

}  // namespace

std::vector<Report> synthetic_corpus(std::size_t count, std::uint64_t seed,
                                     const std::string& id_prefix) {
  std::mt19937_64 rng(seed);
  std::vector<Report> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Builder b;
    b.report.id = id_prefix + "-" + std::to_string(i);
    std::vector<std::string> impression;
    const int sentences = 3 + static_cast<int>(rng() % 2);
    for (int s = 0; s < sentences; ++s) {
      switch (rng() % 5) {
        case 0: positive(b, impression, rng); break;
        case 1: uncertain(b, impression, rng); break;
        case 2: device(b, impression, rng); break;
        case 3: normal(b, rng); break;
        default: negated(b, rng); break;
      }
    }
    if (impression.empty()) impression = {"no", "acute", "cardiopulmonary", "process", "."};
    b.report.impression = std::move(impression);
    out.push_back(std::move(b.report));
  }
  return out;
}

Report figure_example() {
  Builder b;
  b.report.id = "figure-1";
  for (const char* t : {"endotracheal", "tube", "is", "in", "standard", "position", ".", "there",
                        "is", "a", "moderate", "left", "pleural", "effusion", ".", "the",
                        "effusion", "is", "stable", ".", "heart", "size", "is", "normal", "."}) {
    b.token(t);
  }
  b.entity(0, 2, EntityType::Observation);                             // endotracheal tube
  b.entity(10, 11, EntityType::ObservationModifier, 4);                // moderate -> effusion
  b.entity(11, 12, EntityType::AnatomyModifier, 3);                    // left -> pleural
  b.entity(12, 13, EntityType::Anatomy);                               // pleural
  b.entity(13, 14, EntityType::Observation);                           // effusion
  b.entity(16, 17, EntityType::Observation);                           // effusion
  b.entity(18, 19, EntityType::ObservationModifier);                   // stable
  b.entity(20, 21, EntityType::Anatomy);                               // heart
  b.entity(23, 24, EntityType::Observation);                           // normal
  b.arc(1, 0, "compound");
  b.arc(5, 1, "nsubj");
  b.arc(5, 2, "cop");
  b.arc(5, 3, "case");
  b.arc(5, 4, "amod");
  b.arc(-1, 5, "root");
  b.arc(5, 6, "punct");
  b.arc(8, 7, "expl");
  b.arc(-1, 8, "root");
  b.arc(13, 9, "det");
  b.arc(13, 10, "amod");
  b.arc(11, 13, "amod");
  b.arc(13, 12, "compound");
  b.arc(8, 11, "nsubj");
  b.arc(8, 14, "punct");
  b.arc(16, 15, "det");
  b.arc(18, 16, "nsubj");
  b.arc(18, 17, "cop");
  b.arc(-1, 18, "root");
  b.arc(18, 19, "punct");
  b.arc(21, 20, "compound");
  b.arc(23, 21, "nsubj");
  b.arc(23, 22, "cop");
  b.arc(-1, 23, "root");
  b.arc(23, 24, "punct");
  b.report.impression = {"endotracheal", "tube", "in", "place", ".", "moderate", "left",
                         "pleural", "effusion", "."};
  return b.report;
}

}  // namespace wgsum
