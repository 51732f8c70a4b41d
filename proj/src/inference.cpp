#include "wgsum/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace wgsum {
namespace {

struct Hypothesis {
  std::vector<int> ids;
  double log_prob = 0.0;
  DecoderState state;
  bool finished = false;
};

double normalized(const Hypothesis& h) {
  const std::size_t length = h.ids.size() + (h.finished ? 1 : 0);
  return length == 0 ? h.log_prob : h.log_prob / static_cast<double>(length);
}

int argmax(const Matrix& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.cols(); ++j) {
    if (row(0, j) > row(0, best)) best = j;
  }
  return static_cast<int>(best);
}

Generation greedy(const WGSumModel& model, Tape& tape, const EncodedReport& encoded,
                  int max_length) {
  Generation out;
  DecoderState state = model.initial_state(tape, encoded);
  int previous = Vocabulary::kBos;
  for (int t = 0; t < max_length; ++t) {
    StepOutput step = model.step(tape, encoded, state, previous);
    const Matrix& dist = step.distribution.value();
    const int next = argmax(dist);
    out.score += std::log(std::max(dist(0, next), 1e-300));
    if (next == Vocabulary::kEos) break;
    out.ids.push_back(next);
    state = std::move(step.next);
    previous = next;
  }
  return out;
}

Generation beam(const WGSumModel& model, Tape& tape, const EncodedReport& encoded, int max_length,
                int width) {
  std::vector<Hypothesis> alive(1);
  alive[0].state = model.initial_state(tape, encoded);
  std::vector<Hypothesis> finished;

  for (int t = 0; t < max_length && !alive.empty(); ++t) {
    struct Candidate {
      std::size_t parent;
      int token;
      double log_prob;
    };
    std::vector<Candidate> candidates;
    std::vector<DecoderState> next_states;
    next_states.reserve(alive.size());
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const int previous = alive[h].ids.empty() ? Vocabulary::kBos : alive[h].ids.back();
      StepOutput step = model.step(tape, encoded, alive[h].state, previous);
      const Matrix& dist = step.distribution.value();
      std::vector<int> order(static_cast<std::size_t>(dist.cols()));
      for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
      const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(width), order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                        order.end(), [&](int a, int b) {
                          if (dist(0, a) != dist(0, b)) return dist(0, a) > dist(0, b);
                          return a < b;
                        });
      for (std::size_t k = 0; k < keep; ++k) {
        const int token = order[k];
        candidates.push_back(
            {h, token, alive[h].log_prob + std::log(std::max(dist(0, token), 1e-300))});
      }
      next_states.push_back(std::move(step.next));
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });

    std::vector<Hypothesis> survivors;
    for (const Candidate& c : candidates) {
      if (static_cast<int>(survivors.size() + finished.size()) >= width) break;
      Hypothesis h;
      h.ids = alive[c.parent].ids;
      h.log_prob = c.log_prob;
      if (c.token == Vocabulary::kEos) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        h.ids.push_back(c.token);
        h.state = next_states[c.parent];
        survivors.push_back(std::move(h));
      }
    }
    alive = std::move(survivors);
    if (static_cast<int>(finished.size()) >= width) break;
  }
  for (auto& h : alive) finished.push_back(std::move(h));

  const Hypothesis* best = &finished.front();
  for (const Hypothesis& h : finished) {
    if (normalized(h) > normalized(*best)) best = &h;
  }
  return {best->ids, {}, normalized(*best)};
}

MeanRouge accumulate(const std::vector<const RougeSet*>& scores) {
  MeanRouge m;
  m.count = scores.size();
  if (m.count == 0) return m;
  for (const RougeSet* s : scores) {
    m.rouge1 += s->r1.f1;
    m.rouge2 += s->r2.f1;
    m.rougeL += s->rl.f1;
  }
  const double n = static_cast<double>(m.count);
  m.rouge1 /= n;
  m.rouge2 /= n;
  m.rougeL /= n;
  return m;
}

nlohmann::json mean_to_json(const MeanRouge& m) {
  return {{"count", m.count}, {"rouge1", m.rouge1}, {"rouge2", m.rouge2}, {"rougeL", m.rougeL}};
}

}  // namespace

GenerateOptions generate_options(const TrainConfig& config) {
  return {config.decode_mode, config.max_decode_length, config.beam_width};
}

Generation generate(const WGSumModel& model, const Report& report,
                    const GenerateOptions& options) {
  if (options.max_length < 0) throw std::invalid_argument("generate: negative max length");
  if (options.beam_width < 1) throw std::invalid_argument("generate: beam width must be >= 1");
  Tape tape(false);
  const WordGraph graph = model.graph_for(report);
  const EncodedReport encoded = model.encode(tape, report, graph);
  Generation out = options.mode == DecodeMode::Greedy
                       ? greedy(model, tape, encoded, options.max_length)
                       : beam(model, tape, encoded, options.max_length, options.beam_width);
  out.tokens = decode_ids(out.ids, encoded.encoding, model.vocabulary());
  return out;
}

std::string LengthBucket::label() const {
  return "[" + std::to_string(low) + "," + std::to_string(high) + (inclusive_high ? "]" : ")");
}

bool LengthBucket::contains(std::size_t length) const {
  const auto n = static_cast<long>(length);
  return n >= low && (inclusive_high ? n <= high : n < high);
}

std::vector<LengthBucket> default_buckets() {
  return {{15, 20, false}, {20, 25, false}, {25, 30, false}, {30, 35, false}, {35, 40, true}};
}

MetricReport score_corpus(std::span<const std::vector<std::string>> references,
                          std::span<const std::vector<std::string>> hypotheses,
                          std::span<const std::string> ids,
                          const std::vector<LengthBucket>& buckets) {
  if (references.empty()) throw std::invalid_argument("evaluate: empty corpus");
  if (references.size() != hypotheses.size() || references.size() != ids.size()) {
    throw std::invalid_argument("evaluate: reference/hypothesis count mismatch");
  }
  MetricReport report;
  for (std::size_t i = 0; i < references.size(); ++i) {
    report.examples.push_back({ids[i], hypotheses[i], rouge_all(references[i], hypotheses[i])});
  }
  std::vector<const RougeSet*> all;
  for (const auto& e : report.examples) all.push_back(&e.scores);
  report.overall = accumulate(all);
  for (const LengthBucket& b : buckets) {
    std::vector<const RougeSet*> members;
    for (std::size_t i = 0; i < references.size(); ++i) {
      if (b.contains(references[i].size())) members.push_back(&report.examples[i].scores);
    }
    if (!members.empty()) report.buckets.push_back({b, accumulate(members)});
  }
  return report;
}

MetricReport evaluate(const WGSumModel& model, std::span<const Report> reports,
                      const GenerateOptions& options, const std::vector<LengthBucket>& buckets) {
  std::vector<std::vector<std::string>> refs, hyps;
  std::vector<std::string> ids;
  for (const Report& r : reports) {
    refs.push_back(r.impression);
    hyps.push_back(generate(model, r, options).tokens);
    ids.push_back(r.id);
  }
  return score_corpus(refs, hyps, ids, buckets);
}

nlohmann::json metrics_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["overall"] = mean_to_json(report.overall);
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : report.buckets) {
    nlohmann::json entry = mean_to_json(b.scores);
    entry["range"] = b.bucket.label();
    buckets.push_back(entry);
  }
  j["buckets"] = buckets;
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& e : report.examples) {
    examples.push_back({{"id", e.id},
                        {"hypothesis", e.hypothesis},
                        {"rouge1", e.scores.r1.f1},
                        {"rouge2", e.scores.r2.f1},
                        {"rougeL", e.scores.rl.f1}});
  }
  j["examples"] = examples;
  return j;
}

std::string metrics_table(const MetricReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(10) << "subset" << std::right << std::setw(7) << "n"
     << std::setw(10) << "R-1" << std::setw(10) << "R-2" << std::setw(10) << "R-L" << "\n";
  const auto row = [&](const std::string& name, const MeanRouge& m) {
    os << std::left << std::setw(10) << name << std::right << std::setw(7) << m.count
       << std::setw(10) << m.rouge1 << std::setw(10) << m.rouge2 << std::setw(10) << m.rougeL
       << "\n";
  };
  row("all", report.overall);
  for (const auto& b : report.buckets) row(b.bucket.label(), b.scores);
  return os.str();
}

std::string bucket_csv(const MetricReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "bucket,count,rouge1\n";
  for (const auto& b : report.buckets) {
    os << '"' << b.bucket.label() << "\"," << b.scores.count << ',' << b.scores.rouge1 << "\n";
  }
  return os.str();
}

}  // namespace wgsum
