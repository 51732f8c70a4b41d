#include "wgsum/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wgsum/numerics/checkpoint.hpp"

namespace wgsum {

using namespace ad;

TokenLoss token_nll(std::span<const Var> distributions, std::span<const int> gold, double floor) {
  if (distributions.size() != gold.size()) {
    throw std::invalid_argument("nll_loss: " + std::to_string(distributions.size()) +
                                " distributions for " + std::to_string(gold.size()) + " targets");
  }
  if (distributions.empty()) throw std::invalid_argument("nll_loss: no steps");
  TokenLoss out;
  std::vector<Var> picked;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    const int g = gold[t];
    if (g < 0 || g >= distributions[t].cols()) {
      throw std::out_of_range("nll_loss: gold id " + std::to_string(g) +
                              " outside extended vocabulary of size " +
                              std::to_string(distributions[t].cols()));
    }
    if (g == Vocabulary::kPad) continue;
    picked.push_back(pick(distributions[t], 0, g));
    ++out.tokens;
  }
  Tape& tape = *distributions.front().tape();
  if (picked.empty()) {
    out.total = tape.constant(Matrix::Zero(1, 1));
    return out;
  }
  Var probs = picked.size() == 1 ? picked.front() : concat_cols(picked);
  out.total = scale(sum(log_clamped(probs, floor)), -1.0);
  return out;
}

Var nll_loss(std::span<const Var> distributions, std::span<const int> gold, double floor) {
  TokenLoss l = token_nll(distributions, gold, floor);
  if (l.tokens == 0) return l.total;
  return scale(l.total, 1.0 / l.tokens);
}

TokenLoss report_loss(const WGSumModel& model, Tape& tape, const Report& report,
                      const Regularization& reg) {
  const WordGraph graph = model.graph_for(report);
  const EncodedReport encoded = model.encode(tape, report, graph, reg);
  const std::vector<Var> dists = model.teacher_forced(tape, encoded, reg);
  return token_nll(dists, encoded.encoding.target_ids);
}

double corpus_loss(const WGSumModel& model, std::span<const Report> reports) {
  double total = 0.0;
  long tokens = 0;
  for (const Report& r : reports) {
    Tape tape(false);
    TokenLoss l = report_loss(model, tape, r);
    total += l.total.scalar();
    tokens += l.tokens;
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

std::string hash_hex(std::uint64_t hash) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const EpochRecord& e : epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["config_hash"] = config_hash;
    j["train_loss"] = e.train_loss;
    j["grad_norm"] = e.grad_norm;
    if (e.validation) {
      j["valid"] = {{"rouge1", e.validation->rouge1},
                    {"rouge2", e.validation->rouge2},
                    {"rougeL", e.validation->rougeL}};
    } else {
      j["valid"] = nullptr;
    }
    j["best"] = e.epoch == best_epoch;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Report> prepare_split(std::span<const Report> reports, const TrainConfig& config) {
  std::vector<Report> kept = filter_corpus(reports);
  for (Report& r : kept) {
    r = truncate_report(r, static_cast<std::size_t>(config.max_findings),
                        static_cast<std::size_t>(config.max_impression));
  }
  return kept;
}

TrainLog train_model(WGSumModel& model, Adam& optimizer, const TrainConfig& config,
                     std::span<const Report> train_set, std::span<const Report> valid_set,
                     const TrainHooks& hooks, std::vector<double>* epoch_seconds,
                     std::vector<NamedMatrix>* best_snapshot) {
  config.validate();
  if (train_set.empty()) throw DataError("training split is empty");
  TrainLog log;
  log.config_hash = hash_hex(fnv1a64(to_text(config)));
  Rng rng(config.seed ^ 0x5bd1e995ULL);
  ParameterStore& params = model.parameters();
  const GenerateOptions decode = generate_options(config);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_r1 = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    long epoch_tokens = 0;
    double norm_sum = 0.0;
    int batches = 0;

    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t end = std::min(order.size(), b + batch);
      long batch_tokens = 0;
      for (std::size_t i = b; i < end; ++i) {
        batch_tokens += static_cast<long>(train_set[order[i]].impression.size()) + 1;
      }
      params.zero_grad();
      for (std::size_t i = b; i < end; ++i) {
        Tape tape;
        Regularization reg{config.dropout, &rng};
        TokenLoss l = report_loss(model, tape, train_set[order[i]], reg);
        epoch_loss += l.total.scalar();
        epoch_tokens += l.tokens;
        tape.backward(scale(l.total, 1.0 / static_cast<double>(batch_tokens)));
      }
      norm_sum += params.grad_norm();
      ++batches;
      if (config.clip_norm > 0.0) params.clip_grad_norm(config.clip_norm);
      optimizer.step(params);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_tokens == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_tokens);
    record.grad_norm = batches == 0 ? 0.0 : norm_sum / batches;
    if (!valid_set.empty()) record.validation = evaluate(model, valid_set, decode).overall;

    const double r1 = record.validation ? record.validation->rouge1 : 0.0;
    if (log.best_epoch == 0 || (record.validation && r1 > best_r1) || !record.validation) {
      best_r1 = r1;
      log.best_epoch = epoch;
      if (best_snapshot != nullptr) *best_snapshot = snapshot_parameters(params);
    }
    log.epochs.push_back(record);
    if (epoch_seconds != nullptr) {
      epoch_seconds->push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    if (hooks.on_epoch) hooks.on_epoch(record, model);
  }
  return log;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const Report> train_set,
                  std::span<const Report> valid_set,
                  const std::optional<std::filesystem::path>& out_dir, const TrainHooks& hooks) {
  config.validate();
  if (train_set.empty()) throw DataError("training split is empty");
  Vocabulary vocab = Vocabulary::build(train_set, config.min_count);
  WGSumModel model(config.model, std::move(vocab), config.seed);
  Adam optimizer(AdamConfig{config.learning_rate});

  std::vector<double> seconds;
  std::vector<NamedMatrix> best;
  TrainLog log = train_model(model, optimizer, config, train_set, valid_set, hooks, &seconds, &best);

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    save_model(*out_dir / "last.ckpt", model, &optimizer);
  }
  Checkpoint snapshot;
  snapshot.parameters = std::move(best);
  restore_parameters(snapshot, model.parameters());
  if (out_dir) {
    save_model(*out_dir / "best.ckpt", model);
    write_text(*out_dir / "train_log.jsonl", log.to_jsonl());
    std::string timing;
    for (std::size_t i = 0; i < seconds.size(); ++i) {
      timing += nlohmann::json{{"epoch", i + 1}, {"seconds", seconds[i]}}.dump() + "\n";
    }
    write_text(*out_dir / "timing.jsonl", timing);
  }
  return {std::move(model), std::move(log), std::move(seconds)};
}

void save_model(const std::filesystem::path& path, const WGSumModel& model, const Adam* optimizer) {
  Checkpoint ckpt;
  ckpt.config_hash = architecture_hash(model.config());
  TrainConfig holder;
  holder.model = model.config();
  ckpt.metadata.emplace_back("config", to_text(holder));
  ckpt.metadata.emplace_back("vocabulary", model.vocabulary().serialize());
  ckpt.parameters = snapshot_parameters(model.parameters());
  if (optimizer != nullptr) ckpt.optimizer = optimizer->state();
  write_checkpoint(path, ckpt);
}

WGSumModel load_model(const std::filesystem::path& path, const std::optional<ModelConfig>& expected) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (expected && architecture_hash(*expected) != ckpt.config_hash) {
    throw CheckpointError("checkpoint " + path.string() + " has config hash " +
                          hash_hex(ckpt.config_hash) + ", expected " +
                          hash_hex(architecture_hash(*expected)));
  }
  const std::string* config_text = ckpt.find_metadata("config");
  const std::string* vocab_text = ckpt.find_metadata("vocabulary");
  if (config_text == nullptr || vocab_text == nullptr) {
    throw CheckpointError("checkpoint " + path.string() + " lacks config or vocabulary metadata");
  }
  const TrainConfig stored = parse_config(*config_text);
  if (architecture_hash(stored.model) != ckpt.config_hash) {
    throw CheckpointError("checkpoint " + path.string() + " config does not match its hash");
  }
  WGSumModel model(stored.model, Vocabulary::deserialize(*vocab_text), 0);
  restore_parameters(ckpt, model.parameters());
  return model;
}

}  // namespace wgsum
